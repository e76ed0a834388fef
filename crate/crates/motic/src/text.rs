//! Cycle text: `c * d{1,2}[D^1] * s{3}[o]`.
//!
//! A block is `d{...}` (diagonal) or `s{i}` (singleton) followed by a basis
//! symbol in brackets and an optional `@k` layer suffix. Without the suffix the
//! symbol is read in the profile's tensor algebra and applies to every layer.
//! Factors not covered by any block carry the unit.

use num_traits::{One, Signed};

use crate::algebra::{parse_q, Sym, Q};
use crate::error::{Error, Result};
use crate::power::{bits, canon, LayerTerm, PowerClass, Profile, Term};

fn err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

struct Cursor<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Cursor<'a> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }
    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(err(self.i, format!("expected `{}`", c as char)))
        }
    }
    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &'a str {
        self.ws();
        let st = self.i;
        while self.i < self.s.len() && f(self.s[self.i]) {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[st..self.i]).unwrap_or("")
    }
    fn number(&mut self) -> Result<usize> {
        let st = self.i;
        let t = self.take_while(|c| c.is_ascii_digit());
        t.parse().map_err(|_| err(st, "expected an index"))
    }
    fn coef(&mut self) -> Result<Q> {
        let st = self.i;
        let t = self.take_while(|c| c.is_ascii_digit() || c == b'/' || c == b' ');
        parse_q(t.trim()).ok_or_else(|| err(st, "bad rational coefficient"))
    }
}

enum RawBlock {
    Tensor(u32, Sym),
    Layer(usize, u32, Sym),
}

/// Parse a class of the given arity (or the largest index mentioned).
pub fn parse_class(p: &Profile, src: &[u8], arity: Option<usize>) -> Result<PowerClass> {
    if std::str::from_utf8(src).is_err() {
        return Err(err(0, "input is not UTF-8"));
    }
    let mut cur = Cursor { s: src, i: 0 };
    let mut raw: Vec<(Q, Vec<RawBlock>)> = Vec::new();
    let mut sign = Q::one();
    if cur.eat(b'-') {
        sign = -sign;
    } else {
        cur.eat(b'+');
    }
    let mut max_idx = 0usize;
    loop {
        let (c, blocks) = parse_term(p, &mut cur, &mut max_idx)?;
        raw.push((sign.clone() * c, blocks));
        match cur.peek() {
            None => break,
            Some(b'+') => {
                cur.i += 1;
                sign = Q::one();
            }
            Some(b'-') => {
                cur.i += 1;
                sign = -Q::one();
            }
            Some(_) => return Err(err(cur.i, "expected `+`, `-` or end of input")),
        }
    }
    let m = match arity {
        Some(a) => {
            if max_idx > a {
                return Err(err(0, format!("index {max_idx} exceeds arity {a}")));
            }
            a
        }
        None => max_idx,
    };
    if m > crate::power::MAX_ARITY {
        return Err(Error::Resource(format!("arity {m} too large")));
    }
    let mut out = Vec::new();
    for (c, blocks) in raw {
        let mut t: Term = vec![Vec::new(); p.nlayers()];
        let mut covered = vec![0u32; p.nlayers()];
        for b in blocks {
            let mut place = |l: usize, mask: u32, s: Sym| -> Result<()> {
                if covered[l] & mask != 0 {
                    return Err(err(0, "overlapping blocks in one term"));
                }
                covered[l] |= mask;
                t[l].push((mask, s));
                Ok(())
            };
            match b {
                RawBlock::Tensor(mask, s) => {
                    for (l, x) in p.split_sym(s).to_vec().into_iter().enumerate() {
                        place(l, mask, x)?;
                    }
                }
                RawBlock::Layer(l, mask, s) => place(l, mask, s)?,
            }
        }
        for (l, lt) in t.iter_mut().enumerate() {
            let unit = p.layer(l).alg.unit();
            for i in 0..m {
                if covered[l] & (1 << i) == 0 {
                    lt.push((1 << i, unit));
                }
            }
            canon(lt);
        }
        out.push((t, c));
    }
    Ok(p.from_terms(m, out))
}

fn parse_term(p: &Profile, cur: &mut Cursor, max_idx: &mut usize) -> Result<(Q, Vec<RawBlock>)> {
    let mut c = Q::one();
    let mut blocks = Vec::new();
    match cur.peek() {
        Some(ch) if ch.is_ascii_digit() => {
            c = cur.coef()?;
            if !cur.eat(b'*') {
                return Ok((c, blocks));
            }
        }
        _ => {}
    }
    loop {
        let st = cur.i;
        let kind = cur.take_while(|c| c.is_ascii_alphabetic());
        if kind != "d" && kind != "s" {
            return Err(err(st, "expected a block `d{..}[..]` or `s{..}[..]`"));
        }
        cur.expect(b'{')?;
        let mut mask = 0u32;
        loop {
            let at = cur.i;
            let i = cur.number()?;
            if i == 0 || i > crate::power::MAX_ARITY {
                return Err(err(at, "factor index out of range"));
            }
            if mask & (1 << (i - 1)) != 0 {
                return Err(err(at, "repeated factor index"));
            }
            mask |= 1 << (i - 1);
            *max_idx = (*max_idx).max(i);
            if !cur.eat(b',') {
                break;
            }
        }
        cur.expect(b'}')?;
        if kind == "s" && mask.count_ones() != 1 {
            return Err(err(st, "singleton block with several indices"));
        }
        cur.expect(b'[')?;
        let at = cur.i;
        let name = cur.take_while(|c| c != b']' && !c.is_ascii_whitespace());
        cur.expect(b']')?;
        let layer = if cur.eat(b'@') { Some(cur.number()?) } else { None };
        match layer {
            None => {
                let s = p.base().sym(name).ok_or_else(|| err(at, format!("unknown symbol `{name}`")))?;
                blocks.push(RawBlock::Tensor(mask, s));
            }
            Some(l) => {
                if l >= p.nlayers() {
                    return Err(err(at, format!("no layer {l}")));
                }
                let s = p.layer(l).alg.sym(name).ok_or_else(|| err(at, format!("unknown symbol `{name}` in layer {l}")))?;
                blocks.push(RawBlock::Layer(l, mask, s));
            }
        }
        if !cur.eat(b'*') {
            break;
        }
    }
    Ok((c, blocks))
}

fn block_text(mask: u32, name: &str, layer: Option<usize>) -> String {
    let idx = bits(mask).iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(",");
    let kind = if mask.count_ones() == 1 { 's' } else { 'd' };
    match layer {
        Some(l) => format!("{kind}{{{idx}}}[{name}]@{l}"),
        None => format!("{kind}{{{idx}}}[{name}]"),
    }
}

/// Blocks of one term, merged across layers when all partitions agree.
pub fn term_text(p: &Profile, t: &Term) -> String {
    let parts: Vec<String> = if t.iter().all(|l| l.is_empty()) {
        Vec::new()
    } else if t.iter().all(|lt| same_partition(lt, &t[0])) {
        (0..t[0].len())
            .map(|i| {
                let syms: Vec<Sym> = t.iter().map(|lt| lt[i].1).collect();
                let s = p.join_syms(&syms).expect("tensor symbol");
                block_text(t[0][i].0, p.base().name_of(s), None)
            })
            .collect()
    } else {
        let mut v = Vec::new();
        for (l, lt) in t.iter().enumerate() {
            for (m, s) in lt {
                v.push(block_text(*m, p.layer(l).alg.name_of(*s), Some(l)));
            }
        }
        v
    };
    parts.join(" * ")
}

fn same_partition(a: &LayerTerm, b: &LayerTerm) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0 == y.0)
}

pub fn class_text(p: &Profile, a: &PowerClass) -> String {
    if a.terms.is_empty() {
        return "0".into();
    }
    // ordered by the printed blocks so that relabeled profiles print alike
    let mut rows: Vec<(String, &Q)> = a.terms.iter().map(|(t, c)| (term_text(p, t), c)).collect();
    rows.sort();
    let mut out = String::new();
    for (i, (body, c)) in rows.into_iter().enumerate() {
        let neg = c.is_negative();
        if i > 0 {
            out.push_str(if neg { " - " } else { " + " });
        } else if neg {
            out.push('-');
        }
        let abs = c.abs();
        if body.is_empty() {
            out.push_str(&abs.to_string());
        } else {
            out.push_str(&format!("{abs} * {body}"));
        }
    }
    out
}

/// Read an arity-1 class such as `6 * s{1}[D^2] - s{1}[o]` as symbol names and
/// coefficients, without needing the algebra yet.
pub fn parse_base_terms(src: &[u8]) -> Result<Vec<(String, Q)>> {
    if std::str::from_utf8(src).is_err() {
        return Err(err(0, "input is not UTF-8"));
    }
    let mut cur = Cursor { s: src, i: 0 };
    let mut out = Vec::new();
    if cur.peek() == Some(b'0') {
        cur.i += 1;
        if cur.peek().is_none() {
            return Ok(out);
        }
        return Err(err(cur.i, "trailing input after 0"));
    }
    let mut sign = Q::one();
    if cur.eat(b'-') {
        sign = -sign;
    } else {
        cur.eat(b'+');
    }
    loop {
        let mut c = Q::one();
        if matches!(cur.peek(), Some(ch) if ch.is_ascii_digit()) {
            c = cur.coef()?;
            cur.expect(b'*')?;
        }
        let st = cur.i;
        if cur.take_while(|c| c.is_ascii_alphabetic()) != "s" {
            return Err(err(st, "expected `s{1}[symbol]`"));
        }
        cur.expect(b'{')?;
        let at = cur.i;
        if cur.number()? != 1 {
            return Err(err(at, "a base class lives on factor 1"));
        }
        cur.expect(b'}')?;
        cur.expect(b'[')?;
        let name = cur.take_while(|c| c != b']' && !c.is_ascii_whitespace()).to_string();
        cur.expect(b']')?;
        out.push((name, sign.clone() * c));
        match cur.peek() {
            None => break,
            Some(b'+') => {
                cur.i += 1;
                sign = Q::one();
            }
            Some(b'-') => {
                cur.i += 1;
                sign = -Q::one();
            }
            Some(_) => return Err(err(cur.i, "expected `+`, `-` or end of input")),
        }
    }
    Ok(out)
}
