//! Cycles on powers X^m built from partition diagonals.
//!
//! A term on X^m is, per layer, a set partition of the factor indices with a
//! basis symbol on every block: the class `prod_B delta_B*(z_B)`. Products of
//! varieties are stored as several layers, so that a factor of X^m is a tuple
//! of factors, one per layer.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::algebra::{lin_add, BaseAlgebra, BaseClass, Lin, Sym, Q};
use crate::error::{Error, Result};

pub const MAX_ARITY: usize = 24;
pub const DEFAULT_MAX_TERMS: usize = 400_000;

/// A block: bit mask of factor indices and the class it carries.
pub type Block = (u32, Sym);
/// Blocks of one layer, ordered by least element.
pub type LayerTerm = Vec<Block>;
pub type Term = Vec<LayerTerm>;
pub type LayerClass = BTreeMap<LayerTerm, Q>;

pub(crate) fn add_term<K: Ord>(into: &mut BTreeMap<K, Q>, k: K, c: Q) {
    if c.is_zero() {
        return;
    }
    match into.entry(k) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

pub(crate) fn canon(lt: &mut LayerTerm) {
    lt.sort_unstable_by_key(|(m, _)| m.trailing_zeros());
}

fn full(k: usize) -> u32 {
    if k == 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

/// Remap the bits of `mask` through `f`.
fn map_bits(mask: u32, f: &[usize]) -> u32 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let i = m.trailing_zeros() as usize;
        out |= 1 << f[i];
        m &= m - 1;
    }
    out
}

/// Squeeze `mask` onto the positions of `keep`, order preserving.
fn compress(mask: u32, keep: u32) -> u32 {
    let mut out = 0;
    let mut j = 0;
    let mut k = keep;
    while k != 0 {
        let i = k.trailing_zeros();
        if mask & (1 << i) != 0 {
            out |= 1 << j;
        }
        j += 1;
        k &= k - 1;
    }
    out
}

pub fn bits(mask: u32) -> Vec<usize> {
    let mut v = Vec::new();
    let mut m = mask;
    while m != 0 {
        v.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Hypersurface,
    Curve,
    Split,
}

/// One variety factor with its rewrite data.
#[derive(Debug)]
pub struct Layer {
    pub alg: BaseAlgebra,
    pub kind: LayerKind,
    rules: Vec<Option<LayerClass>>,
    unit_relations: Vec<(usize, LayerClass)>,
    pub threshold: Option<usize>,
    block_memo: Mutex<HashMap<(usize, Sym), Arc<LayerClass>>>,
    term_memo: Mutex<HashMap<LayerTerm, Arc<LayerClass>>>,
}

impl Clone for Layer {
    fn clone(&self) -> Self {
        Layer {
            alg: self.alg.clone(),
            kind: self.kind,
            rules: self.rules.clone(),
            unit_relations: self.unit_relations.clone(),
            threshold: self.threshold,
            block_memo: Mutex::new(HashMap::new()),
            term_memo: Mutex::new(HashMap::new()),
        }
    }
}

pub fn term_rank(lt: &LayerTerm) -> usize {
    lt.iter().map(|(m, _)| m.count_ones() as usize - 1).sum()
}

impl Layer {
    pub fn new(alg: BaseAlgebra, kind: LayerKind) -> Self {
        let k = alg.len();
        Layer {
            alg,
            kind,
            rules: vec![None; k],
            unit_relations: Vec::new(),
            threshold: None,
            block_memo: Mutex::new(HashMap::new()),
            term_memo: Mutex::new(HashMap::new()),
        }
    }

    fn clear_memo(&mut self) {
        self.block_memo = Mutex::new(HashMap::new());
        self.term_memo = Mutex::new(HashMap::new());
    }

    pub fn rule(&self, s: Sym) -> Option<&LayerClass> {
        self.rules[s as usize].as_ref()
    }

    pub fn unit_relations(&self) -> &[(usize, LayerClass)] {
        &self.unit_relations
    }

    pub fn has_rules(&self) -> bool {
        self.rules.iter().any(|r| r.is_some()) || !self.unit_relations.is_empty()
    }

    /// Decomposition of delta_* z as sum (z b) x b^dual, for z of codim >= k0.
    pub fn set_threshold(&mut self, k0: usize) -> Result<()> {
        if self.alg.dual(0).is_none() {
            if let Some(c) = self.alg.degenerate_codim() {
                return Err(Error::DegeneratePairing(c));
            }
        }
        for s in 0..self.alg.len() as Sym {
            if self.alg.codim(s) < k0 {
                continue;
            }
            let mut rhs = LayerClass::new();
            for b in 0..self.alg.len() as Sym {
                let zb = self.alg.mul_syms(s, b);
                let dual = self.alg.dual(b).expect("nondegenerate");
                for (x, cx) in zb {
                    for (y, cy) in dual {
                        add_term(&mut rhs, vec![(1, *x), (2, *y)], cx * cy);
                    }
                }
            }
            self.rules[s as usize] = Some(rhs);
        }
        self.threshold = Some(k0);
        self.clear_memo();
        Ok(())
    }

    pub fn set_rule(&mut self, s: Sym, rhs: LayerClass) -> Result<()> {
        let n = self.alg.n();
        let name = self.alg.name_of(s).to_string();
        let want = n + self.alg.codim(s);
        for (t, _) in &rhs {
            let codim: usize = t.iter().map(|(m, x)| n * (m.count_ones() as usize - 1) + self.alg.codim(*x)).sum();
            if codim != want {
                return Err(Error::invalid(format!("rule for `{name}` has a term of codimension {codim}, expected {want}")));
            }
            if t.len() == 1 {
                let w = t[0].1;
                if w == s || self.rules[w as usize].is_some() {
                    return Err(Error::invalid(format!(
                        "rule for `{name}` keeps a rewritable diagonal term `{}`",
                        self.alg.name_of(w)
                    )));
                }
            }
        }
        for keep in [1u32, 2u32] {
            let mut pushed = Lin::new();
            for (t, c) in &rhs {
                if let Some((lt, f)) = layer_push(&self.alg, t, keep) {
                    lin_add(&mut pushed, lt[0].1, &(c * f));
                }
            }
            if pushed != Lin::from([(s, Q::one())]) {
                return Err(Error::invalid(format!(
                    "rule for `{name}` does not push forward to `{name}` on factor {}",
                    keep.trailing_zeros() + 1
                )));
            }
        }
        // Diagonal terms on the right must not be rewritable by themselves.
        for r in self.rules.iter().flatten() {
            for t in r.keys() {
                if t.len() == 1 && t[0].1 == s {
                    return Err(Error::invalid(format!("rule for `{name}` would create a rewrite cycle")));
                }
            }
        }
        self.rules[s as usize] = Some(rhs);
        self.clear_memo();
        Ok(())
    }

    /// delta_{[r]*}(1) = rhs, with rhs free of the full small diagonal.
    pub fn add_unit_relation(&mut self, r: usize, rhs: LayerClass) -> Result<()> {
        if r < 2 {
            return Err(Error::invalid("unit relation needs arity at least 2"));
        }
        if r == 2 {
            return self.set_rule(self.alg.unit(), rhs);
        }
        for t in rhs.keys() {
            if term_rank(t) >= r - 1 {
                return Err(Error::invalid("unit relation right side contains the small diagonal"));
            }
            if t.iter().any(|(m, _)| *m & !full(r) != 0) {
                return Err(Error::invalid("unit relation right side has the wrong arity"));
            }
        }
        self.unit_relations.push((r, rhs));
        self.unit_relations.sort_by_key(|(r, _)| *r);
        self.clear_memo();
        Ok(())
    }

    /// Whether a block of size k carrying s is rewritten.
    pub fn rewritable(&self, k: usize, s: Sym) -> bool {
        k >= 2 && (self.rules[s as usize].is_some() || self.unit_relations.iter().any(|(r, _)| *r <= k))
    }

    /// Normal form of delta_{k*}(s) on positions 0..k.
    pub fn norm_block(&self, k: usize, s: Sym) -> Arc<LayerClass> {
        if let Some(v) = self.block_memo.lock().unwrap().get(&(k, s)) {
            return v.clone();
        }
        let out = Arc::new(match self.expand_block(k, s) {
            None => LayerClass::from([(vec![(full(k), s)], Q::one())]),
            Some(step) => {
                let mut acc = LayerClass::new();
                for (t, c) in step {
                    for (u, cu) in self.norm_layer_term(&t).iter() {
                        add_term(&mut acc, u.clone(), &c * cu);
                    }
                }
                acc
            }
        });
        self.block_memo.lock().unwrap().insert((k, s), out.clone());
        out
    }

    /// One rewrite of delta_{k*}(s), or None when the block is opaque.
    pub fn expand_block(&self, k: usize, s: Sym) -> Option<LayerClass> {
        if k < 2 {
            return None;
        }
        let unit = self.alg.unit();
        if let Some(rule) = &self.rules[s as usize] {
            let mut out = LayerClass::new();
            let rest = full(k) & !1;
            for (t, c) in rule {
                if t.len() == 2 {
                    let (a, b) = (t[0].1, t[1].1);
                    add_term(&mut out, vec![(1, a), (rest, b)], c.clone());
                } else {
                    add_term(&mut out, vec![(full(k), t[0].1)], c.clone());
                }
            }
            return Some(out);
        }
        let (r, rhs) = self.unit_relations.iter().find(|(r, _)| *r <= k)?;
        let r = *r;
        let mut tail: LayerTerm = (0..r - 1).map(|i| (1u32 << i, unit)).collect();
        tail.push((full(k) & !full(r - 1), unit));
        let mut at0: LayerTerm = vec![(1, s)];
        at0.extend((1..k).map(|i| (1u32 << i, unit)));
        let mut out = LayerClass::new();
        for (t, c) in rhs {
            let mut emb = t.clone();
            emb.extend((r..k).map(|i| (1u32 << i, unit)));
            canon(&mut emb);
            for (u, cu) in layer_mul(&self.alg, &emb, &tail) {
                for (v, cv) in layer_mul(&self.alg, &u, &at0) {
                    add_term(&mut out, v, c * &cu * cv);
                }
            }
        }
        Some(out)
    }

    /// Normal form of a single layer term.
    pub fn norm_layer_term(&self, lt: &LayerTerm) -> Arc<LayerClass> {
        if lt.iter().all(|(m, s)| !self.rewritable(m.count_ones() as usize, *s)) {
            return Arc::new(LayerClass::from([(lt.clone(), Q::one())]));
        }
        if let Some(v) = self.term_memo.lock().unwrap().get(lt) {
            return v.clone();
        }
        let mut acc: Vec<(LayerTerm, Q)> = vec![(Vec::new(), Q::one())];
        for (mask, s) in lt {
            let k = mask.count_ones() as usize;
            let pos = bits(*mask);
            let nb = self.norm_block(k, *s);
            let mut next = Vec::with_capacity(acc.len() * nb.len());
            for (t, c) in &acc {
                for (u, cu) in nb.iter() {
                    let mut v = t.clone();
                    v.extend(u.iter().map(|(m, x)| (map_bits(*m, &pos), *x)));
                    next.push((v, c * cu));
                }
            }
            acc = next;
        }
        let mut out = LayerClass::new();
        for (mut t, c) in acc {
            canon(&mut t);
            add_term(&mut out, t, c);
        }
        let out = Arc::new(out);
        self.term_memo.lock().unwrap().insert(lt.clone(), out.clone());
        out
    }
}

/// Product of two layer terms: join the partitions, multiply classes inside
/// each joined block and add c_top to the power of the cycle rank.
pub fn layer_mul(alg: &BaseAlgebra, a: &LayerTerm, b: &LayerTerm) -> Vec<(LayerTerm, Q)> {
    // (mask, symbols, number of a blocks + b blocks)
    let mut groups: Vec<(u32, Vec<Sym>, usize)> = a.iter().map(|(m, s)| (*m, vec![*s], 1)).collect();
    for (bm, bs) in b {
        let mut merged = (*bm, vec![*bs], 1);
        let mut kept = Vec::with_capacity(groups.len());
        for g in groups.drain(..) {
            if g.0 & bm != 0 {
                merged.0 |= g.0;
                merged.1.extend(g.1);
                merged.2 += g.2;
            } else {
                kept.push(g);
            }
        }
        kept.push(merged);
        groups = kept;
    }
    let mut out: Vec<(LayerTerm, Q)> = vec![(Vec::with_capacity(groups.len()), Q::one())];
    for (mask, syms, nblocks) in &groups {
        let eps = mask.count_ones() as usize + 1 - nblocks;
        let mut cls: Lin = Lin::from([(syms[0], Q::one())]);
        for s in &syms[1..] {
            cls = alg.mul_lin(&cls, &Lin::from([(*s, Q::one())]));
            if cls.is_empty() {
                return Vec::new();
            }
        }
        for _ in 0..eps {
            cls = alg.mul_lin(&cls, alg.c_top());
            if cls.is_empty() {
                return Vec::new();
            }
        }
        let mut next = Vec::with_capacity(out.len() * cls.len());
        for (t, c) in &out {
            for (s, cs) in &cls {
                let mut v = t.clone();
                v.push((*mask, *s));
                next.push((v, c * cs));
            }
        }
        out = next;
    }
    for (t, _) in out.iter_mut() {
        canon(t);
    }
    out
}

/// Push a layer term to the factors in `keep`; None when it vanishes.
pub fn layer_push(alg: &BaseAlgebra, lt: &LayerTerm, keep: u32) -> Option<(LayerTerm, Q)> {
    let mut coef = Q::one();
    let mut out = Vec::with_capacity(lt.len());
    for (m, s) in lt {
        let kept = m & keep;
        if kept == 0 {
            let d = alg.deg_of(*s);
            if d.is_zero() {
                return None;
            }
            coef *= d;
        } else {
            out.push((compress(kept, keep), *s));
        }
    }
    canon(&mut out);
    Some((out, coef))
}

/// The variety model: layers, their tensor algebra and resource bounds.
#[derive(Clone, Debug)]
pub struct Profile {
    pub name: String,
    pub kind: String,
    layers: Vec<Layer>,
    tensor: BaseAlgebra,
    split: Vec<Vec<Sym>>,
    pub max_terms: usize,
    id: u64,
}

impl Profile {
    pub fn new(name: impl Into<String>, kind: impl Into<String>, layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("profile needs at least one layer"));
        }
        let mut tensor = layers[0].alg.clone();
        let mut split: Vec<Vec<Sym>> = (0..tensor.len() as Sym).map(|s| vec![s]).collect();
        for l in &layers[1..] {
            let (t, pairs) = BaseAlgebra::tensor_with_map(&tensor, &l.alg)?;
            split = pairs
                .iter()
                .map(|(x, y)| {
                    let mut v = split[*x as usize].clone();
                    v.push(*y);
                    v
                })
                .collect();
            tensor = t;
        }
        let mut p = Profile {
            name: name.into(),
            kind: kind.into(),
            layers,
            tensor,
            split,
            max_terms: DEFAULT_MAX_TERMS,
            id: 0,
        };
        p.refresh_id();
        Ok(p)
    }

    fn refresh_id(&mut self) {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.tensor.id().hash(&mut h);
        for l in &self.layers {
            l.alg.id().hash(&mut h);
            format!("{:?}{:?}", l.rules, l.unit_relations).hash(&mut h);
        }
        self.id = h.finish();
    }

    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }
    pub fn layer(&self, i: usize) -> &Layer {
        &self.layers[i]
    }
    pub fn nlayers(&self) -> usize {
        self.layers.len()
    }
    pub fn base(&self) -> &BaseAlgebra {
        &self.tensor
    }
    pub fn n(&self) -> usize {
        self.tensor.n()
    }
    /// Per-layer symbols of a tensor symbol.
    pub fn split_sym(&self, s: Sym) -> &[Sym] {
        &self.split[s as usize]
    }
    pub fn join_syms(&self, parts: &[Sym]) -> Option<Sym> {
        self.split.iter().position(|v| v.as_slice() == parts).map(|i| i as Sym)
    }

    /// Apply a mutation to one layer, keeping memo tables and ids coherent.
    pub fn with_layer<F: FnOnce(&mut Layer) -> Result<()>>(&self, i: usize, f: F) -> Result<Profile> {
        let mut p = self.clone();
        f(&mut p.layers[i])?;
        p.layers[i].clear_memo();
        p.refresh_id();
        Ok(p)
    }

    pub fn has_rules(&self) -> bool {
        self.layers.iter().any(|l| l.has_rules())
    }

    // ---- constructors of classes ----

    pub fn zero(&self, arity: usize) -> PowerClass {
        PowerClass { arity, pid: self.id, terms: BTreeMap::new() }
    }

    fn check_arity(&self, m: usize) -> Result<()> {
        if m > MAX_ARITY {
            return Err(Error::Resource(format!("arity {m} exceeds the limit {MAX_ARITY}")));
        }
        Ok(())
    }

    pub fn unit_term(&self, m: usize) -> Term {
        self.layers
            .iter()
            .map(|l| (0..m).map(|i| (1u32 << i, l.alg.unit())).collect())
            .collect()
    }

    pub fn from_terms(&self, arity: usize, terms: impl IntoIterator<Item = (Term, Q)>) -> PowerClass {
        let mut out = self.zero(arity);
        for (mut t, c) in terms {
            for lt in t.iter_mut() {
                canon(lt);
            }
            add_term(&mut out.terms, t, c);
        }
        out
    }

    /// Exterior product of base classes on the factors of X^m.
    pub fn exterior(&self, classes: &[BaseClass]) -> Result<PowerClass> {
        let m = classes.len();
        self.check_arity(m)?;
        let mut acc: Vec<(Term, Q)> = vec![(vec![Vec::new(); self.nlayers()], Q::one())];
        for (i, z) in classes.iter().enumerate() {
            self.check_class(z)?;
            let mut next = Vec::new();
            for (t, c) in &acc {
                for (s, cs) in &z.coeffs {
                    let mut u = t.clone();
                    for (l, x) in self.split_sym(*s).iter().enumerate() {
                        u[l].push((1u32 << i, *x));
                    }
                    next.push((u, c * cs));
                }
            }
            acc = next;
        }
        Ok(self.from_terms(m, acc))
    }

    /// delta_{m*}(z): one block covering all factors.
    pub fn diagonal_push(&self, z: &BaseClass, m: usize) -> Result<PowerClass> {
        if m < 1 {
            return Err(Error::invalid("diagonal arity must be at least 1"));
        }
        self.check_arity(m)?;
        self.check_class(z)?;
        let terms = z.coeffs.iter().map(|(s, c)| {
            let t: Term = self.split_sym(*s).iter().map(|x| vec![(full(m), *x)]).collect();
            (t, c.clone())
        });
        Ok(self.from_terms(m, terms))
    }

    pub fn small_diagonal(&self, m: usize) -> Result<PowerClass> {
        self.diagonal_push(&self.tensor.unit_class(), m)
    }

    /// Big diagonal Delta_{ij} on X^m (0-based indices).
    pub fn big_diagonal(&self, m: usize, i: usize, j: usize) -> Result<PowerClass> {
        let d = self.small_diagonal(2)?;
        self.pullback(&d, &[i, j], m)
    }

    pub fn check_class(&self, z: &BaseClass) -> Result<()> {
        if z.alg_id() != self.tensor.id() {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    fn same(&self, a: &PowerClass) -> Result<()> {
        if a.pid != self.id {
            return Err(Error::invalid("class belongs to a different profile"));
        }
        Ok(())
    }

    fn bound(&self, n: usize) -> Result<()> {
        if n > self.max_terms {
            return Err(Error::Resource(format!("term count {n} exceeds the bound {}", self.max_terms)));
        }
        Ok(())
    }

    // ---- ring operations ----

    pub fn add(&self, a: &PowerClass, b: &PowerClass) -> Result<PowerClass> {
        self.lin_comb(&[(Q::one(), a), (Q::one(), b)])
    }

    pub fn sub(&self, a: &PowerClass, b: &PowerClass) -> Result<PowerClass> {
        self.lin_comb(&[(Q::one(), a), (-Q::one(), b)])
    }

    pub fn scale(&self, a: &PowerClass, c: &Q) -> PowerClass {
        let mut out = self.zero(a.arity);
        if c.is_zero() {
            return out;
        }
        out.terms = a.terms.iter().map(|(t, x)| (t.clone(), x * c)).collect();
        out
    }

    pub fn lin_comb(&self, parts: &[(Q, &PowerClass)]) -> Result<PowerClass> {
        let arity = parts.first().map(|p| p.1.arity).unwrap_or(0);
        let mut out = self.zero(arity);
        for (c, a) in parts {
            self.same(a)?;
            if a.arity != arity {
                return Err(Error::Arity(format!("{} vs {}", a.arity, arity)));
            }
            for (t, x) in &a.terms {
                add_term(&mut out.terms, t.clone(), c * x);
            }
        }
        self.bound(out.terms.len())?;
        Ok(out)
    }

    pub fn multiply(&self, a: &PowerClass, b: &PowerClass) -> Result<PowerClass> {
        self.same(a)?;
        self.same(b)?;
        if a.arity != b.arity {
            return Err(Error::Arity(format!("cannot multiply arity {} by arity {}", a.arity, b.arity)));
        }
        let mut out = self.zero(a.arity);
        for (ta, ca) in &a.terms {
            for (tb, cb) in &b.terms {
                let mut acc: Vec<(Term, Q)> = vec![(Vec::with_capacity(self.nlayers()), ca * cb)];
                for (l, layer) in self.layers.iter().enumerate() {
                    let prod = layer_mul(&layer.alg, &ta[l], &tb[l]);
                    if prod.is_empty() {
                        acc.clear();
                        break;
                    }
                    let mut next = Vec::with_capacity(acc.len() * prod.len());
                    for (t, c) in &acc {
                        for (u, cu) in &prod {
                            let mut v = t.clone();
                            v.push(u.clone());
                            next.push((v, c * cu));
                        }
                    }
                    acc = next;
                }
                for (t, c) in acc {
                    add_term(&mut out.terms, t, c);
                }
                self.bound(out.terms.len())?;
            }
        }
        Ok(out)
    }

    /// Pull back along the injective map i -> j[i] into X^big.
    pub fn pullback(&self, a: &PowerClass, j: &[usize], big: usize) -> Result<PowerClass> {
        self.same(a)?;
        self.check_arity(big)?;
        if j.len() != a.arity {
            return Err(Error::Arity(format!("map has {} entries for arity {}", j.len(), a.arity)));
        }
        let mut seen = 0u32;
        for x in j {
            if *x >= big || seen & (1 << x) != 0 {
                return Err(Error::invalid("pullback map must be injective into the target"));
            }
            seen |= 1 << x;
        }
        let mut out = self.zero(big);
        for (t, c) in &a.terms {
            let mut u: Term = Vec::with_capacity(t.len());
            for (l, lt) in t.iter().enumerate() {
                let unit = self.layers[l].alg.unit();
                let mut v: LayerTerm = lt.iter().map(|(m, s)| (map_bits(*m, j), *s)).collect();
                for i in 0..big {
                    if seen & (1 << i) == 0 {
                        v.push((1 << i, unit));
                    }
                }
                canon(&mut v);
                u.push(v);
            }
            add_term(&mut out.terms, u, c.clone());
        }
        Ok(out)
    }

    /// sigma[i] is the new position of factor i.
    pub fn permute(&self, a: &PowerClass, sigma: &[usize]) -> Result<PowerClass> {
        if sigma.len() != a.arity {
            return Err(Error::Arity("permutation length".into()));
        }
        self.pullback(a, sigma, a.arity)
    }

    /// Push forward to the factors listed in `keep` (0-based, any order is sorted).
    pub fn pushforward(&self, a: &PowerClass, keep: &[usize]) -> Result<PowerClass> {
        self.same(a)?;
        if keep.is_empty() {
            return Err(Error::invalid("pushforward needs a nonempty set of kept factors"));
        }
        let mut km = 0u32;
        for k in keep {
            if *k >= a.arity {
                return Err(Error::invalid(format!("factor {} out of range", k + 1)));
            }
            km |= 1 << k;
        }
        let mut out = self.zero(km.count_ones() as usize);
        'terms: for (t, c) in &a.terms {
            let mut coef = c.clone();
            let mut u = Vec::with_capacity(t.len());
            for (l, lt) in t.iter().enumerate() {
                match layer_push(&self.layers[l].alg, lt, km) {
                    Some((v, f)) => {
                        coef *= f;
                        u.push(v);
                    }
                    None => continue 'terms,
                }
            }
            add_term(&mut out.terms, u, coef);
        }
        Ok(out)
    }

    /// Push forward to the point.
    pub fn integrate(&self, a: &PowerClass) -> Result<Q> {
        self.same(a)?;
        let mut total = Q::zero();
        for (t, c) in &a.terms {
            let mut x = c.clone();
            for (l, lt) in t.iter().enumerate() {
                for (_, s) in lt {
                    x *= self.layers[l].alg.deg_of(*s);
                }
            }
            total += x;
        }
        Ok(total)
    }

    pub fn apply_relations(&self, a: &PowerClass) -> Result<PowerClass> {
        self.same(a)?;
        if !self.has_rules() {
            return Ok(a.clone());
        }
        let mut out = self.zero(a.arity);
        for (t, c) in &a.terms {
            let mut acc: Vec<(Term, Q)> = vec![(Vec::with_capacity(self.nlayers()), c.clone())];
            for (l, lt) in t.iter().enumerate() {
                let nf = self.layers[l].norm_layer_term(lt);
                let mut next = Vec::with_capacity(acc.len() * nf.len());
                for (u, cu) in &acc {
                    for (v, cv) in nf.iter() {
                        let mut w = u.clone();
                        w.push(v.clone());
                        next.push((w, cu * cv));
                    }
                }
                acc = next;
                self.bound(acc.len())?;
            }
            for (w, x) in acc {
                add_term(&mut out.terms, w, x);
            }
            self.bound(out.terms.len())?;
        }
        Ok(out)
    }

    /// Same normal form, but every term expands its blocks from the last one first.
    pub fn apply_relations_reversed(&self, a: &PowerClass) -> Result<PowerClass> {
        let mut cur = a.clone();
        loop {
            match self.rewrite_step(&cur, true)? {
                Some((next, _)) => cur = next,
                None => return Ok(cur),
            }
        }
    }

    /// A single rewrite: the first (or last) rewritable block of the first term
    /// that has one is expanded once. Returns None at a normal form.
    pub fn rewrite_step(&self, a: &PowerClass, from_last: bool) -> Result<Option<(PowerClass, String)>> {
        self.same(a)?;
        for (t, c) in &a.terms {
            for (l, lt) in t.iter().enumerate() {
                let layer = &self.layers[l];
                let mut idx: Vec<usize> = (0..lt.len()).collect();
                if from_last {
                    idx.reverse();
                }
                for bi in idx {
                    let (mask, s) = lt[bi];
                    let k = mask.count_ones() as usize;
                    if !layer.rewritable(k, s) {
                        continue;
                    }
                    let step = layer.expand_block(k, s).expect("rewritable");
                    let pos = bits(mask);
                    let mut out = a.clone();
                    out.terms.remove(t);
                    for (u, cu) in step {
                        let mut v = t.clone();
                        let mut nl: LayerTerm = lt.iter().enumerate().filter(|(i, _)| *i != bi).map(|(_, b)| *b).collect();
                        nl.extend(u.iter().map(|(m, x)| (map_bits(*m, &pos), *x)));
                        canon(&mut nl);
                        v[l] = nl;
                        add_term(&mut out.terms, v, c * cu);
                    }
                    self.bound(out.terms.len())?;
                    let label = format!(
                        "expand block {{{}}} carrying {}",
                        pos.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(","),
                        layer.alg.name_of(s)
                    );
                    return Ok(Some((out, label)));
                }
            }
        }
        Ok(None)
    }

    pub fn is_zero(&self, a: &PowerClass) -> Result<bool> {
        Ok(self.apply_relations(a)?.terms.is_empty())
    }

    pub fn equal(&self, a: &PowerClass, b: &PowerClass) -> Result<bool> {
        self.is_zero(&self.sub(a, b)?)
    }

    /// Codimension of a term on X^m.
    pub fn term_codim(&self, t: &Term) -> usize {
        let mut c = 0;
        for (l, lt) in t.iter().enumerate() {
            let alg = &self.layers[l].alg;
            for (m, s) in lt {
                c += alg.n() * (m.count_ones() as usize - 1) + alg.codim(*s);
            }
        }
        c
    }

    pub fn codimension_components(&self, a: &PowerClass) -> BTreeMap<usize, PowerClass> {
        let mut out: BTreeMap<usize, PowerClass> = BTreeMap::new();
        for (t, c) in &a.terms {
            let k = self.term_codim(t);
            let e = out.entry(k).or_insert_with(|| self.zero(a.arity));
            add_term(&mut e.terms, t.clone(), c.clone());
        }
        out
    }

    /// True when some term keeps a block of size >= 2 (an opaque diagonal symbol).
    pub fn has_opaque(&self, a: &PowerClass) -> bool {
        a.terms.keys().any(|t| t.iter().any(|lt| lt.iter().any(|(m, _)| m.count_ones() > 1)))
    }

    /// Arity-1 class as a base class of the tensor algebra.
    pub fn to_base(&self, a: &PowerClass) -> Result<BaseClass> {
        if a.arity != 1 {
            return Err(Error::Arity(format!("expected arity 1, got {}", a.arity)));
        }
        let mut l = Lin::new();
        for (t, c) in &a.terms {
            let parts: Vec<Sym> = t.iter().map(|lt| lt[0].1).collect();
            let s = self.join_syms(&parts).expect("tensor symbol");
            lin_add(&mut l, s, c);
        }
        Ok(self.tensor.class(l))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerClass {
    pub arity: usize,
    pid: u64,
    pub terms: BTreeMap<Term, Q>,
}

impl PowerClass {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
}
