//! Chow-Kunneth projector sets and the gradings they induce.

use std::collections::BTreeMap;

use num_traits::One;
use serde_json::{json, Value};

use crate::algebra::{Sym, Q};
use crate::correspondence::{self as corr, Correspondence};
use crate::error::{Error, Result};
use crate::power::{add_term, LayerClass, LayerKind, PowerClass, Profile, Term};
use crate::text::class_text;

#[derive(Clone, Debug)]
pub struct CkSet {
    pub projectors: Vec<Correspondence>,
    pub self_dual: bool,
    pub label: String,
}

impl CkSet {
    pub fn n(&self) -> usize {
        (self.projectors.len() - 1) / 2
    }

    /// pi_1 vanishes identically.
    pub fn odd_one_zero(&self) -> bool {
        self.projectors.len() > 1 && self.projectors[1].class.is_empty()
    }

    pub fn to_json(&self, p: &Profile) -> Value {
        json!({
            "projectors": self.projectors.iter().map(|c| class_text(p, &c.class)).collect::<Vec<_>>(),
        })
    }
}

fn diag_layer(unit: Sym) -> LayerClass {
    LayerClass::from([(vec![(3u32, unit)], Q::one())])
}

/// Per-layer projectors from the dual basis; the middle one absorbs the rest.
fn layer_dual_projectors(p: &Profile, l: usize) -> Result<Vec<LayerClass>> {
    let layer = p.layer(l);
    let alg = &layer.alg;
    let n = alg.n();
    if let Some(c) = alg.degenerate_codim() {
        return Err(Error::DegeneratePairing(c));
    }
    let mut out = vec![LayerClass::new(); 2 * n + 1];
    for i in 0..=n {
        if 2 * i == n {
            continue;
        }
        let mut cls = LayerClass::new();
        for b in alg.basis(i) {
            for (x, c) in alg.dual(*b).expect("nondegenerate") {
                add_term(&mut cls, vec![(1, *x), (2, *b)], c.clone());
            }
        }
        out[2 * i] = cls;
    }
    let mut mid = diag_layer(alg.unit());
    for (k, cls) in out.iter().enumerate() {
        if k == n {
            continue;
        }
        for (t, c) in cls {
            add_term(&mut mid, t.clone(), -c.clone());
        }
    }
    out[n] = mid;
    Ok(out)
}

fn layer_curve_projectors(p: &Profile, l: usize, left: Sym, right: Sym) -> Result<Vec<LayerClass>> {
    let alg = &p.layer(l).alg;
    if p.layer(l).kind != LayerKind::Curve {
        return Err(Error::invalid("curve projectors need a curve profile"));
    }
    for s in [left, right] {
        if alg.codim(s) != 1 || *alg.deg_of(s) != Q::one() {
            return Err(Error::invalid(format!("`{}` is not a degree-one point class", alg.name_of(s))));
        }
    }
    let u = alg.unit();
    let pi0 = LayerClass::from([(vec![(1u32, left), (2, u)], Q::one())]);
    let pi2 = LayerClass::from([(vec![(1u32, u), (2, right)], Q::one())]);
    let mut pi1 = diag_layer(u);
    add_term(&mut pi1, vec![(1u32, left), (2, u)], -Q::one());
    add_term(&mut pi1, vec![(1u32, u), (2, right)], -Q::one());
    Ok(vec![pi0, pi1, pi2])
}

/// Combine per-layer projector families into projectors of the product.
fn assemble(p: &Profile, per_layer: &[Vec<LayerClass>], label: &str, self_dual: bool) -> Result<CkSet> {
    let total: usize = per_layer.iter().map(|v| v.len() - 1).sum();
    let mut acc: BTreeMap<usize, Vec<(Term, Q)>> = BTreeMap::from([(0usize, vec![(Vec::new(), Q::one())])]);
    for fam in per_layer {
        let mut next: BTreeMap<usize, Vec<(Term, Q)>> = BTreeMap::new();
        for (deg, terms) in &acc {
            for (i, cls) in fam.iter().enumerate() {
                let e = next.entry(deg + i).or_default();
                for (t, c) in terms {
                    for (u, cu) in cls {
                        let mut v = t.clone();
                        v.push(u.clone());
                        e.push((v, c * cu));
                    }
                }
            }
        }
        acc = next;
    }
    let mut projectors = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let terms = acc.remove(&k).unwrap_or_default();
        let cls = p.apply_relations(&p.from_terms(2, terms))?;
        projectors.push(Correspondence::new(cls, 1, 1)?);
    }
    let ck = CkSet { projectors, self_dual, label: label.to_string() };
    let rep = verify_ck(p, &ck)?;
    if !rep.passed() {
        return Err(Error::Verification(format!("projector set `{label}` fails: {}", rep.failures().join("; "))));
    }
    Ok(ck)
}

/// Natural projectors: dual-basis ones on hypersurface and split layers, and
/// o x X, X x o on curve layers (o the designated zero-cycle).
pub fn natural_projectors(p: &Profile) -> Result<CkSet> {
    let mut fams = Vec::new();
    for l in 0..p.nlayers() {
        let layer = p.layer(l);
        fams.push(match layer.kind {
            LayerKind::Curve => {
                let o = curve_origin(p, l)?;
                layer_curve_projectors(p, l, o, o)?
            }
            _ => layer_dual_projectors(p, l)?,
        });
    }
    assemble(p, &fams, "natural", true)
}

fn curve_origin(p: &Profile, l: usize) -> Result<Sym> {
    let z = p.layer(l).alg.zero_cycle();
    match z.iter().next() {
        Some((s, c)) if z.len() == 1 && *c == Q::one() => Ok(*s),
        _ => Err(Error::invalid("curve zero-cycle must be a single point symbol")),
    }
}

/// pi_0 = o_l x X, pi_2 = X x o_r, pi_1 the rest, on a single curve.
pub fn curve_projectors(p: &Profile, left: &str, right: &str) -> Result<CkSet> {
    if p.nlayers() != 1 || p.layer(0).kind != LayerKind::Curve {
        return Err(Error::invalid("curve projectors need a curve profile"));
    }
    let alg = &p.layer(0).alg;
    let find = |s: &str| alg.sym(s).ok_or_else(|| Error::invalid(format!("unknown point `{s}`")));
    let (l, r) = (find(left)?, find(right)?);
    let fam = layer_curve_projectors(p, 0, l, r)?;
    assemble(p, &[fam], &format!("curve:{left},{right}"), l == r)
}

/// pi_k of the product as the sum of pi_i (x) pi_j over i + j = k.
pub fn product_ck(p1: &Profile, ck1: &CkSet, p2: &Profile, ck2: &CkSet, prod: &Profile) -> Result<CkSet> {
    let l1 = p1.layers().iter().filter(|l| l.alg.n() > 0).count();
    let l2 = p2.layers().iter().filter(|l| l.alg.n() > 0).count();
    if l1 + l2 != prod.nlayers() {
        return Err(Error::invalid("product profile does not match its factors"));
    }
    let strip = |p: &Profile, t: &Term| -> Term {
        t.iter().enumerate().filter(|(l, _)| p.layer(*l).alg.n() > 0).map(|(_, lt)| lt.clone()).collect()
    };
    let total = ck1.projectors.len() + ck2.projectors.len() - 2;
    let mut projectors = Vec::new();
    for k in 0..=total {
        let mut terms = Vec::new();
        for (i, a) in ck1.projectors.iter().enumerate() {
            if i > k || k - i >= ck2.projectors.len() {
                continue;
            }
            let b = &ck2.projectors[k - i];
            for (ta, ca) in &a.class.terms {
                for (tb, cb) in &b.class.terms {
                    let mut t = strip(p1, ta);
                    t.extend(strip(p2, tb));
                    terms.push((t, ca * cb));
                }
            }
        }
        let cls = prod.apply_relations(&prod.from_terms(2, terms))?;
        projectors.push(Correspondence::new(cls, 1, 1)?);
    }
    let ck = CkSet {
        projectors,
        self_dual: ck1.self_dual && ck2.self_dual,
        label: format!("({})x({})", ck1.label, ck2.label),
    };
    let rep = verify_ck(prod, &ck)?;
    if !rep.passed() {
        return Err(Error::Verification(format!("product projectors fail: {}", rep.failures().join("; "))));
    }
    Ok(ck)
}

#[derive(Clone, Debug)]
pub struct CkReport {
    pub sum_residual: PowerClass,
    pub not_orthogonal: Vec<(usize, usize)>,
    pub not_idempotent: Vec<usize>,
    pub self_dual_declared: bool,
    pub not_dual: Vec<usize>,
    pub note: &'static str,
    residual_text: String,
}

impl CkReport {
    pub fn passed(&self) -> bool {
        self.sum_residual.is_empty()
            && self.not_orthogonal.is_empty()
            && self.not_idempotent.is_empty()
            && self.not_dual.is_empty()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !self.sum_residual.is_empty() {
            v.push(format!("sum differs from the diagonal by {}", self.residual_text));
        }
        for (i, j) in &self.not_orthogonal {
            v.push(format!("pi_{i} and pi_{j} are not orthogonal"));
        }
        for i in &self.not_idempotent {
            v.push(format!("pi_{i} is not idempotent"));
        }
        for i in &self.not_dual {
            v.push(format!("transpose of pi_{i} differs from its dual partner"));
        }
        v
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "sum_to_diagonal": self.sum_residual.is_empty(),
            "residual": self.residual_text,
            "not_orthogonal": self.not_orthogonal,
            "not_idempotent": self.not_idempotent,
            "self_dual_declared": self.self_dual_declared,
            "not_dual": self.not_dual,
            "note": self.note,
        })
    }
}

pub const KUNNETH_NOTE: &str = "Kunneth lifting not checked";

/// Algebraic checks of a projector family; failures are reported, not raised.
pub fn verify_ck(p: &Profile, ck: &CkSet) -> Result<CkReport> {
    let k = ck.projectors.len();
    let diag = corr::identity(p, 1)?;
    let mut sum = p.scale(&diag.class, &-Q::one());
    for pi in &ck.projectors {
        sum = p.add(&sum, &pi.class)?;
    }
    let sum_residual = p.apply_relations(&sum)?;
    let mut not_orthogonal = Vec::new();
    let mut not_idempotent = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let c = corr::compose(p, &ck.projectors[i], &ck.projectors[j])?;
            if i == j {
                if !p.equal(&c.class, &ck.projectors[i].class)? {
                    not_idempotent.push(i);
                }
            } else if !c.class.is_empty() && !p.is_zero(&c.class)? && !not_orthogonal.contains(&(j.min(i), j.max(i))) {
                not_orthogonal.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut not_dual = Vec::new();
    if ck.self_dual {
        for i in 0..k {
            let t = corr::transpose(p, &ck.projectors[i])?;
            if !corr::equal(p, &t, &ck.projectors[k - 1 - i])? {
                not_dual.push(i);
            }
        }
    }
    let residual_text = class_text(p, &sum_residual);
    Ok(CkReport {
        sum_residual,
        not_orthogonal,
        not_idempotent,
        self_dual_declared: ck.self_dual,
        not_dual,
        note: KUNNETH_NOTE,
        residual_text,
    })
}

/// Whether the transposes pair up as pi_i^t = pi_{2n-i}.
pub fn check_self_duality(p: &Profile, ck: &CkSet) -> Result<Vec<usize>> {
    let k = ck.projectors.len();
    let mut bad = Vec::new();
    for i in 0..k {
        let t = corr::transpose(p, &ck.projectors[i])?;
        if !corr::equal(p, &t, &ck.projectors[k - 1 - i])? {
            bad.push(i);
        }
    }
    Ok(bad)
}

/// pi_l on X^m: sum over i_1 + .. + i_m = l of the tensor products.
pub fn power_grading_projector(p: &Profile, ck: &CkSet, m: usize, l: usize) -> Result<Correspondence> {
    let top = ck.projectors.len() - 1;
    let mut acc: BTreeMap<usize, Correspondence> = BTreeMap::new();
    for (i, pi) in ck.projectors.iter().enumerate() {
        acc.insert(i, pi.clone());
    }
    for _ in 1..m {
        let mut next: BTreeMap<usize, Correspondence> = BTreeMap::new();
        for (d, f) in &acc {
            for (i, pi) in ck.projectors.iter().enumerate() {
                let t = corr::tensor(p, f, pi)?;
                match next.get_mut(&(d + i)) {
                    Some(g) => g.class = p.add(&g.class, &t.class)?,
                    None => {
                        next.insert(d + i, t);
                    }
                }
            }
        }
        acc = next;
    }
    if l > m * top {
        return Ok(Correspondence::new(p.zero(2 * m), m, m)?);
    }
    let f = acc.remove(&l).unwrap();
    Correspondence::new(p.apply_relations(&f.class)?, m, m)
}

/// For each total index, the sum over tuples of the slotwise projector action.
/// `proj(slot, i)` picks the correspondence used on each factor.
pub fn slot_sweep<F>(p: &Profile, z: &PowerClass, count: usize, proj: F) -> Result<BTreeMap<usize, PowerClass>>
where
    F: Fn(usize, usize) -> Option<Correspondence>,
{
    let mut state: BTreeMap<usize, PowerClass> = BTreeMap::from([(0, p.apply_relations(z)?)]);
    for slot in 0..z.arity {
        let mut next: BTreeMap<usize, PowerClass> = BTreeMap::new();
        for (d, cls) in &state {
            for i in 0..count {
                let Some(pi) = proj(slot, i) else { continue };
                if pi.class.is_empty() {
                    continue;
                }
                let y = corr::act_slot(p, &pi, cls, slot)?;
                if y.is_empty() {
                    continue;
                }
                match next.get_mut(&(d + i)) {
                    Some(acc) => *acc = p.add(acc, &y)?,
                    None => {
                        next.insert(d + i, y);
                    }
                }
            }
        }
        next.retain(|_, v| !v.is_empty());
        state = next;
    }
    Ok(state)
}

/// s -> (pi_{2r-s} on X^m)_* z for z of codimension r. Keys are s (may be negative).
pub fn chow_grading(p: &Profile, ck: &CkSet, z: &PowerClass, r: usize) -> Result<BTreeMap<i64, PowerClass>> {
    let comps = p.codimension_components(z);
    if comps.len() > 1 || comps.keys().any(|c| *c != r) {
        return Err(Error::invalid(format!("class is not homogeneous of codimension {r}")));
    }
    let count = ck.projectors.len();
    let by_l = slot_sweep(p, z, count, |_, i| Some(ck.projectors[i].clone()))?;
    let mut out = BTreeMap::new();
    for (l, cls) in by_l {
        out.insert(2 * r as i64 - l as i64, cls);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile;

    #[test]
    fn quartic_natural_set() {
        let p = profile::hypersurface(2, 3, &[4], Default::default()).unwrap();
        let ck = natural_projectors(&p).unwrap();
        assert_eq!(ck.projectors.len(), 5);
        assert!(ck.projectors[1].class.is_empty());
        assert_eq!(class_text(&p, &ck.projectors[0].class), "1/4 * s{1}[D^2] * s{2}[D^0]");
        assert_eq!(class_text(&p, &ck.projectors[4].class), "1/4 * s{1}[D^0] * s{2}[D^2]");
    }

    #[test]
    fn line_splits_completely() {
        let p = profile::hypersurface(1, 2, &[1], Default::default()).unwrap();
        let ck = natural_projectors(&p).unwrap();
        assert!(ck.projectors[1].class.is_empty());
    }

    #[test]
    fn corrupted_projector_reports_residual() {
        let p = profile::hypersurface(2, 3, &[4], Default::default()).unwrap();
        let mut ck = natural_projectors(&p).unwrap();
        ck.projectors[0].class = p.scale(&ck.projectors[0].class, &Q::new(2.into(), 1.into()));
        let rep = verify_ck(&p, &ck).unwrap();
        assert!(!rep.passed());
        assert_eq!(class_text(&p, &rep.sum_residual), "1/4 * s{1}[D^2] * s{2}[D^0]");
    }

    #[test]
    fn two_point_curve_is_not_self_dual() {
        let p = profile::curve(1, &["o1", "o2"], false).unwrap();
        let ck = curve_projectors(&p, "o1", "o2").unwrap();
        assert!(!ck.self_dual);
        // pi_1 also moves: its transpose differs by (o1 - o2) x X - X x (o1 - o2)
        assert_eq!(check_self_duality(&p, &ck).unwrap(), vec![0, 1, 2]);
    }
}
