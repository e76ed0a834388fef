//! Graded pieces of small diagonals, multiplicativity defects, modified
//! diagonals and the coefficient checks built on them.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::algebra::{invert, Lin, Q};
use crate::ck::{self, CkSet};
use crate::correspondence::{self as corr, Correspondence};
use crate::error::{Error, Result};
use crate::power::{PowerClass, Profile, Term};
use crate::text::class_text;

/// Largest fold accepted by sweeps.
pub const MAX_FOLD: usize = 8;

#[derive(Clone, Debug)]
pub struct DefectReport {
    pub m: usize,
    pub pieces: BTreeMap<i64, PowerClass>,
    pub defect: Option<i64>,
    pub violations: Vec<i64>,
    pub certified: bool,
}

impl DefectReport {
    fn new(p: &Profile, m: usize, pieces: BTreeMap<i64, PowerClass>) -> Self {
        let pieces: BTreeMap<i64, PowerClass> = pieces.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        let violations: Vec<i64> = pieces.keys().copied().filter(|s| *s < 0).collect();
        let defect = if violations.is_empty() { pieces.keys().max().copied() } else { None };
        let certified = pieces.values().all(|c| !p.has_opaque(c));
        DefectReport { m, pieces, defect, violations, certified }
    }

    pub fn within(&self, tau: i64) -> bool {
        self.pieces.keys().all(|s| *s >= 0 && *s <= tau)
    }

    pub fn to_json(&self, p: &Profile) -> Value {
        let mut pieces = Map::new();
        for (s, c) in &self.pieces {
            pieces.insert(s.to_string(), Value::String(class_text(p, c)));
        }
        json!({
            "m": self.m,
            "pieces": pieces,
            "defect": match self.defect { Some(d) => json!(d), None => json!("undefined") },
            "violations": self.violations,
            "certified": self.certified,
        })
    }
}

fn check_fold(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::invalid("fold m must be at least 2"));
    }
    if m > MAX_FOLD {
        return Err(Error::Resource(format!("fold {m} exceeds the limit {MAX_FOLD}")));
    }
    Ok(())
}

/// Slotwise sweep keyed by the sum of per-slot weights.
fn weighted_sweep<F>(p: &Profile, z: &PowerClass, choices: F) -> Result<BTreeMap<i64, PowerClass>>
where
    F: Fn(usize) -> Vec<(i64, Correspondence)>,
{
    let mut state: BTreeMap<i64, PowerClass> = BTreeMap::from([(0, p.apply_relations(z)?)]);
    for slot in 0..z.arity {
        let opts = choices(slot);
        let mut next: BTreeMap<i64, PowerClass> = BTreeMap::new();
        for (w, cls) in &state {
            for (dw, pi) in &opts {
                if pi.class.is_empty() {
                    continue;
                }
                let y = corr::act_slot(p, pi, cls, slot)?;
                if y.is_empty() {
                    continue;
                }
                let k = w + dw;
                let v = match next.remove(&k) {
                    Some(acc) => p.add(&acc, &y)?,
                    None => y,
                };
                next.insert(k, v);
            }
        }
        next.retain(|_, v| !v.is_empty());
        state = next;
    }
    Ok(state)
}

/// Pieces of Delta_{I_m} on X^{m+1}: s = 2mn - (i_1 + .. + i_{m+1}).
pub fn graded_pieces(p: &Profile, ck: &CkSet, m: usize) -> Result<DefectReport> {
    check_fold(m)?;
    let n = p.n() as i64;
    let d = p.small_diagonal(m + 1)?;
    let by_l = weighted_sweep(p, &d, |_| ck.projectors.iter().cloned().enumerate().map(|(i, c)| (i as i64, c)).collect())?;
    let pieces = by_l.into_iter().map(|(l, c)| (2 * m as i64 * n - l, c)).collect();
    Ok(DefectReport::new(p, m, pieces))
}

/// The same pieces from sorted index tuples, spreading each over its orbit.
pub fn graded_pieces_by_orbits(p: &Profile, ck: &CkSet, m: usize) -> Result<DefectReport> {
    check_fold(m)?;
    let arity = m + 1;
    let k = ck.projectors.len();
    let n = p.n() as i64;
    let d = p.apply_relations(&p.small_diagonal(arity)?)?;
    let mut pieces: BTreeMap<i64, PowerClass> = BTreeMap::new();
    let mut tuple = vec![0usize; arity];
    loop {
        let mut cls = d.clone();
        for (slot, i) in tuple.iter().enumerate() {
            if cls.is_empty() {
                break;
            }
            cls = corr::act_slot(p, &ck.projectors[*i], &cls, slot)?;
        }
        if !cls.is_empty() {
            let s = 2 * m as i64 * n - tuple.iter().sum::<usize>() as i64;
            for perm in distinct_arrangements(&tuple) {
                let moved = p.permute(&cls, &perm)?;
                let v = match pieces.remove(&s) {
                    Some(acc) => p.add(&acc, &moved)?,
                    None => moved,
                };
                pieces.insert(s, v);
            }
        }
        // next nondecreasing tuple
        let mut pos = arity;
        while pos > 0 && tuple[pos - 1] == k - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = tuple[pos - 1] + 1;
        for t in tuple[pos - 1..].iter_mut() {
            *t = v;
        }
    }
    let pieces = pieces
        .into_iter()
        .map(|(s, c)| Ok((s, p.apply_relations(&c)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(DefectReport::new(p, m, pieces))
}

/// Permutations sigma (factor i moves to sigma[i]) giving each distinct rearrangement once.
fn distinct_arrangements(t: &[usize]) -> Vec<Vec<usize>> {
    let n = t.len();
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let mut arranged = vec![0; n];
        for i in 0..n {
            arranged[perm[i]] = t[i];
        }
        if seen.insert(arranged) {
            out.push(perm.clone());
        }
        // next permutation
        let mut i = n - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}

/// Buckets of (pi_{i_1}^t x .. x pi_{i_m}^t x pi_k)_* Delta_I keyed by sum(i) - k.
pub fn transposed_buckets(p: &Profile, ck: &CkSet, m: usize) -> Result<BTreeMap<i64, PowerClass>> {
    check_fold(m)?;
    let transposed: Vec<Correspondence> =
        ck.projectors.iter().map(|c| corr::transpose(p, c)).collect::<Result<_>>()?;
    let d = p.small_diagonal(m + 1)?;
    weighted_sweep(p, &d, |slot| {
        if slot < m {
            transposed.iter().cloned().enumerate().map(|(i, c)| (i as i64, c)).collect()
        } else {
            ck.projectors.iter().cloned().enumerate().map(|(i, c)| (-(i as i64), c)).collect()
        }
    })
}

/// Vanishing of every tuple with k > sum(i) or k < sum(i) - tau.
pub fn is_m_fold_tau(p: &Profile, ck: &CkSet, m: usize, tau: i64) -> Result<bool> {
    let b = transposed_buckets(p, ck, m)?;
    Ok(b.iter().all(|(s, c)| (*s >= 0 && *s <= tau) || c.is_empty()))
}

pub fn multiplicativity_defect(p: &Profile, ck: &CkSet, m: usize) -> Result<Option<i64>> {
    Ok(graded_pieces(p, ck, m)?.defect)
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub rows: Vec<(usize, Option<i64>)>,
    pub running_max: Vec<Option<i64>>,
    pub stabilized: bool,
}

impl SweepReport {
    pub fn defects(&self) -> Vec<Option<i64>> {
        self.rows.iter().map(|r| r.1).collect()
    }

    /// Largest measured defect, when every fold had one.
    pub fn max(&self) -> Option<i64> {
        self.running_max.last().copied().flatten()
    }

    pub fn to_json(&self) -> Value {
        let dv = |d: &Option<i64>| match d {
            Some(x) => json!(x),
            None => json!("undefined"),
        };
        json!({
            "rows": self.rows.iter().zip(&self.running_max).map(|((m, d), r)| json!({"m": m, "defect": dv(d), "running_max": dv(r)})).collect::<Vec<_>>(),
            "defects": self.rows.iter().map(|r| dv(&r.1)).collect::<Vec<_>>(),
            "max": dv(&self.max()),
            "stabilized": self.stabilized,
        })
    }
}

pub fn stable_defect_sweep(p: &Profile, ck: &CkSet, m_max: usize) -> Result<SweepReport> {
    check_fold(m_max)?;
    let mut rows = Vec::new();
    let mut running_max = Vec::new();
    let mut cur: Option<i64> = Some(i64::MIN);
    for m in 2..=m_max {
        let d = multiplicativity_defect(p, ck, m)?;
        cur = match (cur, d) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        rows.push((m, d));
        running_max.push(cur);
    }
    let stabilized = rows.len() >= 2 && rows[rows.len() - 1].1 == rows[rows.len() - 2].1;
    Ok(SweepReport { rows, running_max, stabilized })
}

/// Gamma^k(X, o) = sum over proper J of (-1)^|J| o^J x Delta_{J'}.
pub fn modified_diagonal(p: &Profile, k: usize) -> Result<PowerClass> {
    modified_diagonal_with(p, k, true)
}

pub fn modified_diagonal_with(p: &Profile, k: usize, normalize: bool) -> Result<PowerClass> {
    if k < 2 {
        return Err(Error::invalid("modified diagonal needs k >= 2"));
    }
    if k > crate::power::MAX_ARITY {
        return Err(Error::Resource(format!("k = {k} too large")));
    }
    let o = p.base().class(p.base().zero_cycle().clone());
    let unit = p.base().unit_class();
    let mut acc = p.zero(k);
    for j in 0u32..(1u32 << k) - 1 {
        let rest: Vec<usize> = (0..k).filter(|i| j & (1 << i) == 0).collect();
        let ext: Vec<_> = (0..k).map(|i| if j & (1 << i) != 0 { o.clone() } else { unit.clone() }).collect();
        let mut cls = p.exterior(&ext)?;
        if rest.len() >= 2 {
            let d = p.pullback(&p.small_diagonal(rest.len())?, &rest, k)?;
            cls = p.multiply(&cls, &d)?;
        }
        let sign = if j.count_ones() % 2 == 0 { Q::one() } else { -Q::one() };
        acc = p.lin_comb(&[(Q::one(), &acc), (sign, &cls)])?;
    }
    if normalize {
        p.apply_relations(&acc)
    } else {
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct GammaRow {
    pub k: usize,
    pub vanishes: bool,
    pub predicted_vanishing: bool,
    pub consistent: bool,
}

#[derive(Clone, Debug)]
pub struct GammaReport {
    pub rows: Vec<GammaRow>,
    pub tau: Option<i64>,
    /// Thresholds t with Gamma^k = 0 predicted for k > t, and their source.
    pub thresholds: Vec<(String, Option<f64>)>,
    pub applicable: bool,
    pub note: String,
}

impl GammaReport {
    pub fn consistent(&self) -> bool {
        self.rows.iter().all(|r| r.consistent)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tau": self.tau,
            "applicable": self.applicable,
            "thresholds": self.thresholds.iter().map(|(s, t)| json!({"rule": s, "threshold": t})).collect::<Vec<_>>(),
            "rows": self.rows.iter().map(|r| json!({"k": r.k, "vanishes": r.vanishes, "predicted": r.predicted_vanishing, "consistent": r.consistent})).collect::<Vec<_>>(),
            "consistent": self.consistent(),
            "note": self.note,
        })
    }
}

/// Computed Gamma^k for k = 2..k_max against the vanishing thresholds implied
/// by the measured stable defect over folds 2..m_max.
pub fn gamma_vanishing_report(p: &Profile, ck: &CkSet, k_max: usize, m_max: usize) -> Result<GammaReport> {
    if k_max < 2 {
        return Err(Error::invalid("k_max must be at least 2"));
    }
    let n = p.n() as i64;
    let sweep = stable_defect_sweep(p, ck, m_max.max(3))?;
    let tau = sweep.max();
    let pi0_ok = pi0_is_point(p, ck)?;
    let applicable = ck.self_dual && pi0_ok && sweep.stabilized && tau.is_some();
    let mut thresholds = Vec::new();
    let mut note = String::new();
    if applicable {
        let t = tau.unwrap();
        thresholds.push(("2n+tau".to_string(), Some((2 * n + t) as f64)));
        if ck.odd_one_zero() {
            thresholds.push(("n+tau/2 (pi_1 = 0)".to_string(), Some(n as f64 + t as f64 / 2.0)));
        }
        let d2 = sweep.rows.first().and_then(|r| r.1);
        if ck.odd_one_zero() && d2.map(|d| d <= 1).unwrap_or(false) {
            thresholds.push(("2n-2 (1-multiplicative, pi_1 = 0)".to_string(), Some((2 * n - 2) as f64)));
        }
    } else {
        note = "not applicable: needs a self-dual set with pi_0 = o x X and a stabilized defect sweep".into();
        thresholds.push(("2n+tau".to_string(), None));
    }
    let best = thresholds.iter().filter_map(|t| t.1).fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for k in 2..=k_max {
        let g = modified_diagonal(p, k)?;
        let vanishes = g.is_empty();
        let predicted = applicable && (k as f64) > best;
        rows.push(GammaRow { k, vanishes, predicted_vanishing: predicted, consistent: !predicted || vanishes });
    }
    Ok(GammaReport { rows, tau, thresholds, applicable, note })
}

fn pi0_is_point(p: &Profile, ck: &CkSet) -> Result<bool> {
    let o = p.base().class(p.base().zero_cycle().clone());
    let ox = p.exterior(&[o, p.base().unit_class()])?;
    p.equal(&ck.projectors[0].class, &ox)
}

#[derive(Clone, Debug)]
pub struct OmegaReport {
    pub omega: PowerClass,
    pub omega_decomposable: bool,
    pub residual: PowerClass,
    pub holds: bool,
    pub defect_zero: bool,
}

impl OmegaReport {
    pub fn to_json(&self, p: &Profile) -> Value {
        json!({
            "holds": self.holds,
            "omega": class_text(p, &self.omega),
            "omega_decomposable": self.omega_decomposable,
            "residual": class_text(p, &self.residual),
            "defect_zero": self.defect_zero,
            "verdict": if self.holds { "multiplicative in model" } else { "not multiplicative in model" },
        })
    }
}

/// Delta_123 - (Delta_12 + Delta_13 + Delta_23) against Omega_X, with
/// Delta_ij meaning the big diagonal times o on the remaining factor.
pub fn omega_check(p: &Profile, ck: &CkSet) -> Result<OmegaReport> {
    let rep = graded_pieces(p, ck, 2)?;
    let o = p.base().class(p.base().zero_cycle().clone());
    let unit = p.base().unit_class();
    let mut partial = p.zero(3);
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        let mut ext = vec![unit.clone(); 3];
        ext[k] = o.clone();
        let t = p.multiply(&p.big_diagonal(3, i, j)?, &p.exterior(&ext)?)?;
        partial = p.add(&partial, &t)?;
    }
    let partial = p.apply_relations(&partial)?;
    let s0 = rep.pieces.get(&0).cloned().unwrap_or_else(|| p.zero(3));
    let omega = p.apply_relations(&p.sub(&s0, &partial)?)?;
    let d = p.apply_relations(&p.small_diagonal(3)?)?;
    let residual = p.apply_relations(&p.sub(&p.sub(&d, &partial)?, &omega)?)?;
    let omega_decomposable = !p.has_opaque(&omega);
    let holds = residual.is_empty() && omega_decomposable;
    Ok(OmegaReport { omega, omega_decomposable, residual, holds, defect_zero: rep.defect == Some(0) })
}

#[derive(Clone, Debug)]
pub struct Template {
    /// p[a] is the coefficient of s1^a s2^(n-a).
    pub p: Vec<Q>,
    /// (a, b, c) -> coefficient of t1^a t2^b t3^c, all arrangements listed.
    pub q: BTreeMap<(usize, usize, usize), Q>,
}

impl Template {
    pub fn to_json(&self) -> Value {
        let n = self.p.len() - 1;
        let p: Map<String, Value> = self
            .p
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(a, c)| (format!("s1^{a} s2^{}", n - a), Value::String(c.to_string())))
            .collect();
        let q: Map<String, Value> = self
            .q
            .iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((a, b, c), x)| (format!("t1^{a} t2^{b} t3^{c}"), Value::String(x.to_string())))
            .collect();
        json!({"P": p, "Q": q})
    }
}

/// Classes delta_{ij*}(D^a x D^b) summed over the three pairs, and D^a x D^b x D^c.
fn template_basis(p: &Profile) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize, usize)>, Vec<PowerClass>)> {
    let alg = p.base();
    let n = p.n();
    let h = alg.hyperplane().ok_or_else(|| Error::invalid("template needs a hyperplane class"))?;
    let hl = Lin::from([(h, Q::one())]);
    let pw = |k: usize| alg.class(alg.power_lin(&hl, k));
    let mut pvars = Vec::new();
    let mut qvars = Vec::new();
    let mut classes = Vec::new();
    for a in 0..=n / 2 {
        let b = n - a;
        // symmetric: s1^a s2^b + s1^b s2^a (once when a == b)
        let mut cls = p.zero(3);
        let monos: Vec<(usize, usize)> = if a == b { vec![(a, b)] } else { vec![(a, b), (b, a)] };
        for (x, y) in monos {
            for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
                let on_pair = p.pullback(&p.diagonal_push(&pw(x), 2)?, &[i, j], 3)?;
                let mut ext = vec![alg.unit_class(); 3];
                ext[k] = pw(y);
                let t = p.multiply(&on_pair, &p.exterior(&ext)?)?;
                cls = p.add(&cls, &t)?;
            }
        }
        pvars.push((a, b));
        classes.push(p.apply_relations(&cls)?);
    }
    for a in 0..=n {
        for b in a..=n {
            if a + b > 2 * n {
                continue;
            }
            let c = 2 * n - a - b;
            if c < b || c > n {
                continue;
            }
            let mut arr = std::collections::BTreeSet::new();
            for t in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                arr.insert(t);
            }
            let mut cls = p.zero(3);
            for (x, y, z) in &arr {
                cls = p.add(&cls, &p.exterior(&[pw(*x), pw(*y), pw(*z)])?)?;
            }
            qvars.push((a, b, c));
            classes.push(p.apply_relations(&cls)?);
        }
    }
    Ok((pvars, qvars, classes))
}

/// Solve x . classes = target over Q; free unknowns are set to zero.
pub fn solve_linear(target: &PowerClass, classes: &[PowerClass]) -> Option<Vec<Q>> {
    let mut rows: BTreeMap<&Term, usize> = BTreeMap::new();
    for t in target.terms.keys().chain(classes.iter().flat_map(|c| c.terms.keys())) {
        let k = rows.len();
        rows.entry(t).or_insert(k);
    }
    let nv = classes.len();
    let mut m: Vec<Vec<Q>> = vec![vec![Q::zero(); nv + 1]; rows.len()];
    for (j, c) in classes.iter().enumerate() {
        for (t, x) in &c.terms {
            m[rows[t]][j] = x.clone();
        }
    }
    for (t, x) in &target.terms {
        m[rows[t]][nv] = x.clone();
    }
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..nv {
        let Some(piv) = (r..m.len()).find(|i| !m[*i][col].is_zero()) else { continue };
        m.swap(r, piv);
        let pv = m[r][col].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &pv;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                for j in 0..=nv {
                    let t = &f * &m[r][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if m[r..].iter().any(|row| !row[nv].is_zero()) {
        return None;
    }
    let mut x = vec![Q::zero(); nv];
    for (i, col) in pivots.iter().enumerate() {
        x[*col] = m[i][nv].clone();
    }
    Some(x)
}

/// Symmetric P (degree n) and Q (degree 2n) with
/// Delta_123 = sum_pairs delta_ij*(P(D_1, D_2)) + Q(D'_1, D'_2, D'_3).
pub fn solve_small_diagonal_template(p: &Profile) -> Result<Option<Template>> {
    let (pvars, qvars, classes) = template_basis(p)?;
    let target = p.apply_relations(&p.small_diagonal(3)?)?;
    let Some(x) = solve_linear(&target, &classes) else { return Ok(None) };
    // verify by substitution
    let mut sum = p.zero(3);
    for (c, cls) in x.iter().zip(&classes) {
        sum = p.lin_comb(&[(Q::one(), &sum), (c.clone(), cls)])?;
    }
    if !p.equal(&sum, &target)? {
        return Err(Error::Verification("template solution does not reproduce the small diagonal".into()));
    }
    let n = p.n();
    let mut pc = vec![Q::zero(); n + 1];
    for ((a, b), c) in pvars.iter().zip(&x) {
        pc[*a] = c.clone();
        pc[*b] = c.clone();
    }
    let mut q = BTreeMap::new();
    for ((a, b, c), v) in qvars.iter().zip(&x[pvars.len()..]) {
        for t in [(*a, *b, *c), (*a, *c, *b), (*b, *a, *c), (*b, *c, *a), (*c, *a, *b), (*c, *b, *a)] {
            q.insert(t, v.clone());
        }
    }
    Ok(Some(Template { p: pc, q }))
}

/// Rebuild the right side of the template identity from a solution.
pub fn template_class(p: &Profile, t: &Template) -> Result<PowerClass> {
    let alg = p.base();
    let h = alg.hyperplane().ok_or_else(|| Error::invalid("template needs a hyperplane class"))?;
    let hl = Lin::from([(h, Q::one())]);
    let pw = |k: usize| alg.class(alg.power_lin(&hl, k));
    let n = p.n();
    let mut acc = p.zero(3);
    for (a, c) in t.p.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let on_pair = p.pullback(&p.diagonal_push(&pw(a), 2)?, &[i, j], 3)?;
            let mut ext = vec![alg.unit_class(); 3];
            ext[k] = pw(n - a);
            let cls = p.multiply(&on_pair, &p.exterior(&ext)?)?;
            acc = p.lin_comb(&[(Q::one(), &acc), (c.clone(), &cls)])?;
        }
    }
    for ((a, b, c), x) in &t.q {
        let cls = p.exterior(&[pw(*a), pw(*b), pw(*c)])?;
        acc = p.lin_comb(&[(Q::one(), &acc), (x.clone(), &cls)])?;
    }
    p.apply_relations(&acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsogenyCoefficients {
    pub a1: Q,
    pub a2: Q,
    pub b1: Q,
    pub b2: Q,
    pub d1: u64,
    pub d2: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsogenyResult {
    pub holds: bool,
    pub c_value: Q,
    pub alt_value: Q,
    pub agree: bool,
}

pub fn isogeny_consistency(c: &IsogenyCoefficients) -> Result<IsogenyResult> {
    let zero = Q::zero();
    if c.a1 <= zero || c.a2 <= zero || c.b1 <= zero || c.b2 <= zero || c.d1 == 0 || c.d2 == 0 {
        return Err(Error::invalid("isogeny coefficients must be positive"));
    }
    let d = Q::from_integer((c.d1 + c.d2).into());
    let two = Q::from_integer(2.into());
    let three = Q::from_integer(3.into());
    let holds = &two * &c.a1 / &c.a2 == &c.b1 / &c.b2 + &d;
    let c_value = &c.b1 - &three * &c.a1 * &c.b2 / &c.a2;
    let alt_value = -(&c.a1 * &c.b2 / &c.a2 + &c.b2 * &d);
    let agree = c_value == alt_value;
    if holds && !agree {
        return Err(Error::Verification("the two normalizing constants disagree".into()));
    }
    Ok(IsogenyResult { holds, c_value, alt_value, agree })
}

#[derive(Clone, Debug)]
pub struct ModifiedProduct {
    pub class: Correspondence,
    pub graded_holds: bool,
}

/// Delta~_123 = Delta_123 - sum over k != i + j of pi_k . Delta_123 . (pi_i x pi_j).
pub fn modified_product(p: &Profile, ck: &CkSet) -> Result<ModifiedProduct> {
    let b = transposed_buckets(p, ck, 2)?;
    let d = p.apply_relations(&p.small_diagonal(3)?)?;
    let mut off = p.zero(3);
    for (s, c) in &b {
        if *s != 0 {
            off = p.add(&off, c)?;
        }
    }
    let tilde = p.apply_relations(&p.sub(&d, &off)?)?;
    let transposed: Vec<Correspondence> = ck.projectors.iter().map(|c| corr::transpose(p, c)).collect::<Result<_>>()?;
    let again = weighted_sweep(p, &tilde, |slot| {
        if slot < 2 {
            transposed.iter().cloned().enumerate().map(|(i, c)| (i as i64, c)).collect()
        } else {
            ck.projectors.iter().cloned().enumerate().map(|(i, c)| (-(i as i64), c)).collect()
        }
    })?;
    let diag_part = again.get(&0).cloned().unwrap_or_else(|| p.zero(3));
    let graded_holds = p.equal(&diag_part, &tilde)?;
    Ok(ModifiedProduct { class: Correspondence::new(tilde, 2, 1)?, graded_holds })
}

/// Grading of a base class: s -> (pi_{2r-s})_* z for each homogeneous part.
pub fn base_grading(p: &Profile, ck: &CkSet, z: &crate::algebra::BaseClass) -> Result<BTreeMap<(usize, i64), PowerClass>> {
    let cls = p.exterior(&[z.clone()])?;
    let mut out = BTreeMap::new();
    for (r, part) in p.codimension_components(&cls) {
        for (s, piece) in ck::chow_grading(p, ck, &part, r)? {
            if !piece.is_empty() {
                out.insert((r, s), piece);
            }
        }
    }
    Ok(out)
}

/// Products of graded pieces of the generators stay within s_1 + s_2 + [0, tau].
pub fn weak_multiplicativity(p: &Profile, ck: &CkSet, tau: i64, generators: &[crate::algebra::BaseClass]) -> Result<bool> {
    let mut graded = Vec::new();
    for g in generators {
        for ((_, s), piece) in base_grading(p, ck, g)? {
            graded.push((s, p.to_base(&piece)?));
        }
    }
    for (i, (s1, z1)) in graded.iter().enumerate() {
        for (s2, z2) in &graded[i..] {
            let prod = p.base().base_mul(z1, z2)?;
            if prod.is_zero() {
                continue;
            }
            for ((_, s), _) in base_grading(p, ck, &prod)? {
                if s < s1 + s2 || s > s1 + s2 + tau {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether the pairing matrix of each codimension is invertible, as used by the
/// dual-basis projectors.
pub fn pairing_invertible(p: &Profile) -> bool {
    let alg = p.base();
    (0..=alg.n()).all(|c| invert(alg.pairing(c)).is_some())
}

/// (pi_{i_1} x .. x pi_{i_{m+1}})_* Delta_I for one index tuple.
pub fn tuple_piece(p: &Profile, ck: &CkSet, tuple: &[usize]) -> Result<PowerClass> {
    if tuple.len() < 3 {
        return Err(Error::invalid("a tuple needs at least three indices"));
    }
    if let Some(i) = tuple.iter().find(|i| **i >= ck.projectors.len()) {
        return Err(Error::invalid(format!("no projector pi_{i}")));
    }
    let mut cls = p.apply_relations(&p.small_diagonal(tuple.len())?)?;
    for (slot, i) in tuple.iter().enumerate() {
        cls = corr::act_slot(p, &ck.projectors[*i], &cls, slot)?;
    }
    Ok(cls)
}
