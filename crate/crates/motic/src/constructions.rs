//! Products, projective bundles and the blow-up hypothesis checker.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::algebra::{invert, lin_add, AlgebraSpec, BaseAlgebra, BaseClass, Lin, Sym, Q};
use crate::ck::{self, CkSet};
use crate::defect::{self, DefectReport};
use crate::error::{Error, Result};
use crate::power::{Layer, LayerKind, Profile};
use crate::profile;
use crate::text::class_text;

/// X x Y as a profile whose layers are those of both factors. Layers of
/// dimension zero are dropped since they carry nothing.
pub fn product_profile(p1: &Profile, p2: &Profile) -> Result<Profile> {
    let layers: Vec<Layer> = p1
        .layers()
        .iter()
        .chain(p2.layers())
        .filter(|l| l.alg.n() > 0)
        .cloned()
        .collect();
    if layers.is_empty() {
        return Ok(profile::point());
    }
    let mut p = Profile::new(format!("{}x{}", p1.name, p2.name), "product", layers)?;
    p.max_terms = p1.max_terms.min(p2.max_terms);
    Ok(p)
}

/// Chern data c_1(E) .. c_{e+1}(E) of a vector bundle of rank e+1.
#[derive(Clone, Debug)]
pub struct BundleData {
    pub chern: Vec<BaseClass>,
}

impl BundleData {
    pub fn rank(&self) -> usize {
        self.chern.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.chern.iter().all(|c| c.is_zero())
    }

    fn validate(&self, base: &BaseAlgebra) -> Result<()> {
        if self.chern.is_empty() {
            return Err(Error::invalid("bundle needs rank at least 1"));
        }
        for (i, c) in self.chern.iter().enumerate() {
            if c.alg_id() != base.id() {
                return Err(Error::AlgebraMismatch);
            }
            for s in c.coeffs.keys() {
                if base.codim(*s) != i + 1 {
                    return Err(Error::invalid(format!("c_{} must have codimension {}", i + 1, i + 1)));
                }
            }
        }
        Ok(())
    }
}

fn fully_decomposable(p: &Profile) -> bool {
    p.layers().iter().all(|l| l.threshold == Some(0) && l.unit_relations().is_empty())
}

/// Algebra of P(E): basis xi^i * b, with xi^{e+1} = -sum c_i xi^{e+1-i}.
pub fn bundle_algebra(base: &BaseAlgebra, e: &BundleData) -> Result<BaseAlgebra> {
    e.validate(base)?;
    let r = e.rank() - 1;
    let n = base.n() + r;
    let name = |i: usize, b: Sym| format!("{}.xi^{i}", base.name_of(b));
    let mut basis = vec![Vec::new(); n + 1];
    for c in 0..=n {
        for i in 0..=r.min(c) {
            if c - i > base.n() {
                continue;
            }
            for b in base.basis(c - i) {
                basis[c].push(name(i, *b));
            }
        }
    }
    let chern: Vec<Lin> = e.chern.iter().map(|c| c.coeffs.clone()).collect();
    // reduce xi^k * l to powers at most r
    fn reduce(base: &BaseAlgebra, chern: &[Lin], r: usize, k: usize, l: &Lin, out: &mut BTreeMap<usize, Lin>) {
        if l.is_empty() {
            return;
        }
        if k <= r {
            let e = out.entry(k).or_default();
            for (s, c) in l {
                lin_add(e, *s, c);
            }
            return;
        }
        for (j, c) in chern.iter().enumerate() {
            let shifted = base.mul_lin(c, l);
            let neg: Lin = shifted.into_iter().map(|(s, x)| (s, -x)).collect();
            reduce(base, chern, r, k - (j + 1), &neg, out);
        }
    }
    let syms: Vec<(usize, Sym)> = (0..=r).flat_map(|i| (0..base.len() as Sym).map(move |b| (i, b))).collect();
    let mut mul = Vec::new();
    for (i, a) in &syms {
        for (j, b) in &syms {
            let prod = base.mul_syms(*a, *b).clone();
            let mut out = BTreeMap::new();
            reduce(base, &chern, r, i + j, &prod, &mut out);
            let v: Vec<(String, Q)> = out
                .into_iter()
                .flat_map(|(k, l)| l.into_iter().filter(|(_, c)| !c.is_zero()).map(move |(s, c)| (name(k, s), c)))
                .collect();
            mul.push((name(*i, *a), name(*j, *b), v));
        }
    }
    let deg: Vec<(String, Q)> = base
        .basis(base.n())
        .iter()
        .map(|b| (name(r, *b), base.deg_of(*b).clone()))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let zero_cycle: Vec<(String, Q)> = base.zero_cycle().iter().map(|(s, c)| (name(r, *s), c.clone())).collect();
    // c_top(T_X) * c_r(pi^*E (x) O(1)), the relative part being sum (r+1-i) c_i xi^{r-i}
    let mut rel: BTreeMap<usize, Lin> = BTreeMap::new();
    for i in 0..=r {
        let ci: Lin = if i == 0 { Lin::from([(base.unit(), Q::one())]) } else { chern[i - 1].clone() };
        let f = Q::from_integer(((r + 1 - i) as i64).into());
        let scaled: Lin = ci.into_iter().map(|(s, c)| (s, c * &f)).collect();
        let e = rel.entry(r - i).or_default();
        for (s, c) in &scaled {
            lin_add(e, *s, c);
        }
    }
    let mut c_top = Vec::new();
    for (k, l) in rel {
        let prod = base.mul_lin(base.c_top(), &l);
        let mut out = BTreeMap::new();
        reduce(base, &chern, r, k, &prod, &mut out);
        for (kk, ll) in out {
            for (s, c) in ll {
                if !c.is_zero() {
                    c_top.push((name(kk, s), c));
                }
            }
        }
    }
    BaseAlgebra::from_spec(AlgebraSpec {
        name: format!("P({})", base.name),
        n,
        basis,
        mul,
        deg,
        zero_cycle: Some(zero_cycle),
        c_top: Some(c_top),
        require_nondegenerate: false,
        ..Default::default()
    })
}

/// Coefficients alpha_uv with sum alpha_uv u x v acting as the identity on
/// every basis element: alpha is the inverse pairing matrix in each codimension.
pub fn solve_identity_action(alg: &BaseAlgebra) -> Result<Vec<(Sym, Sym, Q)>> {
    let n = alg.n();
    let mut out = Vec::new();
    for c in 0..=n {
        let g = alg.pairing(c);
        let inv = invert(g).ok_or_else(|| {
            Error::Verification(format!("identity-action system is singular in codimension {c}; bundle data is inconsistent"))
        })?;
        // act(u x v, b) = (int b.u) v; require sum_u alpha_uv (int b.u) = [v = b]
        let left = alg.basis(c);
        let right = alg.basis(n - c);
        for (i, u) in left.iter().enumerate() {
            for (j, v) in right.iter().enumerate() {
                let a = &inv[j][i];
                if !a.is_zero() {
                    out.push((*u, *v, a.clone()));
                }
            }
        }
    }
    Ok(out)
}

/// P(E) over `base`. Bases whose diagonal fully decomposes give a split
/// profile whose diagonal is solved from the identity-action system; trivial
/// bundles over other bases become products with projective space.
pub fn projective_bundle_profile(base: &Profile, chern: &[BaseClass]) -> Result<Profile> {
    let data = BundleData { chern: chern.to_vec() };
    data.validate(base.base())?;
    let r = data.rank() - 1;
    if r == 0 {
        return Ok(base.clone());
    }
    if fully_decomposable(base) {
        let alg = bundle_algebra(base.base(), &data)?;
        let alpha = solve_identity_action(&alg)?;
        let mut layer = Layer::new(alg, LayerKind::Split);
        layer.set_threshold(0)?;
        let mut p = Profile::new(format!("P({})", base.name), "bundle", vec![layer])?;
        p.max_terms = base.max_terms;
        // the rules must reproduce the solved diagonal
        let solved = p.from_terms(
            2,
            alpha.iter().map(|(u, v, a)| (vec![vec![(1u32, *u), (2u32, *v)]], a.clone())),
        );
        let d = p.apply_relations(&p.small_diagonal(2)?)?;
        if !p.equal(&d, &solved)? {
            return Err(Error::Verification("solved diagonal of P(E) disagrees with its splitting rules".into()));
        }
        return Ok(p);
    }
    if data.is_trivial() {
        let fiber = profile::hypersurface(r, r + 1, &[1], Default::default())?;
        return product_profile(base, &fiber);
    }
    Err(Error::Unsupported(
        "projective bundle with nonzero Chern classes over a base whose diagonal does not fully decompose".into(),
    ))
}

/// Rename the symbols of P(E) for a trivial bundle to the tensor names of
/// base x P^e, in the same order, so both print identically.
pub fn relabel_as_product(bundle: &Profile, product: &Profile) -> Result<Profile> {
    if bundle.nlayers() != 1 {
        return Err(Error::invalid("relabeling expects a single-layer bundle profile"));
    }
    let alg = &bundle.layer(0).alg;
    let target = product.base();
    let mut new_names = vec![String::new(); alg.len()];
    for s in 0..alg.len() as Sym {
        let name = alg.name_of(s);
        let (b, i) = name.rsplit_once(".xi^").ok_or_else(|| Error::invalid("not a bundle symbol"))?;
        new_names[s as usize] = format!("{b}.D^{i}");
    }
    let mut order = Vec::new();
    for t in 0..target.len() as Sym {
        let s = new_names
            .iter()
            .position(|x| x == target.name_of(t))
            .ok_or_else(|| Error::invalid(format!("no bundle symbol for `{}`", target.name_of(t))))?;
        order.push(s as Sym);
    }
    if order.len() != alg.len() {
        return Err(Error::invalid("bases differ in size"));
    }
    let relabeled = alg.relabeled(&order, &new_names)?;
    let mut layer = Layer::new(relabeled, LayerKind::Split);
    if let Some(k0) = bundle.layer(0).threshold {
        layer.set_threshold(k0)?;
    }
    let mut p = Profile::new(bundle.name.clone(), bundle.kind.clone(), vec![layer])?;
    p.max_terms = bundle.max_terms;
    Ok(p)
}

/// Whether two algebras agree symbol by symbol on products and degrees.
pub fn same_structure(a: &BaseAlgebra, b: &BaseAlgebra) -> bool {
    if a.len() != b.len() || a.n() != b.n() {
        return false;
    }
    let map: Option<Vec<Sym>> = (0..a.len() as Sym).map(|s| b.sym(a.name_of(s))).collect();
    let Some(map) = map else { return false };
    let tr = |l: &Lin| -> Lin { l.iter().map(|(s, c)| (map[*s as usize], c.clone())).collect() };
    for x in 0..a.len() as Sym {
        if a.deg_of(x) != b.deg_of(map[x as usize]) || a.codim(x) != b.codim(map[x as usize]) {
            return false;
        }
        for y in 0..a.len() as Sym {
            if tr(a.mul_syms(x, y)) != *b.mul_syms(map[x as usize], map[y as usize]) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug)]
pub struct GradingCheck {
    /// Classes with a component outside s = 0, by index.
    pub off_band: Vec<usize>,
    /// (class index, basis symbol) where multiplication moves the grading.
    pub not_compatible: Vec<(usize, String)>,
}

impl GradingCheck {
    pub fn holds(&self) -> bool {
        self.off_band.is_empty() && self.not_compatible.is_empty()
    }

    fn to_json(&self) -> Value {
        json!({
            "holds": self.holds(),
            "off_band": self.off_band,
            "not_compatible": self.not_compatible.iter().map(|(i, s)| json!({"class": i, "basis": s})).collect::<Vec<_>>(),
            "note": "compatibility checked on basis elements only",
        })
    }
}

/// Each class lies in s = 0 and multiplying by it keeps graded pieces of every
/// basis element in their s.
pub fn chern_grading_check(p: &Profile, ck: &CkSet, classes: &[BaseClass]) -> Result<GradingCheck> {
    let alg = p.base();
    let mut off_band = Vec::new();
    let mut not_compatible = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let g = defect::base_grading(p, ck, c)?;
        if g.keys().any(|(_, s)| *s != 0) {
            off_band.push(i);
        }
        for b in 0..alg.len() as Sym {
            let bc = alg.class_of(b);
            let mut by_s: BTreeMap<i64, Lin> = BTreeMap::new();
            for ((_, s), piece) in defect::base_grading(p, ck, &bc)? {
                let prod = alg.base_mul(c, &p.to_base(&piece)?)?;
                let e = by_s.entry(s).or_default();
                for (x, y) in &prod.coeffs {
                    lin_add(e, *x, y);
                }
            }
            by_s.retain(|_, l| !l.is_empty());
            let prod = alg.base_mul(c, &bc)?;
            let mut actual: BTreeMap<i64, Lin> = BTreeMap::new();
            for ((_, s), piece) in defect::base_grading(p, ck, &prod)? {
                let e = actual.entry(s).or_default();
                for (x, y) in &p.to_base(&piece)?.coeffs {
                    lin_add(e, *x, y);
                }
            }
            actual.retain(|_, l| !l.is_empty());
            if by_s != actual {
                not_compatible.push((i, alg.name_of(b).to_string()));
            }
        }
    }
    Ok(GradingCheck { off_band, not_compatible })
}

#[derive(Clone, Debug)]
pub struct BundleCheck {
    pub m: usize,
    pub tau: i64,
    pub base_report: DefectReport,
    pub base_ok: bool,
    pub chern: GradingCheck,
    pub bundle_report: Option<DefectReport>,
    pub bundle_ok: Option<bool>,
    pub diagonal_terms: Option<String>,
    pub unavailable: Option<String>,
    pub rendered_base: Value,
    pub rendered_bundle: Option<Value>,
}

impl BundleCheck {
    pub fn hypotheses_hold(&self) -> bool {
        self.base_ok && self.chern.holds()
    }

    pub fn passed(&self) -> bool {
        self.hypotheses_hold() && self.bundle_ok == Some(true)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "tau": self.tau,
            "hypotheses": {
                "base_m_plus_1_fold": {"holds": self.base_ok, "report": self.rendered_base},
                "chern_in_zero_band": self.chern.to_json(),
            },
            "bundle": match &self.rendered_bundle {
                Some(r) => json!({"within_band": self.bundle_ok, "report": r, "diagonal": self.diagonal_terms}),
                None => json!({"unavailable": self.unavailable}),
            },
            "passed": self.passed(),
        })
    }
}

/// Checks the hypotheses on the base, then measures P(E) directly.
pub fn bundle_defect_check(
    base: &Profile,
    chern: &[BaseClass],
    ck_base: &CkSet,
    m: usize,
    tau: i64,
) -> Result<BundleCheck> {
    let base_report = defect::graded_pieces(base, ck_base, m + 1)?;
    let base_ok = base_report.within(tau);
    let chern_check = chern_grading_check(base, ck_base, chern)?;
    let rendered_base = base_report.to_json(base);
    let mut out = BundleCheck {
        m,
        tau,
        base_report,
        base_ok,
        chern: chern_check,
        bundle_report: None,
        bundle_ok: None,
        diagonal_terms: None,
        unavailable: None,
        rendered_base,
        rendered_bundle: None,
    };
    match projective_bundle_profile(base, chern) {
        Ok(pe) => {
            let ck = ck::natural_projectors(&pe)?;
            let rep = defect::graded_pieces(&pe, &ck, m)?;
            out.bundle_ok = Some(rep.within(tau));
            out.rendered_bundle = Some(rep.to_json(&pe));
            out.diagonal_terms = Some(class_text(&pe, &pe.apply_relations(&pe.small_diagonal(2)?)?));
            out.bundle_report = Some(rep);
        }
        Err(Error::Unsupported(msg)) => out.unavailable = Some(msg),
        Err(e) => return Err(e),
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BlowupReport {
    pub m: usize,
    pub tau: i64,
    pub x_ok: bool,
    pub y_ok: bool,
    pub normal: GradingCheck,
    pub grade0_assertion: bool,
    pub skeleton: Vec<String>,
    pub x_report: Value,
    pub y_report: Value,
}

impl BlowupReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.x_ok && self.y_ok && self.normal.holds() && self.grade0_assertion
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "tau": self.tau,
            "hypotheses": {
                "x_m_fold": {"holds": self.x_ok, "report": self.x_report},
                "y_m_plus_1_fold": {"holds": self.y_ok, "report": self.y_report},
                "normal_chern_in_zero_band": self.normal.to_json(),
                "grade0_assertion": {"holds": self.grade0_assertion, "note": "user supplied, not checked"},
            },
            "conclusion": if self.hypotheses_hold() {
                json!(format!("the blow-up admits an {}-fold {}-multiplicative decomposition", self.m, self.tau))
            } else {
                Value::Null
            },
            "skeleton": self.skeleton,
            "note": "multiplication in the Chow ring of the blow-up is not performed",
        })
    }
}

pub fn blowup_defect_report(
    px: &Profile,
    ck_x: &CkSet,
    py: &Profile,
    ck_y: &CkSet,
    normal_chern: &[BaseClass],
    grade0_assertion: bool,
    m: usize,
    tau: i64,
) -> Result<BlowupReport> {
    if py.n() >= px.n() {
        return Err(Error::invalid("the center must have smaller dimension than X"));
    }
    if normal_chern.len() != px.n() - py.n() {
        return Err(Error::invalid(format!(
            "normal bundle has rank {}, so {} Chern classes are needed",
            px.n() - py.n(),
            px.n() - py.n()
        )));
    }
    BundleData { chern: normal_chern.to_vec() }.validate(py.base())?;
    let xr = defect::graded_pieces(px, ck_x, m)?;
    let x_ok = xr.within(tau);
    let (y_ok, y_report) = if py.n() == 0 {
        (true, json!({"note": "a point is trivially multiplicative"}))
    } else {
        let yr = defect::graded_pieces(py, ck_y, m + 1)?;
        (yr.within(tau), yr.to_json(py))
    };
    let normal = chern_grading_check(py, ck_y, normal_chern)?;
    let e = normal_chern.len().saturating_sub(1);
    let a = m + 1;
    let chern_poly: Vec<String> = (0..=e)
        .map(|j| {
            let c = if j == 0 {
                "1".to_string()
            } else {
                let t = py.base().lin_text(&normal_chern[j - 1].coeffs);
                format!("c_{j}(N) = {t}")
            };
            format!("({c}) * xi^{}", e - j)
        })
        .collect();
    let skeleton = vec![
        format!("Delta^Xt_I = (rho^{a})^* Delta^X_I + (gamma^{a})_* phi_* alpha"),
        format!("alpha in CH(E^{a}) built from the Chern polynomial {}", chern_poly.join(" + ")),
        format!("exceptional divisor E = P(N) over Y with fibers P^{e}"),
    ];
    Ok(BlowupReport {
        m,
        tau,
        x_ok,
        y_ok,
        normal,
        grade0_assertion,
        skeleton,
        x_report: xr.to_json(px),
        y_report,
    })
}

/// Natural set on a product from natural sets on its factors.
pub fn product_natural(p1: &Profile, p2: &Profile, prod: &Profile) -> Result<CkSet> {
    let ck1 = ck::natural_projectors(p1)?;
    let ck2 = ck::natural_projectors(p2)?;
    ck::product_ck(p1, &ck1, p2, &ck2, prod)
}

/// Measured defects of a product and its factors at fold m.
pub fn product_defects(p1: &Profile, p2: &Profile, m: usize) -> Result<(Option<i64>, Option<i64>, Option<i64>)> {
    let prod = product_profile(p1, p2)?;
    let d1 = defect::multiplicativity_defect(p1, &ck::natural_projectors(p1)?, m)?;
    let d2 = defect::multiplicativity_defect(p2, &ck::natural_projectors(p2)?, m)?;
    let d = defect::multiplicativity_defect(&prod, &ck::natural_projectors(&prod)?, m)?;
    Ok((d1, d2, d))
}
