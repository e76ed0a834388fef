//! Standard profiles and the profile file format.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Deserialize;
use serde_json::Value;

use crate::algebra::{parse_q, AlgebraSpec, BaseAlgebra, BaseClass, Lin, Q};
use crate::ck;
use crate::correspondence as corr;
use crate::error::{Error, Result};
use crate::power::{add_term, LayerClass, LayerKind, Layer, Profile};
use crate::text::{parse_base_terms, parse_class};

/// Rewrite data for a hypersurface or complete intersection.
#[derive(Clone, Debug, Default)]
pub struct HypersurfaceOptions {
    /// `None`: the default threshold; `Some(None)`: no splitting rules at all.
    pub threshold: Option<Option<usize>>,
    pub small_diagonal: Option<bool>,
    pub c_top_override: Option<Vec<(String, Q)>>,
}

impl HypersurfaceOptions {
    pub fn threshold(k0: usize) -> Self {
        HypersurfaceOptions { threshold: Some(Some(k0)), ..Default::default() }
    }

    pub fn with_small_diagonal(mut self, on: bool) -> Self {
        self.small_diagonal = Some(on);
        self
    }
}

/// 0 when the Euler characteristic is that of P^n (no primitive cohomology,
/// e.g. linear spaces, the conic, odd-dimensional quadrics), else the number
/// of equations.
pub fn default_threshold(n: usize, ambient: usize, degrees: &[u64]) -> usize {
    let d: u64 = degrees.iter().product();
    let chi = crate::algebra::chern_top_coefficient(n, ambient, degrees) * Q::from_integer(d.into());
    if chi == Q::from_integer((n as u64 + 1).into()) {
        0
    } else {
        degrees.len()
    }
}

/// Fano or Calabi-Yau, and not a linear space.
pub fn small_diagonal_default(ambient: usize, degrees: &[u64]) -> bool {
    let sum: u64 = degrees.iter().sum();
    let d: u64 = degrees.iter().product();
    d != 1 && sum <= ambient as u64 + 1
}

pub fn hypersurface(n: usize, ambient: usize, degrees: &[u64], opts: HypersurfaceOptions) -> Result<Profile> {
    let alg = BaseAlgebra::hypersurface_with(n, ambient, degrees, opts.c_top_override.clone())?;
    let mut layer = Layer::new(alg, LayerKind::Hypersurface);
    let k0 = opts.threshold.unwrap_or(Some(default_threshold(n, ambient, degrees)));
    if let Some(k0) = k0 {
        layer.set_threshold(k0)?;
    }
    let name = format!(
        "{}_{}_{}",
        if degrees.len() == 1 { "hypersurface" } else { "ci" },
        n,
        degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("_")
    );
    let p = Profile::new(name, "hypersurface", vec![layer])?;
    let sd = opts.small_diagonal.unwrap_or_else(|| small_diagonal_default(ambient, degrees));
    if sd {
        with_small_diagonal(&p)
    } else {
        Ok(p)
    }
}

/// Adds delta_{123*}(1) = Delta_123 - (pi_n x pi_n x pi_n)_* Delta_123 computed
/// with the natural projectors of `p`.
pub fn with_small_diagonal(p: &Profile) -> Result<Profile> {
    if p.nlayers() != 1 {
        return Err(Error::Unsupported("small diagonal relation on a product profile".into()));
    }
    let ck = ck::natural_projectors(p)?;
    let n = p.n();
    let d3 = p.small_diagonal(3)?;
    let mut cube = p.apply_relations(&d3)?;
    for slot in 0..3 {
        cube = corr::act_slot(p, &ck.projectors[n], &cube, slot)?;
    }
    let rhs = p.apply_relations(&p.sub(&d3, &cube)?)?;
    let mut lc = LayerClass::new();
    for (t, c) in &rhs.terms {
        add_term(&mut lc, t[0].clone(), c.clone());
    }
    p.with_layer(0, |l| l.add_unit_relation(3, lc))
}

/// Curve of genus g with point symbols; the first one is the zero-cycle.
pub fn curve(g: u64, points: &[&str], genus_relation: bool) -> Result<Profile> {
    let pts: Vec<String> = points.iter().map(|s| s.to_string()).collect();
    curve_with(g, &pts, genus_relation, None)
}

pub fn curve_with(g: u64, points: &[String], genus_relation: bool, c_top: Option<Vec<(String, Q)>>) -> Result<Profile> {
    let alg = BaseAlgebra::curve_with(g, points, c_top)?;
    let mut layer = Layer::new(alg, LayerKind::Curve);
    let unit = layer.alg.unit();
    for pt in layer.alg.basis(1).to_vec() {
        layer.set_rule(pt, LayerClass::from([(vec![(1u32, pt), (2, pt)], Q::one())]))?;
    }
    if genus_relation {
        let o = layer.alg.basis(1)[0];
        let r = g as usize + 2;
        layer.add_unit_relation(r, genus_rhs(r, o, unit))?;
    }
    Profile::new(format!("curve_g{g}"), "curve", vec![layer])
}

/// Delta_[r] = -sum over nonempty proper J of (-1)^|J| o^J x Delta_{[r]-J}.
fn genus_rhs(r: usize, o: crate::algebra::Sym, unit: crate::algebra::Sym) -> LayerClass {
    let full = (1u32 << r) - 1;
    let mut out = LayerClass::new();
    for j in 1..full {
        let rest = full & !j;
        let mut t = Vec::new();
        for i in 0..r {
            if j & (1 << i) != 0 {
                t.push((1u32 << i, o));
            }
        }
        t.push((rest, unit));
        crate::power::canon(&mut t);
        let sign = if j.count_ones() % 2 == 0 { -Q::one() } else { Q::one() };
        add_term(&mut out, t, sign);
    }
    out
}

pub fn point() -> Profile {
    Profile::new("point", "point", vec![Layer::new(BaseAlgebra::point(), LayerKind::Split)]).expect("point profile")
}

/// Split profile from an algebra description; `threshold` adds dual-basis
/// splitting for symbols of codimension at least k0.
pub fn split(spec: AlgebraSpec, threshold: Option<usize>) -> Result<Profile> {
    let name = spec.name.clone();
    let alg = BaseAlgebra::from_spec(spec)?;
    let mut layer = Layer::new(alg, LayerKind::Split);
    if let Some(k0) = threshold {
        layer.set_threshold(k0)?;
    }
    Profile::new(name, "split", vec![layer])
}

/// The quadric surface P^1 x P^1 as a split profile.
pub fn quadric_surface(threshold: Option<usize>) -> Result<Profile> {
    split(
        AlgebraSpec {
            name: "quadric".into(),
            n: 2,
            basis: vec![vec!["1".into()], vec!["A".into(), "B".into()], vec!["pt".into()]],
            mul: vec![
                ("A".into(), "A".into(), vec![]),
                ("B".into(), "B".into(), vec![]),
                ("A".into(), "B".into(), vec![("pt".into(), Q::one())]),
            ],
            deg: vec![("pt".into(), Q::one())],
            c_top: Some(vec![("pt".into(), Q::from_integer(4.into()))]),
            require_nondegenerate: true,
            ..Default::default()
        },
        threshold,
    )
}

// ---- file format ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub kind: Option<String>,
    pub name: Option<String>,
    pub n: Option<usize>,
    pub ambient_dim: Option<usize>,
    pub degrees: Option<Vec<u64>>,
    pub genus: Option<u64>,
    pub points: Option<Vec<String>>,
    pub basis: Option<Vec<Vec<String>>>,
    pub mul: Option<BTreeMap<String, BTreeMap<String, Value>>>,
    pub deg: Option<BTreeMap<String, Value>>,
    pub c_top_override: Option<Value>,
    #[serde(default, deserialize_with = "some_value")]
    pub threshold: Option<Value>,
    pub small_diagonal: Option<bool>,
    pub genus_relation: Option<bool>,
    pub rules: Option<BTreeMap<String, String>>,
    pub zero_cycle: Option<Value>,
    pub nondegenerate: Option<bool>,
    pub construct: Option<String>,
    pub factors: Option<Vec<ProfileFile>>,
    pub base: Option<Box<ProfileFile>>,
    pub chern: Option<Vec<String>>,
    pub x: Option<Box<ProfileFile>>,
    pub y: Option<Box<ProfileFile>>,
    pub normal_chern: Option<Vec<String>>,
    pub grade0_assertion: Option<bool>,
}

/// Distinguish an explicit `null` from an absent key.
fn some_value<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<Value>, D::Error> {
    Value::deserialize(d).map(Some)
}

/// What a profile file describes.
#[derive(Clone, Debug)]
pub enum Loaded {
    Profile(Profile),
    /// `profile` is absent when P(E) cannot be modeled; tasks then see the base.
    Bundle { profile: Option<Profile>, base: Profile, chern: Vec<BaseClass> },
    Blowup { x: Profile, y: Profile, normal_chern: Vec<BaseClass>, grade0_assertion: bool },
}

impl Loaded {
    /// The profile tasks run against (X for a blow-up).
    pub fn profile(&self) -> &Profile {
        match self {
            Loaded::Profile(p) => p,
            Loaded::Bundle { profile, base, .. } => profile.as_ref().unwrap_or(base),
            Loaded::Blowup { x, .. } => x,
        }
    }
}

pub fn rational(key: &str, v: &Value) -> Result<Q> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Q::from_integer(i.into()))
            } else {
                Err(Error::profile(key, "numbers must be integers; write fractions as \"p/q\""))
            }
        }
        Value::String(s) => parse_q(s).ok_or_else(|| Error::profile(key, format!("bad rational `{s}`"))),
        _ => Err(Error::profile(key, "expected a rational")),
    }
}

/// A base class given as cycle text or as a {symbol: rational} object.
fn base_terms(key: &str, v: &Value) -> Result<Vec<(String, Q)>> {
    match v {
        Value::String(s) => parse_base_terms(s.as_bytes()).map_err(|e| Error::profile(key, e.to_string())),
        Value::Object(m) => m.iter().map(|(s, x)| Ok((s.clone(), rational(&format!("{key}.{s}"), x)?))).collect(),
        _ => Err(Error::profile(key, "expected cycle text or an object")),
    }
}

pub fn parse_profile(src: &[u8]) -> Result<Loaded> {
    let f: ProfileFile = serde_json::from_slice(src).map_err(|e| {
        Error::profile(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    build(&f, "")
}

fn key(prefix: &str, k: &str) -> String {
    if prefix.is_empty() {
        k.to_string()
    } else {
        format!("{prefix}.{k}")
    }
}

fn require<T: Clone>(prefix: &str, k: &str, v: &Option<T>) -> Result<T> {
    v.clone().ok_or_else(|| Error::profile(key(prefix, k), "missing"))
}

fn reject(prefix: &str, f: &ProfileFile, keys: &[(&str, bool)]) -> Result<()> {
    let _ = f;
    for (k, present) in keys {
        if *present {
            return Err(Error::profile(key(prefix, k), "not allowed for this kind"));
        }
    }
    Ok(())
}

fn threshold_of(prefix: &str, f: &ProfileFile) -> Result<Option<Option<usize>>> {
    match &f.threshold {
        None => Ok(None),
        Some(Value::Null) => Ok(Some(None)),
        Some(Value::Number(n)) => match n.as_u64() {
            Some(k) if k <= 64 => Ok(Some(Some(k as usize))),
            _ => Err(Error::profile(key(prefix, "threshold"), "expected a small nonnegative integer or null")),
        },
        Some(_) => Err(Error::profile(key(prefix, "threshold"), "expected an integer or null")),
    }
}

fn build(f: &ProfileFile, prefix: &str) -> Result<Loaded> {
    if let Some(c) = &f.construct {
        return build_construct(f, prefix, c);
    }
    let p = build_plain(f, prefix)?;
    Ok(Loaded::Profile(p))
}

fn chern_list(prefix: &str, k: &str, list: &[String], p: &Profile) -> Result<Vec<BaseClass>> {
    list.iter()
        .enumerate()
        .map(|(i, s)| {
            let kk = format!("{}[{i}]", key(prefix, k));
            let terms = parse_base_terms(s.as_bytes()).map_err(|e| Error::profile(&kk, e.to_string()))?;
            let refs: Vec<(&str, Q)> = terms.iter().map(|(a, c)| (a.as_str(), c.clone())).collect();
            p.base().class_from(&refs).map_err(|e| Error::profile(&kk, e.to_string()))
        })
        .collect()
}

fn plain_of(prefix: &str, k: &str, v: &Option<Box<ProfileFile>>) -> Result<Profile> {
    let inner = v.as_ref().ok_or_else(|| Error::profile(key(prefix, k), "missing"))?;
    match build(inner, &key(prefix, k))? {
        Loaded::Profile(p) | Loaded::Bundle { profile: Some(p), .. } => Ok(p),
        Loaded::Bundle { profile: None, .. } => Err(Error::profile(key(prefix, k), "this bundle cannot be modeled")),
        Loaded::Blowup { .. } => Err(Error::profile(key(prefix, k), "a blow-up is not a profile")),
    }
}

fn build_construct(f: &ProfileFile, prefix: &str, c: &str) -> Result<Loaded> {
    match c {
        "product" => {
            let fs = f.factors.as_ref().ok_or_else(|| Error::profile(key(prefix, "factors"), "missing"))?;
            if fs.len() < 2 {
                return Err(Error::profile(key(prefix, "factors"), "need at least two factors"));
            }
            let mut acc: Option<Profile> = None;
            for (i, ff) in fs.iter().enumerate() {
                let kk = format!("{}[{i}]", key(prefix, "factors"));
                let p = match build(ff, &kk)? {
                    Loaded::Profile(p) | Loaded::Bundle { profile: Some(p), .. } => p,
                    Loaded::Bundle { profile: None, .. } => return Err(Error::profile(kk, "this bundle cannot be modeled")),
                    Loaded::Blowup { .. } => return Err(Error::profile(kk, "a blow-up is not a profile")),
                };
                acc = Some(match acc {
                    None => p,
                    Some(a) => crate::constructions::product_profile(&a, &p)?,
                });
            }
            let mut p = acc.unwrap();
            if let Some(n) = &f.name {
                p.name = n.clone();
            }
            Ok(Loaded::Profile(p))
        }
        "bundle" => {
            let base = plain_of(prefix, "base", &f.base)?;
            let chern = chern_list(prefix, "chern", f.chern.as_deref().unwrap_or(&[]), &base)?;
            let profile = match crate::constructions::projective_bundle_profile(&base, &chern) {
                Ok(p) => Some(p),
                Err(Error::Unsupported(_)) => None,
                Err(e) => return Err(Error::profile(key(prefix, "chern"), e.to_string())),
            };
            Ok(Loaded::Bundle { profile, base, chern })
        }
        "blowup" => {
            let x = plain_of(prefix, "x", &f.x)?;
            let y = plain_of(prefix, "y", &f.y)?;
            let normal_chern = chern_list(prefix, "normal_chern", f.normal_chern.as_deref().unwrap_or(&[]), &y)?;
            Ok(Loaded::Blowup { x, y, normal_chern, grade0_assertion: f.grade0_assertion.unwrap_or(false) })
        }
        other => Err(Error::profile(key(prefix, "construct"), format!("unknown construction `{other}`"))),
    }
}

fn build_plain(f: &ProfileFile, prefix: &str) -> Result<Profile> {
    let kind = require(prefix, "kind", &f.kind)?;
    let mut p = match kind.as_str() {
        "hypersurface" => {
            reject(prefix, f, &[
                ("genus", f.genus.is_some()),
                ("points", f.points.is_some()),
                ("basis", f.basis.is_some()),
                ("mul", f.mul.is_some()),
                ("deg", f.deg.is_some()),
                ("genus_relation", f.genus_relation.is_some()),
            ])?;
            let n = require(prefix, "n", &f.n)?;
            let degrees = require(prefix, "degrees", &f.degrees)?;
            let ambient = f.ambient_dim.unwrap_or(n + degrees.len());
            let c_top_override = match &f.c_top_override {
                Some(v) => Some(base_terms(&key(prefix, "c_top_override"), v)?),
                None => None,
            };
            let opts = HypersurfaceOptions {
                threshold: threshold_of(prefix, f)?,
                small_diagonal: f.small_diagonal,
                c_top_override,
            };
            hypersurface(n, ambient, &degrees, opts).map_err(|e| Error::profile(key(prefix, "kind"), e.to_string()))?
        }
        "curve" => {
            reject(prefix, f, &[
                ("degrees", f.degrees.is_some()),
                ("ambient_dim", f.ambient_dim.is_some()),
                ("basis", f.basis.is_some()),
                ("mul", f.mul.is_some()),
                ("deg", f.deg.is_some()),
                ("threshold", f.threshold.is_some()),
                ("small_diagonal", f.small_diagonal.is_some()),
            ])?;
            if let Some(n) = f.n {
                if n != 1 {
                    return Err(Error::profile(key(prefix, "n"), "a curve has n = 1"));
                }
            }
            let g = require(prefix, "genus", &f.genus)?;
            let points = f.points.clone().unwrap_or_else(|| vec!["o".to_string()]);
            let c_top = match &f.c_top_override {
                Some(v) => Some(base_terms(&key(prefix, "c_top_override"), v)?),
                None => None,
            };
            curve_with(g, &points, f.genus_relation.unwrap_or(true), c_top)
                .map_err(|e| Error::profile(key(prefix, "points"), e.to_string()))?
        }
        "split" | "point" => {
            reject(prefix, f, &[
                ("degrees", f.degrees.is_some()),
                ("genus", f.genus.is_some()),
                ("points", f.points.is_some()),
                ("small_diagonal", f.small_diagonal.is_some()),
                ("genus_relation", f.genus_relation.is_some()),
            ])?;
            if kind == "point" {
                if f.n.unwrap_or(0) != 0 {
                    return Err(Error::profile(key(prefix, "n"), "a point has n = 0"));
                }
                point()
            } else {
                build_split(f, prefix)?
            }
        }
        other => return Err(Error::profile(key(prefix, "kind"), format!("unknown kind `{other}`"))),
    };
    if let Some(rules) = &f.rules {
        for (sym, text) in rules {
            let kk = format!("{}.{sym}", key(prefix, "rules"));
            if p.nlayers() != 1 {
                return Err(Error::profile(kk, "rules need a single-layer profile"));
            }
            let s = p.layer(0).alg.sym(sym).ok_or_else(|| Error::profile(&kk, "unknown symbol"))?;
            let cls = parse_class(&p, text.as_bytes(), Some(2)).map_err(|e| Error::profile(&kk, e.to_string()))?;
            let mut lc = LayerClass::new();
            for (t, c) in &cls.terms {
                add_term(&mut lc, t[0].clone(), c.clone());
            }
            p = p.with_layer(0, |l| l.set_rule(s, lc)).map_err(|e| Error::profile(&kk, e.to_string()))?;
        }
    }
    if let Some(n) = &f.name {
        p.name = n.clone();
    }
    Ok(p)
}

fn build_split(f: &ProfileFile, prefix: &str) -> Result<Profile> {
    let basis = require(prefix, "basis", &f.basis)?;
    let n = f.n.unwrap_or(basis.len().saturating_sub(1));
    if basis.len() != n + 1 {
        return Err(Error::profile(key(prefix, "basis"), format!("expected {} codimension levels", n + 1)));
    }
    let mut mul = Vec::new();
    for (k, v) in f.mul.clone().unwrap_or_default() {
        let kk = format!("{}.{k}", key(prefix, "mul"));
        let (a, b) = k.split_once('*').ok_or_else(|| Error::profile(&kk, "keys look like `A*B`"))?;
        let mut out = Vec::new();
        for (s, c) in v {
            out.push((s, rational(&kk, &c)?));
        }
        mul.push((a.trim().to_string(), b.trim().to_string(), out));
    }
    let mut deg = Vec::new();
    for (s, v) in f.deg.clone().unwrap_or_default() {
        deg.push((s.clone(), rational(&format!("{}.{s}", key(prefix, "deg")), &v)?));
    }
    let c_top = match &f.c_top_override {
        Some(v) => Some(base_terms(&key(prefix, "c_top_override"), v)?),
        None => None,
    };
    let zero_cycle = match &f.zero_cycle {
        Some(v) => Some(base_terms(&key(prefix, "zero_cycle"), v)?),
        None => None,
    };
    let spec = AlgebraSpec {
        name: f.name.clone().unwrap_or_else(|| "split".into()),
        n,
        basis,
        mul,
        deg,
        zero_cycle,
        c_top,
        require_nondegenerate: f.nondegenerate.unwrap_or(false),
        ..Default::default()
    };
    let threshold = threshold_of(prefix, f)?.unwrap_or(None);
    split(spec, threshold).map_err(|e| Error::profile(key(prefix, "mul"), e.to_string()))
}

/// Base class of `p` from symbol/coefficient pairs.
pub fn base_class(p: &Profile, terms: &[(&str, i64, i64)]) -> Result<BaseClass> {
    let mut l = Lin::new();
    for (s, a, b) in terms {
        let x = p.base().sym(s).ok_or_else(|| Error::invalid(format!("unknown symbol `{s}`")))?;
        let c = Q::new((*a).into(), (*b).into());
        if !c.is_zero() {
            crate::algebra::lin_add(&mut l, x, &c);
        }
    }
    Ok(p.base().class(l))
}
