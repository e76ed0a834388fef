//! Finite graded commutative Q-algebras with a degree map.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;
pub type Sym = u16;
/// Sparse linear combination of basis symbols.
pub type Lin = BTreeMap<Sym, Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Q::new(num, den))
}

pub(crate) fn lin_add(into: &mut Lin, s: Sym, c: &Q) {
    if c.is_zero() {
        return;
    }
    let e = into.entry(s).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        into.remove(&s);
    }
}

pub fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || "_^.'".contains(c))
}

/// Raw description of an algebra, before validation.
#[derive(Clone, Debug, Default)]
pub struct AlgebraSpec {
    pub name: String,
    pub n: usize,
    pub basis: Vec<Vec<String>>,
    pub mul: Vec<(String, String, Vec<(String, Q)>)>,
    pub deg: Vec<(String, Q)>,
    pub hyperplane: Option<String>,
    pub zero_cycle: Option<Vec<(String, Q)>>,
    pub c_top: Option<Vec<(String, Q)>>,
    pub ambient_dim: Option<usize>,
    pub degrees: Vec<u64>,
    pub require_nondegenerate: bool,
}

#[derive(Clone, Debug)]
pub struct BaseAlgebra {
    pub name: String,
    n: usize,
    names: Vec<String>,
    codims: Vec<usize>,
    by_codim: Vec<Vec<Sym>>,
    mul: Vec<Vec<Lin>>,
    deg: Vec<Q>,
    unit: Sym,
    hyperplane: Option<Sym>,
    zero_cycle: Lin,
    c_top: Lin,
    ambient_dim: Option<usize>,
    degrees: Vec<u64>,
    pairing: Vec<Vec<Vec<Q>>>,
    duals: Option<Vec<Lin>>,
    id: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseClass {
    alg: u64,
    pub coeffs: Lin,
}

impl BaseClass {
    pub fn alg_id(&self) -> u64 {
        self.alg
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl BaseAlgebra {
    pub fn from_spec(spec: AlgebraSpec) -> Result<Self> {
        let n = spec.n;
        if spec.basis.len() != n + 1 {
            return Err(Error::invalid(format!(
                "basis must list codimensions 0..={n}, got {} levels",
                spec.basis.len()
            )));
        }
        let mut names = Vec::new();
        let mut codims = Vec::new();
        let mut by_codim = vec![Vec::new(); n + 1];
        let mut index = BTreeMap::new();
        for (c, level) in spec.basis.iter().enumerate() {
            for s in level {
                if !valid_symbol(s) {
                    return Err(Error::invalid(format!("bad basis symbol `{s}`")));
                }
                if index.contains_key(s.as_str()) {
                    return Err(Error::invalid(format!("duplicate basis symbol `{s}`")));
                }
                let id = names.len() as Sym;
                index.insert(s.clone(), id);
                names.push(s.clone());
                codims.push(c);
                by_codim[c].push(id);
            }
        }
        if names.len() > Sym::MAX as usize {
            return Err(Error::invalid("too many basis symbols"));
        }
        if by_codim[0].len() != 1 {
            return Err(Error::invalid("codimension 0 must hold exactly one (unit) symbol"));
        }
        let unit = by_codim[0][0];
        let look = |s: &str| -> Result<Sym> {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::invalid(format!("unknown symbol `{s}`")))
        };
        let lin_of = |v: &[(String, Q)]| -> Result<Lin> {
            let mut l = Lin::new();
            for (s, c) in v {
                lin_add(&mut l, look(s)?, c);
            }
            Ok(l)
        };

        let k = names.len();
        let mut given: Vec<Vec<Option<Lin>>> = vec![vec![None; k]; k];
        for (a, b, v) in &spec.mul {
            let (ia, ib) = (look(a)?, look(b)?);
            let l = lin_of(v)?;
            let target = codims[ia as usize] + codims[ib as usize];
            for s in l.keys() {
                if codims[*s as usize] != target {
                    return Err(Error::invalid(format!(
                        "{a}*{b} has a component `{}` of the wrong codimension",
                        names[*s as usize]
                    )));
                }
            }
            if let Some(prev) = &given[ia as usize][ib as usize] {
                if *prev != l {
                    return Err(Error::invalid(format!("conflicting entries for {a}*{b}")));
                }
            }
            given[ia as usize][ib as usize] = Some(l);
        }
        // Commutativity of the declared entries.
        for a in 0..k {
            for b in 0..k {
                if let (Some(x), Some(y)) = (&given[a][b], &given[b][a]) {
                    if x != y {
                        return Err(Error::Commutativity(names[a].clone(), names[b].clone()));
                    }
                }
            }
        }
        let mut mul = vec![vec![Lin::new(); k]; k];
        for a in 0..k {
            for b in 0..k {
                let entry = given[a][b].clone().or_else(|| given[b][a].clone());
                mul[a][b] = match entry {
                    Some(l) => l,
                    None if a == unit as usize => Lin::from([(b as Sym, Q::one())]),
                    None if b == unit as usize => Lin::from([(a as Sym, Q::one())]),
                    None => Lin::new(),
                };
            }
        }
        for a in 0..k {
            let mut id = Lin::new();
            id.insert(a as Sym, Q::one());
            if mul[unit as usize][a] != id || mul[a][unit as usize] != id {
                return Err(Error::UnitLaw(names[a].clone()));
            }
        }

        let mut deg = vec![Q::zero(); k];
        for (s, v) in &spec.deg {
            let i = look(s)?;
            if codims[i as usize] != n {
                return Err(Error::invalid(format!("degree given for `{s}` outside codimension {n}")));
            }
            deg[i as usize] = v.clone();
        }

        let hyperplane = match &spec.hyperplane {
            Some(h) => {
                let i = look(h)?;
                if codims[i as usize] != 1 {
                    return Err(Error::invalid("hyperplane must have codimension 1"));
                }
                Some(i)
            }
            None => None,
        };

        let mut alg = BaseAlgebra {
            name: spec.name.clone(),
            n,
            names,
            codims,
            by_codim,
            mul,
            deg,
            unit,
            hyperplane,
            zero_cycle: Lin::new(),
            c_top: Lin::new(),
            ambient_dim: spec.ambient_dim,
            degrees: spec.degrees.clone(),
            pairing: Vec::new(),
            duals: None,
            id: 0,
        };
        alg.check_associative()?;

        alg.zero_cycle = match &spec.zero_cycle {
            Some(v) => lin_of(v)?,
            None => {
                let tops: Vec<Sym> = alg.by_codim[n]
                    .iter()
                    .copied()
                    .filter(|s| !alg.deg[*s as usize].is_zero())
                    .collect();
                if tops.len() != 1 {
                    return Err(Error::invalid(
                        "cannot infer the degree-one zero-cycle; supply it explicitly",
                    ));
                }
                let s = tops[0];
                Lin::from([(s, Q::one() / &alg.deg[s as usize])])
            }
        };
        if alg.zero_cycle.keys().any(|s| alg.codims[*s as usize] != n)
            || alg.integrate_lin(&alg.zero_cycle) != Q::one()
        {
            return Err(Error::invalid("zero-cycle must be a degree-one class of top codimension"));
        }

        alg.c_top = match &spec.c_top {
            Some(v) => lin_of(v)?,
            None if n == 0 => Lin::from([(unit, Q::one())]),
            None => return Err(Error::invalid("c_top is required for this profile kind")),
        };
        if alg.c_top.keys().any(|s| alg.codims[*s as usize] != n) {
            return Err(Error::invalid("c_top must have top codimension"));
        }

        alg.pairing = (0..=n)
            .map(|c| {
                alg.by_codim[c]
                    .iter()
                    .map(|a| {
                        alg.by_codim[n - c]
                            .iter()
                            .map(|b| alg.integrate_lin(&alg.mul[*a as usize][*b as usize]))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        alg.duals = alg.compute_duals();
        if spec.require_nondegenerate {
            if let Some(c) = alg.degenerate_codim() {
                return Err(Error::DegeneratePairing(c));
            }
        }
        alg.id = alg.fingerprint();
        Ok(alg)
    }

    fn check_associative(&self) -> Result<()> {
        let k = self.names.len();
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let left = self.mul_lin(&self.mul[a][b], &Lin::from([(c as Sym, Q::one())]));
                    let right = self.mul_lin(&Lin::from([(a as Sym, Q::one())]), &self.mul[b][c]);
                    if left != right {
                        return Err(Error::Associativity(
                            self.names[a].clone(),
                            self.names[b].clone(),
                            self.names[c].clone(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.name.hash(&mut h);
        self.names.hash(&mut h);
        self.codims.hash(&mut h);
        for row in &self.mul {
            for l in row {
                for (s, c) in l {
                    s.hash(&mut h);
                    c.to_string().hash(&mut h);
                }
                0xffu8.hash(&mut h);
            }
        }
        for d in &self.deg {
            d.to_string().hash(&mut h);
        }
        h.finish()
    }

    /// First codimension whose pairing matrix is not invertible.
    pub fn degenerate_codim(&self) -> Option<usize> {
        (0..=self.n).find(|c| {
            let m = &self.pairing[*c];
            m.len() != self.by_codim[self.n - c].len() || invert(m).is_none()
        })
    }

    fn compute_duals(&self) -> Option<Vec<Lin>> {
        if self.degenerate_codim().is_some() {
            return None;
        }
        let mut duals = vec![Lin::new(); self.names.len()];
        for c in 0..=self.n {
            let inv = invert(&self.pairing[c])?;
            // dual of by_codim[c][i] is sum_k inv[k][i] * by_codim[n-c][k]
            for (i, a) in self.by_codim[c].iter().enumerate() {
                let mut l = Lin::new();
                for (kk, b) in self.by_codim[self.n - c].iter().enumerate() {
                    lin_add(&mut l, *b, &inv[kk][i]);
                }
                duals[*a as usize] = l;
            }
        }
        Some(duals)
    }

    // ---- standard constructors ----

    pub fn hypersurface(n: usize, ambient: usize, degrees: &[u64]) -> Result<Self> {
        Self::hypersurface_with(n, ambient, degrees, None)
    }

    pub fn hypersurface_with(
        n: usize,
        ambient: usize,
        degrees: &[u64],
        c_top_override: Option<Vec<(String, Q)>>,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("hypersurface dimension must be at least 1"));
        }
        if degrees.is_empty() || ambient != n + degrees.len() {
            return Err(Error::invalid(format!(
                "inconsistent dimensions: n={n}, N={ambient}, {} degrees",
                degrees.len()
            )));
        }
        if degrees.iter().any(|d| *d == 0) {
            return Err(Error::invalid("zero degree"));
        }
        let d: u64 = degrees.iter().product();
        let pw = |i: usize| format!("D^{i}");
        let mut spec = AlgebraSpec {
            name: format!("ci_{n}_{ambient}_{}", degrees.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("_")),
            n,
            basis: (0..=n).map(|i| vec![pw(i)]).collect(),
            hyperplane: Some(pw(1)),
            ambient_dim: Some(ambient),
            degrees: degrees.to_vec(),
            ..Default::default()
        };
        for i in 0..=n {
            for j in 0..=n {
                let v = if i + j <= n { vec![(pw(i + j), q(1))] } else { vec![] };
                spec.mul.push((pw(i), pw(j), v));
            }
        }
        spec.deg = vec![(pw(n), q(d as i64))];
        let ct = match c_top_override {
            Some(v) => v,
            None => vec![(pw(n), chern_top_coefficient(n, ambient, degrees))],
        };
        spec.c_top = Some(ct);
        Self::from_spec(spec)
    }

    pub fn curve(genus: u64, points: &[String]) -> Result<Self> {
        Self::curve_with(genus, points, None)
    }

    pub fn curve_with(genus: u64, points: &[String], c_top_override: Option<Vec<(String, Q)>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a curve profile needs at least one point symbol"));
        }
        let mut spec = AlgebraSpec {
            name: format!("curve_g{genus}"),
            n: 1,
            basis: vec![vec!["1".to_string()], points.to_vec()],
            ..Default::default()
        };
        spec.deg = points.iter().map(|p| (p.clone(), q(1))).collect();
        spec.zero_cycle = Some(vec![(points[0].clone(), q(1))]);
        spec.c_top = Some(c_top_override.unwrap_or_else(|| vec![(points[0].clone(), q(2 - 2 * genus as i64))]));
        Self::from_spec(spec)
    }

    /// The algebra of a point.
    pub fn point() -> Self {
        Self::from_spec(AlgebraSpec {
            name: "point".into(),
            n: 0,
            basis: vec![vec!["1".into()]],
            deg: vec![("1".into(), q(1))],
            ..Default::default()
        })
        .expect("point algebra")
    }

    /// Graded tensor product; symbols are named `a.b`.
    pub fn tensor(a: &BaseAlgebra, b: &BaseAlgebra) -> Result<Self> {
        Self::tensor_with_map(a, b).map(|(t, _)| t)
    }

    /// Tensor product together with the factor pair behind each new symbol.
    pub fn tensor_with_map(a: &BaseAlgebra, b: &BaseAlgebra) -> Result<(Self, Vec<(Sym, Sym)>)> {
        let n = a.n + b.n;
        let pair = |x: Sym, y: Sym| format!("{}.{}", a.names[x as usize], b.names[y as usize]);
        let mut basis = vec![Vec::new(); n + 1];
        for c in 0..=n {
            for ca in 0..=a.n.min(c) {
                let cb = c - ca;
                if cb > b.n {
                    continue;
                }
                for x in &a.by_codim[ca] {
                    for y in &b.by_codim[cb] {
                        basis[c].push(pair(*x, *y));
                    }
                }
            }
        }
        let ka = a.names.len();
        let kb = b.names.len();
        let mut mul = Vec::new();
        for x1 in 0..ka {
            for y1 in 0..kb {
                for x2 in 0..ka {
                    for y2 in 0..kb {
                        let mut v = Vec::new();
                        for (sx, cx) in &a.mul[x1][x2] {
                            for (sy, cy) in &b.mul[y1][y2] {
                                v.push((pair(*sx, *sy), cx * cy));
                            }
                        }
                        mul.push((pair(x1 as Sym, y1 as Sym), pair(x2 as Sym, y2 as Sym), v));
                    }
                }
            }
        }
        let mut deg = Vec::new();
        for x in &a.by_codim[a.n] {
            for y in &b.by_codim[b.n] {
                deg.push((pair(*x, *y), &a.deg[*x as usize] * &b.deg[*y as usize]));
            }
        }
        let cross = |u: &Lin, v: &Lin| -> Vec<(String, Q)> {
            let mut out = Vec::new();
            for (sx, cx) in u {
                for (sy, cy) in v {
                    out.push((pair(*sx, *sy), cx * cy));
                }
            }
            out
        };
        let mut pairs = Vec::new();
        for c in 0..=n {
            for ca in 0..=a.n.min(c) {
                let cb = c - ca;
                if cb > b.n {
                    continue;
                }
                for x in &a.by_codim[ca] {
                    for y in &b.by_codim[cb] {
                        pairs.push((*x, *y));
                    }
                }
            }
        }
        let t = Self::from_spec(AlgebraSpec {
            name: format!("{}.{}", a.name, b.name),
            n,
            basis,
            mul,
            deg,
            zero_cycle: Some(cross(&a.zero_cycle, &b.zero_cycle)),
            c_top: Some(cross(&a.c_top, &b.c_top)),
            ..Default::default()
        })?;
        Ok((t, pairs))
    }

    /// Same tables with the symbols renamed and redeclared in the given order
    /// inside each codimension.
    pub fn relabeled(&self, order: &[Sym], new_names: &[String]) -> Result<Self> {
        let k = self.names.len();
        if order.len() != k || new_names.len() != k {
            return Err(Error::invalid("relabeling must cover every symbol"));
        }
        let nm = |s: Sym| new_names[s as usize].clone();
        let mut basis = vec![Vec::new(); self.n + 1];
        for s in order {
            basis[self.codims[*s as usize]].push(nm(*s));
        }
        let lin = |l: &Lin| l.iter().map(|(s, c)| (nm(*s), c.clone())).collect::<Vec<_>>();
        let mut mul = Vec::new();
        for a in 0..k {
            for b in 0..k {
                mul.push((nm(a as Sym), nm(b as Sym), lin(&self.mul[a][b])));
            }
        }
        Self::from_spec(AlgebraSpec {
            name: self.name.clone(),
            n: self.n,
            basis,
            mul,
            deg: (0..k).filter(|s| !self.deg[*s].is_zero()).map(|s| (nm(s as Sym), self.deg[s].clone())).collect(),
            hyperplane: self.hyperplane.map(nm),
            zero_cycle: Some(lin(&self.zero_cycle)),
            c_top: Some(lin(&self.c_top)),
            ambient_dim: self.ambient_dim,
            degrees: self.degrees.clone(),
            require_nondegenerate: false,
        })
    }

    // ---- accessors ----

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.names.len()
    }
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
    pub fn name_of(&self, s: Sym) -> &str {
        &self.names[s as usize]
    }
    pub fn names(&self) -> &[String] {
        &self.names
    }
    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.names.iter().position(|x| x == name).map(|i| i as Sym)
    }
    pub fn codim(&self, s: Sym) -> usize {
        self.codims[s as usize]
    }
    pub fn basis(&self, c: usize) -> &[Sym] {
        &self.by_codim[c]
    }
    pub fn unit(&self) -> Sym {
        self.unit
    }
    pub fn hyperplane(&self) -> Option<Sym> {
        self.hyperplane
    }
    pub fn zero_cycle(&self) -> &Lin {
        &self.zero_cycle
    }
    pub fn c_top(&self) -> &Lin {
        &self.c_top
    }
    pub fn ambient_dim(&self) -> Option<usize> {
        self.ambient_dim
    }
    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }
    /// d = integral of D^n, when a hyperplane is designated.
    pub fn degree(&self) -> Option<Q> {
        let h = self.hyperplane?;
        let mut p = Lin::from([(self.unit, Q::one())]);
        for _ in 0..self.n {
            p = self.mul_lin(&p, &Lin::from([(h, Q::one())]));
        }
        Some(self.integrate_lin(&p))
    }
    pub fn deg_of(&self, s: Sym) -> &Q {
        &self.deg[s as usize]
    }
    pub fn mul_syms(&self, a: Sym, b: Sym) -> &Lin {
        &self.mul[a as usize][b as usize]
    }
    pub fn pairing(&self, c: usize) -> &[Vec<Q>] {
        &self.pairing[c]
    }
    /// Poincare dual of a basis symbol, when the pairing is nondegenerate.
    pub fn dual(&self, s: Sym) -> Option<&Lin> {
        self.duals.as_ref().map(|d| &d[s as usize])
    }
    pub fn id(&self) -> u64 {
        self.id
    }

    // ---- arithmetic on sparse vectors ----

    pub fn mul_lin(&self, a: &Lin, b: &Lin) -> Lin {
        let mut out = Lin::new();
        for (x, cx) in a {
            for (y, cy) in b {
                let c = cx * cy;
                for (z, cz) in &self.mul[*x as usize][*y as usize] {
                    lin_add(&mut out, *z, &(&c * cz));
                }
            }
        }
        out
    }

    pub fn integrate_lin(&self, a: &Lin) -> Q {
        let mut t = Q::zero();
        for (s, c) in a {
            t += c * &self.deg[*s as usize];
        }
        t
    }

    pub fn power_lin(&self, a: &Lin, k: usize) -> Lin {
        let mut p = Lin::from([(self.unit, Q::one())]);
        for _ in 0..k {
            p = self.mul_lin(&p, a);
        }
        p
    }

    // ---- BaseClass API ----

    pub fn class(&self, coeffs: Lin) -> BaseClass {
        BaseClass { alg: self.id, coeffs }
    }

    pub fn class_of(&self, s: Sym) -> BaseClass {
        self.class(Lin::from([(s, Q::one())]))
    }

    pub fn unit_class(&self) -> BaseClass {
        self.class_of(self.unit)
    }

    pub fn class_from(&self, terms: &[(&str, Q)]) -> Result<BaseClass> {
        let mut l = Lin::new();
        for (s, c) in terms {
            let i = self.sym(s).ok_or_else(|| Error::invalid(format!("unknown symbol `{s}`")))?;
            lin_add(&mut l, i, c);
        }
        Ok(self.class(l))
    }

    fn check(&self, a: &BaseClass) -> Result<()> {
        if a.alg != self.id {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }

    pub fn base_mul(&self, a: &BaseClass, b: &BaseClass) -> Result<BaseClass> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.class(self.mul_lin(&a.coeffs, &b.coeffs)))
    }

    pub fn base_integrate(&self, a: &BaseClass) -> Result<Q> {
        self.check(a)?;
        Ok(self.integrate_lin(&a.coeffs))
    }

    pub fn base_grade(&self, a: &BaseClass, r: usize) -> Result<BaseClass> {
        self.check(a)?;
        Ok(self.class(
            a.coeffs
                .iter()
                .filter(|(s, _)| self.codims[**s as usize] == r)
                .map(|(s, c)| (*s, c.clone()))
                .collect(),
        ))
    }

    pub fn lin_text(&self, l: &Lin) -> String {
        if l.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (s, c)) in l.iter().enumerate() {
            let neg = c.is_negative();
            if i > 0 {
                out.push_str(if neg { " - " } else { " + " });
            } else if neg {
                out.push('-');
            }
            let a = c.abs();
            if a != Q::one() {
                out.push_str(&format!("{a}*"));
            }
            out.push_str(&self.names[*s as usize]);
        }
        out
    }
}

/// Codimension-n coefficient of (1+x)^(N+1) / prod (1 + d_i x).
pub fn chern_top_coefficient(n: usize, ambient: usize, degrees: &[u64]) -> Q {
    let mut series: Vec<Q> = (0..=n).map(|k| Q::from_integer(binomial(ambient as u64 + 1, k as u64))).collect();
    for d in degrees {
        // multiply by 1/(1 + d x) = sum (-d)^k x^k
        let inv: Vec<Q> = (0..=n).map(|k| q(-(*d as i64)).pow(k as i32)).collect();
        let mut next = vec![Q::zero(); n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                next[i + j] += &series[i] * &inv[j];
            }
        }
        series = next;
    }
    series[n].clone()
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Inverse of a square rational matrix, or None when singular.
pub fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let k = m.len();
    if m.iter().any(|r| r.len() != k) {
        return None;
    }
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..k)
        .map(|i| (0..k).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..k {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..k {
                    let t = &f * &a[col][j];
                    a[r][j] -= t;
                    let t = &f * &inv[col][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    Some(inv)
}
