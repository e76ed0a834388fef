//! Random instances and the law checks shared by the property and acceptance suites.
#![allow(dead_code)]

use std::sync::OnceLock;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use motic::algebra::q;
use motic::ck::{self, CkSet};
use motic::correspondence::{self as corr, Correspondence};
use motic::defect;
use motic::power::{PowerClass, Profile};
use motic::profile::{self, HypersurfaceOptions};
use motic::text::{class_text, parse_class};

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($c:expr, $($fmt:tt)+) => {
        if !$c {
            return Err(format!($($fmt)+));
        }
    };
}

/// Fixed profiles for the ring and correspondence laws.
pub fn pool() -> &'static [(Profile, CkSet)] {
    static POOL: OnceLock<Vec<(Profile, CkSet)>> = OnceLock::new();
    POOL.get_or_init(|| {
        let ps = vec![
            profile::hypersurface(2, 3, &[4], HypersurfaceOptions::threshold(1)).unwrap(),
            profile::curve(2, &["o"], true).unwrap(),
            profile::curve(3, &["o"], false).unwrap(),
            profile::hypersurface(3, 4, &[3], Default::default()).unwrap(),
            profile::hypersurface(1, 2, &[1], Default::default()).unwrap(),
            profile::quadric_surface(Some(0)).unwrap(),
            profile::hypersurface(2, 3, &[4], HypersurfaceOptions::default().with_small_diagonal(false)).unwrap(),
        ];
        ps.into_iter()
            .map(|p| {
                let ck = ck::natural_projectors(&p).unwrap();
                (p, ck)
            })
            .collect()
    })
}

/// A member of the randomized profile family: hypersurfaces with any
/// threshold, curves with or without the genus relation, the quadric.
pub fn family(rng: &mut StdRng) -> Profile {
    match rng.gen_range(0..5) {
        0 | 1 => {
            let n = rng.gen_range(1..=3usize);
            let d = rng.gen_range(1..=if n == 3 { 3 } else { 4u64 });
            let threshold = match rng.gen_range(0..3) {
                0 => None,
                1 => Some(None),
                _ => Some(Some(rng.gen_range(1..=n))),
            };
            profile::hypersurface(n, n + 1, &[d], HypersurfaceOptions { threshold, ..Default::default() }).unwrap()
        }
        2 | 3 => profile::curve(rng.gen_range(0..=3), &["o"], rng.gen_bool(0.5)).unwrap(),
        _ => profile::quadric_surface(Some(0)).unwrap(),
    }
}

fn coef(rng: &mut StdRng) -> &'static str {
    ["1", "2", "3", "1/2", "3/4", "5/3"][rng.gen_range(0..6)]
}

/// Random cycle text of the given arity with up to `terms` terms.
pub fn random_text(p: &Profile, m: usize, terms: usize, rng: &mut StdRng) -> String {
    let names = p.base().names();
    let mut out = String::new();
    for t in 0..rng.gen_range(1..=terms) {
        if t > 0 {
            out.push_str(if rng.gen_bool(0.5) { " + " } else { " - " });
        }
        out.push_str(coef(rng));
        let labels: Vec<usize> = (0..m).map(|_| rng.gen_range(0..m)).collect();
        for b in 0..m {
            let idx: Vec<String> = (0..m).filter(|i| labels[*i] == b).map(|i| (i + 1).to_string()).collect();
            if idx.is_empty() {
                continue;
            }
            let kind = if idx.len() == 1 { 's' } else { 'd' };
            let sym = &names[rng.gen_range(0..names.len())];
            out.push_str(&format!(" * {kind}{{{}}}[{sym}]", idx.join(",")));
        }
    }
    out
}

pub fn random_class(p: &Profile, m: usize, terms: usize, rng: &mut StdRng) -> PowerClass {
    let src = random_text(p, m, terms, rng);
    parse_class(p, src.as_bytes(), Some(m)).unwrap_or_else(|e| panic!("{src}: {e}"))
}

pub fn random_corr(p: &Profile, rng: &mut StdRng) -> Correspondence {
    Correspondence::new(random_class(p, 2, 2, rng), 1, 1).unwrap()
}

pub fn pick(seed: u64) -> (&'static Profile, &'static CkSet, StdRng) {
    let mut rng = StdRng::seed_from_u64(seed);
    let (p, ck) = &pool()[rng.gen_range(0..pool().len())];
    (p, ck, rng)
}

fn shuffle(v: &mut [usize], rng: &mut StdRng) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
}

// ---- partition of unity ----

pub fn partition_of_unity(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = family(&mut rng);
    let ck = ck::natural_projectors(&p).unwrap();
    let m = rng.gen_range(2..=3usize);
    let r = defect::graded_pieces(&p, &ck, m).unwrap();
    let mut sum = p.zero(m + 1);
    for c in r.pieces.values() {
        sum = p.add(&sum, c).unwrap();
    }
    ensure!(p.equal(&sum, &p.small_diagonal(m + 1).unwrap()).unwrap(), "{} m {m}: pieces do not sum to the diagonal", p.name);

    let k = rng.gen_range(1..=2usize);
    let mut id = p.zero(2 * k);
    for l in 0..=2 * k * p.n() {
        id = p.add(&id, &ck::power_grading_projector(&p, &ck, k, l).unwrap().class).unwrap();
    }
    ensure!(p.equal(&id, &corr::identity(&p, k).unwrap().class).unwrap(), "{} k {k}: projectors on X^k miss the identity", p.name);
    Ok(())
}

pub fn chow_grading_sums(seed: u64) -> Check {
    let (p, ck, mut rng) = pick(seed);
    let m = rng.gen_range(1..=2usize);
    let z = random_class(p, m, 3, &mut rng);
    let mut sum = p.zero(m);
    for (r, part) in p.codimension_components(&z) {
        for c in ck::chow_grading(p, ck, &part, r).unwrap().values() {
            sum = p.add(&sum, c).unwrap();
        }
    }
    ensure!(p.equal(&sum, &z).unwrap(), "{}: grading of {} does not sum back", p.name, class_text(p, &z));
    Ok(())
}

// ---- three-way equivalence ----

pub fn three_way_equivalence(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = family(&mut rng);
    let ck = ck::natural_projectors(&p).unwrap();
    let m = if p.n() >= 3 { 2 } else { rng.gen_range(2..=3usize) };
    let full = defect::graded_pieces(&p, &ck, m).unwrap();
    let orbits = defect::graded_pieces_by_orbits(&p, &ck, m).unwrap();
    ensure!(full.pieces.keys().eq(orbits.pieces.keys()), "{} m {m}: orbit sweep keys differ", p.name);
    for (s, c) in &full.pieces {
        ensure!(p.equal(c, &orbits.pieces[s]).unwrap(), "{} m {m}: orbit sweep differs at s = {s}", p.name);
    }
    let d = p.apply_relations(&p.small_diagonal(m + 1).unwrap()).unwrap();
    for tau in 0..=(2 * m * p.n()) as i64 {
        let a = defect::is_m_fold_tau(&p, &ck, m, tau).unwrap();
        let b = full.within(tau);
        let mut low = p.zero(m + 1);
        for (s, c) in &full.pieces {
            if *s <= tau {
                low = p.add(&low, c).unwrap();
            }
        }
        let c = p.equal(&low, &d).unwrap();
        ensure!(a == b && b == c, "{} m {m} tau {tau}: {a} {b} {c}", p.name);
    }
    Ok(())
}

// ---- power ring ----

pub fn projection_formula(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let big = rng.gen_range(2..=if p.n() >= 3 { 3 } else { 4usize });
    let k = rng.gen_range(1..big);
    let mut j: Vec<usize> = (0..big).collect();
    shuffle(&mut j, &mut rng);
    let mut j = j[..k].to_vec();
    j.sort();
    let a = random_class(p, k, 2, &mut rng);
    let b = random_class(p, big, 2, &mut rng);
    let lhs = p.pushforward(&p.multiply(&p.pullback(&a, &j, big).unwrap(), &b).unwrap(), &j).unwrap();
    let rhs = p.multiply(&a, &p.pushforward(&b, &j).unwrap()).unwrap();
    ensure!(p.equal(&lhs, &rhs).unwrap(), "{}: fails for a = {}, b = {}, J = {j:?}", p.name, class_text(p, &a), class_text(p, &b));
    Ok(())
}

/// Pushing to `keep` at once agrees with every order of dropping the others.
pub fn drop_orders_agree(p: &Profile, a: &PowerClass, keep: &[usize]) -> bool {
    let direct = p.pushforward(a, keep).unwrap();
    let drop: Vec<usize> = (0..a.arity).filter(|i| !keep.contains(i)).collect();
    let mut ok = true;
    permutations(&drop, &mut |order| {
        let mut cur = a.clone();
        let mut alive: Vec<usize> = (0..a.arity).collect();
        for d in order {
            let pos = alive.iter().position(|x| x == d).unwrap();
            let k: Vec<usize> = (0..alive.len()).filter(|i| *i != pos).collect();
            cur = p.pushforward(&cur, &k).unwrap();
            alive.remove(pos);
        }
        ok &= p.equal(&cur, &direct).unwrap();
    });
    ok
}

fn permutations(v: &[usize], f: &mut dyn FnMut(&[usize])) {
    fn go(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            go(v, k + 1, f);
            v.swap(k, i);
        }
    }
    go(&mut v.to_vec(), 0, f);
}

pub fn drop_order(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let big = rng.gen_range(2..=4usize);
    let a = random_class(p, big, 3, &mut rng);
    let first = rng.gen_range(0..big);
    let keep: Vec<usize> = (0..big).filter(|i| *i == first || rng.gen_bool(0.5)).collect();
    ensure!(drop_orders_agree(p, &a, &keep), "{}: {} keep {keep:?}", p.name, class_text(p, &a));
    Ok(())
}

pub fn drop_order_exhaustive() -> Check {
    for (p, _) in pool().iter().take(3) {
        let d4 = p.small_diagonal(4).unwrap();
        let src: Vec<String> = p.base().names().iter().map(|s| format!("d{{1,3}}[{s}] * s{{2}}[{s}]")).collect();
        let mixed = parse_class(p, src.join(" + ").as_bytes(), Some(4)).unwrap();
        for a in [&d4, &mixed] {
            for mask in 1u32..16 {
                let keep: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
                ensure!(drop_orders_agree(p, a, &keep), "{} keep {keep:?}", p.name);
            }
        }
    }
    Ok(())
}

pub fn confluence(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let m = rng.gen_range(1..=4usize);
    let a = random_class(p, m, 3, &mut rng);
    ensure!(
        p.apply_relations(&a).unwrap() == p.apply_relations_reversed(&a).unwrap(),
        "{}: normal forms of {} differ",
        p.name,
        class_text(p, &a)
    );
    Ok(())
}

/// All delta_{m*}(z) for basis z, m <= 4, on small profiles.
pub fn confluence_exhaustive() -> Check {
    let profiles = [
        profile::hypersurface(2, 3, &[4], HypersurfaceOptions::threshold(1)).unwrap(),
        profile::hypersurface(3, 4, &[3], Default::default()).unwrap(),
        profile::hypersurface(3, 4, &[3], HypersurfaceOptions::threshold(2)).unwrap(),
        profile::hypersurface(2, 4, &[2, 2], Default::default()).unwrap(),
        profile::hypersurface(1, 2, &[1], Default::default()).unwrap(),
        profile::curve(2, &["o"], true).unwrap(),
    ];
    for p in &profiles {
        let a = p.base();
        for m in 1..=4 {
            for s in a.names() {
                let z = a.class_from(&[(s, q(1))]).unwrap();
                let d = p.diagonal_push(&z, m).unwrap();
                ensure!(p.apply_relations(&d).unwrap() == p.apply_relations_reversed(&d).unwrap(), "{} m {m} {s}", p.name);
            }
        }
    }
    Ok(())
}

/// Each rule's right side pushes back to its symbol on either factor.
pub fn rewrite_soundness() -> Check {
    for (p, _) in pool() {
        let a = p.base();
        for s in a.names() {
            let z = a.class_from(&[(s, q(1))]).unwrap();
            let d = p.apply_relations(&p.diagonal_push(&z, 2).unwrap()).unwrap();
            let z = p.exterior(&[z]).unwrap();
            for keep in [[0], [1]] {
                ensure!(p.equal(&p.pushforward(&d, &keep).unwrap(), &z).unwrap(), "{} {s} factor {}", p.name, keep[0] + 1);
            }
        }
    }
    Ok(())
}

pub fn codimension_additive(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let m = rng.gen_range(1..=3usize);
    let a = random_class(p, m, 1, &mut rng);
    let b = random_class(p, m, 1, &mut rng);
    let ab = p.multiply(&a, &b).unwrap();
    let ca: Vec<usize> = p.codimension_components(&a).keys().copied().collect();
    let cb: Vec<usize> = p.codimension_components(&b).keys().copied().collect();
    for c in p.codimension_components(&ab).keys() {
        ensure!(ca.iter().any(|x| cb.iter().any(|y| x + y == *c)), "{}: codim {c} not a sum", p.name);
    }
    Ok(())
}

pub fn integrate_permutation_invariant(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let m = rng.gen_range(1..=4usize);
    let a = random_class(p, m, 3, &mut rng);
    let mut sigma: Vec<usize> = (0..m).collect();
    shuffle(&mut sigma, &mut rng);
    ensure!(p.integrate(&a).unwrap() == p.integrate(&p.permute(&a, &sigma).unwrap()).unwrap(), "{}: {sigma:?}", p.name);
    Ok(())
}

// ---- correspondences ----

pub fn compose_associative(seed: u64) -> Check {
    let (p, ck, mut rng) = pick(seed);
    let k = ck.projectors.len();
    let mut f = || if rng.gen_bool(0.5) { ck.projectors[rng.gen_range(0..k)].clone() } else { random_corr(p, &mut rng) };
    let (a, b, c) = (f(), f(), f());
    let left = corr::compose(p, &corr::compose(p, &a, &b).unwrap(), &c).unwrap();
    let right = corr::compose(p, &a, &corr::compose(p, &b, &c).unwrap()).unwrap();
    ensure!(corr::equal(p, &left, &right).unwrap(), "{}: not associative", p.name);
    Ok(())
}

pub fn transpose_anti(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let (f, g) = (random_corr(p, &mut rng), random_corr(p, &mut rng));
    let lhs = corr::transpose(p, &corr::compose(p, &f, &g).unwrap()).unwrap();
    let rhs = corr::compose(p, &corr::transpose(p, &g).unwrap(), &corr::transpose(p, &f).unwrap()).unwrap();
    ensure!(corr::equal(p, &lhs, &rhs).unwrap(), "{}: transpose is not an anti-homomorphism", p.name);
    Ok(())
}

pub fn act_composes(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let (f, g) = (random_corr(p, &mut rng), random_corr(p, &mut rng));
    let z = random_class(p, 1, 2, &mut rng);
    let lhs = corr::act(p, &corr::compose(p, &f, &g).unwrap(), &z).unwrap();
    let rhs = corr::act(p, &g, &corr::act(p, &f, &z).unwrap()).unwrap();
    ensure!(p.equal(&lhs, &rhs).unwrap(), "{}: action does not respect composition", p.name);
    Ok(())
}

pub fn tensor_distributes(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let fs: Vec<Correspondence> = (0..4).map(|_| random_corr(p, &mut rng)).collect();
    let lhs = corr::compose(p, &corr::tensor(p, &fs[0], &fs[1]).unwrap(), &corr::tensor(p, &fs[2], &fs[3]).unwrap()).unwrap();
    let rhs = corr::tensor(p, &corr::compose(p, &fs[0], &fs[2]).unwrap(), &corr::compose(p, &fs[1], &fs[3]).unwrap()).unwrap();
    ensure!(corr::equal(p, &lhs, &rhs).unwrap(), "{}: tensor does not distribute", p.name);
    Ok(())
}

// ---- folds ----

fn fold_profile(rng: &mut StdRng) -> Profile {
    if rng.gen_bool(0.5) {
        profile::curve(rng.gen_range(0..=3), &["o"], rng.gen_bool(0.5)).unwrap()
    } else {
        let threshold = if rng.gen_bool(0.5) { None } else { Some(None) };
        let opts = HypersurfaceOptions { threshold, ..Default::default() };
        profile::hypersurface(2, 3, &[rng.gen_range(1..=4)], opts).unwrap()
    }
}

pub fn fold_descent(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = fold_profile(&mut rng);
    let ck = ck::natural_projectors(&p).unwrap();
    let r = rng.gen_range(2..=4usize);
    let tau = rng.gen_range(0..=(r * p.n()) as i64);
    if defect::is_m_fold_tau(&p, &ck, r, tau).unwrap() {
        for m in 2..r {
            ensure!(defect::is_m_fold_tau(&p, &ck, m, tau).unwrap(), "{} r {r} m {m} tau {tau}", p.name);
        }
    }
    Ok(())
}

/// Curve and K3 profiles, r <= 4, every tau.
pub fn fold_descent_exhaustive() -> Check {
    let profiles = [
        profile::curve(2, &["o"], true).unwrap(),
        profile::curve(3, &["o"], true).unwrap(),
        profile::curve(3, &["o"], false).unwrap(),
        profile::hypersurface(2, 3, &[4], HypersurfaceOptions::threshold(1)).unwrap(),
        profile::hypersurface(2, 3, &[4], HypersurfaceOptions::default().with_small_diagonal(false)).unwrap(),
    ];
    for p in &profiles {
        let ck = ck::natural_projectors(p).unwrap();
        let holds: Vec<Vec<bool>> = (2..=4)
            .map(|m| (0..=(4 * p.n()) as i64).map(|t| defect::is_m_fold_tau(p, &ck, m, t).unwrap()).collect())
            .collect();
        for r in 1..3 {
            for t in 0..holds[r].len() {
                if holds[r][t] {
                    ensure!((0..r).all(|m| holds[m][t]), "{} r {} tau {t}", p.name, r + 2);
                }
            }
        }
    }
    Ok(())
}

pub fn monotone_subadditive(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = family(&mut rng);
    let ck = ck::natural_projectors(&p).unwrap();
    let m_max = if p.n() >= 3 { 3 } else { 4 };
    let sweep = defect::stable_defect_sweep(&p, &ck, m_max).unwrap();
    let d: Vec<i64> = sweep.defects().into_iter().map(|x| x.expect("no negative pieces")).collect();
    for w in d.windows(2) {
        ensure!(w[0] <= w[1], "{}: not monotone {d:?}", p.name);
    }
    for (i, dm) in d.iter().enumerate() {
        ensure!(*dm <= (i as i64 + 1) * d[0], "{}: not subadditive {d:?}", p.name);
    }
    Ok(())
}

// ---- reports ----

pub fn report_round_trip(seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let p = family(&mut rng);
    let ck = ck::natural_projectors(&p).unwrap();
    let m = rng.gen_range(2..=if p.n() >= 3 { 2 } else { 3usize });
    let r = defect::graded_pieces(&p, &ck, m).unwrap();
    let text = serde_json::to_string(&r.to_json(&p)).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    let pieces = back["pieces"].as_object().unwrap();
    ensure!(pieces.len() == r.pieces.len(), "{}: piece count changed", p.name);
    for (s, c) in pieces {
        let c = c.as_str().unwrap();
        let parsed = parse_class(&p, c.as_bytes(), Some(m + 1)).map_err(|e| e.to_string())?;
        let s: i64 = s.parse().unwrap();
        ensure!(parsed == r.pieces[&s], "{}: piece {s} does not parse back", p.name);
        ensure!(class_text(&p, &parsed) == c, "{}: piece {s} prints differently", p.name);
    }
    Ok(())
}

pub fn text_round_trip(seed: u64) -> Check {
    let (p, _, mut rng) = pick(seed);
    let m = rng.gen_range(1..=4usize);
    let a = random_class(p, m, 4, &mut rng);
    let again = parse_class(p, class_text(p, &a).as_bytes(), Some(m)).map_err(|e| e.to_string())?;
    ensure!(again == a, "{}: {}", p.name, class_text(p, &a));
    Ok(())
}
