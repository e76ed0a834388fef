//! Correspondences X^a -> X^b as classes on X^(a+b), sources first.

use crate::error::{Error, Result};
use crate::power::{PowerClass, Profile};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub class: PowerClass,
    pub source: usize,
    pub target: usize,
}

impl Correspondence {
    pub fn new(class: PowerClass, source: usize, target: usize) -> Result<Self> {
        if class.arity != source + target {
            return Err(Error::Arity(format!(
                "class of arity {} cannot be a correspondence {source} -> {target}",
                class.arity
            )));
        }
        Ok(Correspondence { class, source, target })
    }
}

/// The diagonal of X^a viewed as X^a -> X^a.
pub fn identity(p: &Profile, a: usize) -> Result<Correspondence> {
    let mut cls = p.from_terms(2 * a, [(p.unit_term(2 * a), num_traits::One::one())]);
    for i in 0..a {
        let d = p.big_diagonal(2 * a, i, a + i)?;
        cls = p.multiply(&cls, &d)?;
    }
    Correspondence::new(cls, a, a)
}

/// g after f, for f: a -> b and g: b -> c.
pub fn compose(p: &Profile, f: &Correspondence, g: &Correspondence) -> Result<Correspondence> {
    compose_with(p, f, g, true)
}

pub fn compose_with(p: &Profile, f: &Correspondence, g: &Correspondence, normalize: bool) -> Result<Correspondence> {
    if f.target != g.source {
        return Err(Error::Arity(format!("cannot compose {} -> {} with {} -> {}", f.source, f.target, g.source, g.target)));
    }
    let (a, b, c) = (f.source, f.target, g.target);
    let big = a + b + c;
    let fj: Vec<usize> = (0..a + b).collect();
    let gj: Vec<usize> = (a..big).collect();
    let prod = p.multiply(&p.pullback(&f.class, &fj, big)?, &p.pullback(&g.class, &gj, big)?)?;
    let keep: Vec<usize> = (0..a).chain(a + b..big).collect();
    let mut out = p.pushforward(&prod, &keep)?;
    if normalize {
        out = p.apply_relations(&out)?;
    }
    Correspondence::new(out, a, c)
}

pub fn transpose(p: &Profile, f: &Correspondence) -> Result<Correspondence> {
    let (a, b) = (f.source, f.target);
    let sigma: Vec<usize> = (0..a).map(|i| b + i).chain((0..b).map(|j| j)).collect();
    Correspondence::new(p.permute(&f.class, &sigma)?, b, a)
}

/// f (x) g: sources of f, sources of g, targets of f, targets of g.
pub fn tensor(p: &Profile, f: &Correspondence, g: &Correspondence) -> Result<Correspondence> {
    let (a, b, c, d) = (f.source, f.target, g.source, g.target);
    let big = a + b + c + d;
    let fj: Vec<usize> = (0..a).chain((0..b).map(|j| a + c + j)).collect();
    let gj: Vec<usize> = (0..c).map(|i| a + i).chain((0..d).map(|j| a + c + b + j)).collect();
    let cls = p.multiply(&p.pullback(&f.class, &fj, big)?, &p.pullback(&g.class, &gj, big)?)?;
    Correspondence::new(cls, a + c, b + d)
}

/// f_* z = push to targets of (pull z . f).
pub fn act(p: &Profile, f: &Correspondence, z: &PowerClass) -> Result<PowerClass> {
    if z.arity != f.source {
        return Err(Error::Arity(format!("correspondence from X^{} applied to a class on X^{}", f.source, z.arity)));
    }
    let big = f.source + f.target;
    let zj: Vec<usize> = (0..f.source).collect();
    let prod = p.multiply(&p.pullback(z, &zj, big)?, &f.class)?;
    let keep: Vec<usize> = (f.source..big).collect();
    p.apply_relations(&p.pushforward(&prod, &keep)?)
}

/// (1 x .. x f x .. x 1)_* z with f: X -> X acting on one factor.
pub fn act_slot(p: &Profile, f: &Correspondence, z: &PowerClass, slot: usize) -> Result<PowerClass> {
    act_slot_with(p, f, z, slot, true)
}

pub fn act_slot_with(p: &Profile, f: &Correspondence, z: &PowerClass, slot: usize, normalize: bool) -> Result<PowerClass> {
    if f.source != 1 || f.target != 1 {
        return Err(Error::Arity("slot action needs a correspondence X -> X".into()));
    }
    let m = z.arity;
    if slot >= m {
        return Err(Error::Arity(format!("slot {} out of range for arity {m}", slot + 1)));
    }
    if z.is_empty() || f.class.is_empty() {
        return Ok(p.zero(m));
    }
    let zj: Vec<usize> = (0..m).collect();
    let prod = p.multiply(&p.pullback(z, &zj, m + 1)?, &p.pullback(&f.class, &[slot, m], m + 1)?)?;
    let keep: Vec<usize> = (0..=m).filter(|i| *i != slot).collect();
    let pushed = p.pushforward(&prod, &keep)?;
    // the new factor sits last; move it back to `slot`
    let sigma: Vec<usize> = (0..m)
        .map(|i| if i < slot { i } else if i + 1 < m { i + 1 } else { slot })
        .collect();
    let out = p.permute(&pushed, &sigma)?;
    if normalize {
        p.apply_relations(&out)
    } else {
        Ok(out)
    }
}

pub fn is_zero(p: &Profile, f: &Correspondence) -> Result<bool> {
    p.is_zero(&f.class)
}

pub fn equal(p: &Profile, f: &Correspondence, g: &Correspondence) -> Result<bool> {
    if f.source != g.source || f.target != g.target {
        return Ok(false);
    }
    p.equal(&f.class, &g.class)
}

pub fn is_idempotent(p: &Profile, f: &Correspondence) -> Result<bool> {
    if f.source != f.target {
        return Err(Error::Arity("idempotence needs a self-correspondence".into()));
    }
    equal(p, &compose(p, f, f)?, f)
}

pub fn are_orthogonal(p: &Profile, f: &Correspondence, g: &Correspondence) -> Result<bool> {
    if f.source != f.target || g.source != g.target || f.source != g.source {
        return Err(Error::Arity("orthogonality needs self-correspondences of equal arity".into()));
    }
    Ok(is_zero(p, &compose(p, f, g)?)? && is_zero(p, &compose(p, g, f)?)?)
}
