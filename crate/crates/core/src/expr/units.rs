//! Exponentials as Laurent monomials over shared base kernels.
//!
//! Canonical polynomials merge products of exponentials into one atom, so
//! `exp(x)` and `exp(2*x)` look like unrelated indeterminates to the free
//! ring and gcds miss factors such as `1 + (x + exp(x))^2`. Division and gcd
//! run on a lifted copy instead, where every exponential is a monomial in
//! base kernels `exp(r·m/D)`, one per argument term `m/D`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, ToPrimitive, Zero};

use super::poly::{free_gcd, int_gcd, Mono, Poly, Q};
use super::{Atom, AtomKind, Expr, Func};

type Key = (Mono, Poly);

fn exp_arg(a: &Atom) -> Option<&Expr> {
    match a.kind() {
        AtomKind::Func(Func::Exp, e) => Some(e),
        _ => None,
    }
}

pub(crate) fn has_exp(p: &Poly) -> bool {
    p.terms.iter().any(|(m, _)| m.0.iter().any(|(a, _)| exp_arg(a).is_some()))
}

fn components(arg: &Expr) -> impl Iterator<Item = (Key, &Q)> + '_ {
    let den = arg.denominator();
    arg.numerator().terms().iter().map(move |(m, c)| ((m.clone(), den.clone()), c))
}

fn rational_gcd(a: &Q, b: &Q) -> Q {
    let n = int_gcd(a.numer().clone(), b.numer().clone());
    let g = int_gcd(a.denom().clone(), b.denom().clone());
    let l = a.denom() / &g * b.denom();
    Q::new(n, l)
}

fn term(key: &Key, c: Q) -> Expr {
    Expr::from_parts(Poly::monomial(key.0.clone(), c), key.1.clone()).expect("canonical denominator")
}

struct Basis {
    keys: Vec<Key>,
    scale: Vec<Q>,
    atoms: Vec<Atom>,
    index: BTreeMap<Key, usize>,
    position: HashMap<Atom, usize>,
}

impl Basis {
    fn new(polys: &[&Poly]) -> Basis {
        let mut scale: BTreeMap<Key, Q> = BTreeMap::new();
        for p in polys {
            for (m, _) in &p.terms {
                for arg in m.0.iter().filter_map(|(a, _)| exp_arg(a)) {
                    for (k, c) in components(arg) {
                        let c = c.abs();
                        let s = scale.remove(&k).map(|s| rational_gcd(&s, &c)).unwrap_or(c);
                        scale.insert(k, s);
                    }
                }
            }
        }
        let mut b = Basis {
            keys: Vec::new(),
            scale: Vec::new(),
            atoms: Vec::new(),
            index: BTreeMap::new(),
            position: HashMap::new(),
        };
        for (i, (k, s)) in scale.into_iter().enumerate() {
            // placeholder only; raw so that distinct keys stay distinct atoms
            let a = Atom::new(AtomKind::Func(
                Func::Exp,
                Expr::raw(Poly::monomial(k.0.clone(), s.clone()), k.1.clone()),
            ));
            b.index.insert(k.clone(), i);
            b.position.insert(a.clone(), i);
            b.keys.push(k);
            b.scale.push(s);
            b.atoms.push(a);
        }
        b
    }

    fn split(&self, m: &Mono) -> Option<(Mono, Vec<i64>)> {
        let mut e = vec![0i64; self.keys.len()];
        let mut rest = Vec::with_capacity(m.0.len());
        for (a, k) in &m.0 {
            match exp_arg(a) {
                Some(arg) => {
                    for (key, c) in components(arg) {
                        let i = self.index[&key];
                        let q = c / &self.scale[i];
                        e[i] += q.to_integer().to_i64()? * i64::from(*k);
                    }
                }
                None => rest.push((a.clone(), *k)),
            }
        }
        Some((Mono(rest), e))
    }

    /// `p = E^shift · lifted` with `lifted` free of negative exponents.
    fn lift(&self, p: &Poly) -> Option<(Poly, Vec<i64>)> {
        let rows: Vec<(Mono, Vec<i64>, &Q)> = p
            .terms
            .iter()
            .map(|(m, c)| self.split(m).map(|(r, e)| (r, e, c)))
            .collect::<Option<_>>()?;
        let mut shift = rows.first().map(|r| r.1.clone()).unwrap_or_default();
        for (_, e, _) in &rows {
            for (s, v) in shift.iter_mut().zip(e) {
                *s = (*s).min(*v);
            }
        }
        let mut terms = Vec::with_capacity(rows.len());
        for (rest, e, c) in rows {
            let mut m = rest;
            for (i, (v, s)) in e.iter().zip(&shift).enumerate() {
                let k = u32::try_from(v - s).ok()?;
                m = m.mul(&Mono::atom(self.atoms[i].clone(), k));
            }
            terms.push((m, c.clone()));
        }
        Some((Poly::from_terms(terms), shift))
    }

    fn lower(&self, q: &Poly, offset: &[i64]) -> Poly {
        let mut args: HashMap<Vec<i64>, Expr> = HashMap::new();
        let mut out = Vec::with_capacity(q.terms.len());
        for (m, c) in &q.terms {
            let mut e = offset.to_vec();
            let mut rest = Vec::with_capacity(m.0.len());
            for (a, k) in &m.0 {
                match self.position.get(a) {
                    Some(&i) => e[i] += i64::from(*k),
                    None => rest.push((a.clone(), *k)),
                }
            }
            let arg = args
                .entry(e.clone())
                .or_insert_with(|| {
                    let mut acc = Expr::zero();
                    for (i, v) in e.iter().enumerate().filter(|(_, v)| **v != 0) {
                        acc = &acc + &term(&self.keys[i], &self.scale[i] * Q::from_integer((*v).into()));
                    }
                    acc
                })
                .clone();
            let mut mono = Mono(rest);
            if !arg.is_zero() {
                mono = mono.mul(&Mono::atom(Atom::new(AtomKind::Func(Func::Exp, arg)), 1));
            }
            out.push((mono, c.clone()));
        }
        Poly::from_terms(out).reduce_relations()
    }
}

/// Gcd up to exponential units; `None` when exponents do not fit.
pub(crate) fn gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    let basis = Basis::new(&[a, b]);
    let (la, _) = basis.lift(a)?;
    let (lb, _) = basis.lift(b)?;
    let g = free_gcd(&la, &lb);
    Some(basis.lower(&g, &vec![0; basis.keys.len()]).monic())
}

/// Outer `None` when exponents do not fit, inner when `d` does not divide.
pub(crate) fn exact_div(n: &Poly, d: &Poly) -> Option<Option<Poly>> {
    let basis = Basis::new(&[n, d]);
    let (ln, sn) = basis.lift(n)?;
    let (ld, sd) = basis.lift(d)?;
    let Some(q) = ln.exact_div_free(&ld) else {
        return Some(None);
    };
    let offset: Vec<i64> = sn.iter().zip(&sd).map(|(a, b)| a - b).collect();
    Some(Some(basis.lower(&q, &offset)))
}

/// Argument `s` with `den·exp(−s)` having, along every argument term, a
/// smallest exponential coefficient of zero across its terms.
pub(crate) fn exp_content(den: &Poly) -> Option<Expr> {
    let mut lows: BTreeMap<Key, Q> = BTreeMap::new();
    let mut seen: BTreeMap<Key, usize> = BTreeMap::new();
    for (m, _) in &den.terms {
        for arg in m.0.iter().filter_map(|(a, _)| exp_arg(a)) {
            for (k, c) in components(arg) {
                *seen.entry(k.clone()).or_default() += 1;
                let low = lows.entry(k).or_insert_with(|| c.clone());
                if c < low {
                    *low = c.clone();
                }
            }
        }
    }
    let mut s = Expr::zero();
    for (k, low) in lows {
        // a term without this component contributes coefficient 0
        let low = if seen[&k] < den.len() && low.is_positive() { Q::zero() } else { low };
        if !low.is_zero() {
            s = &s + &term(&k, low);
        }
    }
    (!s.is_zero()).then_some(s)
}
