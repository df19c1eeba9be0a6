//! Derivations (partial derivatives, chain rule) and substitution.

use std::collections::{BTreeMap, HashMap};

use super::poly::{Mono, Poly, Q};
use super::{Atom, AtomKind, Expr, Func, Name, Symbol};
use crate::error::Result;

/// Applies a derivation determined by its values on symbols.
///
/// `on_symbol` returns `None` for symbols the derivation annihilates.
pub(crate) struct Deriver<'a> {
    on_symbol: &'a dyn Fn(&Symbol) -> Option<Expr>,
    memo: HashMap<Atom, Option<Expr>>,
}

impl<'a> Deriver<'a> {
    pub(crate) fn new(on_symbol: &'a dyn Fn(&Symbol) -> Option<Expr>) -> Self {
        Deriver {
            on_symbol,
            memo: HashMap::new(),
        }
    }

    pub(crate) fn expr(&mut self, e: &Expr) -> Expr {
        let dn = self.poly(e.numerator());
        if e.denominator().is_one() {
            return dn;
        }
        let dd = self.poly(e.denominator());
        if dd.is_zero() {
            return Expr::from_parts(Poly::one(), e.denominator().clone())
                .map(|inv| &dn * &inv)
                .expect("nonzero denominator");
        }
        let (n, d) = e.split();
        let num = &(&dn * &d) - &(&n * &dd);
        num.try_div(&(&d * &d)).expect("nonzero denominator")
    }

    fn poly(&mut self, p: &Poly) -> Expr {
        let mut acc = Expr::zero();
        for a in p.atoms() {
            let Some(da) = self.atom(&a) else { continue };
            let partial = Poly::from_terms(p.terms().iter().filter_map(|(m, c)| {
                let k = m.degree(&a);
                if k == 0 {
                    return None;
                }
                let rest = m.without(&a).mul(&Mono::atom(a.clone(), k - 1));
                Some((rest, c * Q::from_integer(k.into())))
            }));
            acc = &acc + &(&Expr::from_poly(partial) * &da);
        }
        acc
    }

    fn atom(&mut self, a: &Atom) -> Option<Expr> {
        if let Some(v) = self.memo.get(a) {
            return v.clone();
        }
        let v = self.atom_uncached(a);
        let v = v.filter(|e| !e.is_zero());
        self.memo.insert(a.clone(), v.clone());
        v
    }

    fn atom_uncached(&mut self, a: &Atom) -> Option<Expr> {
        match a.kind() {
            AtomKind::Sym(s) => (self.on_symbol)(s),
            AtomKind::Func(f, arg) => {
                let darg = self.expr(arg);
                if darg.is_zero() {
                    return None;
                }
                let outer = match f {
                    Func::Exp => Expr::from_atom(a.clone()),
                    Func::Log => arg.recip().ok()?,
                    Func::Sin => arg.cos(),
                    Func::Cos => -arg.sin(),
                    Func::Tan => {
                        let t = Expr::from_atom(a.clone());
                        &Expr::one() + &(&t * &t)
                    }
                    Func::Atan => (&Expr::one() + &(arg * arg)).recip().ok()?,
                    Func::Abs => Expr::from_atom(a.clone()).try_div(arg).ok()?,
                };
                Some(&outer * &darg)
            }
            AtomKind::Root(base, q) => {
                let db = self.expr(base);
                if db.is_zero() {
                    return None;
                }
                let r = Expr::from_atom(a.clone());
                let outer = (&r * &Expr::frac(1, *q as i64)).try_div(base).ok()?;
                Some(&outer * &db)
            }
            AtomKind::Apply { name, derivs, args } => {
                let mut acc = Expr::zero();
                for (j, arg) in args.iter().enumerate() {
                    let darg = self.expr(arg);
                    if darg.is_zero() {
                        continue;
                    }
                    let mut d = derivs.clone();
                    d[j] += 1;
                    let f = Expr::apply(name.clone(), d, args.clone());
                    acc = &acc + &(&f * &darg);
                }
                Some(acc)
            }
        }
    }
}

impl Expr {
    /// Partial derivative with respect to `s`, every other symbol held fixed.
    pub fn diff(&self, s: &Symbol) -> Expr {
        let target = s.clone();
        let f = move |t: &Symbol| (*t == target).then(Expr::one);
        Deriver::new(&f).expr(self)
    }

    /// Simultaneous single-pass replacement of symbols.
    pub fn subs(&self, rules: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
        if rules.is_empty() {
            return Ok(self.clone());
        }
        let f = |a: &Atom| a.as_symbol().and_then(|s| rules.get(s).cloned());
        self.map_atoms(&f)
    }

    pub fn subs1(&self, s: &Symbol, by: &Expr) -> Result<Expr> {
        let mut m = BTreeMap::new();
        m.insert(s.clone(), by.clone());
        self.subs(&m)
    }

    /// Replaces whole atoms (symbols or kernels) by expressions.
    pub fn subs_atoms(&self, rules: &BTreeMap<Atom, Expr>) -> Result<Expr> {
        if rules.is_empty() {
            return Ok(self.clone());
        }
        let f = |a: &Atom| rules.get(a).cloned();
        self.map_atoms(&f)
    }

    /// Replaces undetermined functions by closed forms, including their
    /// formal derivatives.
    pub fn subs_functions(&self, rules: &BTreeMap<Name, FunctionRule>) -> Result<Expr> {
        if rules.is_empty() {
            return Ok(self.clone());
        }
        let f = |a: &Atom| -> Option<Expr> {
            let AtomKind::Apply { name, derivs, args } = a.kind() else {
                return None;
            };
            let rule = rules.get(name)?;
            if rule.params.len() != args.len() {
                return None;
            }
            let mut body = rule.body.clone();
            for (p, k) in rule.params.iter().zip(derivs) {
                for _ in 0..*k {
                    body = body.diff(p);
                }
            }
            let m: BTreeMap<Symbol, Expr> = rule.params.iter().cloned().zip(args.iter().cloned()).collect();
            body.subs(&m).ok()
        };
        self.map_atoms(&f)
    }

    /// Rebuilds the expression after replacing atoms; kernels whose
    /// arguments change are re-canonicalized.
    pub fn map_atoms(&self, f: &dyn Fn(&Atom) -> Option<Expr>) -> Result<Expr> {
        let mut m = Mapper {
            f,
            memo: HashMap::new(),
        };
        Ok(m.expr(self)?.unwrap_or_else(|| self.clone()))
    }
}

/// Closed form `name(params) = body` for an undetermined function.
#[derive(Clone, Debug)]
pub struct FunctionRule {
    pub params: Vec<Symbol>,
    pub body: Expr,
}

struct Mapper<'a> {
    f: &'a dyn Fn(&Atom) -> Option<Expr>,
    memo: HashMap<Atom, Option<Expr>>,
}

impl<'a> Mapper<'a> {
    fn atom(&mut self, a: &Atom) -> Result<Option<Expr>> {
        if let Some(v) = self.memo.get(a) {
            return Ok(v.clone());
        }
        let v = self.atom_uncached(a)?;
        self.memo.insert(a.clone(), v.clone());
        Ok(v)
    }

    fn atom_uncached(&mut self, a: &Atom) -> Result<Option<Expr>> {
        if let Some(r) = (self.f)(a) {
            return Ok(Some(r));
        }
        Ok(match a.kind() {
            AtomKind::Sym(_) => None,
            AtomKind::Func(f, arg) => self.expr(arg)?.map(|na| Expr::apply_func(*f, &na)),
            AtomKind::Root(b, q) => self.expr(b)?.map(|nb| nb.root(*q)),
            AtomKind::Apply { name, derivs, args } => {
                let mut changed = false;
                let mut out = Vec::with_capacity(args.len());
                for e in args {
                    match self.expr(e)? {
                        Some(n) => {
                            changed = true;
                            out.push(n);
                        }
                        None => out.push(e.clone()),
                    }
                }
                changed.then(|| Expr::apply(name.clone(), derivs.clone(), out))
            }
        })
    }

    /// `None` when nothing changed.
    fn expr(&mut self, e: &Expr) -> Result<Option<Expr>> {
        let mut changed = BTreeMap::new();
        for a in e.atoms() {
            if let Some(v) = self.atom(&a)? {
                changed.insert(a, v);
            }
        }
        if changed.is_empty() {
            return Ok(None);
        }
        let n = rebuild(e.numerator(), &changed)?;
        if e.denominator().is_one() {
            return Ok(Some(n));
        }
        let d = rebuild(e.denominator(), &changed)?;
        Ok(Some(n.try_div(&d)?))
    }
}

/// Evaluates `p` with the atoms in `changed` replaced, grouping terms by
/// their replaced part so each distinct product is formed once.
fn rebuild(p: &Poly, changed: &BTreeMap<Atom, Expr>) -> Result<Expr> {
    let mut groups: BTreeMap<Vec<(Atom, u32)>, Vec<(Mono, Q)>> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut key = Vec::new();
        let mut keep = Vec::new();
        for (a, k) in &m.0 {
            if changed.contains_key(a) {
                key.push((a.clone(), *k));
            } else {
                keep.push((a.clone(), *k));
            }
        }
        groups.entry(key).or_default().push((Mono(keep), c.clone()));
    }
    let mut powers: HashMap<(Atom, u32), Expr> = HashMap::new();
    let mut acc = Expr::zero();
    for (key, terms) in groups {
        let mut factor = Expr::one();
        for (a, k) in key {
            let v = match powers.get(&(a.clone(), k)) {
                Some(v) => v.clone(),
                None => {
                    let v = changed[&a].powi(k as i64)?;
                    powers.insert((a, k), v.clone());
                    v
                }
            };
            factor = &factor * &v;
        }
        let rest = Expr::from_poly(Poly::from_terms(terms));
        acc = &acc + &(&rest * &factor);
    }
    Ok(acc)
}
