//! Symbolic expression kernel.
//!
//! An [`Expr`] is always held in canonical form: a quotient of two sparse
//! polynomials over ℚ whose indeterminates are *atoms* (symbols and
//! transcendental kernels such as `exp(a)` or `w'(z)`). Numerator and
//! denominator are coprime with exponentials counted as units, the
//! denominator has leading coefficient 1, no exponential content (along
//! each argument term its smallest exponential coefficient is 0) and no
//! imaginary unit when it is a single term. Two
//! expressions that normalize to the same rational function over the same
//! kernels compare equal.
//!
//! Syntax trees ([`Ast`]) are the exchange format for parsing and printing;
//! [`normalize`] maps a tree to its canonical expression.

mod ast;
mod calc;
mod kernel;
mod parse;
pub mod poly;
mod units;
mod zero;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

pub use ast::{Ast, Callee};
pub use calc::FunctionRule;
pub use parse::{parse, parse_ast, Context};
pub use poly::{Mono, Poly, Q};
pub use ast::default_symbol;
pub use zero::{is_zero, is_zero_with, Witness, ZeroVerdict};

use crate::error::{Error, Result};
use crate::jet::MultiIndex;

pub type Name = Arc<str>;

/// Leaf symbols of the expression language.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Symbol {
    /// Base (independent) variable, or an auxiliary variable such as an
    /// invariant `z` introduced by a reduction ansatz.
    Var(Name),
    /// Jet coordinate `u^a_J`.
    Jet(Name, MultiIndex),
    /// Named constant, uninterpreted over ℚ.
    Const(Name),
    /// The imaginary unit, `i² = −1`.
    ImagUnit,
}

impl Symbol {
    pub fn var(name: &str) -> Self {
        Symbol::Var(Arc::from(name))
    }

    pub fn constant(name: &str) -> Self {
        Symbol::Const(Arc::from(name))
    }

    pub fn jet(dep: &str, index: MultiIndex) -> Self {
        Symbol::Jet(Arc::from(dep), index)
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, Symbol::Jet(..))
    }
}

/// Elementary functions known to the kernel.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Atan,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Atan => "arctan",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "arctan" | "atan" => Func::Atan,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Indeterminates of the canonical polynomials.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum AtomKind {
    Sym(Symbol),
    Func(Func, Expr),
    /// `base^(1/q)`.
    Root(Expr, u32),
    /// Undetermined function (or one of its formal partial derivatives,
    /// `derivs[j]` counting derivatives in slot `j`) applied to arguments.
    Apply {
        name: Name,
        derivs: Vec<u32>,
        args: Vec<Expr>,
    },
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom(Arc<AtomKind>);

impl Atom {
    pub fn new(kind: AtomKind) -> Self {
        Atom(Arc::new(kind))
    }

    pub fn kind(&self) -> &AtomKind {
        &self.0
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match self.kind() {
            AtomKind::Sym(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Ratio {
    num: Poly,
    den: Poly,
}

/// Canonical symbolic expression.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Ratio>);

impl Expr {
    fn raw(num: Poly, den: Poly) -> Expr {
        Expr(Arc::new(Ratio { num, den }))
    }

    pub fn zero() -> Expr {
        Expr::raw(Poly::zero(), Poly::one())
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(Q::from_integer(BigInt::from(n)))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(Q::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn rational(q: Q) -> Expr {
        Expr::raw(Poly::constant(q), Poly::one())
    }

    pub fn sym(s: Symbol) -> Expr {
        Expr::from_atom(Atom::new(AtomKind::Sym(s)))
    }

    pub fn var(name: &str) -> Expr {
        Expr::sym(Symbol::var(name))
    }

    pub fn constant(name: &str) -> Expr {
        Expr::sym(Symbol::constant(name))
    }

    pub fn imag() -> Expr {
        Expr::sym(Symbol::ImagUnit)
    }

    pub fn from_atom(a: Atom) -> Expr {
        Expr::raw(Poly::atom(a), Poly::one())
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr::from_reduced(p, Poly::one())
    }

    pub fn numerator(&self) -> &Poly {
        &self.0.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.0.den
    }

    /// Numerator and denominator as expressions.
    pub fn split(&self) -> (Expr, Expr) {
        (
            Expr::raw(self.0.num.clone(), Poly::one()),
            Expr::raw(self.0.den.clone(), Poly::one()),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.num.is_one() && self.0.den.is_one()
    }

    pub fn as_rational(&self) -> Option<Q> {
        let n = self.0.num.as_constant()?;
        let d = self.0.den.as_constant()?;
        Some(n / d)
    }

    pub fn as_integer(&self) -> Option<i64> {
        let q = self.as_rational()?;
        if q.is_integer() {
            i64::try_from(q.to_integer()).ok()
        } else {
            None
        }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match (self.0.num.terms(), self.0.den.is_one()) {
            ([(m, c)], true) if c.is_one() && m.0.len() == 1 && m.0[0].1 == 1 => {
                m.0[0].0.as_symbol()
            }
            _ => None,
        }
    }

    /// Single atom with unit coefficient and power, if this is one.
    pub fn as_atom(&self) -> Option<&Atom> {
        match (self.0.num.terms(), self.0.den.is_one()) {
            ([(m, c)], true) if c.is_one() && m.0.len() == 1 && m.0[0].1 == 1 => Some(&m.0[0].0),
            _ => None,
        }
    }

    /// Builds `num/den`, cancelling common factors.
    pub fn from_parts(num: Poly, den: Poly) -> Result<Expr> {
        if den.is_zero() {
            return Err(Error::SingularDenominator);
        }
        if num.is_zero() {
            return Ok(Expr::zero());
        }
        if den.is_constant() {
            return Ok(Expr::from_reduced(num, den));
        }
        let g = poly::gcd(&num, &den);
        if g.is_constant() {
            Ok(Expr::from_reduced(num, den))
        } else {
            let n = num.exact_div(&g).expect("gcd divides numerator");
            let d = den.exact_div(&g).expect("gcd divides denominator");
            Ok(Expr::from_reduced(n, d))
        }
    }

    /// Builds `num/den` for coprime parts; applies the remaining
    /// normalizations (kernel relations, unit denominators, monic denominator).
    fn from_reduced(num: Poly, den: Poly) -> Expr {
        let mut num = num.reduce_relations();
        let mut den = den.reduce_relations();
        if num.is_zero() {
            return Expr::zero();
        }
        if den.len() == 1 && !den.terms[0].0.is_one() {
            let (m, c) = den.terms[0].clone();
            let mut keep = Vec::new();
            for (a, k) in m.0 {
                match a.kind() {
                    AtomKind::Func(Func::Exp, arg) => {
                        let inv = -(arg * &Expr::int(k as i64));
                        num = num.mul(&Expr::exp(&inv).0.num);
                    }
                    AtomKind::Sym(Symbol::ImagUnit) => {
                        // 1/i^k = (−i)^k
                        let minus_i = Poly::atom(a.clone()).neg();
                        num = num.mul(&minus_i.pow_free(k));
                    }
                    AtomKind::Root(_, q) if k % q != 0 => {
                        let extra = q - k % q;
                        num = num.mul_term(&Mono::atom(a.clone(), extra), &Q::one());
                        keep.push((a.clone(), k + extra));
                    }
                    _ => keep.push((a.clone(), k)),
                }
            }
            den = Poly::monomial(Mono(keep), c);
        } else if den.len() > 1 && units::has_exp(&den) {
            if let Some(s) = units::exp_content(&den) {
                let unit = Poly::atom(Atom::new(AtomKind::Func(Func::Exp, -s)));
                num = num.mul(&unit);
                den = den.mul(&unit);
            }
        }
        if has_root_overflow(&num) || has_root_overflow(&den) {
            let n = expand_roots(&num);
            let d = expand_roots(&den);
            return n.try_div(&d).expect("radical expansion of a nonzero denominator");
        }
        if let Some((_, lc)) = den.leading() {
            if !lc.is_one() {
                let s = lc.recip();
                num = num.scale(&s);
                den = den.scale(&s);
            }
        }
        Expr::raw(num, den)
    }

    pub fn try_div(&self, other: &Expr) -> Result<Expr> {
        if other.is_zero() {
            return Err(Error::SingularDenominator);
        }
        Ok(self * &other.recip_unchecked())
    }

    pub fn recip(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::SingularDenominator);
        }
        Ok(self.recip_unchecked())
    }

    fn recip_unchecked(&self) -> Expr {
        Expr::from_reduced(self.0.den.clone(), self.0.num.clone())
    }

    pub fn powi(&self, k: i64) -> Result<Expr> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut base = self.clone();
        let mut acc = Expr::one();
        let mut k = k as u64;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(acc)
    }

    /// Top-level atoms (kernels are not descended into).
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut s = self.0.num.atoms();
        s.extend(self.0.den.atoms());
        s
    }

    /// Every symbol occurring anywhere, including inside kernel arguments.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for a in self.atoms() {
            match a.kind() {
                AtomKind::Sym(s) => {
                    out.insert(s.clone());
                }
                AtomKind::Func(_, e) | AtomKind::Root(e, _) => e.collect_symbols(out),
                AtomKind::Apply { args, .. } => {
                    for e in args {
                        e.collect_symbols(out);
                    }
                }
            }
        }
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.symbols().contains(s)
    }

    /// Jet coordinates occurring anywhere in the expression.
    pub fn jet_symbols(&self) -> BTreeSet<Symbol> {
        self.symbols().into_iter().filter(Symbol::is_jet).collect()
    }

    /// Undetermined-function applications (and their formal derivatives).
    pub fn applications(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_applications(&mut out);
        out
    }

    fn collect_applications(&self, out: &mut BTreeSet<Atom>) {
        for a in self.atoms() {
            match a.kind() {
                AtomKind::Sym(_) => {}
                AtomKind::Func(_, e) | AtomKind::Root(e, _) => e.collect_applications(out),
                AtomKind::Apply { args, .. } => {
                    for e in args {
                        e.collect_applications(out);
                    }
                    out.insert(a.clone());
                }
            }
        }
    }

    /// Number of terms in numerator plus denominator; a rough size measure.
    pub fn size(&self) -> usize {
        self.0.num.len() + self.0.den.len()
    }
}

fn has_root_overflow(p: &Poly) -> bool {
    p.terms.iter().any(|(m, _)| {
        m.0.iter()
            .any(|(a, k)| matches!(a.kind(), AtomKind::Root(_, q) if k >= q))
    })
}

fn expand_roots(p: &Poly) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in &p.terms {
        let mut term = Expr::rational(c.clone());
        for (a, k) in &m.0 {
            let factor = match a.kind() {
                AtomKind::Root(base, q) if k >= q => {
                    let whole = base.powi((k / q) as i64).expect("positive power");
                    let rest = Expr::raw(Poly::monomial(Mono::atom(a.clone(), k % q), Q::one()), Poly::one());
                    &whole * &rest
                }
                _ => Expr::raw(Poly::monomial(Mono::atom(a.clone(), *k), Q::one()), Poly::one()),
            };
            term = &term * &factor;
        }
        acc = &acc + &term;
    }
    acc
}

impl<'a> Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b) = (&self.0.num, &self.0.den);
        let (c, d) = (&other.0.num, &other.0.den);
        if b == d {
            if b.is_one() {
                return Expr::from_reduced(a.add(c), Poly::one());
            }
            return Expr::from_parts(a.add(c), b.clone()).expect("nonzero denominator");
        }
        if b.is_one() {
            return Expr::from_reduced(a.mul(d).add(c), d.clone());
        }
        if d.is_one() {
            return Expr::from_reduced(a.add(&c.mul(b)), b.clone());
        }
        let g = poly::gcd(b, d);
        if g.is_constant() {
            let num = a.mul(d).add(&c.mul(b));
            let den = b.mul(d);
            return Expr::from_reduced(num, den);
        }
        let b1 = b.exact_div(&g).expect("gcd divides");
        let d1 = d.exact_div(&g).expect("gcd divides");
        let num = a.mul(&d1).add(&c.mul(&b1));
        let den = b1.mul(d);
        Expr::from_parts(num, den).expect("nonzero denominator")
    }
}

impl<'a> Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, other: &Expr) -> Expr {
        self + &(-other)
    }
}

impl<'a> Neg for &'a Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::raw(self.0.num.neg(), self.0.den.clone())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl<'a> Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(q) = self.as_rational() {
            if q.is_one() {
                return other.clone();
            }
            return Expr::raw(other.0.num.scale(&q), other.0.den.clone());
        }
        if let Some(q) = other.as_rational() {
            if q.is_one() {
                return self.clone();
            }
            return Expr::raw(self.0.num.scale(&q), self.0.den.clone());
        }
        let (a, b) = (&self.0.num, &self.0.den);
        let (c, d) = (&other.0.num, &other.0.den);
        if b.is_one() && d.is_one() {
            return Expr::from_reduced(a.mul(c), Poly::one());
        }
        let g1 = if d.is_one() { Poly::one() } else { poly::gcd(a, d) };
        let g2 = if b.is_one() { Poly::one() } else { poly::gcd(c, b) };
        let (a, d) = if g1.is_constant() {
            (a.clone(), d.clone())
        } else {
            (a.exact_div(&g1).unwrap(), d.exact_div(&g1).unwrap())
        };
        let (c, b) = if g2.is_constant() {
            (c.clone(), b.clone())
        } else {
            (c.exact_div(&g2).unwrap(), b.exact_div(&g2).unwrap())
        };
        Expr::from_reduced(a.mul(&c), b.mul(&d))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, other: Expr) -> Expr {
                (&self).$m(&other)
            }
        }
        impl<'a> $tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $m(self, other: &Expr) -> Expr {
                (&self).$m(other)
            }
        }
        impl<'a> $tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $m(self, other: Expr) -> Expr {
                self.$m(&other)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| &a + &b)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_ast())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

/// Applies the derivation sending each symbol `s` to `on_symbol(s)` (zero when `None`).
pub fn derive(on_symbol: &dyn Fn(&Symbol) -> Option<Expr>, e: &Expr) -> Expr {
    calc::Deriver::new(on_symbol).expr(e)
}

/// Maps a syntax tree to its canonical expression.
pub fn normalize(ast: &Ast) -> Result<Expr> {
    ast::to_expr(ast)
}

#[cfg(test)]
mod tests;
