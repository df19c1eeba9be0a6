//! Smart constructors for transcendental kernels.

use num_bigint::BigInt;
use num_traits::Signed;

use super::poly::{Poly, Q};
use super::{Atom, AtomKind, Expr, Func, Name};

/// Bound on literal exponents, keeping expansion sizes sane.
const MAX_EXPONENT: u64 = 256;

impl Expr {
    fn kernel(f: Func, arg: Expr) -> Expr {
        Expr::from_atom(Atom::new(AtomKind::Func(f, arg)))
    }

    /// `true` when the leading coefficient of the numerator is negative.
    pub(crate) fn has_negative_sign(&self) -> bool {
        self.numerator()
            .leading()
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false)
    }

    pub fn exp(&self) -> Expr {
        if self.is_zero() {
            return Expr::one();
        }
        // exp(k·log(b) + rest) = b^k · exp(rest) for integer k
        let mut factor = Expr::one();
        let mut rest = self.clone();
        if self.denominator().is_one() {
            let mut kept = Vec::new();
            for (m, c) in self.numerator().terms() {
                let log_base = match m.0.as_slice() {
                    [(a, 1)] if c.is_integer() => match a.kind() {
                        AtomKind::Func(Func::Log, b) => Some(b.clone()),
                        _ => None,
                    },
                    _ => None,
                };
                match log_base.and_then(|b| {
                    let k = i64::try_from(c.to_integer()).ok()?;
                    b.powi(k).ok()
                }) {
                    Some(p) => factor = &factor * &p,
                    None => kept.push((m.clone(), c.clone())),
                }
            }
            rest = Expr::from_poly(Poly::from_terms(kept));
        }
        if rest.is_zero() {
            factor
        } else {
            &factor * &Expr::kernel(Func::Exp, rest)
        }
    }

    pub fn log(&self) -> Expr {
        if self.is_one() {
            return Expr::zero();
        }
        if let Some(a) = self.as_atom() {
            if let AtomKind::Func(Func::Exp, arg) = a.kind() {
                return arg.clone();
            }
        }
        Expr::kernel(Func::Log, self.clone())
    }

    fn odd(f: Func, arg: &Expr) -> Expr {
        if arg.is_zero() {
            return Expr::zero();
        }
        if arg.has_negative_sign() {
            -Expr::kernel(f, -arg)
        } else {
            Expr::kernel(f, arg.clone())
        }
    }

    pub fn sin(&self) -> Expr {
        Expr::odd(Func::Sin, self)
    }

    pub fn tan(&self) -> Expr {
        Expr::odd(Func::Tan, self)
    }

    pub fn atan(&self) -> Expr {
        Expr::odd(Func::Atan, self)
    }

    pub fn cos(&self) -> Expr {
        if self.is_zero() {
            return Expr::one();
        }
        if self.has_negative_sign() {
            Expr::kernel(Func::Cos, -self)
        } else {
            Expr::kernel(Func::Cos, self.clone())
        }
    }

    pub fn abs(&self) -> Expr {
        if let Some(q) = self.as_rational() {
            return Expr::rational(q.abs());
        }
        if self.has_negative_sign() {
            Expr::kernel(Func::Abs, -self)
        } else {
            Expr::kernel(Func::Abs, self.clone())
        }
    }

    pub fn apply_func(f: Func, arg: &Expr) -> Expr {
        match f {
            Func::Exp => arg.exp(),
            Func::Log => arg.log(),
            Func::Sin => arg.sin(),
            Func::Cos => arg.cos(),
            Func::Tan => arg.tan(),
            Func::Atan => arg.atan(),
            Func::Abs => arg.abs(),
        }
    }

    pub fn sqrt(&self) -> Expr {
        self.root(2)
    }

    /// Principal `q`-th root.
    pub fn root(&self, q: u32) -> Expr {
        if q == 1 || self.is_zero() || self.is_one() {
            return self.clone();
        }
        if let Some(r) = self.as_rational() {
            if let Some(exact) = rational_root(&r, q) {
                return Expr::rational(exact);
            }
        }
        Expr::from_atom(Atom::new(AtomKind::Root(self.clone(), q)))
    }

    /// `self^(p/q)` for a rational exponent.
    pub fn pow_rational(&self, e: &Q) -> crate::error::Result<Expr> {
        let p = e.numer();
        let q = e.denom();
        let p = i64::try_from(p).map_err(|_| crate::error::Error::Invalid("exponent too large".into()))?;
        let q = u32::try_from(q).map_err(|_| crate::error::Error::Invalid("exponent too large".into()))?;
        if p.unsigned_abs() > MAX_EXPONENT || q as u64 > MAX_EXPONENT {
            return Err(crate::error::Error::Invalid("exponent too large".into()));
        }
        self.root(q).powi(p)
    }

    /// Generic power; non-rational exponents become `exp(b·log(a))`.
    pub fn pow(&self, b: &Expr) -> crate::error::Result<Expr> {
        match b.as_rational() {
            Some(q) => self.pow_rational(&q),
            None => Ok((b * &self.log()).exp()),
        }
    }

    /// Undetermined function (or formal derivative) applied to arguments.
    pub fn apply(name: Name, derivs: Vec<u32>, args: Vec<Expr>) -> Expr {
        Expr::from_atom(Atom::new(AtomKind::Apply { name, derivs, args }))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        let n = args.len();
        Expr::apply(Name::from(name), vec![0; n], args)
    }
}

fn int_root(n: &BigInt, q: u32) -> Option<BigInt> {
    if n.is_negative() {
        if q % 2 == 0 {
            return None;
        }
        return int_root(&-n, q).map(|r| -r);
    }
    let r = n.nth_root(q);
    if num_traits::pow(r.clone(), q as usize) == *n {
        Some(r)
    } else {
        None
    }
}

fn rational_root(r: &Q, q: u32) -> Option<Q> {
    let n = int_root(r.numer(), q)?;
    let d = int_root(r.denom(), q)?;
    Some(Q::new(n, d))
}
