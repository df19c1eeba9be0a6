//! Numeric evaluation at seeded random jet points.
//!
//! Every symbol gets a value drawn from its own ChaCha stream keyed by the
//! symbol name and the trial seed, so a point is a pure function of the
//! seed and evaluation order never matters. Undetermined-function leaves
//! (including formal derivatives) are sampled the same way, keyed by their
//! printed form.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{Ast, Atom, AtomKind, Callee, Expr, Func, Poly, Symbol, Witness, ZeroVerdict};
use crate::jet::{JetSpace, MultiIndex, PdeSystem};

/// Sampling and tolerance parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Values are drawn from `[-range, range]`.
    pub range: f64,
    /// Values with `|v| < guard` are rejected.
    pub guard: f64,
    /// Singular samples tolerated before giving up.
    pub retry_budget: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            trials: 20,
            tol: 1e-9,
            seed: 0x5eed,
            range: 2.0,
            guard: 0.1,
            retry_budget: 100,
        }
    }
}

/// A fully materialized jet point.
#[derive(Clone, Debug, PartialEq)]
pub struct JetAssignment {
    pub seed: u64,
    pub values: BTreeMap<Symbol, Complex64>,
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn sample(key: &str, seed: u64, cfg: &OracleConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(key) ^ seed.rotate_left(17));
    loop {
        let v: f64 = rng.gen_range(-cfg.range..=cfg.range);
        if v.abs() >= cfg.guard {
            return v;
        }
    }
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add((trial as u64).wrapping_mul(0x9e3779b97f4a7c15))
}

/// Lazily sampled point; constrained coordinates follow the supplied rules.
struct Point<'a> {
    seed: u64,
    cfg: &'a OracleConfig,
    rules: &'a BTreeMap<Symbol, Expr>,
    syms: HashMap<Symbol, Option<Complex64>>,
    atoms: HashMap<Atom, Option<Complex64>>,
}

const SINGULAR: f64 = 1e-10;

impl<'a> Point<'a> {
    fn new(seed: u64, cfg: &'a OracleConfig, rules: &'a BTreeMap<Symbol, Expr>) -> Self {
        Point {
            seed,
            cfg,
            rules,
            syms: HashMap::new(),
            atoms: HashMap::new(),
        }
    }

    fn symbol(&mut self, s: &Symbol) -> Option<Complex64> {
        if let Some(v) = self.syms.get(s) {
            return *v;
        }
        let v = match s {
            Symbol::ImagUnit => Some(Complex64::i()),
            _ => match self.rules.get(s) {
                Some(rule) => {
                    let rule = rule.clone();
                    self.eval(&rule)
                }
                None => Some(Complex64::new(sample(&symbol_key(s), self.seed, self.cfg), 0.0)),
            },
        };
        self.syms.insert(s.clone(), v);
        v
    }

    fn atom(&mut self, a: &Atom) -> Option<Complex64> {
        if let Some(v) = self.atoms.get(a) {
            return *v;
        }
        let v = self.atom_uncached(a).filter(|z| z.re.is_finite() && z.im.is_finite());
        self.atoms.insert(a.clone(), v);
        v
    }

    fn atom_uncached(&mut self, a: &Atom) -> Option<Complex64> {
        match a.kind() {
            AtomKind::Sym(s) => self.symbol(s),
            AtomKind::Func(f, arg) => {
                let z = self.eval(arg)?;
                match f {
                    Func::Exp => Some(z.exp()),
                    Func::Log => (z.norm() > SINGULAR).then(|| z.ln()),
                    Func::Sin => Some(z.sin()),
                    Func::Cos => Some(z.cos()),
                    Func::Tan => {
                        let c = z.cos();
                        (c.norm() > SINGULAR).then(|| z.sin() / c)
                    }
                    Func::Atan => Some(z.atan()),
                    Func::Abs => Some(Complex64::new(z.norm(), 0.0)),
                }
            }
            AtomKind::Root(base, q) => {
                let z = self.eval(base)?;
                if z.is_zero() {
                    return Some(z);
                }
                // real branch for odd roots of negative reals, principal otherwise
                if z.im == 0.0 && z.re < 0.0 && q % 2 == 1 {
                    Some(Complex64::new(-(-z.re).powf(1.0 / *q as f64), 0.0))
                } else {
                    Some(z.powf(1.0 / *q as f64))
                }
            }
            AtomKind::Apply { .. } => {
                let key = format!("{}", Expr::from_atom(a.clone()));
                Some(Complex64::new(sample(&key, self.seed, self.cfg), 0.0))
            }
        }
    }

    /// Value and magnitude (sum of absolute term values).
    fn poly(&mut self, p: &Poly) -> Option<(Complex64, f64)> {
        let mut acc = Complex64::zero();
        let mut mag = 0.0;
        for (m, c) in p.terms() {
            let mut t = Complex64::new(c.to_f64()?, 0.0);
            for (a, k) in &m.0 {
                let v = self.atom(a)?;
                t *= v.powu(*k);
            }
            mag += t.norm();
            acc += t;
        }
        Some((acc, mag))
    }

    fn eval_scaled(&mut self, e: &Expr) -> Option<(Complex64, f64)> {
        let (n, mag) = self.poly(e.numerator())?;
        let (d, _) = self.poly(e.denominator())?;
        if d.norm() < SINGULAR {
            return None;
        }
        let v = n / d;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return None;
        }
        // cancellation-aware residual: |N| relative to its largest possible size
        let scaled = n.norm() / d.norm().max(mag).max(1e-300);
        Some((v, scaled.min(v.norm())))
    }

    fn eval(&mut self, e: &Expr) -> Option<Complex64> {
        self.eval_scaled(e).map(|(v, _)| v)
    }

    fn witness(&mut self, e: &Expr) -> Witness {
        let mut values = Vec::new();
        for s in e.symbols() {
            if s == Symbol::ImagUnit {
                continue;
            }
            if let Some(v) = self.symbol(&s) {
                values.push((crate::expr::default_symbol(&s), v));
            }
        }
        for a in e.applications() {
            if let Some(v) = self.atom(&a) {
                values.push((Expr::from_atom(a).to_string(), v));
            }
        }
        Witness {
            seed: self.seed,
            values,
        }
    }
}

fn symbol_key(s: &Symbol) -> String {
    match s {
        Symbol::Var(n) => format!("x:{}", n),
        Symbol::Const(n) => format!("c:{}", n),
        Symbol::Jet(n, j) => format!("u:{}{}", n, j),
        Symbol::ImagUnit => "i".into(),
    }
}

/// Rules for every constrained coordinate that `e` (transitively) needs.
fn constraint_rules(e: &Expr, sys: Option<&PdeSystem>) -> Result<BTreeMap<Symbol, Expr>> {
    let mut rules = BTreeMap::new();
    if let Some(sys) = sys {
        for s in e.jet_symbols() {
            if let Some(r) = sys.rule(&s)? {
                rules.insert(s, r);
            }
        }
    }
    Ok(rules)
}

/// Samples every coordinate of `J^(n)` for `space`; on `S_Δ` when
/// constraints are supplied.
pub fn random_jet_point(space: &JetSpace, seed: u64, constraints: Option<&PdeSystem>) -> Result<JetAssignment> {
    let cfg = OracleConfig::default();
    let coords = space.coordinates(space.order());
    let mut rules = BTreeMap::new();
    if let Some(sys) = constraints {
        for s in &coords {
            if let Some(r) = sys.rule(s)? {
                rules.insert(s.clone(), r);
            }
        }
    }
    let mut pt = Point::new(seed, &cfg, &rules);
    let mut values = BTreeMap::new();
    for s in coords {
        let v = pt.symbol(&s).ok_or(Error::SingularDenominator)?;
        values.insert(s, v);
    }
    Ok(JetAssignment { seed, values })
}

/// Evaluates `e` at the point determined by `seed`.
pub fn evaluate(e: &Expr, seed: u64, cfg: &OracleConfig, constraints: Option<&PdeSystem>) -> Result<Option<Complex64>> {
    let rules = constraint_rules(e, constraints)?;
    Ok(Point::new(seed, cfg, &rules).eval(e))
}

/// Evaluates `e` at an explicit assignment; missing symbols are sampled
/// from `seed`.
pub fn evaluate_at(e: &Expr, at: &JetAssignment, cfg: &OracleConfig) -> Option<Complex64> {
    let rules = BTreeMap::new();
    let mut pt = Point::new(at.seed, cfg, &rules);
    for (s, v) in &at.values {
        pt.syms.insert(s.clone(), Some(*v));
    }
    pt.eval(e)
}

/// Evaluates a raw syntax tree without normalizing it; an independent
/// check on the canonicalizer. Symbols take the same values as in
/// [`evaluate`] for the same seed.
pub fn evaluate_ast(ast: &Ast, seed: u64, cfg: &OracleConfig) -> Option<Complex64> {
    let rules = BTreeMap::new();
    let mut pt = Point::new(seed, cfg, &rules);
    ast_value(ast, &mut pt).filter(|z| z.re.is_finite() && z.im.is_finite())
}

fn ast_value(ast: &Ast, pt: &mut Point) -> Option<Complex64> {
    Some(match ast {
        Ast::Num(q) => Complex64::new(q.to_f64()?, 0.0),
        Ast::Sym(s) => pt.symbol(s)?,
        Ast::Neg(a) => -ast_value(a, pt)?,
        Ast::Add(v) => {
            let mut acc = Complex64::zero();
            for a in v {
                acc += ast_value(a, pt)?;
            }
            acc
        }
        Ast::Mul(v) => {
            let mut acc = Complex64::new(1.0, 0.0);
            for a in v {
                acc *= ast_value(a, pt)?;
            }
            acc
        }
        Ast::Div(a, b) => {
            let d = ast_value(b, pt)?;
            if d.norm() < SINGULAR {
                return None;
            }
            ast_value(a, pt)? / d
        }
        Ast::Pow(a, b) => {
            let base = ast_value(a, pt)?;
            let q = match b.as_ref() {
                Ast::Num(q) => Some(q.clone()),
                Ast::Neg(inner) => match inner.as_ref() {
                    Ast::Num(q) => Some(-q.clone()),
                    _ => None,
                },
                _ => None,
            };
            match q {
                Some(q) if q.is_integer() => {
                    let k = q.to_integer().to_i32()?;
                    if k < 0 && base.norm() < SINGULAR {
                        return None;
                    }
                    base.powi(k)
                }
                Some(q) => {
                    let (num, den) = (q.numer().to_i32()?, q.denom().to_i32()?);
                    let root = if base.im == 0.0 && base.re < 0.0 && den % 2 == 1 {
                        Complex64::new(-(-base.re).powf(1.0 / den as f64), 0.0)
                    } else if base.norm() == 0.0 {
                        base
                    } else {
                        base.powf(1.0 / den as f64)
                    };
                    if num < 0 && root.norm() < SINGULAR {
                        return None;
                    }
                    root.powi(num)
                }
                None => {
                    let e = ast_value(b, pt)?;
                    if base.norm() < SINGULAR {
                        return None;
                    }
                    (e * base.ln()).exp()
                }
            }
        }
        Ast::Call(c, args) => match c {
            Callee::Apply { .. } => {
                let e = crate::expr::normalize(ast).ok()?;
                let a = e.as_atom()?.clone();
                pt.atom(&a)?
            }
            Callee::Sqrt => {
                let z = ast_value(&args[0], pt)?;
                if z.norm() == 0.0 {
                    z
                } else {
                    z.powf(0.5)
                }
            }
            Callee::Func(f) => {
                let z = ast_value(&args[0], pt)?;
                match f {
                    Func::Exp => z.exp(),
                    Func::Log => {
                        if z.norm() < SINGULAR {
                            return None;
                        }
                        z.ln()
                    }
                    Func::Sin => z.sin(),
                    Func::Cos => z.cos(),
                    Func::Tan => {
                        let c = z.cos();
                        if c.norm() < SINGULAR {
                            return None;
                        }
                        z.sin() / c
                    }
                    Func::Atan => z.atan(),
                    Func::Abs => Complex64::new(z.norm(), 0.0),
                }
            }
        },
    })
}

/// Probabilistic zero test at `cfg.trials` points.
pub fn numeric_zero_check(e: &Expr, cfg: &OracleConfig, constraints: Option<&PdeSystem>) -> Result<ZeroVerdict> {
    if cfg.trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let rules = constraint_rules(e, constraints)?;
    let mut valid = 0;
    let mut skipped = 0;
    let mut max_abs: f64 = 0.0;
    let mut attempt = 0;
    while valid < cfg.trials {
        let seed = trial_seed(cfg.seed, attempt);
        attempt += 1;
        let mut pt = Point::new(seed, cfg, &rules);
        match pt.eval_scaled(e) {
            None => {
                skipped += 1;
                if skipped > cfg.retry_budget {
                    return Err(Error::Inconclusive);
                }
            }
            Some((v, scaled)) => {
                if scaled > cfg.tol {
                    return Ok(ZeroVerdict::NonZero {
                        witness: pt.witness(e),
                        value: v,
                    });
                }
                max_abs = max_abs.max(v.norm());
                valid += 1;
            }
        }
    }
    Ok(ZeroVerdict::NumericZero {
        trials: valid,
        max_abs,
    })
}

/// Jet coordinates up to order `n` that a point on `S_Δ` leaves free.
pub fn free_coordinates(sys: &PdeSystem, n: u32) -> Vec<Symbol> {
    let space = sys.space();
    MultiIndex::all_up_to(space.p(), n)
        .into_iter()
        .flat_map(|j| (0..space.q()).map(move |a| (a, j.clone())))
        .map(|(a, j)| space.u(a, j))
        .filter(|s| !sys.is_constrained(s))
        .collect()
}
