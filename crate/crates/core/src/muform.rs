//! Horizontal forms `μ = Λ_i dx^i`, gauge maps and their relations.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{is_zero_with, AtomKind, Expr, Func, Poly, Symbol, ZeroVerdict};
use crate::jet::{JetSpace, PdeSystem};
use crate::oracle::OracleConfig;
use crate::vfield::{prolong_mu, prolong_standard, Characteristic, ProlongedField, VectorField};

/// Square matrix of expressions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<Expr>,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Matrix {
            n,
            data: vec![Expr::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.data[i * n + i] = Expr::one();
        }
        m
    }

    pub fn scalar(e: Expr) -> Self {
        Matrix { n: 1, data: vec![e] }
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix must be square and nonempty".into()));
        }
        Ok(Matrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.data[r * self.n + c]
    }

    pub fn rows(&self) -> Vec<Vec<Expr>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map(&self, f: impl Fn(&Expr) -> Result<Expr>) -> Result<Matrix> {
        Ok(Matrix {
            n: self.n,
            data: self.data.iter().map(f).collect::<Result<_>>()?,
        })
    }

    fn check(&self, other: &Matrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{}×{} vs {}×{}", self.n, self.n, other.n, other.n)));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        self.check(other)?;
        let n = self.n;
        let mut out = Matrix::zero(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Expr::zero();
                for k in 0..n {
                    let a = self.get(r, k);
                    let b = other.get(k, c);
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.data[r * n + c] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check(other)?;
        Ok(Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check(other)?;
        Ok(Matrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, c: &Expr) -> Matrix {
        self.map(|e| e * c)
    }

    pub fn commutator(&self, other: &Matrix) -> Result<Matrix> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Expr]) -> Vec<Expr> {
        (0..self.n)
            .map(|r| {
                let mut acc = Expr::zero();
                for (c, x) in v.iter().enumerate() {
                    let a = self.get(r, c);
                    if !a.is_zero() && !x.is_zero() {
                        acc = &acc + &(a * x);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Expr::is_zero)
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Matrix {
        let n = self.n - 1;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..self.n {
            for c in 0..self.n {
                if r != skip_r && c != skip_c {
                    data.push(self.get(r, c).clone());
                }
            }
        }
        Matrix { n, data }
    }

    /// Determinant by cofactor expansion (intended for small `n`).
    pub fn det(&self) -> Expr {
        match self.n {
            1 => self.data[0].clone(),
            2 => &(self.get(0, 0) * self.get(1, 1)) - &(self.get(0, 1) * self.get(1, 0)),
            _ => {
                let mut acc = Expr::zero();
                for c in 0..self.n {
                    let a = self.get(0, c);
                    if a.is_zero() {
                        continue;
                    }
                    let t = a * &self.minor(0, c).det();
                    acc = if c % 2 == 0 { &acc + &t } else { &acc - &t };
                }
                acc
            }
        }
    }

    pub fn adjugate(&self) -> Matrix {
        let n = self.n;
        if n == 1 {
            return Matrix::identity(1);
        }
        let mut out = Matrix::zero(n);
        for r in 0..n {
            for c in 0..n {
                let m = self.minor(r, c).det();
                out.data[c * n + r] = if (r + c) % 2 == 0 { m } else { -m };
            }
        }
        out
    }

    /// Inverse via adjugate over determinant.
    pub fn inverse(&self) -> Result<Matrix> {
        let d = self.det();
        if d.is_zero() {
            return Err(Error::SingularGauge);
        }
        let inv = d.recip()?;
        Ok(self.adjugate().scale(&inv))
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

/// `μ = Λ_i dx^i` with one `q×q` matrix per independent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalForm {
    lambdas: Vec<Matrix>,
}

impl HorizontalForm {
    pub fn new(lambdas: Vec<Matrix>) -> Result<Self> {
        let Some(first) = lambdas.first() else {
            return Err(Error::DimensionMismatch("μ needs at least one component".into()));
        };
        if lambdas.iter().any(|m| m.dim() != first.dim()) {
            return Err(Error::DimensionMismatch("components of μ differ in size".into()));
        }
        Ok(HorizontalForm { lambdas })
    }

    /// Scalar form `λ_i dx^i` (q = 1).
    pub fn scalar(lambdas: Vec<Expr>) -> Result<Self> {
        HorizontalForm::new(lambdas.into_iter().map(Matrix::scalar).collect())
    }

    pub fn zero(p: usize, q: usize) -> Self {
        HorizontalForm {
            lambdas: vec![Matrix::zero(q); p],
        }
    }

    pub fn p(&self) -> usize {
        self.lambdas.len()
    }

    pub fn q(&self) -> usize {
        self.lambdas[0].dim()
    }

    pub fn lambda(&self, i: usize) -> &Matrix {
        &self.lambdas[i]
    }

    pub fn lambdas(&self) -> &[Matrix] {
        &self.lambdas
    }

    pub fn is_zero(&self) -> bool {
        self.lambdas.iter().all(Matrix::is_zero)
    }

    fn check_space(&self, space: &JetSpace) -> Result<()> {
        if self.p() != space.p() || self.q() != space.q() {
            return Err(Error::DimensionMismatch(format!(
                "μ has {} components of size {}, frame has p = {}, q = {}",
                self.p(),
                self.q(),
                space.p(),
                space.q()
            )));
        }
        Ok(())
    }
}

/// Invertible `q×q` gauge map with cached inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMap {
    gamma: Matrix,
    inverse: Matrix,
}

impl GaugeMap {
    /// Fails with "singular" unless the determinant is found nonzero.
    pub fn new(gamma: Matrix) -> Result<Self> {
        let d = gamma.det();
        match crate::expr::is_zero(&d) {
            Ok(ZeroVerdict::NonZero { .. }) => {}
            _ => return Err(Error::SingularGauge),
        }
        let inverse = gamma.inverse()?;
        Ok(GaugeMap { gamma, inverse })
    }

    pub fn scalar(g: Expr) -> Result<Self> {
        GaugeMap::new(Matrix::scalar(g))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.gamma
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn q(&self) -> usize {
        self.gamma.dim()
    }

    pub fn compose(&self, other: &GaugeMap) -> Result<GaugeMap> {
        Ok(GaugeMap {
            gamma: self.gamma.mul(&other.gamma)?,
            inverse: other.inverse.mul(&self.inverse)?,
        })
    }

    pub fn inverted(&self) -> GaugeMap {
        GaugeMap {
            gamma: self.inverse.clone(),
            inverse: self.gamma.clone(),
        }
    }
}

/// Where an identity holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Global,
    OnSolutionManifold,
    Fails,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Global => "Global",
            Scope::OnSolutionManifold => "OnSolutionManifold",
            Scope::Fails => "Fails",
        })
    }
}

/// One entry of a residual check.
#[derive(Clone, Debug)]
pub struct Residual {
    pub label: String,
    pub expr: Expr,
    /// Restricted form, when restriction was needed.
    pub restricted: Option<Expr>,
    pub verdict: ZeroVerdict,
}

#[derive(Clone, Debug)]
pub struct ScopeReport {
    pub scope: Scope,
    pub residuals: Vec<Residual>,
}

impl ScopeReport {
    /// All verdicts symbolic.
    pub fn proved(&self) -> bool {
        self.residuals.iter().all(|r| r.verdict.is_proved())
    }
}

/// Classifies labelled residuals: zero everywhere, zero on `S_Δ`, or neither.
pub fn classify(
    items: Vec<(String, Expr)>,
    sys: Option<&PdeSystem>,
    cfg: &OracleConfig,
) -> Result<ScopeReport> {
    let mut residuals = Vec::with_capacity(items.len());
    let mut global = true;
    for (label, expr) in items {
        let verdict = is_zero_with(&expr, cfg, None)?;
        global &= verdict.is_zero();
        residuals.push(Residual {
            label,
            expr,
            restricted: None,
            verdict,
        });
    }
    if global {
        return Ok(ScopeReport {
            scope: Scope::Global,
            residuals,
        });
    }
    let Some(sys) = sys else {
        return Ok(ScopeReport {
            scope: Scope::Fails,
            residuals,
        });
    };
    let mut on_manifold = true;
    for r in &mut residuals {
        let restricted = sys.restrict(&r.expr)?;
        r.verdict = is_zero_with(&restricted, cfg, None)?;
        on_manifold &= r.verdict.is_zero();
        r.restricted = Some(restricted);
    }
    Ok(ScopeReport {
        scope: if on_manifold {
            Scope::OnSolutionManifold
        } else {
            Scope::Fails
        },
        residuals,
    })
}

/// `D_iΛ_j − D_jΛ_i + [Λ_i, Λ_j]`.
pub fn compatibility_residual(space: &JetSpace, mu: &HorizontalForm, i: usize, j: usize) -> Result<Matrix> {
    mu.check_space(space)?;
    let li = mu.lambda(i);
    let lj = mu.lambda(j);
    let d = lj
        .map(|e| space.total_derivative(e, i))
        .sub(&li.map(|e| space.total_derivative(e, j)))?;
    d.add(&li.commutator(lj)?)
}

fn entry_label(name: &str, m: &Matrix, r: usize, c: usize) -> String {
    if m.dim() == 1 {
        name.to_string()
    } else {
        format!("{}[{},{}]", name, r + 1, c + 1)
    }
}

/// Compatibility (horizontal Maurer–Cartan) check over all pairs `i < j`.
pub fn check_compatibility(
    space: &JetSpace,
    mu: &HorizontalForm,
    sys: Option<&PdeSystem>,
    cfg: &OracleConfig,
) -> Result<ScopeReport> {
    mu.check_space(space)?;
    let mut items = Vec::new();
    for i in 0..space.p() {
        for j in i + 1..space.p() {
            let m = compatibility_residual(space, mu, i, j)?;
            let name = format!("compat({},{})", space.independents()[i], space.independents()[j]);
            for r in 0..m.dim() {
                for c in 0..m.dim() {
                    items.push((entry_label(&name, &m, r, c), m.get(r, c).clone()));
                }
            }
        }
    }
    classify(items, sys, cfg)
}

/// `Λ_i = γ⁻¹ D_i γ`.
pub fn darboux_derivative(space: &JetSpace, gamma: &GaugeMap) -> Result<HorizontalForm> {
    if gamma.q() != space.q() {
        return Err(Error::DimensionMismatch("γ does not match the number of dependent variables".into()));
    }
    let lambdas = (0..space.p())
        .map(|i| gamma.inverse().mul(&gamma.matrix().map(|e| space.total_derivative(e, i))))
        .collect::<Result<Vec<_>>>()?;
    HorizontalForm::new(lambdas)
}

/// Multiplies every coefficient vector `(Ψ^1_J, …, Ψ^q_J)` by `γ`; `ξ` is untouched.
pub fn gauge_act(gamma: &GaugeMap, y: &ProlongedField) -> Result<ProlongedField> {
    if gamma.q() != y.space().q() {
        return Err(Error::DimensionMismatch("γ does not match the prolonged field".into()));
    }
    Ok(ProlongedField::gauged(gamma.matrix(), y))
}

pub fn gauge_act_characteristic(gamma: &GaugeMap, q: &Characteristic) -> Result<Characteristic> {
    if gamma.q() != q.0.len() {
        return Err(Error::DimensionMismatch("γ does not match the characteristic".into()));
    }
    Ok(Characteristic(gamma.matrix().apply(&q.0)))
}

/// Checks `μ − γ⁻¹Dγ` entrywise.
pub fn verify_gauge_factor(
    space: &JetSpace,
    gamma: &GaugeMap,
    mu: &HorizontalForm,
    sys: Option<&PdeSystem>,
    cfg: &OracleConfig,
) -> Result<ScopeReport> {
    mu.check_space(space)?;
    let d = darboux_derivative(space, gamma)?;
    let mut items = Vec::new();
    for i in 0..space.p() {
        let diff = mu.lambda(i).sub(d.lambda(i))?;
        let name = format!("μ−γ⁻¹Dγ ({})", space.independents()[i]);
        for r in 0..diff.dim() {
            for c in 0..diff.dim() {
                items.push((entry_label(&name, &diff, r, c), diff.get(r, c).clone()));
            }
        }
    }
    classify(items, sys, cfg)
}

/// `γ·pr_μ(X_Q) − pr(X_{γQ})` coefficientwise up to order `n`, with
/// `μ = γ⁻¹Dγ`.
pub fn check_gauge_round_trip(
    space: &JetSpace,
    gamma: &GaugeMap,
    x: &VectorField,
    n: u32,
    cfg: &OracleConfig,
) -> Result<ScopeReport> {
    let mu = darboux_derivative(space, gamma)?;
    let lhs = gauge_act(gamma, &prolong_mu(space, &x.evolutionary_rep(space), &mu, n)?)?;
    let gx = gauge_act_characteristic(gamma, &x.characteristic(space))?;
    let rhs = prolong_standard(space, &VectorField::evolutionary(space, gx.0)?, n)?;
    let ctx = space.context();
    let items = lhs
        .table()
        .into_iter()
        .map(|((a, j), v)| {
            let label = format!("Ψ[{}]", ctx.symbol_name(&space.u(a, j.clone())));
            (label, &v - &rhs.coefficient(a, &j))
        })
        .collect();
    classify(items, None, cfg)
}

/// Potential `V` with `∂V/∂x^i = λ_i` and gauge factor `γ = e^V`, for a
/// scalar `μ` depending on base variables only.
pub fn find_scalar_potential(space: &JetSpace, mu: &HorizontalForm) -> Result<(Expr, Expr)> {
    mu.check_space(space)?;
    if mu.q() != 1 {
        return Err(Error::DimensionMismatch("scalar potential needs q = 1".into()));
    }
    let lam: Vec<Expr> = (0..space.p()).map(|i| mu.lambda(i).get(0, 0).clone()).collect();
    if lam.iter().any(|l| !l.jet_symbols().is_empty()) {
        return Err(Error::JetDependentCoefficients);
    }
    for i in 0..space.p() {
        for j in i + 1..space.p() {
            let r = &lam[j].diff(&space.x(i)) - &lam[i].diff(&space.x(j));
            if !r.is_zero() {
                return Err(Error::NotClosed(format!(
                    "∂{}λ_{} ≠ ∂{}λ_{}",
                    space.independents()[i],
                    space.independents()[j],
                    space.independents()[j],
                    space.independents()[i]
                )));
            }
        }
    }
    let mut v = Expr::zero();
    for (i, li) in lam.iter().enumerate() {
        let x = space.x(i);
        let rest = li - &v.diff(&x);
        if !rest.is_zero() {
            v = &v + &integrate(&rest, &x)?;
        }
    }
    for (i, li) in lam.iter().enumerate() {
        let check = &v.diff(&space.x(i)) - li;
        if !is_zero_with(&check, &OracleConfig::default(), None)?.is_zero() {
            return Err(Error::UnsupportedAntiderivative(format!(
                "potential candidate {} fails along {}",
                v,
                space.independents()[i]
            )));
        }
    }
    let gamma = v.exp();
    Ok((v, gamma))
}

fn unsupported(e: &Expr, x: &Symbol) -> Error {
    Error::UnsupportedAntiderivative(format!("∫ {} d{}", e, crate::expr::default_symbol(x)))
}

/// `∫ e dx` for polynomials in `x`, `exp` of linear arguments, `1/(ax+b)`
/// and `(αx+β)/(ax²+c)`.
pub fn integrate(e: &Expr, x: &Symbol) -> Result<Expr> {
    if !e.contains_symbol(x) {
        return Ok(e * &Expr::sym(x.clone()));
    }
    let (num, den) = e.split();
    if !den.contains_symbol(x) {
        let inv = den.recip()?;
        let mut acc = Expr::zero();
        for (m, c) in num.numerator().terms() {
            let term = Expr::from_poly(Poly::monomial(m.clone(), c.clone()));
            acc = &acc + &integrate_term(&term, x)?;
        }
        return Ok(&acc * &inv);
    }
    let xa = crate::expr::Atom::new(AtomKind::Sym(x.clone()));
    if den.atoms().iter().any(|a| a != &xa && Expr::from_atom(a.clone()).contains_symbol(x))
        || num.atoms().iter().any(|a| a != &xa && Expr::from_atom(a.clone()).contains_symbol(x))
    {
        return Err(unsupported(e, x));
    }
    let dc: Vec<Expr> = den.numerator().coefficients(&xa).into_iter().map(Expr::from_poly).collect();
    let nc: Vec<Expr> = num.numerator().coefficients(&xa).into_iter().map(Expr::from_poly).collect();
    let xe = Expr::sym(x.clone());
    match (dc.len(), nc.len()) {
        // β/(ax + b)
        (2, 1) => Ok(&nc[0].try_div(&dc[1])? * &den.log()),
        // (αx + β)/(ax² + c)
        (3, 1 | 2) if dc[1].is_zero() => {
            let a = &dc[2];
            let c = &dc[0];
            let alpha = nc.get(1).cloned().unwrap_or_else(Expr::zero);
            let beta = &nc[0];
            let mut out = &alpha.try_div(&(a * &Expr::int(2)))? * &den.log();
            if !beta.is_zero() {
                let s = exact_sqrt(&c.try_div(a)?);
                // d/dx[−arctan(s/x)/s] = 1/(x² + s²)
                let at = s.try_div(&xe)?.atan();
                out = &out - &(&beta.try_div(&(a * &s))? * &at);
            }
            Ok(out)
        }
        _ => Err(unsupported(e, x)),
    }
}

fn integrate_term(term: &Expr, x: &Symbol) -> Result<Expr> {
    let xa = crate::expr::Atom::new(AtomKind::Sym(x.clone()));
    let (m, c) = term.numerator().terms()[0].clone();
    let k = m.degree(&xa);
    let rest = m.without(&xa);
    let mut exp_arg = None;
    for a in rest.atoms() {
        if Expr::from_atom(a.clone()).contains_symbol(x) {
            match a.kind() {
                AtomKind::Func(Func::Exp, arg) if exp_arg.is_none() && rest.degree(a) == 1 => {
                    exp_arg = Some(arg.clone())
                }
                _ => return Err(unsupported(term, x)),
            }
        }
    }
    let coef = Expr::from_poly(Poly::monomial(rest, c));
    match exp_arg {
        None => Ok(&coef * &Expr::sym(x.clone()).powi(k as i64 + 1)?.try_div(&Expr::int(k as i64 + 1))?),
        Some(arg) if k == 0 => {
            let slope = arg.diff(x);
            if slope.contains_symbol(x) || slope.is_zero() {
                return Err(unsupported(term, x));
            }
            coef.try_div(&slope)
        }
        Some(_) => Err(unsupported(term, x)),
    }
}

/// Square root, exact when the argument is a rational multiple of a
/// perfect-square monomial.
fn exact_sqrt(e: &Expr) -> Expr {
    let (n, d) = (e.numerator(), e.denominator());
    if n.len() == 1 && d.len() == 1 {
        let (nm, nc) = &n.terms()[0];
        let (dm, dc) = &d.terms()[0];
        let half = |m: &crate::expr::Mono| -> Option<crate::expr::Mono> {
            m.0.iter()
                .map(|(a, k)| (k % 2 == 0).then(|| (a.clone(), k / 2)))
                .collect::<Option<Vec<_>>>()
                .map(crate::expr::Mono)
        };
        if let (Some(hn), Some(hd)) = (half(nm), half(dm)) {
            let coef = Expr::rational(nc / dc).sqrt();
            if coef.as_rational().is_some() {
                let top = Expr::from_poly(Poly::monomial(hn, num_traits::One::one()));
                let bottom = Expr::from_poly(Poly::monomial(hd, num_traits::One::one()));
                if let Ok(q) = top.try_div(&bottom) {
                    return &coef * &q;
                }
            }
        }
    }
    e.sqrt()
}
