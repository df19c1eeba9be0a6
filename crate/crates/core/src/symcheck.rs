//! Symmetry verdicts: standard, μ-, strong μ-, conditional, partial and
//! nonlocal exponential symmetries; invariant functions; solution checks.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{is_zero_with, Expr, Symbol, Witness, ZeroVerdict};
use crate::jet::{JetSpace, PdeSystem};
use crate::muform::{check_compatibility, gauge_act_characteristic, GaugeMap, HorizontalForm, Residual, Scope};
use crate::oracle::OracleConfig;
use crate::vfield::{prolong_mu, prolong_standard, Characteristic, ProlongedField, VectorField};

/// The property a verdict is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Standard,
    Mu,
    StrongMu,
    GaugeEquivalent,
    Conditional,
    Partial,
    Nonlocal,
    Invariant,
    Solution,
    Compatibility,
    GaugeFactor,
    Reduction,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Standard => "standard-symmetry",
            CheckKind::Mu => "mu-symmetry",
            CheckKind::StrongMu => "strong-mu-symmetry",
            CheckKind::GaugeEquivalent => "gauge-equivalent-symmetry",
            CheckKind::Conditional => "conditional-symmetry",
            CheckKind::Partial => "partial-symmetry",
            CheckKind::Nonlocal => "nonlocal-exponential-symmetry",
            CheckKind::Invariant => "invariant-function",
            CheckKind::Solution => "solution",
            CheckKind::Compatibility => "compatibility",
            CheckKind::GaugeFactor => "gauge-factor",
            CheckKind::Reduction => "reduction",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Every residual symbolically zero.
    Verified,
    /// Every residual zero, some only numerically.
    VerifiedNumeric,
    Refuted,
}

impl Outcome {
    pub fn from_verdicts<'a>(verdicts: impl IntoIterator<Item = &'a ZeroVerdict>) -> Outcome {
        let mut out = Outcome::Verified;
        for v in verdicts {
            match v {
                ZeroVerdict::NonZero { .. } => return Outcome::Refuted,
                ZeroVerdict::NumericZero { .. } => out = Outcome::VerifiedNumeric,
                ZeroVerdict::ProvedZero => {}
            }
        }
        out
    }

    pub fn holds(self) -> bool {
        self != Outcome::Refuted
    }

    /// Weaker of two outcomes.
    pub fn and(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Refuted, _) | (_, Refuted) => Refuted,
            (VerifiedNumeric, _) | (_, VerifiedNumeric) => VerifiedNumeric,
            _ => Verified,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Verified => "Verified",
            Outcome::VerifiedNumeric => "VerifiedNumeric",
            Outcome::Refuted => "Refuted",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SymmetryVerdict {
    pub kind: CheckKind,
    pub outcome: Outcome,
    pub residuals: Vec<Residual>,
    /// Compatibility scope of μ, when one was involved.
    pub compatibility: Option<Scope>,
    /// `Δ^(0), Δ^(1), …` for partial analyses (zero components dropped).
    pub chain: Vec<Vec<Expr>>,
    /// Order `ℓ` of a partial symmetry.
    pub order: Option<usize>,
    pub notes: Vec<String>,
}

impl SymmetryVerdict {
    fn new(kind: CheckKind, residuals: Vec<Residual>) -> Self {
        SymmetryVerdict {
            kind,
            outcome: Outcome::from_verdicts(residuals.iter().map(|r| &r.verdict)),
            residuals,
            compatibility: None,
            chain: Vec::new(),
            order: None,
            notes: Vec::new(),
        }
    }

    pub fn witnesses(&self) -> Vec<&Witness> {
        self.residuals.iter().filter_map(|r| r.verdict.witness()).collect()
    }

    fn note(&mut self, s: impl Into<String>) {
        let s = s.into();
        if !self.notes.contains(&s) {
            self.notes.push(s);
        }
    }
}

fn label(prefix: &str, alpha: usize, n: usize) -> String {
    if n == 1 {
        prefix.to_string()
    } else {
        format!("{}[{}]", prefix, alpha + 1)
    }
}

/// Restricts `Y(Δ_α)` to `S_Δ` (or not, for strong checks) and zero-tests it.
fn tangency_residuals(y: &ProlongedField, sys: &PdeSystem, restrict: bool, cfg: &OracleConfig) -> Result<Vec<Residual>> {
    let n = sys.equations().len();
    let mut out = Vec::with_capacity(n);
    for (alpha, eq) in sys.equations().iter().enumerate() {
        let expr = y.apply(&eq.expr);
        let restricted = if restrict { Some(sys.restrict(&expr)?) } else { None };
        let verdict = is_zero_with(restricted.as_ref().unwrap_or(&expr), cfg, None)?;
        let prefix = if restrict { "Y(Δ)|S" } else { "Y(Δ)" };
        out.push(Residual {
            label: label(prefix, alpha, n),
            expr,
            restricted,
            verdict,
        });
    }
    Ok(out)
}

fn check_field(x: &VectorField, space: &JetSpace) -> Result<()> {
    if x.xi.len() != space.p() || x.phi.len() != space.q() {
        return Err(Error::DimensionMismatch("vector field does not match the system".into()));
    }
    Ok(())
}

/// `Y(Δ_α)|_{S_Δ} = 0` for the standard prolongation.
pub fn check_standard_symmetry(x: &VectorField, sys: &PdeSystem, cfg: &OracleConfig) -> Result<SymmetryVerdict> {
    let space = sys.space();
    check_field(x, space)?;
    let y = prolong_standard(space, x, sys.order().max(1))?;
    Ok(SymmetryVerdict::new(CheckKind::Standard, tangency_residuals(&y, sys, true, cfg)?))
}

/// μ-symmetry (restricted) or strong μ-symmetry (unrestricted). Fails with
/// `IncompatibleMu` unless μ is compatible at least on `S_Δ`.
pub fn check_mu_symmetry(
    x: &VectorField,
    mu: &HorizontalForm,
    sys: &PdeSystem,
    strong: bool,
    cfg: &OracleConfig,
) -> Result<SymmetryVerdict> {
    let space = sys.space();
    check_field(x, space)?;
    let compat = check_compatibility(space, mu, Some(sys), cfg)?;
    if compat.scope == Scope::Fails {
        let bad: Vec<String> = compat
            .residuals
            .iter()
            .filter(|r| !r.verdict.is_zero())
            .map(|r| format!("{} = {}", r.label, space.context().print(r.restricted.as_ref().unwrap_or(&r.expr))))
            .collect();
        return Err(Error::IncompatibleMu(bad.join("; ")));
    }
    let y = prolong_mu(space, x, mu, sys.order().max(1))?;
    let kind = if strong { CheckKind::StrongMu } else { CheckKind::Mu };
    let mut v = SymmetryVerdict::new(kind, tangency_residuals(&y, sys, !strong, cfg)?);
    v.compatibility = Some(compat.scope);
    if compat.scope == Scope::OnSolutionManifold {
        v.note("μ is compatible only on the solution manifold");
    }
    Ok(v)
}

/// `X̃ = γ·X` (evolutionary) and its standard-symmetry verdict.
pub fn gauge_equivalent_symmetry(
    x: &VectorField,
    gamma: &GaugeMap,
    sys: &PdeSystem,
    cfg: &OracleConfig,
) -> Result<(Characteristic, SymmetryVerdict)> {
    let space = sys.space();
    check_field(x, space)?;
    let xt = gauge_act_characteristic(gamma, &x.characteristic(space))?;
    let field = VectorField::evolutionary(space, xt.0.clone())?;
    let mut v = check_standard_symmetry(&field, sys, cfg)?;
    v.kind = CheckKind::GaugeEquivalent;
    v.note("X̃ = γ·Q with Q^a = φ^a − u^a_i ξ^i; a gauge factor, not unique");
    Ok((xt, v))
}

/// Augmented system `Δ = 0, Q = 0`. `hints[a]` picks the coordinate each
/// `Q^a` is solved for. The original equations are restricted by the `Q`
/// rules and re-oriented. Returns the system and notes.
pub fn build_conditional_system(
    x: &VectorField,
    sys: &PdeSystem,
    hints: &[Option<Symbol>],
) -> Result<(PdeSystem, Vec<String>)> {
    let space = sys.space();
    check_field(x, space)?;
    let q = x.characteristic(space);
    let ctx = space.context();
    let mut aug = sys.empty_like();
    let mut notes = Vec::new();
    for (a, qa) in q.0.iter().enumerate() {
        if qa.is_zero() {
            notes.push(format!("Q^{} vanishes identically", a + 1));
            continue;
        }
        let added = match hints.get(a).cloned().flatten() {
            Some(target) => aug.add_equation(qa.clone(), &target),
            None => aug.add_auto(qa.clone()),
        };
        added.map_err(|e| Error::Orientation {
            expr: ctx.print(qa),
            target: format!("characteristic Q^{}", a + 1),
            reason: e.to_string(),
        })?;
    }
    for eq in sys.equations() {
        let r = aug.restrict(&eq.expr)?;
        if is_jet_free(space, &r) {
            if r.is_zero() {
                notes.push(format!("{} = 0 holds identically on Q = 0", ctx.print(&eq.expr)));
            } else {
                notes.push(format!(
                    "inconsistent augmented system: {} reduces to {} on Q = 0",
                    ctx.print(&eq.expr),
                    ctx.print(&r)
                ));
            }
            continue;
        }
        if aug.is_constrained(&eq.lead) || aug.add_equation(r.clone(), &eq.lead).is_err() {
            aug.add_auto(r)?;
        }
    }
    Ok((aug, notes))
}

/// Supplied solution `u^a = f^a(x)`, one entry per dependent variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution(pub Vec<Expr>);

/// Substitutes the jet lift of `sol` into `e`.
pub fn jet_lift(space: &JetSpace, sol: &Solution, e: &Expr) -> Result<Expr> {
    if sol.0.len() != space.q() {
        return Err(Error::DimensionMismatch("solution must give every dependent variable".into()));
    }
    if sol.0.iter().any(|f| f.jet_symbols().iter().any(|s| space.jet_parts(s).is_some())) {
        return Err(Error::Invalid("solution expressions must not contain jet coordinates".into()));
    }
    let mut rules = BTreeMap::new();
    for s in e.jet_symbols() {
        if let Some((a, j)) = space.jet_parts(&s) {
            let mut v = sol.0[a].clone();
            for (i, k) in j.counts().iter().enumerate() {
                for _ in 0..*k {
                    v = v.diff(&space.x(i));
                }
            }
            rules.insert(s, v);
        }
    }
    e.subs(&rules)
}

/// Substitutes the solution into each expression.
pub fn verify_solution(space: &JetSpace, sol: &Solution, equations: &[Expr], cfg: &OracleConfig) -> Result<SymmetryVerdict> {
    let ctx = space.context();
    let mut residuals = Vec::new();
    for e in equations {
        let lifted = jet_lift(space, sol, e)?;
        let verdict = is_zero_with(&lifted, cfg, None)?;
        residuals.push(Residual {
            label: format!("[{}]", ctx.print(e)),
            expr: lifted,
            restricted: None,
            verdict,
        });
    }
    Ok(SymmetryVerdict::new(CheckKind::Solution, residuals))
}

/// Invariance criterion on the augmented system, standard and (if `mu`
/// is given) μ-verdicts both computed; optional candidate solution checked
/// against `sys` and `Q`.
pub fn check_conditional_symmetry(
    x: &VectorField,
    sys: &PdeSystem,
    mu: Option<&HorizontalForm>,
    candidate: Option<&Solution>,
    hints: &[Option<Symbol>],
    cfg: &OracleConfig,
) -> Result<SymmetryVerdict> {
    let space = sys.space();
    let (aug, notes) = build_conditional_system(x, sys, hints)?;
    let std = check_standard_symmetry(x, &aug, cfg)?;
    let mut v = match mu {
        Some(mu) => {
            let mut m = check_mu_symmetry(x, mu, &aug, false, cfg)?;
            if m.outcome.holds() != std.outcome.holds() {
                m.note(format!(
                    "standard and μ-verdicts on the augmented system disagree ({} vs {})",
                    std.outcome, m.outcome
                ));
                m.outcome = Outcome::Refuted;
            } else {
                m.note(format!("standard verdict on the augmented system agrees: {}", std.outcome));
            }
            m.outcome = m.outcome.and(std.outcome);
            m
        }
        None => std,
    };
    v.kind = CheckKind::Conditional;
    for n in notes {
        v.note(n);
    }
    if let Some(sol) = candidate {
        let mut exprs: Vec<Expr> = sys.equations().iter().map(|e| e.expr.clone()).collect();
        exprs.extend(x.characteristic(space).0);
        let s = verify_solution(space, sol, &exprs, cfg)?;
        v.outcome = v.outcome.and(s.outcome);
        v.residuals.extend(s.residuals);
        v.note("candidate solution checked against Δ and Q");
    }
    v.note(if v.outcome.holds() {
        "criterion holds; invariant-solution existence not decided"
    } else {
        "criterion fails on the augmented system as oriented; invariant-solution existence not decided"
    });
    Ok(v)
}

/// Iterated chain `Δ^(k+1) = apply(Δ^(k))|_{S_k}`; stops at the first
/// `k ≥ 1` with `Δ^(k) ≡ 0` on `S_{k−1}`. `hints[k−1][c]` orients the
/// `c`-th nonzero component of `Δ^(k)`.
pub fn partial_chain(
    sys: &PdeSystem,
    apply: &dyn Fn(&Expr) -> Expr,
    max_order: usize,
    hints: &[Vec<Option<Symbol>>],
    cfg: &OracleConfig,
) -> Result<SymmetryVerdict> {
    let ctx = sys.space().context();
    let mut s = sys.clone();
    let mut level: Vec<Expr> = sys.equations().iter().map(|e| e.expr.clone()).collect();
    let mut chain = vec![level.clone()];
    let mut last_residuals = Vec::new();
    let mut notes = Vec::new();
    for k in 1..=max_order {
        let mut next = Vec::new();
        let mut residuals = Vec::new();
        for (c, e) in level.iter().enumerate() {
            let raw = apply(e);
            let r = s.restrict(&raw)?;
            let verdict = is_zero_with(&r, cfg, None)?;
            residuals.push(Residual {
                label: format!("Δ^({})[{}]", k, c + 1),
                expr: raw,
                restricted: Some(r.clone()),
                verdict: verdict.clone(),
            });
            if !verdict.is_zero() {
                next.push(r);
            }
        }
        if next.is_empty() {
            let mut v = SymmetryVerdict::new(CheckKind::Partial, residuals);
            v.chain = chain;
            v.order = Some(k);
            if k == 1 {
                v.note("exact symmetry (ℓ = 1)");
            }
            v.notes.extend(notes);
            return Ok(v);
        }
        chain.push(next.clone());
        for (c, e) in next.iter().enumerate() {
            if is_jet_free(s.space(), e) {
                notes.push(format!("Δ^({}) component {} is jet-free: S_{} is empty", k, ctx.print(e), k));
                let mut v = SymmetryVerdict::new(CheckKind::Partial, residuals);
                v.chain = chain;
                v.notes = notes;
                return Ok(v);
            }
            match hints.get(k - 1).and_then(|h| h.get(c)).cloned().flatten() {
                Some(t) => s.add_equation(e.clone(), &t)?,
                None => s.add_auto(e.clone())?,
            }
        }
        level = next;
        last_residuals = residuals;
    }
    let mut v = SymmetryVerdict::new(CheckKind::Partial, last_residuals);
    v.chain = chain;
    v.outcome = Outcome::Refuted;
    v.notes = notes;
    v.note(format!("no order ≤ {}", max_order));
    Ok(v)
}

/// Partial (μ-)symmetry analysis of `X` on `sys`.
pub fn partial_symmetry_analysis(
    x: &VectorField,
    sys: &PdeSystem,
    mu: Option<&HorizontalForm>,
    max_order: usize,
    hints: &[Vec<Option<Symbol>>],
    cfg: &OracleConfig,
) -> Result<SymmetryVerdict> {
    let space = sys.space();
    check_field(x, space)?;
    let n = sys.order().max(1);
    let y = match mu {
        Some(m) => prolong_mu(space, x, m, n)?,
        None => prolong_standard(space, x, n)?,
    };
    let mut v = partial_chain(sys, &|e| y.apply(e), max_order, hints, cfg)?;
    if let (Some(m), Some(_)) = (mu, v.order) {
        let compat = check_compatibility(space, m, Some(sys), cfg)?;
        v.compatibility = Some(compat.scope);
    }
    if v.order == Some(1) {
        v.notes.retain(|s| !s.starts_with("exact"));
        v.note(if mu.is_some() { "exact μ-symmetry (ℓ = 1)" } else { "exact symmetry (ℓ = 1)" });
    }
    Ok(v)
}

/// `Y(ζ)` zero-test.
pub fn check_invariant_function(zeta: &Expr, y: &ProlongedField, cfg: &OracleConfig) -> Result<ZeroVerdict> {
    is_zero_with(&y.apply(zeta), cfg, None)
}

/// `P` closed on `S_Δ` and `X` a μ-symmetry for `μ = P_i dx^i`.
pub fn check_nonlocal_exponential(
    x: &VectorField,
    p: &[Expr],
    sys: &PdeSystem,
    cfg: &OracleConfig,
) -> Result<SymmetryVerdict> {
    let space = sys.space();
    if space.q() != 1 {
        return Err(Error::DimensionMismatch("nonlocal exponential symmetries need q = 1".into()));
    }
    if p.len() != space.p() {
        return Err(Error::DimensionMismatch("P needs one component per independent variable".into()));
    }
    let mut closure = Vec::new();
    for i in 0..space.p() {
        for j in i + 1..space.p() {
            let expr = &space.total_derivative(&p[j], i) - &space.total_derivative(&p[i], j);
            let restricted = sys.restrict(&expr)?;
            let verdict = is_zero_with(&restricted, cfg, None)?;
            closure.push(Residual {
                label: format!("D_{}P_{} − D_{}P_{}", space.independents()[i], space.independents()[j], space.independents()[j], space.independents()[i]),
                expr,
                restricted: Some(restricted),
                verdict,
            });
        }
    }
    if !Outcome::from_verdicts(closure.iter().map(|r| &r.verdict)).holds() {
        let mut v = SymmetryVerdict::new(CheckKind::Nonlocal, closure);
        v.note("P is not closed on the solution manifold");
        return Ok(v);
    }
    let mu = HorizontalForm::scalar(p.to_vec())?;
    let m = check_mu_symmetry(x, &mu, sys, false, cfg)?;
    let mut residuals = closure;
    residuals.extend(m.residuals);
    let mut v = SymmetryVerdict::new(CheckKind::Nonlocal, residuals);
    v.compatibility = m.compatibility;
    v.notes = m.notes;
    if x.characteristic(space).is_trivial() {
        v.note("X has trivial characteristic");
    }
    if p.iter().all(Expr::is_zero) {
        v.note("P = 0: ordinary symmetry check");
    } else {
        v.note("certifies exp(∫P_i dx^i)·X; the integral is not materialized");
    }
    Ok(v)
}

/// Jet-free ratio check: `a = ρ·b` for some `ρ` free of jet coordinates.
pub fn proportional_up_to_base_factor(space: &JetSpace, a: &Expr, b: &Expr) -> Option<Expr> {
    let rho = a.try_div(b).ok()?;
    if rho.is_zero() || rho.jet_symbols().iter().any(|s| space.jet_parts(s).is_some()) {
        return None;
    }
    Some(rho)
}

fn is_jet_free(space: &JetSpace, e: &Expr) -> bool {
    e.jet_symbols().iter().all(|s| space.jet_parts(s).is_none())
}
