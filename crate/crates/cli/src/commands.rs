//! Command dispatch.

use musym::expr::{is_zero_with, Context, Expr};
use musym::muform::{
    check_compatibility, check_gauge_round_trip, darboux_derivative, find_scalar_potential, verify_gauge_factor,
    HorizontalForm, Residual,
};
use musym::oracle::{numeric_zero_check, OracleConfig};
use musym::reduce::{ansatz_characteristic, clear_overall_factor, reduce_with_ansatz, split_by_noninvariant, verify_reduction_consistency};
use musym::symcheck::{
    check_conditional_symmetry, check_invariant_function, check_mu_symmetry, check_nonlocal_exponential,
    check_standard_symmetry, gauge_equivalent_symmetry, partial_symmetry_analysis, verify_solution, Outcome, Solution,
};
use musym::vfield::{prolong_mu, prolong_standard, ProlongedField, VectorField};

use crate::problem::{NamedField, Problem};
use crate::report::{Check, CheckOutcome, Report};
use crate::CliError;

const DEFAULT_MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckStandard,
    CheckMu,
    Compat,
    Gauge,
    Conditional,
    Partial,
    Nonlocal,
    Invariants,
    Reduce,
    VerifySolution,
    Oracle,
}

impl Command {
    pub const ALL: [Command; 11] = [
        Command::CheckStandard,
        Command::CheckMu,
        Command::Compat,
        Command::Gauge,
        Command::Conditional,
        Command::Partial,
        Command::Nonlocal,
        Command::Invariants,
        Command::Reduce,
        Command::VerifySolution,
        Command::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::CheckStandard => "check-standard",
            Command::CheckMu => "check-mu",
            Command::Compat => "compat",
            Command::Gauge => "gauge",
            Command::Conditional => "conditional",
            Command::Partial => "partial",
            Command::Nonlocal => "nonlocal",
            Command::Invariants => "invariants",
            Command::Reduce => "reduce",
            Command::VerifySolution => "verify-solution",
            Command::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::UnknownCommand(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaugeMode {
    /// Darboux derivative, round trip and gauge-equivalent fields.
    #[default]
    Full,
    /// `μ = γ⁻¹Dγ` only.
    Verify,
    /// Scalar potential from `μ`.
    DerivePotential,
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub strong: bool,
    pub gauge: GaugeMode,
    pub max_order: Option<usize>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn needs(cmd: Command, what: &str) -> CliError {
    CliError::Schema(format!("`{}` needs {what}", cmd.name()))
}

fn fields(p: &Problem, cmd: Command) -> Result<&[NamedField], CliError> {
    if p.fields.is_empty() {
        return Err(needs(cmd, "a vector field"));
    }
    Ok(&p.fields)
}

/// Inconclusive sampling becomes a check outcome; other engine errors abort.
fn guarded(kind: &str, subject: &str, r: musym::Result<Check>) -> Result<Check, CliError> {
    match r {
        Ok(c) => Ok(c),
        Err(musym::Error::Inconclusive) => Ok(Check::inconclusive(kind, subject, "no valid sample point within the retry budget")),
        Err(e) => Err(e.into()),
    }
}

fn solution_subject(p: &Problem, k: usize, s: &Solution) -> String {
    let parts: Vec<String> = p
        .sys
        .space()
        .dependents()
        .iter()
        .zip(&s.0)
        .map(|(d, e)| format!("{d} = {}", p.ctx.print(e)))
        .collect();
    format!("solution {}: {}", k + 1, parts.join(", "))
}

fn residual(label: String, expr: Expr, cfg: &OracleConfig) -> musym::Result<Residual> {
    let verdict = is_zero_with(&expr, cfg, None)?;
    Ok(Residual {
        label,
        expr,
        restricted: None,
        verdict,
    })
}

fn from_residuals(kind: &str, ctx: &Context, subject: &str, rs: Vec<Residual>) -> Check {
    let v = musym::symcheck::SymmetryVerdict {
        kind: musym::symcheck::CheckKind::Solution,
        outcome: Outcome::from_verdicts(rs.iter().map(|r| &r.verdict)),
        residuals: rs,
        compatibility: None,
        chain: Vec::new(),
        order: None,
        notes: Vec::new(),
    };
    let mut c = Check::from_verdict(ctx, subject, &v);
    c.kind = kind.to_string();
    c
}

fn prolong(p: &Problem, x: &VectorField, n: u32) -> musym::Result<ProlongedField> {
    let space = p.sys.space();
    match &p.mu {
        Some(mu) => prolong_mu(space, x, mu, n),
        None => prolong_standard(space, x, n),
    }
}

fn note_trivial(c: &mut Check, p: &Problem, x: &VectorField) {
    if x.characteristic(p.sys.space()).is_trivial() {
        c.note("characteristic Q is trivial");
    }
}

fn describe_mu(p: &Problem) -> &'static str {
    if p.mu.is_some() {
        "μ-prolongation"
    } else {
        "standard prolongation"
    }
}

fn derive_form(c: &mut Check, ctx: &Context, p: &Problem, mu: &HorizontalForm, name: &str) {
    let space = p.sys.space();
    for (i, l) in mu.lambdas().iter().enumerate() {
        let x = &space.independents()[i];
        for r in 0..l.dim() {
            for k in 0..l.dim() {
                let label = if l.dim() == 1 {
                    format!("{name}_{x}")
                } else {
                    format!("{name}_{x}[{},{}]", r + 1, k + 1)
                };
                c.derive(ctx, label, l.get(r, k));
            }
        }
    }
}

pub fn run_command(cmd: Command, label: &str, p: &Problem, opts: &Options) -> Result<Report, CliError> {
    let cfg = opts.oracle();
    let mut report = Report::new(cmd.name(), label, p.title.clone(), p.disclosures.clone(), &cfg);
    let checks = &mut report.checks;
    let ctx = &p.ctx;
    let sys = &p.sys;
    let space = sys.space();
    match cmd {
        Command::CheckStandard => {
            for f in fields(p, cmd)? {
                let c = check_standard_symmetry(&f.field, sys, &cfg).map(|v| {
                    let mut c = Check::from_verdict(ctx, &f.name, &v);
                    note_trivial(&mut c, p, &f.field);
                    c
                });
                checks.push(guarded("standard-symmetry", &f.name, c)?);
            }
        }
        Command::CheckMu => {
            let mu = p.mu.as_ref().ok_or_else(|| needs(cmd, "mu"))?;
            for f in fields(p, cmd)? {
                let c = check_mu_symmetry(&f.field, mu, sys, opts.strong, &cfg).map(|v| {
                    let mut c = Check::from_verdict(ctx, &f.name, &v);
                    note_trivial(&mut c, p, &f.field);
                    if v.outcome.holds() && !sys.is_empty() {
                        c.note("criterion holds; invariant-solution existence not decided");
                    }
                    c
                });
                checks.push(guarded("mu-symmetry", &f.name, c)?);
            }
        }
        Command::Compat => {
            let mu = p.mu.as_ref().ok_or_else(|| needs(cmd, "mu"))?;
            let c = check_compatibility(space, mu, Some(sys), &cfg).map(|r| {
                let mut c = Check::from_scope("compatibility", ctx, "μ", &r);
                derive_form(&mut c, ctx, p, mu, "Λ");
                c
            });
            checks.push(guarded("compatibility", "μ", c)?);
        }
        Command::Gauge => gauge(p, opts, &cfg, checks)?,
        Command::Conditional => {
            let candidates: Vec<Option<&Solution>> = if p.solutions.is_empty() {
                vec![None]
            } else {
                p.solutions.iter().map(Some).collect()
            };
            for f in fields(p, cmd)? {
                for (k, cand) in candidates.iter().enumerate() {
                    let subject = match cand {
                        Some(s) => format!("{} with {}", f.name, solution_subject(p, k, s)),
                        None => f.name.clone(),
                    };
                    let c = check_conditional_symmetry(&f.field, sys, p.mu.as_ref(), *cand, &p.conditional_hints, &cfg)
                        .map(|v| Check::from_verdict(ctx, &subject, &v));
                    checks.push(guarded("conditional-symmetry", &subject, c)?);
                }
            }
        }
        Command::Partial => {
            let max = opts.max_order.or(p.max_order).unwrap_or(DEFAULT_MAX_ORDER);
            for f in fields(p, cmd)? {
                let v = match partial_symmetry_analysis(&f.field, sys, p.mu.as_ref(), max, &p.partial_hints, &cfg) {
                    Ok(v) => v,
                    Err(musym::Error::Inconclusive) => {
                        checks.push(Check::inconclusive("partial-symmetry", &f.name, "no valid sample point"));
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let mut c = Check::from_verdict(ctx, &f.name, &v);
                c.note(format!("chain built with the {}", describe_mu(p)));
                checks.push(c);
                let levels: Vec<Expr> = v.chain.iter().flatten().cloned().collect();
                for (k, s) in p.partial_solutions.iter().enumerate() {
                    let subject = format!("{} against Δ^(0..{})", solution_subject(p, k, s), v.chain.len() - 1);
                    let c = verify_solution(space, s, &levels, &cfg).map(|r| Check::from_verdict(ctx, &subject, &r));
                    checks.push(guarded("solution", &subject, c)?);
                }
            }
        }
        Command::Nonlocal => {
            let pp = p.nonlocal.as_ref().ok_or_else(|| needs(cmd, "nonlocal P"))?;
            for f in fields(p, cmd)? {
                let c = check_nonlocal_exponential(&f.field, pp, sys, &cfg).map(|v| Check::from_verdict(ctx, &f.name, &v));
                checks.push(guarded("nonlocal-exponential-symmetry", &f.name, c)?);
            }
        }
        Command::Invariants => {
            if p.invariants.is_empty() {
                return Err(needs(cmd, "invariants"));
            }
            let n = p.invariants.iter().map(|z| space.order_of(z)).max().unwrap_or(1).max(1);
            for f in fields(p, cmd)? {
                let c = prolong(p, &f.field, n).and_then(|y| {
                    let rs = p
                        .invariants
                        .iter()
                        .enumerate()
                        .map(|(k, z)| {
                            let verdict = check_invariant_function(z, &y, &cfg)?;
                            Ok(Residual {
                                label: format!("Y(ζ{})", k + 1),
                                expr: y.apply(z),
                                restricted: None,
                                verdict,
                            })
                        })
                        .collect::<musym::Result<Vec<_>>>()?;
                    let mut c = from_residuals("invariant-function", ctx, &f.name, rs);
                    c.note(format!("Y is the {} of {}", describe_mu(p), f.name));
                    Ok(c)
                });
                checks.push(guarded("invariant-function", &f.name, c)?);
            }
        }
        Command::Reduce => reduce(p, &cfg, checks)?,
        Command::VerifySolution => {
            if p.solutions.is_empty() {
                return Err(needs(cmd, "solutions"));
            }
            let eqs: Vec<Expr> = sys.equations().iter().map(|e| e.expr.clone()).collect();
            for (k, s) in p.solutions.iter().enumerate() {
                let subject = solution_subject(p, k, s);
                let c = verify_solution(space, s, &eqs, &cfg).map(|v| Check::from_verdict(ctx, &subject, &v));
                checks.push(guarded("solution", &subject, c)?);
            }
        }
        Command::Oracle => {
            let n = sys.order().max(1);
            for f in fields(p, cmd)? {
                let c = prolong(p, &f.field, n).and_then(|y| {
                    let rs = sys
                        .equations()
                        .iter()
                        .enumerate()
                        .map(|(a, eq)| {
                            let expr = y.apply(&eq.expr);
                            let verdict = numeric_zero_check(&expr, &cfg, Some(sys))?;
                            Ok(Residual {
                                label: format!("Y(Δ[{}]) on S_Δ", a + 1),
                                expr,
                                restricted: None,
                                verdict,
                            })
                        })
                        .collect::<musym::Result<Vec<_>>>()?;
                    let mut c = from_residuals("numeric-oracle", ctx, &f.name, rs);
                    c.on_manifold = true;
                    c.note(format!(
                        "{} sampled at {} points on S_Δ, tolerance {:e}",
                        describe_mu(p),
                        cfg.trials,
                        cfg.tol
                    ));
                    Ok(c)
                });
                checks.push(guarded("numeric-oracle", &f.name, c)?);
            }
        }
    }
    Ok(report.finish())
}

fn gauge(p: &Problem, opts: &Options, cfg: &OracleConfig, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let cmd = Command::Gauge;
    let ctx = &p.ctx;
    let sys = &p.sys;
    let space = sys.space();
    match opts.gauge {
        GaugeMode::DerivePotential => {
            let mu = p.mu.as_ref().ok_or_else(|| needs(cmd, "mu"))?;
            let (v, gamma) = find_scalar_potential(space, mu)?;
            let c = (0..space.p())
                .map(|i| {
                    let expr = &v.diff(&space.x(i)) - mu.lambda(i).get(0, 0);
                    residual(format!("∂V/∂{} − λ_{}", space.independents()[i], space.independents()[i]), expr, cfg)
                })
                .collect::<musym::Result<Vec<_>>>()
                .map(|rs| {
                    let mut c = from_residuals("potential", ctx, "μ", rs);
                    c.derive(ctx, "V", &v);
                    c.derive(ctx, "γ", &gamma);
                    c
                });
            checks.push(guarded("potential", "μ", c)?);
        }
        GaugeMode::Verify => {
            let gamma = p.gamma.as_ref().ok_or_else(|| needs(cmd, "gamma"))?;
            let mu = p.mu.as_ref().ok_or_else(|| needs(cmd, "mu"))?;
            let c = verify_gauge_factor(space, gamma, mu, Some(sys), cfg).map(|r| Check::from_scope("gauge-factor", ctx, "γ", &r));
            checks.push(guarded("gauge-factor", "γ", c)?);
        }
        GaugeMode::Full => {
            let gamma = p.gamma.as_ref().ok_or_else(|| needs(cmd, "gamma"))?;
            let d = darboux_derivative(space, gamma)?;
            let mut pending = Some(d.clone());
            if let Some(mu) = &p.mu {
                let c = verify_gauge_factor(space, gamma, mu, Some(sys), cfg).map(|r| {
                    let mut c = Check::from_scope("gauge-factor", ctx, "γ", &r);
                    derive_form(&mut c, ctx, p, &d, "γ⁻¹Dγ");
                    c
                });
                checks.push(guarded("gauge-factor", "γ", c)?);
                pending = None;
            }
            let n = sys.order().max(2);
            for f in &p.fields {
                let c = check_gauge_round_trip(space, gamma, &f.field, n, cfg).map(|r| {
                    let mut c = Check::from_scope("gauge-round-trip", ctx, &f.name, &r);
                    if let Some(d) = pending.take() {
                        derive_form(&mut c, ctx, p, &d, "γ⁻¹Dγ");
                    }
                    c.note(format!("γ·pr_μ(X_Q) against pr(X_γQ) up to order {n}, μ = γ⁻¹Dγ"));
                    c
                });
                checks.push(guarded("gauge-round-trip", &f.name, c)?);
                if sys.is_empty() {
                    continue;
                }
                let subject = format!("γ·{}", f.name);
                let c = gauge_equivalent_symmetry(&f.field, gamma, sys, cfg).map(|(xt, v)| {
                    let mut c = Check::from_verdict(ctx, &subject, &v);
                    for (a, e) in xt.0.iter().enumerate() {
                        c.derive(ctx, format!("X̃^{}", space.dependents()[a]), e);
                    }
                    if let Some(expected) = &f.gauged {
                        let neg: Vec<Expr> = expected.iter().map(|e| -e).collect();
                        c.note(if &xt.0 == expected {
                            "X̃ matches the expected characteristic as printed".to_string()
                        } else if xt.0 == neg {
                            "X̃ matches the expected characteristic up to a global sign (Q^a = φ^a − u^a_i ξ^i)".to_string()
                        } else {
                            "X̃ differs from the expected characteristic".to_string()
                        });
                    }
                    c
                });
                checks.push(guarded("gauge-equivalent-symmetry", &subject, c)?);
            }
            if let Some(d) = pending {
                let mut c = Check::new("darboux-derivative", "γ", CheckOutcome::Verified);
                c.strength = crate::report::Strength::Symbolic;
                derive_form(&mut c, ctx, p, &d, "γ⁻¹Dγ");
                checks.push(c);
            }
        }
    }
    Ok(())
}

fn reduce(p: &Problem, cfg: &OracleConfig, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let ap = p.ansatz.as_ref().ok_or_else(|| needs(Command::Reduce, "an ansatz"))?;
    let a = &ap.ansatz;
    let ctx = &ap.ctx;
    let sys = &p.sys;
    let space = sys.space();
    let reduced = reduce_with_ansatz(sys, a)?;
    for (alpha, r) in reduced.iter().enumerate() {
        let subject = format!("Δ[{}]", alpha + 1);
        let (cleared, factor) = clear_overall_factor(r)?;
        let parts = split_by_noninvariant(&cleared, &a.noninvariant)?;
        let mut sum = Expr::zero();
        for (m, comp) in &parts {
            sum = &sum + &(m * comp);
        }
        let rs = vec![
            residual("factor·cleared − reduced".into(), &(&factor * &cleared) - r, cfg)?,
            residual("cleared − Σ s^k·E_k".into(), &cleared - &sum, cfg)?,
        ];
        let mut c = from_residuals("reduction", ctx, &subject, rs);
        c.derive(ctx, "reduced", r);
        c.derive(ctx, "factor", &factor);
        c.derive(ctx, "cleared", &cleared);
        for (m, comp) in &parts {
            c.derive(ctx, format!("E[{}]", ctx.print(m)), comp);
        }
        if r.is_zero() {
            c.note("satisfied identically by the ansatz");
        } else if parts.len() > 1 {
            c.note(format!("depends on the non-invariant variables: {} components must vanish separately", parts.len()));
        }
        checks.push(c);
    }
    for f in &p.fields {
        let qs = ansatz_characteristic(space, &f.field, a)?;
        let rs = qs
            .into_iter()
            .enumerate()
            .map(|(k, q)| residual(format!("Q^{} on the ansatz", space.dependents()[k]), q, cfg))
            .collect::<musym::Result<Vec<_>>>()?;
        checks.push(from_residuals("ansatz-invariance", ctx, &f.name, rs));
    }
    for (k, rules) in ap.solutions.iter().enumerate() {
        let subject = format!("ansatz solution {}", k + 1);
        let c = verify_reduction_consistency(sys, a, rules, cfg).map(|(sol, v)| {
            let mut c = Check::from_verdict(ctx, &subject, &v);
            for (d, e) in space.dependents().iter().zip(&sol.0) {
                c.derive(ctx, d.to_string(), e);
            }
            c
        });
        checks.push(guarded("reduction", &subject, c)?);
    }
    Ok(())
}
