//! End-to-end acceptance suite over the fixture corpus. Prints one PASS/FAIL
//! line per criterion; the test fails on any criterion outside `KNOWN_FAILURES`.

use std::path::PathBuf;

use musym::expr::{is_zero, Context, Expr, ZeroVerdict};
use musym::jet::{JetSpace, PdeSystem, Ranking};
use musym::muform::{
    check_compatibility, check_gauge_round_trip, compatibility_residual, darboux_derivative, find_scalar_potential,
    gauge_act, verify_gauge_factor, GaugeMap, HorizontalForm, Matrix, Residual, Scope,
};
use musym::oracle::{numeric_zero_check, OracleConfig};
use musym::reduce::{clear_overall_factor, reduce_with_ansatz, split_by_noninvariant, verify_reduction_consistency};
use musym::symcheck::{
    build_conditional_system, check_mu_symmetry, check_nonlocal_exponential, check_standard_symmetry,
    gauge_equivalent_symmetry, partial_symmetry_analysis, proportional_up_to_base_factor, verify_solution, Outcome,
};
use musym::vfield::{prolong_mu, prolong_standard, recursion_residual, VectorField};
use musym_cli::{run_file, Command, Options, Problem, ProblemFile};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

/// Criteria expected to print FAIL, with the reason recorded in the ledger.
const KNOWN_FAILURES: &[usize] = &[6];

const CASES: u32 = 64;

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(name: &str) -> Result<Problem, String> {
    let text = std::fs::read_to_string(fixture_path(name)).map_err(|e| format!("{name}: {e}"))?;
    ProblemFile::from_json(&text)
        .and_then(|f| f.validate())
        .map_err(|e| format!("{name}: {e}"))
}

fn cfg() -> OracleConfig {
    OracleConfig::default()
}

fn proved(e: &Expr) -> bool {
    matches!(is_zero(e), Ok(ZeroVerdict::ProvedZero))
}

fn parse(ctx: &Context, s: &str) -> Result<Expr, String> {
    ctx.parse(s).map_err(|e| format!("`{s}`: {e}"))
}

fn same(ctx: &Context, a: &Expr, b: &str) -> Result<bool, String> {
    Ok(proved(&(a - &parse(ctx, b)?)))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gauge_of(p: &Problem) -> Result<&GaugeMap, String> {
    p.gamma.as_ref().ok_or_else(|| "fixture has no gamma".to_string())
}

fn mu_of(p: &Problem) -> Result<&HorizontalForm, String> {
    p.mu.as_ref().ok_or_else(|| "fixture has no mu".to_string())
}

fn criterion_1() -> Check {
    let p = load("ex01_scaling.json")?;
    let space = p.sys.space();
    let mu = darboux_derivative(space, gauge_of(&p)?).map_err(err)?;
    ensure!(same(&p.ctx, mu.lambda(0).get(0, 0), "lambda")?, "Λ_x = {}", p.ctx.print(mu.lambda(0).get(0, 0)));
    ensure!(mu.lambda(1).get(0, 0).is_zero(), "Λ_t is not zero");
    let rep = check_gauge_round_trip(space, gauge_of(&p)?, &p.fields[0].field, 2, &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::Global && rep.proved(), "round trip: {}", rep.scope);
    ensure!(rep.residuals.len() == 6, "expected 6 coefficients up to order 2, got {}", rep.residuals.len());
    Ok(())
}

fn criterion_2() -> Check {
    let p = load("ex02_rotation.json")?;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let compat = check_compatibility(space, mu, None, &cfg()).map_err(err)?;
    ensure!(compat.scope == Scope::Global && compat.proved(), "compatibility: {}", compat.scope);
    let y = prolong_mu(space, &p.fields[0].field, mu, 2).map_err(err)?;
    for (k, z) in p.invariants.iter().enumerate() {
        ensure!(proved(&y.apply(z)), "Y(ζ{}) = {}", k + 1, p.ctx.print(&y.apply(z)));
    }
    let (v, g) = find_scalar_potential(space, mu).map_err(err)?;
    ensure!(same(&p.ctx, &v, "arctan(y/x)")?, "V = {}", p.ctx.print(&v));
    ensure!(same(&p.ctx, &g, "exp(arctan(y/x))")?, "γ = {}", p.ctx.print(&g));
    for i in 0..2 {
        let d = &v.diff(&space.x(i)) - mu.lambda(i).get(0, 0);
        ensure!(proved(&d), "∂V/∂x^{i} − λ_{i} = {}", p.ctx.print(&d));
    }
    Ok(())
}

fn criterion_3() -> Check {
    let p = load("ex03_imaginary.json")?;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    ensure!(p.invariants.len() == 3, "expected three invariants");
    let y = prolong_mu(space, &p.fields[0].field, mu, 2).map_err(err)?;
    for (k, z) in p.invariants.iter().enumerate() {
        ensure!(proved(&y.apply(z)), "Y(ζ{}) = {}", k + 1, p.ctx.print(&y.apply(z)));
    }
    let rep = verify_gauge_factor(space, gauge_of(&p)?, mu, None, &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::Global && rep.proved(), "gauge factor: {}", rep.scope);
    Ok(())
}

fn criterion_4() -> Check {
    let p = load("ex04_kdv.json")?;
    let ctx = &p.ctx;
    let v = partial_symmetry_analysis(&p.fields[0].field, &p.sys, p.mu.as_ref(), 4, &p.partial_hints, &cfg())
        .map_err(err)?;
    ensure!(v.order == Some(2), "order {:?}", v.order);
    ensure!(v.chain.len() == 2 && v.chain[1].len() == 1, "chain shape {:?}", v.chain.len());
    let d1 = &v.chain[1][0];
    ensure!(same(ctx, d1, "-2*u_xxx/(x*t)")?, "Δ^(1) = {}", ctx.print(d1));

    let eqs = [p.sys.equations()[0].expr.clone(), d1.clone()];
    let sol = p.partial_solutions.first().ok_or("no partial solution")?;
    let s = verify_solution(p.sys.space(), sol, &eqs, &cfg()).map_err(err)?;
    ensure!(s.outcome == Outcome::Verified, "(x+c1)/(t+c2): {}", s.outcome);
    ensure!(same(ctx, &sol.0[0], "(x + c1)/(t + c2)")?, "unexpected partial solution");

    let ap = p.ansatz.as_ref().ok_or("no ansatz")?;
    let reduced = reduce_with_ansatz(&p.sys, &ap.ansatz).map_err(err)?;
    let (cleared, factor) = clear_overall_factor(&reduced[0]).map_err(err)?;
    ensure!(!factor.is_zero(), "zero factor");
    ensure!(proved(&(&(&factor * &cleared) - &reduced[0])), "factor·cleared ≠ reduced");
    let target = parse(&ap.ctx, "w'''(z) + t^2*w'(z)*(w(z) - z)")?;
    let ratio = cleared.try_div(&target).map_err(err)?;
    ensure!(ratio.symbols().is_empty() && !ratio.is_zero(), "cleared = {}", ap.ctx.print(&cleared));
    let split = split_by_noninvariant(&cleared, &ap.ansatz.noninvariant).map_err(err)?;
    let mut comps: Vec<Expr> = split.into_iter().map(|(_, c)| c).collect();
    for want in ["w'''(z)", "w'(z)*(w(z) - z)"] {
        let w = parse(&ap.ctx, want)?;
        let pos = comps.iter().position(|c| proved(&(c - &w)));
        ensure!(pos.is_some(), "split lacks {want}");
        comps.remove(pos.unwrap());
    }
    ensure!(comps.is_empty(), "split has extra components");

    let rule = ap.solutions.first().ok_or("no ansatz solution")?;
    let (sol, v) = verify_reduction_consistency(&p.sys, &ap.ansatz, rule, &cfg()).map_err(err)?;
    ensure!(same(ctx, &sol.0[0], "x/t")?, "w = z lifts to {}", ctx.print(&sol.0[0]));
    ensure!(v.outcome == Outcome::Verified, "u = x/t: {}", v.outcome);
    Ok(())
}

fn criterion_5() -> Check {
    let p = load("ex05_boussinesq.json")?;
    let ctx = &p.ctx;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let rep = verify_gauge_factor(space, gauge_of(&p)?, mu, None, &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::Global && rep.proved(), "γ = t^2: {}", rep.scope);

    let v = partial_symmetry_analysis(&p.fields[0].field, &p.sys, Some(mu), 5, &p.partial_hints, &cfg()).map_err(err)?;
    ensure!(v.order == Some(3), "order {:?}", v.order);
    let d1 = &v.chain[1][0];
    let printed1 = parse(ctx, "-10*t - 3*u_x - 2*t*u_xt - 5/3*t^3*u_xx - x*u_xx")?;
    let r1 = proportional_up_to_base_factor(space, d1, &printed1);
    ensure!(r1.is_some(), "Δ^(1) = {}", ctx.print(d1));
    let mut s1 = p.sys.clone();
    let target = parse(ctx, "u_xt")?.as_symbol().cloned().ok_or("u_xt")?;
    s1.add_equation(d1.clone(), &target).map_err(err)?;
    let d2 = &v.chain[2][0];
    let printed2 = s1.restrict(&parse(ctx, "2 + u_xt + t^2*u_xx")?).map_err(err)?;
    let r2 = proportional_up_to_base_factor(space, d2, &printed2).ok_or(format!("Δ^(2) = {}", ctx.print(d2)))?;
    ensure!(!r2.symbols().contains(&space.x(0)), "ρ depends on x: {}", ctx.print(&r2));

    ensure!(p.solutions.len() == 2, "expected both families");
    let eqs = [p.sys.equations()[0].expr.clone(), parse(ctx, "2 + u_xt + t^2*u_xx")?];
    for (k, sol) in p.solutions.iter().enumerate() {
        let s = verify_solution(space, sol, &eqs, &cfg()).map_err(err)?;
        ensure!(s.outcome == Outcome::Verified, "family {}: {}", k + 1, s.outcome);
    }

    let ap = p.ansatz.as_ref().ok_or("no ansatz")?;
    let reduced = reduce_with_ansatz(&p.sys, &ap.ansatz).map_err(err)?;
    let (cleared, _) = clear_overall_factor(&reduced[0]).map_err(err)?;
    let split = split_by_noninvariant(&cleared, &ap.ansatz.noninvariant).map_err(err)?;
    ensure!(split.len() == 2, "split into {} parts", split.len());
    let want = [
        ("1", "w'(z)^2 + w(z)*w''(z) + w''''(z)"),
        ("t", "-2*(3*w'(z) + z*w''(z))"),
    ];
    for (mono, comp) in want {
        let m = parse(&ap.ctx, mono)?;
        let c = parse(&ap.ctx, comp)?;
        let hit = split.iter().any(|(sm, sc)| proved(&(sm - &m)) && proved(&(sc - &c)));
        ensure!(hit, "component of {mono} is not {comp}");
    }
    for rule in &ap.solutions {
        let (sol, v) = verify_reduction_consistency(&p.sys, &ap.ansatz, rule, &cfg()).map_err(err)?;
        ensure!(v.outcome == Outcome::Verified, "{}: {}", ctx.print(&sol.0[0]), v.outcome);
    }
    Ok(())
}

/// Returns the gauge-equivalent verdict so the known failure can be pinned.
fn criterion_6_parts() -> Result<(Check, Option<Vec<Residual>>), String> {
    let p = load("ex06_system.json")?;
    let ctx = &p.ctx;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let d = darboux_derivative(space, gauge_of(&p)?).map_err(err)?;
    for i in 0..2 {
        let diff = d.lambda(i).sub(mu.lambda(i)).map_err(err)?;
        ensure!(diff.entries().iter().all(proved), "Λ_{} differs from the printed matrix", space.independents()[i]);
    }
    let f = &p.fields[0];
    let m = check_mu_symmetry(&f.field, mu, &p.sys, false, &cfg()).map_err(err)?;
    ensure!(m.outcome == Outcome::Verified, "μ-symmetry: {}", m.outcome);
    for sol in &p.solutions {
        let eqs: Vec<Expr> = p.sys.equations().iter().map(|e| e.expr.clone()).collect();
        let s = verify_solution(space, sol, &eqs, &cfg()).map_err(err)?;
        ensure!(s.outcome == Outcome::Verified, "solution: {}", s.outcome);
    }
    let (xt, g) = gauge_equivalent_symmetry(&f.field, gauge_of(&p)?, &p.sys, &cfg()).map_err(err)?;
    let printed = f.gauged.as_ref().ok_or("no printed X̃")?;
    let sign_flipped = xt.0.iter().zip(printed).all(|(a, b)| proved(&(a + b)));
    ensure!(sign_flipped, "X̃ differs from the printed field beyond a global sign");
    let flipped = VectorField::evolutionary(space, printed.clone()).map_err(err)?;
    let s = check_standard_symmetry(&flipped, &p.sys, &cfg()).map_err(err)?;
    ensure!(s.outcome.holds() == g.outcome.holds(), "sign changes the verdict");
    if g.outcome != Outcome::Verified {
        let bad: Vec<String> = g
            .residuals
            .iter()
            .filter(|r| !r.verdict.is_zero())
            .map(|r| ctx.print(r.restricted.as_ref().unwrap_or(&r.expr)))
            .collect();
        let msg = format!("standard symmetry of X̃: {} on S_Δ, residuals {{{}}}", g.outcome, bad.join(", "));
        return Ok((Err(msg), Some(g.residuals)));
    }
    Ok((Ok(()), None))
}

fn criterion_6() -> Check {
    criterion_6_parts()?.0
}

fn criterion_7() -> Check {
    let p = load("ex07_system.json")?;
    let ctx = &p.ctx;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let y = prolong_mu(space, &p.fields[0].field, mu, p.sys.order().max(1)).map_err(err)?;
    let first: Vec<Expr> = p
        .sys
        .equations()
        .iter()
        .map(|e| p.sys.restrict(&y.apply(&e.expr)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    ensure!(first.len() == 2 && proved(&first[0]), "first residual {}", ctx.print(&first[0]));
    let want = parse(ctx, "v_x - v_y")?;
    ensure!(
        proportional_up_to_base_factor(space, &first[1], &want).is_some(),
        "second residual {}",
        ctx.print(&first[1])
    );
    let v = partial_symmetry_analysis(&p.fields[0].field, &p.sys, Some(mu), 3, &p.partial_hints, &cfg()).map_err(err)?;
    ensure!(v.order == Some(2), "order {:?}", v.order);
    let sol = p.solutions.first().ok_or("no solution")?;
    ensure!(same(ctx, &sol.0[0], "y^3/3 + c*x")? && same(ctx, &sol.0[1], "c")?, "unexpected solution");
    let eqs: Vec<Expr> = p.sys.equations().iter().map(|e| e.expr.clone()).collect();
    let s = verify_solution(space, sol, &eqs, &cfg()).map_err(err)?;
    ensure!(s.outcome == Outcome::Verified, "solution: {}", s.outcome);
    Ok(())
}

fn criterion_8() -> Check {
    let p = load("ex08_euler.json")?;
    let ctx = &p.ctx;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let delta = &p.sys.equations()[0].expr;
    let rep = check_compatibility(space, mu, Some(&p.sys), &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::OnSolutionManifold, "compatibility: {}", rep.scope);
    // Pair (t, x): D_tΛ_x − D_xΛ_t.
    let tx = compatibility_residual(space, mu, 1, 0).map_err(err)?;
    ensure!(proved(&(tx.get(0, 0) - delta)), "residual {}", ctx.print(tx.get(0, 0)));
    ensure!(proved(&(&rep.residuals[0].expr + delta)), "reported residual is not −Δ for the pair (x, t)");
    let x = &p.fields[0].field;
    let m = check_mu_symmetry(x, mu, &p.sys, false, &cfg()).map_err(err)?;
    ensure!(m.outcome == Outcome::Verified, "μ-symmetry: {}", m.outcome);
    let n = check_nonlocal_exponential(x, p.nonlocal.as_ref().ok_or("no P")?, &p.sys, &cfg()).map_err(err)?;
    ensure!(n.outcome == Outcome::Verified, "nonlocal: {}", n.outcome);
    Ok(())
}

fn criterion_9() -> Check {
    let p = load("ex09_cdis.json")?;
    let space = p.sys.space();
    let mu = mu_of(&p)?;
    let rep = check_compatibility(space, mu, Some(&p.sys), &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::OnSolutionManifold, "compatibility: {}", rep.scope);
    ensure!(p.fields.len() == 2, "expected X1 and X2");
    for f in &p.fields {
        let m = check_mu_symmetry(&f.field, mu, &p.sys, false, &cfg()).map_err(err)?;
        ensure!(m.outcome == Outcome::Verified, "{}: {}", f.name, m.outcome);
        ensure!(f.field.characteristic(space).is_trivial(), "{}: characteristic not trivial", f.name);
        let y = prolong_mu(space, &f.field, mu, p.sys.order()).map_err(err)?;
        for eq in p.sys.equations() {
            let v = numeric_zero_check(&y.apply(&eq.expr), &cfg(), Some(&p.sys)).map_err(err)?;
            match v {
                ZeroVerdict::NumericZero { trials: 20, max_abs } => {
                    ensure!(max_abs <= 1e-9, "{}: max |Y(Δ)| = {max_abs:e}", f.name)
                }
                other => return Err(format!("{}: oracle gave {other}", f.name)),
            }
        }
    }
    Ok(())
}

fn criterion_10() -> Check {
    let p = load("ex10_burgers.json")?;
    let mu = mu_of(&p)?;
    let rep = check_compatibility(p.sys.space(), mu, Some(&p.sys), &cfg()).map_err(err)?;
    ensure!(rep.scope == Scope::OnSolutionManifold, "compatibility: {}", rep.scope);
    let m = check_mu_symmetry(&p.fields[0].field, mu, &p.sys, false, &cfg()).map_err(err)?;
    ensure!(m.outcome == Outcome::Verified, "μ-symmetry: {}", m.outcome);
    Ok(())
}

fn criterion_12() -> Check {
    let opts = Options::default();
    let path = fixture_path("no_invariant_solutions.json");
    let path = path.to_str().ok_or("path")?;
    let r = run_file(Command::CheckMu, path, &opts).map_err(err)?;
    let c = r.checks.first().ok_or("no check")?;
    ensure!(c.outcome == musym_cli::CheckOutcome::Verified, "μ-symmetry: {:?}", c.outcome);
    ensure!(
        c.notes.iter().any(|n| n.contains("invariant-solution existence not decided")),
        "check-mu does not flag existence"
    );
    let r = run_file(Command::Conditional, path, &opts).map_err(err)?;
    let c = r.checks.first().ok_or("no check")?;
    ensure!(
        c.notes.iter().any(|n| n.contains("invariant-solution existence not decided")),
        "conditional does not flag existence"
    );
    ensure!(c.notes.iter().any(|n| n.contains("inconsistent")), "augmented system not reported inconsistent");
    Ok(())
}

// ---- property suites ----

fn runner() -> TestRunner {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn suite<S: Strategy>(name: &str, strat: S, f: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Check {
    runner().run(&strat, f).map_err(|e| format!("{name}: {e}"))
}

fn poly(atoms: &'static [&'static str]) -> impl Strategy<Value = String> + Clone {
    let atom = prop::sample::select(atoms);
    prop::collection::vec((atom.clone(), atom, -3i32..4), 1..4).prop_map(|ts| {
        ts.iter()
            .map(|(a, b, k)| format!("({k})*{a}*{b}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

const BASE: &[&str] = &["1", "x", "t", "u", "x^2", "t*u"];
const JET: &[&str] = &["x", "t", "u", "u_x", "u_t", "exp(x)", "u_xt", "sin(t)"];

fn frame(ind: &[&str], dep: &[&str]) -> (JetSpace, Context) {
    let s = JetSpace::new(ind, dep, 4).expect("space");
    let c = s.context();
    (s, c)
}

fn tc<E: std::fmt::Display>(e: E) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

fn p_expr(c: &Context, s: &str) -> Result<Expr, TestCaseError> {
    c.parse(s).map_err(tc)
}

fn suite_a() -> Check {
    suite("D_iD_j commutation", poly(JET), |f| {
        let (s, c) = frame(&["x", "t"], &["u"]);
        let e = p_expr(&c, &f)?;
        let d = &s.total_derivative(&s.total_derivative(&e, 0), 1) - &s.total_derivative(&s.total_derivative(&e, 1), 0);
        prop_assert!(proved(&d), "{}", c.print(&d));
        Ok(())
    })
}

fn suite_b() -> Check {
    suite("μ = 0 degeneration", (poly(BASE), poly(BASE), poly(BASE)), |(a, b, f)| {
        let (s, c) = frame(&["x", "t"], &["u"]);
        let x = VectorField::new(&s, vec![p_expr(&c, &a)?, p_expr(&c, &b)?], vec![p_expr(&c, &f)?]).map_err(tc)?;
        let std = prolong_standard(&s, &x, 2).map_err(tc)?;
        let mu = prolong_mu(&s, &x, &HorizontalForm::zero(2, 1), 2).map_err(tc)?;
        prop_assert_eq!(std.table(), mu.table());
        Ok(())
    })
}

fn suite_c() -> Check {
    suite("F-coefficient recursion", (poly(BASE), poly(BASE), poly(BASE), poly(BASE)), |(l0, l1, xi, f)| {
        let (s, c) = frame(&["x", "t"], &["u"]);
        let mu = HorizontalForm::scalar(vec![p_expr(&c, &l0)?, p_expr(&c, &l1)?]).map_err(tc)?;
        let x = VectorField::new(&s, vec![p_expr(&c, &xi)?, Expr::zero()], vec![p_expr(&c, &f)?]).map_err(tc)?;
        for (k, r) in recursion_residual(&s, &x, &mu, 2).map_err(tc)? {
            prop_assert!(proved(&r), "{:?}: {}", k, c.print(&r));
        }
        Ok(())
    })
}

fn suite_d() -> Check {
    let scalar = suite("round trip, scalar γ", (poly(BASE), poly(BASE), poly(BASE)), |(g, xi, f)| {
        let (s, c) = frame(&["x", "t"], &["u"]);
        let gamma = GaugeMap::scalar(p_expr(&c, &format!("exp({g})"))?).map_err(tc)?;
        let x = VectorField::new(&s, vec![p_expr(&c, &xi)?, Expr::zero()], vec![p_expr(&c, &f)?]).map_err(tc)?;
        let rep = check_gauge_round_trip(&s, &gamma, &x, 2, &cfg()).map_err(tc)?;
        prop_assert!(rep.scope == Scope::Global && rep.proved());
        Ok(())
    });
    let unipotent = suite("round trip, unipotent γ", (poly(BASE), poly(BASE), poly(BASE)), |(g, xi, f)| {
        let (s, c) = frame(&["x", "t"], &["u", "v"]);
        let m = Matrix::from_rows(vec![
            vec![Expr::one(), p_expr(&c, &g)?],
            vec![Expr::zero(), Expr::one()],
        ])
        .map_err(tc)?;
        let gamma = GaugeMap::new(m).map_err(tc)?;
        let x = VectorField::new(&s, vec![p_expr(&c, &xi)?, Expr::zero()], vec![p_expr(&c, &f)?, p_expr(&c, "u*v")?])
            .map_err(tc)?;
        let rep = check_gauge_round_trip(&s, &gamma, &x, 2, &cfg()).map_err(tc)?;
        prop_assert!(rep.scope == Scope::Global && rep.proved());
        Ok(())
    });
    scalar.and(unipotent)
}

fn two_by_two(c: &Context, rows: [[&str; 2]; 2]) -> Result<Matrix, TestCaseError> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(|e| p_expr(c, e)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Matrix::from_rows(rows).map_err(tc)
}

fn suite_e() -> Check {
    suite("Darboux output is compatible", (poly(BASE), poly(BASE), poly(BASE)), |(a, b, d)| {
        let (s, c) = frame(&["x", "t"], &["u", "v"]);
        let eb = format!("exp({b})");
        let g = GaugeMap::new(two_by_two(&c, [[&eb, &a], [&d, "1"]])?);
        // Singular draws are rejected rather than counted.
        let g = match g {
            Ok(g) => g,
            Err(_) => return Err(TestCaseError::reject("singular γ")),
        };
        let mu = darboux_derivative(&s, &g).map_err(tc)?;
        let rep = check_compatibility(&s, &mu, None, &cfg()).map_err(tc)?;
        prop_assert!(rep.scope == Scope::Global && rep.proved(), "{}", rep.scope);
        Ok(())
    })
}

fn suite_f() -> Check {
    suite("gauge action group law", (poly(BASE), poly(BASE), poly(JET)), |(a, b, f)| {
        let (s, c) = frame(&["x", "t"], &["u", "v"]);
        let eb = format!("exp({b})");
        let g1 = GaugeMap::new(two_by_two(&c, [["1", &a], ["0", "1"]])?).map_err(tc)?;
        let g2 = GaugeMap::new(two_by_two(&c, [[&eb, "0"], ["x", "1"]])?).map_err(tc)?;
        let x = VectorField::evolutionary(&s, vec![p_expr(&c, &f)?, p_expr(&c, "v_x")?]).map_err(tc)?;
        let y = prolong_standard(&s, &x, 2).map_err(tc)?;
        let both = gauge_act(&g1.compose(&g2).map_err(tc)?, &y).map_err(tc)?;
        let nested = gauge_act(&g1, &gauge_act(&g2, &y).map_err(tc)?).map_err(tc)?;
        for ((a, j), v) in both.table() {
            prop_assert!(proved(&(&v - &nested.coefficient(a, &j))), "({}, {})", a, j);
        }
        let back = gauge_act(&g1.inverted(), &gauge_act(&g1, &y).map_err(tc)?).map_err(tc)?;
        for ((a, j), v) in back.table() {
            prop_assert!(proved(&(&v - &y.coefficient(a, &j))), "({}, {})", a, j);
        }
        Ok(())
    })
}

const SCALAR_CORPUS: &[&str] = &["ex04_kdv.json", "ex08_euler.json", "ex09_cdis.json", "no_invariant_solutions.json"];
const SYSTEM_CORPUS: &[&str] = &["ex06_system.json", "ex07_system.json", "ex10_burgers.json"];

/// A compatible μ from a random gauge: scalar `D(f)` or the Darboux
/// derivative of a unipotent matrix.
fn random_mu(p: &Problem, f: &str) -> Result<HorizontalForm, TestCaseError> {
    let space = p.sys.space();
    let e = p_expr(&p.ctx, f)?;
    if space.q() == 1 {
        let l = (0..space.p()).map(|i| space.total_derivative(&e, i)).collect();
        HorizontalForm::scalar(l).map_err(tc)
    } else {
        let m = Matrix::from_rows(vec![vec![Expr::one(), e], vec![Expr::zero(), Expr::one()]]).map_err(tc)?;
        darboux_derivative(space, &GaugeMap::new(m).map_err(tc)?).map_err(tc)
    }
}

fn suite_g(corpus: &[Problem]) -> Check {
    let gauge_src = poly(&["1", "x", "x^2", "x*y", "y", "t", "x*t"]);
    suite("conditional verdict agreement", (0..corpus.len(), gauge_src), |(k, g)| {
        let p = &corpus[k];
        // Constants and base variables absent from this fixture are dropped.
        let g: String = g
            .split(" + ")
            .filter(|t| p.ctx.parse(t).is_ok())
            .collect::<Vec<_>>()
            .join(" + ");
        let g = if g.is_empty() { "x".to_string() } else { g };
        let mu = random_mu(p, &g)?;
        for f in &p.fields {
            let (aug, _) = build_conditional_system(&f.field, &p.sys, &p.conditional_hints).map_err(tc)?;
            let std = check_standard_symmetry(&f.field, &aug, &cfg()).map_err(tc)?;
            let m = check_mu_symmetry(&f.field, &mu, &aug, false, &cfg());
            let m = match m {
                Ok(m) => m,
                Err(musym::Error::Inconclusive) => return Err(TestCaseError::reject("inconclusive")),
                Err(e) => return Err(tc(e)),
            };
            prop_assert_eq!(std.outcome.holds(), m.outcome.holds(), "{}: {}", f.name, g);
        }
        Ok(())
    })
}

fn residual_of(e: Expr) -> Residual {
    let verdict = is_zero(&e).unwrap_or(ZeroVerdict::ProvedZero);
    Residual {
        label: String::new(),
        expr: e,
        restricted: None,
        verdict,
    }
}

/// Every symbolic zero from the corpus checks, with the system it lives on.
fn corpus_identities() -> Result<Vec<(Expr, Option<PdeSystem>)>, String> {
    let mut out = Vec::new();
    let mut keep = |rs: &[Residual], sys: &PdeSystem| {
        for r in rs {
            if r.verdict == ZeroVerdict::ProvedZero {
                out.push((r.expr.clone(), r.restricted.as_ref().map(|_| sys.clone())));
            }
        }
    };
    let p = load("ex01_scaling.json")?;
    let rep = check_gauge_round_trip(p.sys.space(), gauge_of(&p)?, &p.fields[0].field, 2, &cfg()).map_err(err)?;
    keep(&rep.residuals, &p.sys);
    for name in ["ex02_rotation.json", "ex03_imaginary.json"] {
        let p = load(name)?;
        let space = p.sys.space();
        let rep = verify_gauge_factor(space, gauge_of(&p)?, mu_of(&p)?, None, &cfg()).map_err(err)?;
        keep(&rep.residuals, &p.sys);
        let y = prolong_mu(space, &p.fields[0].field, mu_of(&p)?, 2).map_err(err)?;
        for z in &p.invariants {
            keep(&[residual_of(y.apply(z))], &p.sys);
        }
    }
    for name in ["ex02_rotation.json", "ex06_system.json", "ex07_system.json"] {
        let p = load(name)?;
        let rep = check_gauge_round_trip(p.sys.space(), gauge_of(&p)?, &p.fields[0].field, 2, &cfg()).map_err(err)?;
        keep(&rep.residuals, &p.sys);
    }
    for name in ["ex08_euler.json", "ex09_cdis.json"] {
        let p = load(name)?;
        for f in &p.fields {
            let v = check_nonlocal_exponential(&f.field, p.nonlocal.as_ref().ok_or("no P")?, &p.sys, &cfg()).map_err(err)?;
            keep(&v.residuals, &p.sys);
        }
    }
    for name in SCALAR_CORPUS.iter().chain(SYSTEM_CORPUS).chain(&["ex05_boussinesq.json"]) {
        let p = load(name)?;
        let mu = mu_of(&p)?;
        let rep = check_compatibility(p.sys.space(), mu, Some(&p.sys), &cfg()).map_err(err)?;
        keep(&rep.residuals, &p.sys);
        for f in &p.fields {
            let v = check_mu_symmetry(&f.field, mu, &p.sys, false, &cfg()).map_err(err)?;
            keep(&v.residuals, &p.sys);
        }
        let eqs: Vec<Expr> = p.sys.equations().iter().map(|e| e.expr.clone()).collect();
        for sol in &p.solutions {
            let v = verify_solution(p.sys.space(), sol, &eqs, &cfg()).map_err(err)?;
            keep(&v.residuals, &p.sys);
        }
    }
    Ok(out)
}

fn suite_h() -> Check {
    let ids = corpus_identities()?;
    ensure!(ids.len() >= CASES as usize, "only {} corpus identities", ids.len());
    for (e, sys) in &ids {
        match numeric_zero_check(e, &cfg(), sys.as_ref()) {
            Ok(ZeroVerdict::NumericZero { .. }) => {}
            other => return Err(format!("corpus identity {e}: {other:?}")),
        }
    }
    let templates = ["exp(A)*exp(B) - exp(A + B)", "(A + B)^2 - A^2 - 2*A*B - B^2", "(A*B)^3 - A^3*B^3", "A/B*B - A"];
    suite("identities sample to zero", (poly(JET), poly(JET), 0..templates.len()), |(a, b, k)| {
        let (s, c) = frame(&["x", "t"], &["u"]);
        let text = templates[k].replace('A', &format!("({a})")).replace('B', &format!("({b})"));
        // Division by a zero draw is refused by the parser.
        let Ok(e) = c.parse(&text) else {
            return Err(TestCaseError::reject("zero denominator"));
        };
        if !proved(&e) {
            return Err(TestCaseError::reject("not a symbolic zero"));
        }
        let d = &s.total_derivative(&e, 0);
        for z in [&e, d] {
            match numeric_zero_check(z, &cfg(), None) {
                Ok(ZeroVerdict::NumericZero { .. }) => {}
                Err(musym::Error::Inconclusive) => return Err(TestCaseError::reject("singular")),
                other => return Err(TestCaseError::fail(format!("{}: {other:?}", c.print(z)))),
            }
        }
        Ok(())
    })
}

fn criterion_11() -> Check {
    let mut corpus = Vec::new();
    for name in SCALAR_CORPUS.iter().chain(SYSTEM_CORPUS) {
        corpus.push(load(name)?);
    }
    let suites: [(&str, Check); 8] = [
        ("a", suite_a()),
        ("b", suite_b()),
        ("c", suite_c()),
        ("d", suite_d()),
        ("e", suite_e()),
        ("f", suite_f()),
        ("g", suite_g(&corpus)),
        ("h", suite_h()),
    ];
    let failed: Vec<String> = suites
        .into_iter()
        .filter_map(|(k, r)| r.err().map(|e| format!("({k}) {e}")))
        .collect();
    ensure!(failed.is_empty(), "{}", failed.join("; "));
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(usize, &str, fn() -> Check); 12] = [
        (1, "scaling field: Darboux derivative and gauge round trip", criterion_1),
        (2, "rotation field: compatibility, invariants, potential", criterion_2),
        (3, "imaginary gauge: invariants and branch gauge factor", criterion_3),
        (4, "KdV partial symmetry, solutions and reduction", criterion_4),
        (5, "Boussinesq gauge, chain, families and reduction", criterion_5),
        (6, "matrix gauge on a 2-component system", criterion_6),
        (7, "partial matrix μ-symmetry chain and solution", criterion_7),
        (8, "Euler: compatibility on S_Δ, μ- and nonlocal symmetry", criterion_8),
        (9, "CDIS: compatibility, trivial μ-symmetries, oracle", criterion_9),
        (10, "Burgers with appended heat equation", criterion_10),
        (11, "property suites", criterion_11),
        (12, "μ-symmetry without decided invariant solutions", criterion_12),
    ];
    let mut unexpected = Vec::new();
    for (n, what, f) in criteria {
        let r = f();
        match &r {
            Ok(()) => println!("PASS {n:>2} {what}"),
            Err(e) => println!("FAIL {n:>2} {what}: {e}"),
        }
        if r.is_ok() == KNOWN_FAILURES.contains(&n) {
            unexpected.push(n);
        }
    }
    assert!(unexpected.is_empty(), "criteria with unexpected status: {unexpected:?}");
}

/// Pins the residuals behind the known gauge-equivalent failure.
#[test]
fn gauge_equivalent_field_residual_is_pinned() {
    let (check, residuals) = criterion_6_parts().expect("the other gauge checks hold");
    assert!(check.is_err());
    let p = load("ex06_system.json").unwrap();
    let bad: Vec<Expr> = residuals
        .unwrap()
        .into_iter()
        .filter(|r| !r.verdict.is_zero())
        .map(|r| r.restricted.unwrap_or(r.expr))
        .collect();
    let want = ["-x^2*y*v_xy", "-x^3*y*v_xx + x^2*y^2*v_xy - x^2*y*v_x"];
    assert_eq!(bad.len(), want.len());
    for (b, w) in bad.iter().zip(want) {
        assert!(same(&p.ctx, b, w).unwrap(), "{}", p.ctx.print(b));
    }
}

#[test]
fn partial_orders_do_not_depend_on_the_ranking() {
    for (name, order) in [("ex04_kdv.json", 2), ("ex05_boussinesq.json", 3), ("ex07_system.json", 2)] {
        let p = load(name).unwrap();
        assert_eq!(p.sys.ranking(), &Ranking::Graded);
        let mut lex = PdeSystem::new(p.sys.space().clone(), Ranking::Lex(vec![1, 0])).unwrap();
        for eq in p.sys.equations() {
            lex.add_equation(eq.expr.clone(), &eq.lead).unwrap();
        }
        let v = partial_symmetry_analysis(&p.fields[0].field, &lex, p.mu.as_ref(), 5, &[], &cfg()).unwrap();
        assert_eq!(v.order, Some(order), "{name}");
    }
}
