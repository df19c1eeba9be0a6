use super::*;
use crate::expr::{is_zero, Context};
use crate::muform::{HorizontalForm, Matrix};
use proptest::prelude::*;

fn xt() -> (JetSpace, Context) {
    let s = JetSpace::new(&["x", "t"], &["u"], 3).unwrap();
    let c = s.context().with_constants(&["λ"]);
    (s, c)
}

fn xy2() -> (JetSpace, Context) {
    let s = JetSpace::new(&["x", "y"], &["u", "v"], 2).unwrap();
    let c = s.context();
    (s, c)
}

fn field(s: &JetSpace, c: &Context, xi: &[&str], phi: &[&str]) -> VectorField {
    let p = |v: &[&str]| v.iter().map(|e| c.parse(e).unwrap()).collect();
    VectorField::new(s, p(xi), p(phi)).unwrap()
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

#[test]
fn characteristic_formula() {
    let (s, c) = xy2();
    let x = field(&s, &c, &["x", "0"], &["0", "0"]);
    assert_eq!(x.characteristic(&s).0, vec![c.parse("-x*u_x").unwrap(), c.parse("-x*v_x").unwrap()]);
    let (s1, c1) = xt();
    let x1 = field(&s1, &c1, &["1", "0"], &["u_x"]);
    assert!(x1.characteristic(&s1).is_trivial());
    let ev = field(&s1, &c1, &["0", "0"], &["u^2"]);
    assert_eq!(ev.characteristic(&s1).0[0], c1.parse("u^2").unwrap());
}

#[test]
fn dimension_mismatch() {
    let (s, c) = xt();
    assert!(VectorField::new(&s, vec![Expr::one()], vec![Expr::one()]).is_err());
    let x = field(&s, &c, &["0", "0"], &["u"]);
    let mu = HorizontalForm::scalar(vec![Expr::one()]).unwrap();
    assert!(matches!(prolong_mu(&s, &x, &mu, 2), Err(Error::DimensionMismatch(_))));
    assert!(prolong_standard(&s, &x, 0).is_err());
}

#[test]
fn fiber_translation_has_no_higher_coefficients() {
    let (s, c) = xt();
    let y = prolong_standard(&s, &field(&s, &c, &["0", "0"], &["1"]), 3).unwrap();
    for ((_, j), v) in y.table() {
        assert_eq!(v.is_zero(), j.order() > 0);
    }
}

#[test]
fn scaling_u_gives_jets() {
    let (s, c) = xt();
    let y = prolong_standard(&s, &field(&s, &c, &["0", "0"], &["u"]), 3).unwrap();
    for ((a, j), v) in y.table() {
        assert_eq!(v, s.u_expr(a, j));
    }
}

#[test]
fn space_scaling_coefficients() {
    let (s, c) = xt();
    let y = prolong_standard(&s, &field(&s, &c, &["x", "0"], &["0"]), 2).unwrap();
    assert_eq!(y.coefficient(0, &mi(&[1, 0])), c.parse("-u_x").unwrap());
    assert_eq!(y.coefficient(0, &mi(&[2, 0])), c.parse("-2*u_xx").unwrap());
    assert_eq!(y.coefficient(0, &mi(&[1, 1])), c.parse("-u_xt").unwrap());
    // beyond the table, computed lazily
    assert_eq!(y.coefficient(0, &mi(&[3, 0])), c.parse("-3*u_xxx").unwrap());
}

#[test]
fn one_mu_step() {
    let (s, c) = xt();
    let mu = HorizontalForm::scalar(vec![c.parse("λ").unwrap(), Expr::zero()]).unwrap();
    let y = prolong_mu(&s, &field(&s, &c, &["0", "0"], &["u"]), &mu, 1).unwrap();
    assert_eq!(y.coefficient(0, &mi(&[1, 0])), c.parse("u_x + λ*u").unwrap());
    assert_eq!(y.coefficient(0, &mi(&[0, 1])), c.parse("u_t").unwrap());
    assert!(y.mu().is_some() && !y.is_standard());
}

#[test]
fn apply_to_constant_and_kdv() {
    let (s, c) = xt();
    let y = prolong_standard(&s, &field(&s, &c, &["1", "0"], &["0"]), 3).unwrap();
    assert!(y.apply(&c.parse("λ + 3").unwrap()).is_zero());
    assert!(y.apply(&c.parse("u_t + u_xxx + u*u_x").unwrap()).is_zero());
    let galilei = prolong_standard(&s, &field(&s, &c, &["t", "0"], &["1"]), 3).unwrap();
    assert!(galilei.apply(&c.parse("u_t + u_xxx + u*u_x").unwrap()).is_zero());
}

#[test]
fn rotation_mu_prolongation_invariants() {
    let s = JetSpace::new(&["x", "y"], &["u"], 2).unwrap();
    let c = s.context();
    let mu = HorizontalForm::scalar(vec![c.parse("-y/(x^2+y^2)").unwrap(), c.parse("x/(x^2+y^2)").unwrap()]).unwrap();
    let x = field(&s, &c, &["y", "-x"], &["0"]);
    let y = prolong_mu(&s, &x, &mu, 2).unwrap();
    let z1 = c.parse("exp(arctan(y/x))*(x*u_y - y*u_x)").unwrap();
    let z2 = c
        .parse("exp(2*arctan(y/x))*(y^2*u_xx + x^2*u_yy - 2*x*y*u_xy - x*u_x - y*u_y + x*u_y - y*u_x)")
        .unwrap();
    assert!(y.apply(&z1).is_zero());
    assert!(y.apply(&z2).is_zero());
    let std = prolong_standard(&s, &x, 2).unwrap();
    assert!(std.apply(&c.parse("x^2 + y^2").unwrap()).is_zero());
    assert!(!std.apply(&z1).is_zero());
}

#[test]
fn recursion_for_scaling_field() {
    let (s, c) = xt();
    let mu = HorizontalForm::scalar(vec![c.parse("λ").unwrap(), Expr::zero()]).unwrap();
    let x = field(&s, &c, &["x", "2*t"], &["u"]);
    for (_, r) in recursion_residual(&s, &x, &mu, 2).unwrap() {
        assert!(r.is_zero(), "{r}");
    }
}

#[test]
fn recursion_matrix_mu() {
    let (s, c) = xy2();
    let m = |rows: [[&str; 2]; 2]| {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|e| c.parse(e).unwrap()).collect()).collect()).unwrap()
    };
    // deliberately incompatible
    let mu = HorizontalForm::new(vec![m([["u", "x"], ["0", "1"]]), m([["y", "0"], ["v_x", "x*y"]])]).unwrap();
    let x = field(&s, &c, &["x*v", "1"], &["u*y", "v^2"]);
    for (_, r) in recursion_residual(&s, &x, &mu, 2).unwrap() {
        assert!(r.is_zero(), "{r}");
    }
}

fn compose_nabla(s: &JetSpace, mu: &HorizontalForm, q: &[Expr], j: &MultiIndex) -> Vec<Expr> {
    let mut v = q.to_vec();
    for (i, k) in j.counts().iter().enumerate() {
        for _ in 0..*k {
            let lam = mu.lambda(i);
            let d: Vec<Expr> = v.iter().map(|e| s.total_derivative(e, i)).collect();
            let l = lam.apply(&v);
            v = d.iter().zip(&l).map(|(a, b)| a + b).collect();
        }
    }
    v
}

#[test]
fn evolutionary_matches_operator_composition() {
    // compatible μ, so the order of ∇ factors is immaterial
    let (s, c) = xt();
    let mu = HorizontalForm::scalar(vec![c.parse("1/x").unwrap(), c.parse("1/t").unwrap()]).unwrap();
    let q = vec![c.parse("u*u_x + x").unwrap()];
    let x = VectorField::evolutionary(&s, q.clone()).unwrap();
    let y = prolong_mu(&s, &x, &mu, 3).unwrap();
    for j in MultiIndex::all_up_to(2, 3) {
        let expect = compose_nabla(&s, &mu, &q, &j);
        assert_eq!(y.coefficient(0, &j), expect[0], "J = {j}");
    }
}

#[test]
fn gauged_apply_matches_standard_apply() {
    // γ·(μ-prolonged X) against the standard prolongation of γ·Q
    let (s, c) = xt();
    let mu = HorizontalForm::scalar(vec![c.parse("λ").unwrap(), Expr::zero()]).unwrap();
    let x = field(&s, &c, &["x", "2*t"], &["u"]);
    let gamma = c.parse("exp(λ*x)").unwrap();
    let q = x.characteristic(&s);
    let ev = x.evolutionary_rep(&s);
    let y = prolong_mu(&s, &ev, &mu, 3).unwrap();
    let w = prolong_standard(&s, &VectorField::evolutionary(&s, vec![&gamma * &q.0[0]]).unwrap(), 3).unwrap();
    let delta = c.parse("u_t + u_xxx + u*u_x").unwrap();
    let lhs = &gamma * &y.apply(&delta);
    let rhs = w.apply(&delta);
    assert!(is_zero(&(&lhs - &rhs)).unwrap().is_zero());
    for j in MultiIndex::all_up_to(2, 3) {
        let d = &(&gamma * &y.coefficient(0, &j)) - &w.coefficient(0, &j);
        assert!(is_zero(&d).unwrap().is_zero(), "J = {j}: {d}");
    }
}

fn poly_str() -> impl Strategy<Value = String> {
    let atom = prop_oneof![Just("x"), Just("t"), Just("u"), Just("u_x"), Just("1"), Just("2")];
    prop::collection::vec((atom.clone(), atom, -2i32..3), 1..3).prop_map(|ts| {
        ts.iter()
            .map(|(a, b, k)| format!("({k})*{a}*{b}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_mu_degenerates(xi0 in poly_str(), xi1 in poly_str(), phi in poly_str()) {
        let (s, c) = xt();
        let x = field(&s, &c, &[&xi0, &xi1], &[&phi]);
        let a = prolong_standard(&s, &x, 2).unwrap();
        let b = prolong_mu(&s, &x, &HorizontalForm::zero(2, 1), 2).unwrap();
        prop_assert_eq!(a.table(), b.table());
    }

    #[test]
    fn recursion_random(l0 in poly_str(), l1 in poly_str(), xi0 in poly_str(), phi in poly_str()) {
        let (s, c) = xt();
        let mu = HorizontalForm::scalar(vec![c.parse(&l0).unwrap(), c.parse(&l1).unwrap()]).unwrap();
        let x = field(&s, &c, &[&xi0, "0"], &[&phi]);
        for (k, r) in recursion_residual(&s, &x, &mu, 2).unwrap() {
            prop_assert!(r.is_zero(), "{:?}: {}", k, r);
        }
    }

    #[test]
    fn prolongation_is_linear(xi0 in poly_str(), phi0 in poly_str(), xi1 in poly_str(), phi1 in poly_str(), a in -3i64..4, b in -3i64..4) {
        let (s, c) = xt();
        let mu = HorizontalForm::scalar(vec![c.parse("u").unwrap(), c.parse("x").unwrap()]).unwrap();
        let x0 = field(&s, &c, &[&xi0, "0"], &[&phi0]);
        let x1 = field(&s, &c, &["0", &xi1], &[&phi1]);
        let (ea, eb) = (Expr::int(a), Expr::int(b));
        let comb = x0.scale(&ea).add(&x1.scale(&eb));
        let y = prolong_mu(&s, &comb, &mu, 2).unwrap();
        let y0 = prolong_mu(&s, &x0, &mu, 2).unwrap();
        let y1 = prolong_mu(&s, &x1, &mu, 2).unwrap();
        for j in MultiIndex::all_up_to(2, 2) {
            let lin = &(&ea * &y0.coefficient(0, &j)) + &(&eb * &y1.coefficient(0, &j));
            prop_assert_eq!(y.coefficient(0, &j), lin);
        }
    }
}
