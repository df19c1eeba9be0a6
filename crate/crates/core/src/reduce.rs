//! Reduction by a user-supplied invariant ansatz and splitting by powers of
//! the non-invariant variables.

use std::collections::BTreeMap;

use num_traits::One;

use crate::error::{Error, Result};
use crate::expr::{Atom, AtomKind, Expr, FunctionRule, Mono, Name, Poly, Symbol};
use crate::jet::{JetSpace, PdeSystem};
use crate::oracle::OracleConfig;
use crate::symcheck::{jet_lift, verify_solution, Solution, SymmetryVerdict};
use crate::vfield::VectorField;

/// `z_k := expr(x)`, `u^a := form(z, x)` and the non-invariant variables `s`.
#[derive(Clone, Debug)]
pub struct Ansatz {
    pub invariants: Vec<(Symbol, Expr)>,
    pub forms: Vec<Expr>,
    pub noninvariant: Vec<Symbol>,
}

impl Ansatz {
    fn validate(&self, space: &JetSpace) -> Result<()> {
        if self.forms.len() != space.q() {
            return Err(Error::DimensionMismatch("ansatz must give every dependent variable".into()));
        }
        let jet_free = |e: &Expr| e.jet_symbols().iter().all(|s| space.jet_parts(s).is_none());
        if !self.forms.iter().all(jet_free) || !self.invariants.iter().all(|(_, d)| jet_free(d)) {
            return Err(Error::Invalid("ansatz expressions must not contain jet coordinates".into()));
        }
        let zs: Vec<&Symbol> = self.invariants.iter().map(|(z, _)| z).collect();
        for f in &self.forms {
            for app in f.applications() {
                if let AtomKind::Apply { name, args, .. } = app.kind() {
                    for a in args {
                        let ok = a.symbols().iter().all(|s| zs.contains(&s) || matches!(s, Symbol::Const(_)));
                        if !ok {
                            return Err(Error::Invalid(format!(
                                "arguments of `{}` must be built from the declared invariants",
                                name
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `z_k → expr(x)`.
    fn forward(&self) -> BTreeMap<Symbol, Expr> {
        self.invariants
            .iter()
            .filter(|(z, d)| d.as_symbol() != Some(z))
            .map(|(z, d)| (z.clone(), d.clone()))
            .collect()
    }

    /// Base-variable eliminations `x^i → g(z, s)` inverting each invariant.
    fn backward(&self, space: &JetSpace) -> Result<BTreeMap<Symbol, Expr>> {
        let mut out = BTreeMap::new();
        for (z, def) in &self.invariants {
            if def.as_symbol() == Some(z) {
                continue;
            }
            let candidates = (0..space.p())
                .map(|i| space.x(i))
                .filter(|v| !self.noninvariant.contains(v) && !out.contains_key(v) && def.contains_symbol(v));
            let mut solved = None;
            for v in candidates {
                let a = def.diff(&v);
                if a.is_zero() || a.contains_symbol(&v) {
                    continue;
                }
                let rest = def - &(&a * &Expr::sym(v.clone()));
                if rest.contains_symbol(&v) {
                    continue;
                }
                solved = Some((v, (&Expr::sym(z.clone()) - &rest).try_div(&a)?));
                break;
            }
            let (v, e) = solved.ok_or_else(|| {
                Error::Invalid(format!("cannot solve invariant `{}` = {} for a base variable", z_name(z), def))
            })?;
            out.insert(v, e);
        }
        Ok(out)
    }

    /// `u^a(x)` with the invariants substituted.
    pub fn lift(&self) -> Result<Vec<Expr>> {
        let fwd = self.forward();
        self.forms.iter().map(|f| f.subs(&fwd)).collect()
    }
}

fn z_name(z: &Symbol) -> String {
    crate::expr::default_symbol(z)
}

/// Substitutes the ansatz into every equation; results are expressed in
/// the invariants, the non-invariant variables and the undetermined functions.
pub fn reduce_with_ansatz(sys: &PdeSystem, a: &Ansatz) -> Result<Vec<Expr>> {
    let space = sys.space();
    a.validate(space)?;
    let sol = Solution(a.lift()?);
    let back = a.backward(space)?;
    sys.equations()
        .iter()
        .map(|eq| jet_lift(space, &sol, &eq.expr)?.subs(&back))
        .collect()
}

/// `Q^a` evaluated on the ansatz; zero when the ansatz is `X`-invariant.
pub fn ansatz_characteristic(space: &JetSpace, x: &VectorField, a: &Ansatz) -> Result<Vec<Expr>> {
    a.validate(space)?;
    let sol = Solution(a.lift()?);
    x.characteristic(space).0.iter().map(|q| jet_lift(space, &sol, q)).collect()
}

fn has_application(a: &Atom) -> bool {
    !Expr::from_atom(a.clone()).applications().is_empty()
}

/// Writes `e = factor·cleared`, moving the denominator and any common
/// monomial factor free of undetermined functions into `factor`.
pub fn clear_overall_factor(e: &Expr) -> Result<(Expr, Expr)> {
    if e.is_zero() {
        return Ok((Expr::zero(), Expr::one()));
    }
    let num = e.numerator();
    let mut common: Option<Mono> = None;
    for (m, _) in num.terms() {
        common = Some(match common {
            None => m.clone(),
            Some(c) => c.gcd(m),
        });
    }
    let common = common.unwrap_or_else(Mono::one);
    let common = Mono(common.0.into_iter().filter(|(a, _)| !has_application(a)).collect());
    let common_e = Expr::from_poly(Poly::monomial(common, One::one()));
    let cleared = Expr::from_poly(num.clone()).try_div(&common_e)?;
    let factor = common_e.try_div(&Expr::from_poly(e.denominator().clone()))?;
    Ok((cleared, factor))
}

/// Groups `e` by monomials in `s` (negative powers allowed) and returns
/// `(monomial, component)` pairs with `Σ monomial·component = e`.
pub fn split_by_noninvariant(e: &Expr, s: &[Symbol]) -> Result<Vec<(Expr, Expr)>> {
    if e.is_zero() {
        return Ok(Vec::new());
    }
    let s_atoms: Vec<Atom> = s.iter().map(|v| Atom::new(AtomKind::Sym(v.clone()))).collect();
    let offending = |m: &Mono| -> Option<Error> {
        m.atoms()
            .find(|a| !s_atoms.contains(a) && s.iter().any(|v| Expr::from_atom((*a).clone()).contains_symbol(v)))
            .map(|a| Error::NotPolynomial {
                var: s.iter().map(z_name).collect::<Vec<_>>().join(","),
                kernel: Expr::from_atom(a.clone()).to_string(),
            })
    };
    let s_part = |m: &Mono| Mono(m.0.iter().filter(|(a, _)| s_atoms.contains(a)).cloned().collect());
    let rest_part = |m: &Mono| Mono(m.0.iter().filter(|(a, _)| !s_atoms.contains(a)).cloned().collect());

    // the denominator may carry a pure power of s
    let den = e.denominator();
    let mut den_s: Option<Mono> = None;
    for (m, _) in den.terms() {
        if let Some(err) = offending(m) {
            return Err(err);
        }
        den_s = Some(match den_s {
            None => s_part(m),
            Some(c) => c.gcd(&s_part(m)),
        });
    }
    let den_s = den_s.unwrap_or_else(Mono::one);
    let den_s_e = Expr::from_poly(Poly::monomial(den_s, One::one()));
    let den_rest = Expr::from_poly(den.clone()).try_div(&den_s_e)?;
    if s.iter().any(|v| den_rest.contains_symbol(v)) {
        let kernel = den_rest.to_string();
        return Err(Error::NotPolynomial {
            var: s.iter().map(z_name).collect::<Vec<_>>().join(","),
            kernel,
        });
    }

    let mut groups: BTreeMap<Mono, Vec<(Mono, crate::expr::Q)>> = BTreeMap::new();
    for (m, c) in e.numerator().terms() {
        if let Some(err) = offending(m) {
            return Err(err);
        }
        groups.entry(s_part(m)).or_default().push((rest_part(m), c.clone()));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (sm, terms) in groups.into_iter().rev() {
        let mono = Expr::from_poly(Poly::monomial(sm, One::one())).try_div(&den_s_e)?;
        let comp = Expr::from_poly(Poly::from_terms(terms)).try_div(&den_rest)?;
        out.push((mono, comp));
    }
    Ok(out)
}

/// Rebuilds `u^a(x)` from the ansatz and closed-form component solutions,
/// then checks it against the system.
pub fn verify_reduction_consistency(
    sys: &PdeSystem,
    a: &Ansatz,
    functions: &BTreeMap<Name, FunctionRule>,
    cfg: &OracleConfig,
) -> Result<(Solution, SymmetryVerdict)> {
    let space = sys.space();
    a.validate(space)?;
    let sol = Solution(a.lift()?.iter().map(|f| f.subs_functions(functions)).collect::<Result<_>>()?);
    let exprs: Vec<Expr> = sys.equations().iter().map(|e| e.expr.clone()).collect();
    let mut v = verify_solution(space, &sol, &exprs, cfg)?;
    v.kind = crate::symcheck::CheckKind::Reduction;
    Ok((sol, v))
}
