//! Vector fields, characteristics and (μ-)prolongations.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::expr::{Expr, Symbol};
use crate::jet::{JetSpace, MultiIndex};
use crate::muform::{HorizontalForm, Matrix};

/// `X = ξ^i ∂/∂x^i + φ^a ∂/∂u^a`; coefficients may depend on jets.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub xi: Vec<Expr>,
    pub phi: Vec<Expr>,
}

/// `Q^a = φ^a − u^a_i ξ^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Characteristic(pub Vec<Expr>);

impl VectorField {
    pub fn new(space: &JetSpace, xi: Vec<Expr>, phi: Vec<Expr>) -> Result<Self> {
        if xi.len() != space.p() || phi.len() != space.q() {
            return Err(Error::DimensionMismatch(format!(
                "vector field has {} ξ and {} φ components, frame has p = {}, q = {}",
                xi.len(),
                phi.len(),
                space.p(),
                space.q()
            )));
        }
        Ok(VectorField { xi, phi })
    }

    pub fn evolutionary(space: &JetSpace, q: Vec<Expr>) -> Result<Self> {
        VectorField::new(space, vec![Expr::zero(); space.p()], q)
    }

    pub fn zero(space: &JetSpace) -> Self {
        VectorField {
            xi: vec![Expr::zero(); space.p()],
            phi: vec![Expr::zero(); space.q()],
        }
    }

    pub fn is_evolutionary(&self) -> bool {
        self.xi.iter().all(Expr::is_zero)
    }

    pub fn characteristic(&self, space: &JetSpace) -> Characteristic {
        Characteristic(
            (0..self.phi.len())
                .map(|a| {
                    let mut q = self.phi[a].clone();
                    for (i, xi) in self.xi.iter().enumerate() {
                        q = &q - &(&space.u1(a, i) * xi);
                    }
                    q
                })
                .collect(),
        )
    }

    /// The evolutionary representative `Q^a ∂/∂u^a`.
    pub fn evolutionary_rep(&self, space: &JetSpace) -> VectorField {
        VectorField {
            xi: vec![Expr::zero(); self.xi.len()],
            phi: self.characteristic(space).0,
        }
    }

    /// `c·X` for a scalar `c` (not a gauge action: ξ is scaled too).
    pub fn scale(&self, c: &Expr) -> VectorField {
        VectorField {
            xi: self.xi.iter().map(|e| e * c).collect(),
            phi: self.phi.iter().map(|e| e * c).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
            phi: self.phi.iter().zip(&other.phi).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Characteristic {
    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(Expr::is_zero)
    }
}

#[derive(Debug)]
enum Source {
    Standard,
    Mu(HorizontalForm),
    /// Coefficient vectors of `base` multiplied by `γ`.
    Gauged(Matrix, Box<ProlongedField>),
}

/// Prolonged field `ξ^i ∂/∂x^i + Ψ^a_J ∂/∂u^a_J`.
///
/// Coefficients up to the requested order are computed on construction;
/// higher ones are computed on demand.
#[derive(Debug)]
pub struct ProlongedField {
    space: JetSpace,
    xi: Vec<Expr>,
    phi: Vec<Expr>,
    order: u32,
    source: Source,
    table: Mutex<HashMap<(usize, MultiIndex), Expr>>,
}

impl Clone for ProlongedField {
    fn clone(&self) -> Self {
        ProlongedField {
            space: self.space.clone(),
            xi: self.xi.clone(),
            phi: self.phi.clone(),
            order: self.order,
            source: match &self.source {
                Source::Standard => Source::Standard,
                Source::Mu(m) => Source::Mu(m.clone()),
                Source::Gauged(g, b) => Source::Gauged(g.clone(), b.clone()),
            },
            table: Mutex::new(self.table.lock().expect("coefficient table").clone()),
        }
    }
}

/// Standard prolongation to order `n`.
pub fn prolong_standard(space: &JetSpace, x: &VectorField, n: u32) -> Result<ProlongedField> {
    ProlongedField::build(space, x, n, Source::Standard)
}

/// μ-prolongation to order `n`; compatibility of `μ` is not checked.
pub fn prolong_mu(space: &JetSpace, x: &VectorField, mu: &HorizontalForm, n: u32) -> Result<ProlongedField> {
    if mu.p() != space.p() || mu.q() != space.q() {
        return Err(Error::DimensionMismatch(format!(
            "μ is {}×{} over {} variables, frame has q = {}, p = {}",
            mu.q(),
            mu.q(),
            mu.p(),
            space.q(),
            space.p()
        )));
    }
    ProlongedField::build(space, x, n, Source::Mu(mu.clone()))
}

impl ProlongedField {
    fn build(space: &JetSpace, x: &VectorField, n: u32, source: Source) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("prolongation order must be at least 1".into()));
        }
        if x.xi.len() != space.p() || x.phi.len() != space.q() {
            return Err(Error::DimensionMismatch("vector field does not match the frame".into()));
        }
        let y = ProlongedField {
            space: space.clone(),
            xi: x.xi.clone(),
            phi: x.phi.clone(),
            order: n,
            source,
            table: Mutex::new(HashMap::new()),
        };
        y.fill(n);
        Ok(y)
    }

    fn fill(&self, n: u32) {
        for j in MultiIndex::all_up_to(self.space.p(), n) {
            for a in 0..self.space.q() {
                self.coefficient(a, &j);
            }
        }
    }

    pub(crate) fn gauged(gamma: &Matrix, base: &ProlongedField) -> ProlongedField {
        let phi = gamma.apply(&base.phi);
        let y = ProlongedField {
            space: base.space.clone(),
            xi: base.xi.clone(),
            phi,
            order: base.order,
            source: Source::Gauged(gamma.clone(), Box::new(base.clone())),
            table: Mutex::new(HashMap::new()),
        };
        y.fill(base.order);
        y
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn xi(&self) -> &[Expr] {
        &self.xi
    }

    pub fn phi(&self) -> &[Expr] {
        &self.phi
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn mu(&self) -> Option<&HorizontalForm> {
        match &self.source {
            Source::Mu(m) => Some(m),
            _ => None,
        }
    }

    pub fn is_standard(&self) -> bool {
        matches!(self.source, Source::Standard)
    }

    /// `Ψ^a_J`.
    pub fn coefficient(&self, a: usize, j: &MultiIndex) -> Expr {
        if let Some(v) = self.table.lock().expect("coefficient table").get(&(a, j.clone())) {
            return v.clone();
        }
        let v = self.compute(a, j);
        self.table
            .lock()
            .expect("coefficient table")
            .insert((a, j.clone()), v.clone());
        v
    }

    fn compute(&self, a: usize, j: &MultiIndex) -> Expr {
        if let Source::Gauged(g, base) = &self.source {
            let col: Vec<Expr> = (0..self.space.q()).map(|b| base.coefficient(b, j)).collect();
            return g.apply(&col)[a].clone();
        }
        let Some(i) = j.first_nonzero() else {
            return self.phi[a].clone();
        };
        let prev = j.minus(i).expect("nonzero count");
        let sp = &self.space;
        // standard part: D_i Ψ^a_J − u^a_{J+e_m} D_i ξ^m
        let mut out = sp.total_derivative(&self.coefficient(a, &prev), i);
        for (m, xi) in self.xi.iter().enumerate() {
            let dxi = sp.total_derivative(xi, i);
            if !dxi.is_zero() {
                out = &out - &(&sp.u_expr(a, prev.plus(m)) * &dxi);
            }
        }
        if let Source::Mu(mu) = &self.source {
            let lam = mu.lambda(i);
            for b in 0..sp.q() {
                let l = lam.get(a, b);
                if l.is_zero() {
                    continue;
                }
                let mut inner = self.coefficient(b, &prev);
                for (m, xi) in self.xi.iter().enumerate() {
                    inner = &inner - &(&sp.u_expr(b, prev.plus(m)) * xi);
                }
                out = &out + &(l * &inner);
            }
        }
        out
    }

    /// Every `((a, J), Ψ^a_J)` with `|J| ≤ order`.
    pub fn table(&self) -> Vec<((usize, MultiIndex), Expr)> {
        let mut out = Vec::new();
        for j in MultiIndex::all_up_to(self.space.p(), self.order) {
            for a in 0..self.space.q() {
                out.push(((a, j.clone()), self.coefficient(a, &j)));
            }
        }
        out
    }

    /// `Y(e) = ξ^i ∂e/∂x^i + Ψ^a_J ∂e/∂u^a_J`.
    pub fn apply(&self, e: &Expr) -> Expr {
        let sp = &self.space;
        let f = |s: &Symbol| -> Option<Expr> {
            if let Some(i) = sp.indep_index(s) {
                return Some(self.xi[i].clone());
            }
            let (a, j) = sp.jet_parts(s)?;
            Some(self.coefficient(a, &j))
        };
        crate::expr::derive(&f, e)
    }
}

/// Residuals of the recursion `F_{J,i} = (D_i + Λ_i)F_J + Λ_i D_J Q` for
/// `F = Ψ − Φ`, where `Ψ_{J,i}` and `Φ_{J,i}` are each obtained by one step
/// of their prolongation formula from the tabulated `Ψ_J`, `Φ_J`. Entries
/// are keyed by `(a, J, i)` with `|J| < n`.
pub fn recursion_residual(
    space: &JetSpace,
    x: &VectorField,
    mu: &HorizontalForm,
    n: u32,
) -> Result<Vec<((usize, MultiIndex, usize), Expr)>> {
    let psi = prolong_mu(space, x, mu, n)?;
    let phi = prolong_standard(space, x, n)?;
    let q = x.characteristic(space);
    let mut out = Vec::new();
    let dq = |b: usize, j: &MultiIndex| space.total_derivative_multi(&q.0[b], j);
    for j in MultiIndex::all_up_to(space.p(), n.saturating_sub(1)) {
        let f_j: Vec<Expr> = (0..space.q())
            .map(|b| &psi.coefficient(b, &j) - &phi.coefficient(b, &j))
            .collect();
        for i in 0..space.p() {
            let lam = mu.lambda(i);
            for a in 0..space.q() {
                let mut step_psi = space.total_derivative(&psi.coefficient(a, &j), i);
                let mut step_phi = space.total_derivative(&phi.coefficient(a, &j), i);
                for (m, xi) in x.xi.iter().enumerate() {
                    let t = &space.u_expr(a, j.plus(m)) * &space.total_derivative(xi, i);
                    step_psi = &step_psi - &t;
                    step_phi = &step_phi - &t;
                }
                let mut expected = space.total_derivative(&f_j[a], i);
                for b in 0..space.q() {
                    let l = lam.get(a, b);
                    if l.is_zero() {
                        continue;
                    }
                    let mut inner = psi.coefficient(b, &j);
                    for (m, xi) in x.xi.iter().enumerate() {
                        inner = &inner - &(&space.u_expr(b, j.plus(m)) * xi);
                    }
                    step_psi = &step_psi + &(l * &inner);
                    expected = &expected + &(l * &(&f_j[b] + &dq(b, &j)));
                }
                out.push(((a, j.clone(), i), &(&step_psi - &step_phi) - &expected));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
