//! Jet coordinates, total derivatives and PDE systems.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::expr::{Expr, Name, Symbol};

/// Derivative counts per independent variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    pub fn zero(p: usize) -> Self {
        MultiIndex(vec![0; p])
    }

    pub fn unit(p: usize, i: usize) -> Self {
        let mut v = vec![0; p];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn plus(&self, i: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[i] += 1;
        MultiIndex(v)
    }

    /// `self − e_i`, if nonnegative.
    pub fn minus(&self, i: usize) -> Option<MultiIndex> {
        let mut v = self.0.clone();
        if v[i] == 0 {
            return None;
        }
        v[i] -= 1;
        Some(MultiIndex(v))
    }

    /// `self − other`, if componentwise nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.0.len() != other.0.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|k| *k > 0)
    }

    /// All multiindices of length `p` and order at most `n`, by increasing order.
    pub fn all_up_to(p: usize, n: u32) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(p)];
        let mut layer = vec![MultiIndex::zero(p)];
        for _ in 0..n {
            let mut next = BTreeSet::new();
            for j in &layer {
                for i in 0..p {
                    next.insert(j.plus(i));
                }
            }
            layer = next.into_iter().collect();
            out.extend(layer.iter().cloned());
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Coordinate frame: independent variables, dependent variables, working order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    independents: Vec<Name>,
    dependents: Vec<Name>,
    order: u32,
}

impl JetSpace {
    pub fn new(independents: &[&str], dependents: &[&str], order: u32) -> Result<Self> {
        let s = JetSpace {
            independents: independents.iter().map(|s| Name::from(*s)).collect(),
            dependents: dependents.iter().map(|s| Name::from(*s)).collect(),
            order,
        };
        if s.independents.is_empty() || s.dependents.is_empty() || order == 0 {
            return Err(Error::Invalid("jet space needs p ≥ 1, q ≥ 1, n ≥ 1".into()));
        }
        let mut seen = BTreeSet::new();
        for n in s.independents.iter().chain(&s.dependents) {
            if !seen.insert(n.clone()) {
                return Err(Error::Invalid(format!("duplicate variable `{}`", n)));
            }
        }
        Ok(s)
    }

    pub fn p(&self) -> usize {
        self.independents.len()
    }

    pub fn q(&self) -> usize {
        self.dependents.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn with_order(&self, n: u32) -> JetSpace {
        JetSpace {
            order: n,
            ..self.clone()
        }
    }

    pub fn independents(&self) -> &[Name] {
        &self.independents
    }

    pub fn dependents(&self) -> &[Name] {
        &self.dependents
    }

    pub fn x(&self, i: usize) -> Symbol {
        Symbol::Var(self.independents[i].clone())
    }

    pub fn x_expr(&self, i: usize) -> Expr {
        Expr::sym(self.x(i))
    }

    pub fn u(&self, a: usize, j: MultiIndex) -> Symbol {
        Symbol::Jet(self.dependents[a].clone(), j)
    }

    pub fn u_expr(&self, a: usize, j: MultiIndex) -> Expr {
        Expr::sym(self.u(a, j))
    }

    /// `u^a_i`, the first derivative along `x^i`.
    pub fn u1(&self, a: usize, i: usize) -> Expr {
        self.u_expr(a, MultiIndex::unit(self.p(), i))
    }

    pub fn indep_index(&self, s: &Symbol) -> Option<usize> {
        match s {
            Symbol::Var(n) => self.independents.iter().position(|m| m == n),
            _ => None,
        }
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.dependents.iter().position(|m| &**m == name)
    }

    /// `(a, J)` for a jet coordinate of this space.
    pub fn jet_parts(&self, s: &Symbol) -> Option<(usize, MultiIndex)> {
        match s {
            Symbol::Jet(n, j) if j.len() == self.p() => Some((self.dep_index(n)?, j.clone())),
            _ => None,
        }
    }

    /// Every coordinate of `J^(n)`: base variables first, then `u^a_J` by order.
    pub fn coordinates(&self, n: u32) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = (0..self.p()).map(|i| self.x(i)).collect();
        for j in MultiIndex::all_up_to(self.p(), n) {
            for a in 0..self.q() {
                out.push(self.u(a, j.clone()));
            }
        }
        out
    }

    /// Highest jet order occurring in `e`.
    pub fn order_of(&self, e: &Expr) -> u32 {
        e.jet_symbols()
            .iter()
            .filter_map(|s| self.jet_parts(s))
            .map(|(_, j)| j.order())
            .max()
            .unwrap_or(0)
    }

    /// Total derivative `D_i`.
    pub fn total_derivative(&self, e: &Expr, i: usize) -> Expr {
        let xi = self.independents[i].clone();
        let p = self.p();
        let f = move |s: &Symbol| match s {
            Symbol::Var(n) if *n == xi => Some(Expr::one()),
            Symbol::Jet(n, j) if j.len() == p => Some(Expr::sym(Symbol::Jet(n.clone(), j.plus(i)))),
            _ => None,
        };
        crate::expr::derive(&f, e)
    }

    /// `D_J`, applied coordinate by coordinate.
    pub fn total_derivative_multi(&self, e: &Expr, j: &MultiIndex) -> Expr {
        let mut out = e.clone();
        for (i, k) in j.counts().iter().enumerate() {
            for _ in 0..*k {
                out = self.total_derivative(&out, i);
            }
        }
        out
    }

    /// Context for parsing expressions over this space.
    pub fn context(&self) -> crate::expr::Context {
        crate::expr::Context {
            independents: self.independents.iter().map(|s| s.to_string()).collect(),
            dependents: self.dependents.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }
}

/// Admissible ordering of jet coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ranking {
    /// By total order, ties broken lexicographically in declaration order.
    Graded,
    /// Lexicographic with the given priority of independent-variable indices.
    Lex(Vec<usize>),
}

impl Ranking {
    /// Compares `u^a_J` with `u^b_K`; earlier dependents rank higher on ties.
    pub fn cmp(&self, a: usize, j: &MultiIndex, b: usize, k: &MultiIndex) -> Ordering {
        let by_index = match self {
            Ranking::Graded => j.order().cmp(&k.order()).then_with(|| j.counts().cmp(k.counts())),
            Ranking::Lex(prio) => prio
                .iter()
                .map(|&i| j.counts()[i].cmp(&k.counts()[i]))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal),
        };
        by_index.then_with(|| b.cmp(&a))
    }
}

/// An equation solved for its leading derivative: `expr ≡ factor·(lead − rhs)`.
#[derive(Clone, Debug)]
pub struct Equation {
    pub expr: Expr,
    pub lead: Symbol,
    pub rhs: Expr,
    pub factor: Expr,
}

/// Oriented PDE system with memoized differential consequences.
#[derive(Debug)]
pub struct PdeSystem {
    space: JetSpace,
    ranking: Ranking,
    equations: Vec<Equation>,
    rules: Mutex<HashMap<Symbol, Expr>>,
}

impl Clone for PdeSystem {
    fn clone(&self) -> Self {
        PdeSystem {
            space: self.space.clone(),
            ranking: self.ranking.clone(),
            equations: self.equations.clone(),
            rules: Mutex::new(self.rules.lock().expect("rule cache").clone()),
        }
    }
}

impl PdeSystem {
    pub fn new(space: JetSpace, ranking: Ranking) -> Result<Self> {
        if let Ranking::Lex(prio) = &ranking {
            let mut sorted = prio.clone();
            sorted.sort_unstable();
            if sorted != (0..space.p()).collect::<Vec<_>>() {
                return Err(Error::Invalid("ranking must list every independent variable once".into()));
            }
        }
        Ok(PdeSystem {
            space,
            ranking,
            equations: Vec::new(),
            rules: Mutex::new(HashMap::new()),
        })
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn ranking(&self) -> &Ranking {
        &self.ranking
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Order of the system: highest jet order among its equations.
    pub fn order(&self) -> u32 {
        self.equations
            .iter()
            .map(|e| self.space.order_of(&e.expr))
            .max()
            .unwrap_or(0)
    }

    fn rank_cmp(&self, s: &Symbol, t: &Symbol) -> Ordering {
        match (self.space.jet_parts(s), self.space.jet_parts(t)) {
            (Some((a, j)), Some((b, k))) => self.ranking.cmp(a, &j, b, &k),
            _ => Ordering::Equal,
        }
    }

    /// Appends `expr = 0` solved for `target`.
    pub fn add_equation(&mut self, expr: Expr, target: &Symbol) -> Result<()> {
        if self.is_constrained(target) {
            return Err(self.orientation_error(&expr, target, "already determined by an earlier equation"));
        }
        let eq = self.orient(&expr, target)?;
        self.equations.push(eq);
        self.rules.lock().expect("rule cache").clear();
        Ok(())
    }

    /// Appends `expr = 0` solved for its highest-ranked coordinate that it
    /// depends on linearly and that is not already constrained.
    pub fn add_auto(&mut self, expr: Expr) -> Result<()> {
        let mut jets: Vec<Symbol> = expr
            .jet_symbols()
            .into_iter()
            .filter(|s| self.space.jet_parts(s).is_some())
            .collect();
        jets.sort_by(|s, t| self.rank_cmp(t, s));
        let mut last = None;
        for s in &jets {
            if self.constraining_equation(s).is_some() {
                continue;
            }
            match self.orient(&expr, s) {
                Ok(_) => return self.add_equation(expr, s),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::Orientation {
            expr: self.print(&expr),
            target: "<auto>".into(),
            reason: "no free jet coordinate to solve for".into(),
        }))
    }

    fn print(&self, e: &Expr) -> String {
        self.space.context().print(e)
    }

    fn orientation_error(&self, expr: &Expr, target: &Symbol, reason: &str) -> Error {
        Error::Orientation {
            expr: self.print(expr),
            target: self.space.context().symbol_name(target),
            reason: reason.to_string(),
        }
    }

    /// Solves `expr = 0` for `target`, checking linearity and termination.
    pub fn orient(&self, expr: &Expr, target: &Symbol) -> Result<Equation> {
        if self.space.jet_parts(target).is_none() {
            return Err(self.orientation_error(expr, target, "not a jet coordinate"));
        }
        let a = expr.diff(target);
        if a.is_zero() {
            return Err(self.orientation_error(expr, target, "equation does not involve it"));
        }
        if a.contains_symbol(target) {
            return Err(self.orientation_error(expr, target, "equation is not linear in it"));
        }
        let b = expr - &(&a * &Expr::sym(target.clone()));
        if b.contains_symbol(target) {
            return Err(self.orientation_error(expr, target, "equation is not linear in it"));
        }
        let rhs = (-&b).try_div(&a)?;
        // Substitution must terminate: once rewritten by the equations
        // already present, the right-hand side may not depend on the target
        // or any of its derivatives. Deeper cycles are caught in `rule`.
        let (ta, tj) = self.space.jet_parts(target).expect("jet coordinate");
        for s in self.restrict(&rhs)?.jet_symbols() {
            if let Some((b, k)) = self.space.jet_parts(&s) {
                if b == ta && k.checked_sub(&tj).is_some() {
                    return Err(self.orientation_error(
                        expr,
                        target,
                        &format!(
                            "right-hand side depends on {}, a derivative of it",
                            self.space.context().symbol_name(&s)
                        ),
                    ));
                }
            }
        }
        Ok(Equation {
            expr: expr.clone(),
            lead: target.clone(),
            rhs,
            factor: a,
        })
    }

    /// Index of the first equation whose leading derivative `s` is a derivative of.
    pub fn constraining_equation(&self, s: &Symbol) -> Option<(usize, MultiIndex)> {
        let (a, j) = self.space.jet_parts(s)?;
        self.equations.iter().enumerate().find_map(|(k, eq)| {
            let (b, l) = self.space.jet_parts(&eq.lead)?;
            if a != b {
                return None;
            }
            j.checked_sub(&l).map(|d| (k, d))
        })
    }

    pub fn is_constrained(&self, s: &Symbol) -> bool {
        self.constraining_equation(s).is_some()
    }

    /// Restricted value of a constrained coordinate, `None` if unconstrained.
    pub fn rule(&self, s: &Symbol) -> Result<Option<Expr>> {
        let mut in_progress = BTreeSet::new();
        self.rule_inner(s, &mut in_progress)
    }

    fn rule_inner(&self, s: &Symbol, in_progress: &mut BTreeSet<Symbol>) -> Result<Option<Expr>> {
        let Some((k, d)) = self.constraining_equation(s) else {
            return Ok(None);
        };
        if let Some(v) = self.rules.lock().expect("rule cache").get(s) {
            return Ok(Some(v.clone()));
        }
        if !in_progress.insert(s.clone()) {
            return Err(Error::OrientationCycle(self.space.context().symbol_name(s)));
        }
        let raw = match d.first_nonzero() {
            None => self.equations[k].rhs.clone(),
            Some(i) => {
                let (a, j) = self.space.jet_parts(s).expect("jet coordinate");
                let prev = self.space.u(a, j.minus(i).expect("nonzero count"));
                let base = self.rule_inner(&prev, in_progress)?.expect("derivative of a constrained coordinate");
                self.space.total_derivative(&base, i)
            }
        };
        let value = self.restrict_inner(&raw, in_progress)?;
        in_progress.remove(s);
        self.rules.lock().expect("rule cache").insert(s.clone(), value.clone());
        Ok(Some(value))
    }

    /// Replaces every constrained coordinate by its restricted value.
    pub fn restrict(&self, e: &Expr) -> Result<Expr> {
        let mut in_progress = BTreeSet::new();
        self.restrict_inner(e, &mut in_progress)
    }

    fn restrict_inner(&self, e: &Expr, in_progress: &mut BTreeSet<Symbol>) -> Result<Expr> {
        let mut rules = BTreeMap::new();
        for s in e.jet_symbols() {
            if let Some(v) = self.rule_inner(&s, in_progress)? {
                rules.insert(s, v);
            }
        }
        e.subs(&rules)
    }

    /// Rule `u^a_{L+K} → restrict(D_K f_α)` for equation `alpha`.
    pub fn differential_consequence(&self, alpha: usize, k: &MultiIndex) -> Result<(Symbol, Expr)> {
        let eq = self
            .equations
            .get(alpha)
            .ok_or_else(|| Error::Invalid(format!("no equation {}", alpha)))?;
        let (a, l) = self.space.jet_parts(&eq.lead).expect("jet lead");
        let target = self.space.u(a, l.add(k));
        let value = if self.constraining_equation(&target).map(|(i, _)| i) == Some(alpha) {
            self.rule(&target)?.expect("constrained")
        } else {
            self.restrict(&self.space.total_derivative_multi(&eq.rhs, k))?
        };
        Ok((target, value))
    }

    /// System with the same frame and ranking and no equations.
    pub fn empty_like(&self) -> PdeSystem {
        PdeSystem {
            space: self.space.clone(),
            ranking: self.ranking.clone(),
            equations: Vec::new(),
            rules: Mutex::new(HashMap::new()),
        }
    }
}
