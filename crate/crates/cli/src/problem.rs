//! Problem files: JSON, `"schema": 1`, expression-valued strings.

use std::collections::BTreeMap;

use musym::expr::{Context, Expr, FunctionRule, Name, Symbol};
use musym::jet::{JetSpace, PdeSystem, Ranking};
use musym::muform::{GaugeMap, HorizontalForm, Matrix};
use musym::reduce::Ansatz;
use musym::symcheck::Solution;
use musym::vfield::VectorField;
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_ORDER: u32 = 4;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: u32,
    #[serde(default)]
    pub title: Option<String>,
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
    #[serde(default)]
    pub constants: Vec<String>,
    /// Undetermined functions and their arity.
    #[serde(default)]
    pub functions: BTreeMap<String, usize>,
    #[serde(default)]
    pub assumptions: Assumptions,
    /// Sign conventions and modelling choices, echoed in every report.
    #[serde(default)]
    pub conventions: Vec<String>,
    #[serde(default)]
    pub order: Option<u32>,
    #[serde(default)]
    pub ranking: Option<RankingSpec>,
    #[serde(default)]
    pub equations: Vec<EquationSpec>,
    #[serde(default)]
    pub vector_field: Option<FieldSpec>,
    #[serde(default)]
    pub vector_fields: Vec<FieldSpec>,
    /// One matrix (or scalar) per independent variable.
    #[serde(default)]
    pub mu: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub gamma: Option<MatrixSpec>,
    /// `P_i` of a nonlocal exponential factor `exp(∫P_i dx^i)`.
    #[serde(default)]
    pub nonlocal: Option<Vec<String>>,
    #[serde(default)]
    pub invariants: Vec<String>,
    /// Candidate solutions, dependent variable to expression.
    #[serde(default)]
    pub solutions: Vec<BTreeMap<String, String>>,
    #[serde(default)]
    pub conditional: Option<ConditionalSpec>,
    #[serde(default)]
    pub partial: Option<PartialSpec>,
    #[serde(default)]
    pub ansatz: Option<AnsatzSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumptions {
    /// Expressions taken positive: `abs(e)` simplifies to `e`.
    #[serde(default)]
    pub positive: Vec<String>,
    /// Branch choices that are not machine-checked (e.g. a sheet of a
    /// multivalued function).
    #[serde(default)]
    pub branches: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RankingSpec {
    Named(String),
    Lex { lex: Vec<String> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub expr: String,
    pub solve_for: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub xi: Option<Vec<String>>,
    #[serde(default)]
    pub phi: Option<Vec<String>>,
    /// Evolutionary characteristic instead of `xi`/`phi`.
    #[serde(default)]
    pub q: Option<Vec<String>>,
    /// Expected `γ·Q`, compared up to a global sign.
    #[serde(default)]
    pub gauged: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(String),
    Rows(Vec<Vec<String>>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalSpec {
    /// Target coordinate per characteristic component (`null` = automatic).
    #[serde(default)]
    pub solve_for: Vec<Option<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSpec {
    #[serde(default)]
    pub max_order: Option<usize>,
    /// `solve_for[k-1][c]` orients the `c`-th component of `Δ^(k)`.
    #[serde(default)]
    pub solve_for: Vec<Vec<Option<String>>>,
    /// Solutions expected on the whole chain `Δ^(0) = … = Δ^(ℓ−1) = 0`.
    #[serde(default)]
    pub solutions: Vec<BTreeMap<String, String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub invariants: Vec<NamedExpr>,
    /// Unknown functions of the invariants.
    #[serde(default)]
    pub functions: BTreeMap<String, usize>,
    pub forms: BTreeMap<String, String>,
    #[serde(default)]
    pub noninvariant: Vec<String>,
    /// Closed forms for the unknown functions, in terms of the invariants.
    #[serde(default)]
    pub solutions: Vec<BTreeMap<String, String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedExpr {
    pub name: String,
    pub expr: String,
}

/// A named vector field with an optional expected gauge image.
#[derive(Clone, Debug)]
pub struct NamedField {
    pub name: String,
    pub field: VectorField,
    pub gauged: Option<Vec<Expr>>,
}

#[derive(Clone, Debug)]
pub struct AnsatzProblem {
    pub ansatz: Ansatz,
    /// Parsing context with the invariants and unknown functions declared.
    pub ctx: Context,
    pub solutions: Vec<BTreeMap<Name, FunctionRule>>,
}

/// A validated problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub title: Option<String>,
    pub ctx: Context,
    pub sys: PdeSystem,
    pub fields: Vec<NamedField>,
    pub mu: Option<HorizontalForm>,
    pub gamma: Option<GaugeMap>,
    pub nonlocal: Option<Vec<Expr>>,
    pub invariants: Vec<Expr>,
    pub solutions: Vec<Solution>,
    pub conditional_hints: Vec<Option<Symbol>>,
    pub partial_hints: Vec<Vec<Option<Symbol>>>,
    pub max_order: Option<usize>,
    pub partial_solutions: Vec<Solution>,
    pub ansatz: Option<AnsatzProblem>,
    /// Assumptions and conventions to disclose.
    pub disclosures: Vec<String>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn parse_in(ctx: &Context, what: &str, text: &str) -> Result<Expr, CliError> {
    ctx.parse(text).map_err(|e| schema(format!("{what}: `{text}`: {e}")))
}

fn parse_symbol(ctx: &Context, what: &str, text: &str) -> Result<Symbol, CliError> {
    parse_in(ctx, what, text)?
        .as_symbol()
        .cloned()
        .ok_or_else(|| schema(format!("{what}: `{text}` is not a single symbol")))
}

fn parse_jet(ctx: &Context, space: &JetSpace, what: &str, text: &str) -> Result<Symbol, CliError> {
    let s = parse_symbol(ctx, what, text)?;
    if space.jet_parts(&s).is_none() {
        return Err(schema(format!("{what}: `{text}` is not a jet coordinate")));
    }
    Ok(s)
}

fn parse_list(ctx: &Context, what: &str, items: &[String]) -> Result<Vec<Expr>, CliError> {
    items.iter().map(|t| parse_in(ctx, what, t)).collect()
}

fn matrix(ctx: &Context, what: &str, m: &MatrixSpec, q: usize) -> Result<Matrix, CliError> {
    let rows = match m {
        MatrixSpec::Scalar(s) => {
            if q != 1 {
                return Err(schema(format!("{what}: a scalar needs one dependent variable, found {q}")));
            }
            vec![vec![parse_in(ctx, what, s)?]]
        }
        MatrixSpec::Rows(rows) => {
            if rows.len() != q || rows.iter().any(|r| r.len() != q) {
                return Err(schema(format!("{what}: expected a {q}×{q} matrix")));
            }
            rows.iter().map(|r| parse_list(ctx, what, r)).collect::<Result<_, _>>()?
        }
    };
    Ok(Matrix::from_rows(rows)?)
}

fn check_names(f: &ProblemFile) -> Result<(), CliError> {
    if f.schema != SCHEMA_VERSION {
        return Err(schema(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", f.schema)));
    }
    if f.independents.is_empty() || f.dependents.is_empty() {
        return Err(schema("at least one independent and one dependent variable are required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    let all = f
        .independents
        .iter()
        .chain(&f.dependents)
        .chain(&f.constants)
        .chain(f.functions.keys());
    for n in all {
        let ok = n.chars().next().is_some_and(|c| c.is_alphabetic()) && n.chars().all(|c| c.is_alphanumeric());
        if !ok {
            return Err(schema(format!("invalid name `{n}`")));
        }
        if !seen.insert(n.as_str()) {
            return Err(schema(format!("`{n}` declared twice")));
        }
    }
    Ok(())
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }

    pub fn validate(&self) -> Result<Problem, CliError> {
        check_names(self)?;
        let ind: Vec<&str> = self.independents.iter().map(String::as_str).collect();
        let dep: Vec<&str> = self.dependents.iter().map(String::as_str).collect();
        let consts: Vec<&str> = self.constants.iter().map(String::as_str).collect();
        let space = JetSpace::new(&ind, &dep, self.order.unwrap_or(DEFAULT_ORDER).max(1))?;
        let mut ctx = Context::new(&ind, &dep).with_constants(&consts);
        for (name, arity) in &self.functions {
            ctx = ctx.with_function(name, *arity);
        }
        let mut positive = Vec::new();
        for p in &self.assumptions.positive {
            positive.push(parse_in(&ctx, "assumptions.positive", p)?);
        }
        ctx.positive = positive;

        let ranking = match &self.ranking {
            None => Ranking::Graded,
            Some(RankingSpec::Named(s)) if s == "graded" => Ranking::Graded,
            Some(RankingSpec::Named(s)) => return Err(schema(format!("unknown ranking `{s}`"))),
            Some(RankingSpec::Lex { lex }) => {
                let idx = lex
                    .iter()
                    .map(|n| {
                        self.independents
                            .iter()
                            .position(|m| m == n)
                            .ok_or_else(|| schema(format!("ranking: `{n}` is not an independent variable")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ranking::Lex(idx)
            }
        };
        let mut sys = PdeSystem::new(space.clone(), ranking).map_err(|e| schema(format!("ranking: {e}")))?;
        for (k, eq) in self.equations.iter().enumerate() {
            let what = format!("equations[{k}]");
            let e = parse_in(&ctx, &what, &eq.expr)?;
            let t = parse_jet(&ctx, &space, &format!("{what}.solve_for"), &eq.solve_for)?;
            sys.add_equation(e, &t).map_err(|e| schema(format!("{what}: {e}")))?;
        }

        let specs: Vec<&FieldSpec> = self.vector_field.iter().chain(&self.vector_fields).collect();
        let mut fields = Vec::new();
        for (k, f) in specs.iter().enumerate() {
            let name = f.name.clone().unwrap_or_else(|| if specs.len() == 1 { "X".into() } else { format!("X{}", k + 1) });
            let what = format!("vector field {name}");
            let field = match (&f.xi, &f.phi, &f.q) {
                (Some(xi), Some(phi), None) => {
                    VectorField::new(&space, parse_list(&ctx, &what, xi)?, parse_list(&ctx, &what, phi)?)
                }
                (None, None, Some(q)) => VectorField::evolutionary(&space, parse_list(&ctx, &what, q)?),
                _ => return Err(schema(format!("{what}: give either xi and phi, or q"))),
            }
            .map_err(|e| schema(format!("{what}: {e}")))?;
            let gauged = match &f.gauged {
                Some(g) if g.len() != space.q() => {
                    return Err(schema(format!("{what}: gauged needs {} components", space.q())))
                }
                Some(g) => Some(parse_list(&ctx, &what, g)?),
                None => None,
            };
            fields.push(NamedField { name, field, gauged });
        }

        let mu = match &self.mu {
            None => None,
            Some(ms) => {
                if ms.len() != space.p() {
                    return Err(schema(format!("mu: expected {} matrices, one per independent variable", space.p())));
                }
                let lambdas = ms.iter().map(|m| matrix(&ctx, "mu", m, space.q())).collect::<Result<Vec<_>, _>>()?;
                Some(HorizontalForm::new(lambdas).map_err(|e| schema(format!("mu: {e}")))?)
            }
        };
        let gamma = match &self.gamma {
            None => None,
            Some(g) => Some(GaugeMap::new(matrix(&ctx, "gamma", g, space.q())?).map_err(|e| schema(format!("gamma: {e}")))?),
        };
        let nonlocal = match &self.nonlocal {
            None => None,
            Some(p) if p.len() != space.p() => {
                return Err(schema(format!("nonlocal: expected {} components", space.p())))
            }
            Some(p) => Some(parse_list(&ctx, "nonlocal", p)?),
        };
        let invariants = parse_list(&ctx, "invariants", &self.invariants)?;
        let solutions = self
            .solutions
            .iter()
            .enumerate()
            .map(|(k, s)| solution(&ctx, &self.dependents, &format!("solutions[{k}]"), s).map(Solution))
            .collect::<Result<Vec<_>, _>>()?;

        let conditional_hints = match &self.conditional {
            None => Vec::new(),
            Some(c) => c
                .solve_for
                .iter()
                .map(|t| t.as_ref().map(|t| parse_jet(&ctx, &space, "conditional.solve_for", t)).transpose())
                .collect::<Result<_, _>>()?,
        };
        let (partial_hints, max_order, partial_solutions) = match &self.partial {
            None => (Vec::new(), None, Vec::new()),
            Some(p) => {
                let hints = p
                    .solve_for
                    .iter()
                    .map(|level| {
                        level
                            .iter()
                            .map(|t| t.as_ref().map(|t| parse_jet(&ctx, &space, "partial.solve_for", t)).transpose())
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                let sols = p
                    .solutions
                    .iter()
                    .enumerate()
                    .map(|(k, s)| solution(&ctx, &self.dependents, &format!("partial.solutions[{k}]"), s).map(Solution))
                    .collect::<Result<Vec<_>, _>>()?;
                (hints, p.max_order, sols)
            }
        };
        let ansatz = self.ansatz.as_ref().map(|a| ansatz(&ctx, &self.dependents, a)).transpose()?;

        let mut disclosures = Vec::new();
        for p in &self.assumptions.positive {
            disclosures.push(format!("assumption: {p} > 0 (abs dropped)"));
        }
        for b in &self.assumptions.branches {
            disclosures.push(format!("branch: {b}"));
        }
        for c in &self.conventions {
            disclosures.push(format!("convention: {c}"));
        }

        Ok(Problem {
            title: self.title.clone(),
            ctx,
            sys,
            fields,
            mu,
            gamma,
            nonlocal,
            invariants,
            solutions,
            conditional_hints,
            partial_hints,
            max_order,
            partial_solutions,
            ansatz,
            disclosures,
        })
    }
}

fn solution(ctx: &Context, deps: &[String], what: &str, s: &BTreeMap<String, String>) -> Result<Vec<Expr>, CliError> {
    if let Some(k) = s.keys().find(|k| !deps.contains(k)) {
        return Err(schema(format!("{what}: `{k}` is not a dependent variable")));
    }
    deps.iter()
        .map(|d| {
            let t = s.get(d).ok_or_else(|| schema(format!("{what}: missing `{d}`")))?;
            parse_in(ctx, what, t)
        })
        .collect()
}

fn ansatz(base: &Context, deps: &[String], a: &AnsatzSpec) -> Result<AnsatzProblem, CliError> {
    let names: Vec<&str> = a.invariants.iter().map(|z| z.name.as_str()).collect();
    let mut ctx = base.clone().with_auxiliaries(&names);
    for (f, arity) in &a.functions {
        ctx = ctx.with_function(f, *arity);
    }
    let invariants = a
        .invariants
        .iter()
        .map(|z| {
            let s = parse_symbol(&ctx, "ansatz.invariants", &z.name)?;
            Ok((s, parse_in(base, "ansatz.invariants", &z.expr)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let forms = solution(&ctx, deps, "ansatz.forms", &a.forms)?;
    let noninvariant = a
        .noninvariant
        .iter()
        .map(|s| parse_symbol(&ctx, "ansatz.noninvariant", s))
        .collect::<Result<Vec<_>, _>>()?;
    let params: Vec<Symbol> = invariants.iter().map(|(z, _)| z.clone()).collect();
    let mut solutions = Vec::new();
    for (k, s) in a.solutions.iter().enumerate() {
        let what = format!("ansatz.solutions[{k}]");
        let mut rules = BTreeMap::new();
        for (f, body) in s {
            let arity = a.functions.get(f).ok_or_else(|| schema(format!("{what}: `{f}` is not an ansatz function")))?;
            if *arity != params.len() {
                return Err(schema(format!("{what}: `{f}` must take the {} invariants", params.len())));
            }
            let rule = FunctionRule {
                params: params.clone(),
                body: parse_in(&ctx, &what, body)?,
            };
            rules.insert(Name::from(f.as_str()), rule);
        }
        solutions.push(rules);
    }
    Ok(AnsatzProblem {
        ansatz: Ansatz {
            invariants,
            forms,
            noninvariant,
        },
        ctx,
        solutions,
    })
}
