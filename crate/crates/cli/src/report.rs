//! Report model with text and JSON renderings.

use std::fmt::Write as _;

use musym::expr::{Context, Expr, ZeroVerdict};
use musym::muform::{Residual, Scope, ScopeReport};
use musym::oracle::OracleConfig;
use musym::symcheck::{Outcome, SymmetryVerdict};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckOutcome {
    Verified,
    VerifiedNumeric,
    Refuted,
    Inconclusive,
}

impl From<Outcome> for CheckOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Verified => CheckOutcome::Verified,
            Outcome::VerifiedNumeric => CheckOutcome::VerifiedNumeric,
            Outcome::Refuted => CheckOutcome::Refuted,
        }
    }
}

impl CheckOutcome {
    fn as_str(self) -> &'static str {
        match self {
            CheckOutcome::Verified => "Verified",
            CheckOutcome::VerifiedNumeric => "VerifiedNumeric",
            CheckOutcome::Refuted => "Refuted",
            CheckOutcome::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    /// Every residual reduced to zero by the canonicalizer.
    Symbolic,
    /// Some residual only sampled.
    Numeric,
    /// A nonzero sample was found.
    Counterexample,
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualOut {
    pub label: String,
    pub expr: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted: Option<String>,
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessOut {
    pub residual: String,
    pub seed: u64,
    pub value: String,
    pub point: Vec<(String, String)>,
}

/// A named expression computed along the way (reduced equation, `Λ_i`, ...).
#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub label: String,
    pub expr: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub kind: String,
    pub subject: String,
    pub outcome: CheckOutcome,
    pub strength: Strength,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub derived: Vec<Derived>,
    pub residuals: Vec<ResidualOut>,
    pub witnesses: Vec<WitnessOut>,
    pub notes: Vec<String>,
    /// Residuals are restricted to the solution manifold.
    #[serde(skip)]
    pub on_manifold: bool,
}

fn strength_of<'a>(verdicts: impl IntoIterator<Item = &'a ZeroVerdict>) -> Strength {
    let mut s = Strength::Symbolic;
    let mut any = false;
    for v in verdicts {
        any = true;
        match v {
            ZeroVerdict::NonZero { .. } => return Strength::Counterexample,
            ZeroVerdict::NumericZero { .. } => s = Strength::Numeric,
            ZeroVerdict::ProvedZero => {}
        }
    }
    if any {
        s
    } else {
        Strength::None
    }
}

impl Check {
    pub fn new(kind: &str, subject: impl Into<String>, outcome: CheckOutcome) -> Check {
        Check {
            kind: kind.to_string(),
            subject: subject.into(),
            outcome,
            strength: Strength::None,
            scope: None,
            compatibility: None,
            order: None,
            chain: Vec::new(),
            derived: Vec::new(),
            residuals: Vec::new(),
            witnesses: Vec::new(),
            notes: Vec::new(),
            on_manifold: false,
        }
    }

    pub fn inconclusive(kind: &str, subject: impl Into<String>, why: impl Into<String>) -> Check {
        let mut c = Check::new(kind, subject, CheckOutcome::Inconclusive);
        c.notes.push(why.into());
        c
    }

    fn push_residuals(&mut self, ctx: &Context, rs: &[Residual]) {
        for r in rs {
            self.residuals.push(ResidualOut {
                label: r.label.clone(),
                expr: ctx.print(&r.expr),
                restricted: r.restricted.as_ref().map(|e| ctx.print(e)),
                verdict: r.verdict.to_string(),
            });
            if let ZeroVerdict::NonZero { witness, value } = &r.verdict {
                self.witnesses.push(WitnessOut {
                    residual: r.label.clone(),
                    seed: witness.seed,
                    value: format_complex(value.re, value.im),
                    point: witness
                        .values
                        .iter()
                        .map(|(k, v)| (k.clone(), format_complex(v.re, v.im)))
                        .collect(),
                });
            }
        }
        self.strength = strength_of(rs.iter().map(|r| &r.verdict));
    }

    pub fn from_verdict(ctx: &Context, subject: impl Into<String>, v: &SymmetryVerdict) -> Check {
        let mut c = Check::new(v.kind.name(), subject, v.outcome.into());
        c.push_residuals(ctx, &v.residuals);
        c.compatibility = v.compatibility.map(|s| s.to_string());
        c.order = v.order;
        c.chain = v.chain.iter().map(|l| l.iter().map(|e| ctx.print(e)).collect()).collect();
        c.notes = v.notes.clone();
        c.on_manifold = v.residuals.iter().any(|r| r.restricted.is_some());
        if c.outcome == CheckOutcome::Refuted && c.strength != Strength::Counterexample {
            c.strength = Strength::None;
        }
        c
    }

    pub fn from_scope(kind: &str, ctx: &Context, subject: impl Into<String>, r: &ScopeReport) -> Check {
        let mut c = Check::new(kind, subject, CheckOutcome::Refuted);
        c.push_residuals(ctx, &r.residuals);
        c.scope = Some(r.scope.to_string());
        c.outcome = match (r.scope, c.strength) {
            (Scope::Fails, _) => CheckOutcome::Refuted,
            (_, Strength::Numeric) => CheckOutcome::VerifiedNumeric,
            _ => CheckOutcome::Verified,
        };
        if r.scope == Scope::Fails {
            c.strength = Strength::Counterexample;
        }
        c
    }

    pub fn derive(&mut self, ctx: &Context, label: impl Into<String>, e: &Expr) {
        self.derived.push(Derived {
            label: label.into(),
            expr: ctx.print(e),
        });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn display_kind(&self) -> &str {
        match self.kind.as_str() {
            "standard-symmetry" => "symmetry",
            "mu-symmetry" => "μ-symmetry",
            "strong-mu-symmetry" => "strong μ-symmetry",
            "gauge-equivalent-symmetry" => "gauge-equivalent symmetry",
            "conditional-symmetry" => "conditional symmetry",
            "partial-symmetry" => "partial symmetry",
            "nonlocal-exponential-symmetry" => "nonlocal exponential symmetry",
            "invariant-function" => "invariant",
            other => other,
        }
    }

    /// One-line summary.
    pub fn headline(&self) -> String {
        let mut s = format!("{}: {}", self.display_kind(), self.outcome.as_str());
        if let Some(sc) = &self.scope {
            let _ = write!(s, " ({sc})");
        } else if self.on_manifold && self.outcome != CheckOutcome::Inconclusive {
            s.push_str(" (on S_Δ)");
        }
        if let Some(o) = self.order {
            let _ = write!(s, "; order ℓ={o}");
        }
        if let Some(c) = &self.compatibility {
            let _ = write!(s, "; compatibility: {c}");
        }
        s
    }
}

pub(crate) fn format_complex(re: f64, im: f64) -> String {
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6}{im:+.6}i")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub trials: usize,
    pub range: f64,
    pub guard: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub fixtures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub disclosures: Vec<String>,
    pub checks: Vec<Check>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str, fixture: &str, title: Option<String>, disclosures: Vec<String>, cfg: &OracleConfig) -> Report {
        Report {
            command: command.to_string(),
            fixtures: vec![fixture.to_string()],
            title,
            disclosures,
            checks: Vec::new(),
            seed: cfg.seed,
            tolerances: Tolerances {
                tol: cfg.tol,
                trials: cfg.trials,
                range: cfg.range,
                guard: cfg.guard,
            },
            exit_code: 0,
        }
    }

    /// 0 all symbolic, 1 anything refuted, 2 numeric-only or inconclusive.
    pub fn compute_exit_code(&self) -> i32 {
        let outs = self.checks.iter().map(|c| c.outcome);
        if outs.clone().any(|o| o == CheckOutcome::Refuted) {
            1
        } else if outs.clone().any(|o| o != CheckOutcome::Verified) || self.checks.is_empty() {
            2
        } else {
            0
        }
    }

    pub fn finish(mut self) -> Report {
        self.exit_code = self.compute_exit_code();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "musym {} ({})", self.command, self.fixtures.join(", "));
        if let Some(t) = &self.title {
            let _ = writeln!(s, "{t}");
        }
        for d in &self.disclosures {
            let _ = writeln!(s, "{d}");
        }
        for c in &self.checks {
            let _ = writeln!(s);
            let _ = writeln!(s, "[{}]", c.subject);
            let _ = writeln!(s, "{}", c.headline());
            let _ = writeln!(s, "  strength: {}", serde_json::to_value(c.strength).unwrap().as_str().unwrap_or(""));
            for d in &c.derived {
                let _ = writeln!(s, "  {} = {}", d.label, d.expr);
            }
            for (k, level) in c.chain.iter().enumerate() {
                let _ = writeln!(s, "  Δ^({k}) = {{{}}}", level.join(", "));
            }
            for r in &c.residuals {
                match &r.restricted {
                    Some(res) => {
                        let _ = writeln!(s, "  {}: {} -> {}  [{}]", r.label, r.expr, res, r.verdict);
                    }
                    None => {
                        let _ = writeln!(s, "  {}: {}  [{}]", r.label, r.expr, r.verdict);
                    }
                }
            }
            for w in &c.witnesses {
                let pts: Vec<String> = w.point.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                let _ = writeln!(s, "  witness for {}: value {} at seed {} {{{}}}", w.residual, w.value, w.seed, pts.join(", "));
            }
            for n in &c.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "seed {:#x}, tol {:e}, trials {}, exit {}",
            self.seed, self.tolerances.tol, self.tolerances.trials, self.exit_code
        );
        s
    }
}
