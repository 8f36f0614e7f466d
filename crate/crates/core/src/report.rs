//! Named checks, their outcomes and report rendering.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::expr::{Expr, JetVar, Q};
use crate::index::BundleSpec;
use crate::syntax::print_truncated;

/// `Σ_k Π_j factor_{k,j}`, kept unexpanded so that it can be evaluated
/// factor by factor.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZeroClaim {
    pub terms: Vec<Vec<Expr>>,
}

impl ZeroClaim {
    pub fn single(e: Expr) -> Self {
        ZeroClaim { terms: vec![vec![e]] }
    }

    pub fn push(&mut self, factors: Vec<Expr>) {
        self.terms.push(factors);
    }

    pub fn expand(&self) -> Expr {
        let mut out = Expr::zero();
        for t in &self.terms {
            let mut p = Expr::one();
            for f in t {
                p = &p * f;
            }
            out += p;
        }
        out
    }

    pub fn variables(&self) -> BTreeSet<JetVar> {
        self.terms
            .iter()
            .flatten()
            .flat_map(|f| f.variables())
            .collect()
    }

    pub fn eval_at(&self, point: &HashMap<JetVar, Q>) -> Result<Q> {
        let mut total = Q::default();
        for t in &self.terms {
            let mut p = Q::from_integer(1.into());
            for f in t {
                p *= f.eval_at(point)?;
            }
            total += p;
        }
        Ok(total)
    }
}

/// A seeded rational point for the given variables; numerators in
/// `[-9, 9]`, denominators in `[1, 5]`.
pub fn random_point(vars: &BTreeSet<JetVar>, seed: u64) -> HashMap<JetVar, Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vars.iter()
        .map(|v| {
            let n: i64 = rng.gen_range(-9..=9);
            let d: i64 = rng.gen_range(1..=5);
            (v.clone(), Q::new(n.into(), d.into()))
        })
        .collect()
}

/// One claimed zero: the symbolic residual and an oracle that evaluates the
/// same quantity along an independent path.
#[derive(Clone, Debug)]
pub struct ClaimRow {
    pub label: String,
    pub residual: Expr,
    pub oracle: ZeroClaim,
}

impl ClaimRow {
    pub fn new(label: impl Into<String>, residual: Expr, oracle: ZeroClaim) -> Self {
        ClaimRow {
            label: label.into(),
            residual,
            oracle,
        }
    }

    /// Row whose oracle is its own residual.
    pub fn plain(label: impl Into<String>, residual: Expr) -> Self {
        let oracle = ZeroClaim::single(residual.clone());
        ClaimRow::new(label, residual, oracle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// A named check: passes iff every row residual is zero and no additional
/// failure was recorded.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub spec: Arc<BundleSpec>,
    pub rows: Vec<ClaimRow>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub skipped: Option<String>,
    pub millis: u64,
}

impl Check {
    pub fn new(name: impl Into<String>, spec: Arc<BundleSpec>) -> Self {
        Check {
            name: name.into(),
            spec,
            rows: Vec::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            skipped: None,
            millis: 0,
        }
    }

    pub fn skipped(name: impl Into<String>, spec: Arc<BundleSpec>, reason: impl Into<String>) -> Self {
        let mut c = Check::new(name, spec);
        c.skipped = Some(reason.into());
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn status(&self) -> Status {
        if self.skipped.is_some() {
            Status::Skipped
        } else if self.failures.is_empty() && self.rows.iter().all(|r| r.residual.is_zero()) {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn passed(&self) -> bool {
        self.status() == Status::Pass
    }

    /// For each row with a zero residual, evaluates its oracle at `points`
    /// seeded rational points and requires exactly zero each time.
    pub fn numeric_agreement(&self, seed: u64, points: usize) -> Result<bool> {
        for (k, row) in self.rows.iter().enumerate() {
            if !row.residual.is_zero() {
                continue;
            }
            let vars = row.oracle.variables();
            for p in 0..points {
                let s = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((k as u64) << 20 | p as u64);
                let point = random_point(&vars, s);
                if row.oracle.eval_at(&point)? != Q::default() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn outcome(&self, max_terms: usize) -> CheckOutcome {
        let status = self.status();
        let mut residual_lines = Vec::new();
        for f in &self.failures {
            residual_lines.push(f.clone());
        }
        for row in self.rows.iter().filter(|r| !r.residual.is_zero()) {
            residual_lines.push(format!(
                "{}: {}",
                row.label,
                print_truncated(&row.residual, &self.spec, max_terms)
            ));
        }
        let mut notes = self.notes.clone();
        if let Some(reason) = &self.skipped {
            notes.insert(0, reason.clone());
        }
        CheckOutcome {
            check: self.name.clone(),
            status,
            residual: (!residual_lines.is_empty()).then(|| residual_lines.join("\n")),
            millis: self.millis,
            note: (!notes.is_empty()).then(|| notes.join("; ")),
        }
    }
}

pub type Job<'a> = Box<dyn Fn() -> Result<Check> + Send + Sync + 'a>;

/// Runs jobs concurrently, timing each; results are sorted by check name.
pub fn run_jobs(jobs: Vec<Job<'_>>) -> Result<Vec<Check>> {
    let mut checks = jobs
        .into_par_iter()
        .map(|job| {
            let start = Instant::now();
            let mut c = job()?;
            c.millis = start.elapsed().as_millis() as u64;
            Ok(c)
        })
        .collect::<Result<Vec<Check>>>()?;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(checks)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    pub millis: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn from_checks<'a>(checks: impl IntoIterator<Item = &'a Check>, max_terms: usize) -> Self {
        let mut checks: Vec<CheckOutcome> = checks.into_iter().map(|c| c.outcome(max_terms)).collect();
        checks.sort_by(|a, b| a.check.cmp(&b.check));
        VerificationReport { checks }
    }

    /// True iff no check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(&self.checks).expect("report serializes")
    }

    pub fn render_text(&self, color: bool) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let (tag, code) = match c.status {
                Status::Pass => ("PASS", "32"),
                Status::Fail => ("FAIL", "31"),
                Status::Skipped => ("SKIP", "33"),
            };
            let tag = if color {
                format!("\x1b[{code}m{tag}\x1b[0m")
            } else {
                tag.to_string()
            };
            out.push_str(&format!("{tag}  {}  ({} ms)\n", c.check, c.millis));
            if let Some(n) = &c.note {
                out.push_str(&format!("      note: {n}\n"));
            }
            if let Some(r) = &c.residual {
                for line in r.lines() {
                    out.push_str(&format!("      {line}\n"));
                }
            }
        }
        let failed = self.checks.iter().filter(|c| c.status == Status::Fail).count();
        let skipped = self.checks.iter().filter(|c| c.status == Status::Skipped).count();
        out.push_str(&format!(
            "{} checks, {} failed, {} skipped\n",
            self.checks.len(),
            failed,
            skipped
        ));
        out
    }
}
