//! Self-checking harnesses: finite-difference gradient checks over the
//! autodiff primitives and both models, arithmetic oracles for the four
//! similarity losses, and brute-force oracles for the caption metrics.
//!
//! Each suite returns a [`SuiteReport`] with one [`CheckOutcome`] per
//! checked operation, so a failure names the operation that broke.

mod grad;
mod losses;
mod metrics;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use grad::{gradcheck_suite, GRAD_EPS, GRAD_TOL};
pub use losses::{losses_suite, LossImpls, PairLoss, TripleLoss, LOSS_TOL};
pub use metrics::{metrics_suite, oracle_bleu, oracle_lcs_len, oracle_rouge_l};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Gradcheck,
    Losses,
    Metrics,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Gradcheck, Suite::Losses, Suite::Metrics];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradcheck => "gradcheck",
            Suite::Losses => "losses",
            Suite::Metrics => "metrics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown verify suite {s:?}")))
    }
}

/// Result of checking one operation over many cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error (relative for gradients, absolute otherwise).
    pub max_error: f64,
    pub first_failure: Option<String>,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failures: 0,
            max_error: 0.0,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    /// Records one case with its error against `tol`.
    pub fn record(&mut self, error: f64, tol: f64, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if error > self.max_error || error.is_nan() {
            self.max_error = error;
        }
        if !(error <= tol) {
            self.fail(describe);
        }
    }

    /// Records one case that must hold exactly.
    pub fn require(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.fail(describe);
        }
    }

    fn fail(&mut self, describe: impl FnOnce() -> String) {
        self.failures += 1;
        if self.first_failure.is_none() {
            self.first_failure = Some(describe());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed())
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn max_error(&self) -> f64 {
        self.checks.iter().map(|c| c.max_error).fold(0.0, f64::max)
    }

    pub fn cases(&self) -> usize {
        self.checks.iter().map(|c| c.cases).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = if c.passed() { "ok  " } else { "FAIL" };
            write!(f, "{status} {}/{} cases={} max_err={:.3e}", self.suite, c.name, c.cases, c.max_error)?;
            if let Some(why) = &c.first_failure {
                write!(f, " first failure: {why}")?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "{} {}: {} checks, {} cases, max error {:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite,
            self.checks.len(),
            self.cases(),
            self.max_error()
        )
    }
}

/// Runs a suite with its default sizes.
pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    match suite {
        Suite::Gradcheck => gradcheck_suite(50),
        Suite::Losses => Ok(losses_suite(&LossImpls::default(), 1000, 0)),
        Suite::Metrics => Ok(metrics_suite(0)),
    }
}
