//! Three-valued checker output.

use serde::{Deserialize, Serialize};

use crate::metric::Pt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    Refuted,
    Inconclusive,
}

impl Status {
    /// Process exit code for the scenario runner.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::Refuted => 1,
            Status::Inconclusive => 2,
        }
    }
}

/// How far a verdict reaches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scope {
    /// Settled by an exact argument for every time step.
    Analytic,
    /// Settled for the scanned time range only.
    UpToHorizon { horizon: u64 },
    /// Settled exactly for a rational approximant of the rotation angle.
    Approximant { convergent: String },
}

/// A point `x` of a test region whose `n`-th iterate lands within the
/// tolerance of the target region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub pair: usize,
    pub n: u64,
    pub point: Pt,
    pub distance: f64,
}

/// An explicit failing record backing a refutation, or the closest miss
/// behind an inconclusive result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub pair: usize,
    pub times: Vec<u64>,
    pub horizon: u64,
    pub point: Option<Pt>,
    pub distance: Option<f64>,
    pub reason: String,
}

/// Per-pair eventual threshold `N` for mixing-type checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairThreshold {
    pub pair: usize,
    pub start: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub scope: Scope,
    pub witnesses: Vec<Witness>,
    pub failures: Vec<Failure>,
    pub thresholds: Vec<PairThreshold>,
    pub note: String,
}

impl Verdict {
    pub fn new(status: Status, scope: Scope, note: impl Into<String>) -> Self {
        Self {
            status,
            scope,
            witnesses: Vec::new(),
            failures: Vec::new(),
            thresholds: Vec::new(),
            note: note.into(),
        }
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == Status::Refuted
    }

    pub fn with_witnesses(mut self, witnesses: Vec<Witness>) -> Self {
        self.witnesses = witnesses;
        self
    }

    pub fn with_failures(mut self, failures: Vec<Failure>) -> Self {
        self.failures = failures;
        self
    }

    pub fn with_thresholds(mut self, thresholds: Vec<PairThreshold>) -> Self {
        self.thresholds = thresholds;
        self
    }
}
