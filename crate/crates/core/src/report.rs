//! Certificate records shared by the audits and the solver summaries.

use serde_json::{json, Value};

/// Outcome of one empirical or analytic check.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    /// Worst observed value of the audited quantity.
    pub worst: f64,
    /// Threshold the worst value is compared against.
    pub threshold: f64,
    pub samples: usize,
    /// Whether any constant used was a sampled estimate rather than analytic.
    pub empirical: bool,
}

impl Certificate {
    /// Passing iff `worst <= threshold`.
    pub fn at_most(name: impl Into<String>, worst: f64, threshold: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            pass: worst <= threshold,
            worst,
            threshold,
            samples,
            empirical: true,
        }
    }

    pub fn analytic(mut self) -> Self {
        self.empirical = false;
        self
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "pass": self.pass,
            "worst": crate::io::json_number(self.worst),
            "threshold": crate::io::json_number(self.threshold),
            "samples": self.samples,
            "empirical": self.empirical,
        })
    }
}
