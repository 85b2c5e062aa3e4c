//! Experiment configuration: a TOML file of sections with `key = value`
//! entries. Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::regpath::AlphaRule;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Global seed; every random stream derives from it.
    pub seed: u64,
    pub problem: ProblemSection,
    pub regulariser: RegulariserSection,
    pub solver: SolverSection,
    pub regpath: RegPathSection,
    pub train: TrainSection,
    pub counterexample: CounterexampleSection,
    pub phantom: PhantomSection,
    pub diagnose: DiagnoseSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    /// `deconvolution` (1-D blur) or `ct` (2-D parallel-beam).
    pub kind: String,
    /// Signal length, or image side for `ct`.
    pub n: usize,
    /// Keep every `stride`-th blurred sample.
    pub stride: usize,
    /// Noise norm relative to the clean data norm.
    pub noise: f64,
    pub phantom: String,
    pub angles: usize,
    pub detectors: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            kind: "deconvolution".into(),
            n: 64,
            stride: 1,
            noise: 0.01,
            phantom: "mini-shepp".into(),
            angles: 20,
            detectors: 91,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulariserSection {
    /// `mcp`, `l1`, `quadratic`, `zero` or `awcr`.
    pub kind: String,
    pub lambda: f64,
    pub a: f64,
    /// Weight of `l1`, scale of `quadratic`.
    pub weight: f64,
    /// Trained network for `awcr`.
    pub checkpoint: Option<PathBuf>,
}

impl Default for RegulariserSection {
    fn default() -> Self {
        Self {
            kind: "mcp".into(),
            lambda: 0.05,
            a: 2.0,
            weight: 1.0,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// `pdhgm` or `subgradient`.
    pub kind: String,
    pub alpha: f64,
    /// Step sizes; both default to `suggest_steps` with `margin`.
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub margin: f64,
    pub theta: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub inner_tol: f64,
    /// Subgradient step.
    pub step: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            kind: "pdhgm".into(),
            alpha: 0.02,
            tau: None,
            sigma: None,
            margin: 0.9,
            theta: 1.0,
            max_iters: 2000,
            tol: 0.0,
            inner_tol: 1e-8,
            step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegPathSection {
    pub delta0: f64,
    pub decay: f64,
    pub levels: usize,
    /// `linear` (`c delta`), `constant` (`c`) or `power` (`c delta^exponent`).
    pub rule: String,
    pub c: f64,
    pub exponent: f64,
    pub noiseless: bool,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for RegPathSection {
    fn default() -> Self {
        Self {
            delta0: 0.1,
            decay: 0.5,
            levels: 7,
            rule: "linear".into(),
            c: 1.0,
            exponent: 1.0,
            noiseless: false,
            max_iters: 20000,
            tol: 1e-10,
        }
    }
}

impl RegPathSection {
    pub fn alpha_rule(&self) -> Result<AlphaRule> {
        match self.rule.as_str() {
            "linear" => Ok(AlphaRule::Linear { c: self.c }),
            "constant" => Ok(AlphaRule::Constant { c: self.c }),
            "power" => Ok(AlphaRule::Power {
                c: self.c,
                exponent: self.exponent,
            }),
            other => Err(Error::config(format!(
                "regpath.rule: unknown rule {other:?} (expected linear, constant or power)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub per_arm: usize,
    pub noise_sigma: f64,
    pub epochs: usize,
    pub phase1_epochs: usize,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub smooth: Vec<usize>,
    pub icnn_hidden: Vec<usize>,
    pub slope: f64,
    /// Alignment grid over `[box_lo, box_hi]^2`.
    pub grid: usize,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Also train a convex-only network with this hidden width (0 skips it).
    pub baseline_hidden: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            per_arm: 250,
            noise_sigma: 0.5,
            epochs: 300,
            phase1_epochs: 270,
            lambda_start: 0.1,
            lambda_end: 10.0,
            lr: 2e-3,
            batch_size: 100,
            smooth: vec![16, 16],
            icnn_hidden: vec![8],
            slope: 0.2,
            grid: 48,
            box_lo: -3.0,
            box_hi: 3.0,
            baseline_hidden: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleSection {
    pub gammas: Vec<f64>,
    /// Critical points `m^0 .. m^levels` are expected.
    pub levels: u32,
    pub step: f64,
    /// Half width of the scan for `|x| + cos x + x^2/2`.
    pub bound_range: f64,
}

impl Default for CounterexampleSection {
    fn default() -> Self {
        Self {
            gammas: vec![3.0, 4.0, 6.0],
            levels: 6,
            step: 1e-3,
            bound_range: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub kind: String,
    pub n: usize,
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self {
            kind: "mini-shepp".into(),
            n: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    /// Output directory of an earlier `solve` run.
    pub trace: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
