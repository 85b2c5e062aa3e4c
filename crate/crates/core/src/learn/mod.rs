//! Learned weakly convex regularisers: a smooth network feeding an input
//! convex network, trained adversarially on toy data.

mod alignment;
mod checkpoint;
mod loss;
mod nets;
mod spiral;
mod train;

use std::sync::Arc;

pub use alignment::{align_values, distance_alignment, Alignment};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT};
pub use loss::{adversarial_loss, interpolation_points, regression_loss, LossParts};
pub use nets::{
    default_mu0, silu3, Architecture, Awcr, Dense, Icnn, SmoothNet, Tape, SILU_CURVATURE_SUP, SILU_SLOPE_SUP,
};
pub use spiral::{spiral_fixture, SpiralData, SpiralOracle, SpiralShape, ORACLE_POINTS_PER_ARM};
pub use train::{
    log_table, train_awcr, universal_demo, Adam, DemoBudget, DemoResult, Diverged, EpochLog, RmsProp, TrainSchedule,
    Trained, TRAIN_LOG_COLUMNS,
};

use crate::error::Result;
use crate::functionals::{Functional, Quadratic, SplitRegulariser};

/// A network as a `Functional`. With `include_mu0` the quadratic term is part
/// of the value; `offset` is added to the value.
#[derive(Debug, Clone)]
pub struct NetFunctional {
    pub net: Awcr,
    pub include_mu0: bool,
    pub offset: f64,
}

impl NetFunctional {
    pub fn new(mut net: Awcr, include_mu0: bool, offset: f64) -> Self {
        if !include_mu0 {
            net.mu0 = 0.0;
        }
        Self {
            net,
            include_mu0,
            offset,
        }
    }
}

impl Functional for NetFunctional {
    fn name(&self) -> String {
        if self.include_mu0 {
            "awcr".into()
        } else {
            "iwcnn".into()
        }
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.net.eval(x) + self.offset
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.net.value_grad(x).1);
    }
    fn rho_wc(&self) -> f64 {
        (self.net.declared_modulus().0 - self.net.mu0).max(0.0)
    }
    fn lipschitz(&self, _dim: usize) -> Option<f64> {
        None
    }
}

/// `R_wc = iwcnn + offset`, `R_sc = (mu0/2) ||x||^2`, with `offset` making
/// `R_wc` nonnegative (usually a sampled minimum).
pub fn awcr_split(net: &Awcr, offset: f64) -> Result<SplitRegulariser> {
    let wc = NetFunctional::new(net.clone(), false, offset);
    let gamma = wc.rho_wc();
    SplitRegulariser::new(Arc::new(wc), Arc::new(Quadratic::new(net.mu0)), gamma, net.mu0)
}
