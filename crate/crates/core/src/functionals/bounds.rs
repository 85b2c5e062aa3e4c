//! Split regularisers `R = R_wc + R_sc` and a priori bounds on their critical points.

use std::sync::Arc;

use super::Functional;
use crate::error::{Error, Result};
use crate::tensor::{norm, DenseArray};

/// `R = R_wc + R_sc` with `R_wc >= 0` and `gamma`-weakly convex, `R_sc`
/// `mu_sc`-strongly convex.
#[derive(Clone)]
pub struct SplitRegulariser {
    pub r_wc: Arc<dyn Functional>,
    pub r_sc: Arc<dyn Functional>,
    pub gamma: f64,
    pub mu_sc: f64,
    /// Lipschitz constant of `R_wc` with an "empirical" flag, overriding the
    /// functional's own declaration.
    lipschitz_wc: Option<(f64, bool)>,
}

impl std::fmt::Debug for SplitRegulariser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitRegulariser")
            .field("r_wc", &self.r_wc.name())
            .field("r_sc", &self.r_sc.name())
            .field("gamma", &self.gamma)
            .field("mu_sc", &self.mu_sc)
            .finish()
    }
}

impl SplitRegulariser {
    pub fn new(r_wc: Arc<dyn Functional>, r_sc: Arc<dyn Functional>, gamma: f64, mu_sc: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !(mu_sc > 0.0) {
            return Err(Error::config(format!(
                "need gamma >= 0 and mu_sc > 0, got {gamma}, {mu_sc}"
            )));
        }
        Ok(Self {
            r_wc,
            r_sc,
            gamma,
            mu_sc,
            lipschitz_wc: None,
        })
    }

    /// Attaches a Lipschitz constant for `R_wc`; `empirical` marks sampled estimates.
    pub fn with_lipschitz(mut self, l: f64, empirical: bool) -> Self {
        self.lipschitz_wc = Some((l, empirical));
        self
    }

    pub fn lipschitz_wc(&self, dim: usize) -> Option<(f64, bool)> {
        self.lipschitz_wc
            .or_else(|| self.r_wc.lipschitz(dim).map(|l| (l, false)))
    }

    /// Whether one of the two bound cases applies in dimension `dim`.
    pub fn admissible(&self, dim: usize) -> bool {
        self.gamma < 2.0 * self.mu_sc || self.lipschitz_wc(dim).is_some()
    }
}

impl Functional for SplitRegulariser {
    fn separable(&self) -> bool {
        self.r_wc.separable() && self.r_sc.separable()
    }
    fn name(&self) -> String {
        format!("{} + {}", self.r_wc.name(), self.r_sc.name())
    }
    fn eval(&self, x: &[f64]) -> f64 {
        self.r_wc.eval(x) + self.r_sc.eval(x)
    }
    fn subgrad(&self, x: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; x.len()];
        self.r_wc.subgrad(x, out);
        self.r_sc.subgrad(x, &mut tmp);
        for (o, t) in out.iter_mut().zip(tmp) {
            *o += t;
        }
    }
    fn rho_wc(&self) -> f64 {
        (self.gamma - self.mu_sc).max(0.0)
    }
    fn one_sided(&self, x: f64) -> (f64, f64) {
        let (a, b) = self.r_wc.one_sided(x);
        let (c, d) = self.r_sc.one_sided(x);
        (a + c, b + d)
    }
    fn kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut k = self.r_wc.kinks(lo, hi);
        k.extend(self.r_sc.kinks(lo, hi));
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }
}

/// Radii around `z` containing every critical point of a split regulariser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPointBound {
    /// `(L + ||dR_sc(z)||) / mu_sc`, when `R_wc` is Lipschitz.
    pub lipschitz_radius: Option<f64>,
    /// `||dR_sc(z)|| / (mu_sc - gamma/2) + sqrt(R_wc(z) / (mu_sc - gamma/2))`, when `gamma < 2 mu_sc`.
    pub sqrt_radius: Option<f64>,
    pub radius: f64,
    /// The Lipschitz constant used was a sampled estimate.
    pub lipschitz_empirical: bool,
}

pub fn critical_point_bound(reg: &SplitRegulariser, z: &DenseArray) -> Result<CriticalPointBound> {
    let dim = z.len();
    let mut g = vec![0.0; dim];
    reg.r_sc.subgrad(z.data(), &mut g);
    let gs = norm(&g);
    let lip = reg.lipschitz_wc(dim);
    let lipschitz_radius = lip.map(|(l, _)| (l + gs) / reg.mu_sc);
    let sqrt_radius = if reg.gamma < 2.0 * reg.mu_sc {
        let c = reg.mu_sc - 0.5 * reg.gamma;
        let v = reg.r_wc.eval(z.data());
        if v < 0.0 {
            return Err(Error::Certificate(format!(
                "R_wc({}) is negative at the anchor",
                reg.r_wc.name()
            )));
        }
        Some(gs / c + (v / c).sqrt())
    } else {
        None
    };
    let radius = match (lipschitz_radius, sqrt_radius) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => {
            return Err(Error::Certificate(format!(
                "gamma = {} >= 2 mu_sc = {} and no Lipschitz constant for {}",
                reg.gamma,
                2.0 * reg.mu_sc,
                reg.r_wc.name()
            )))
        }
    };
    Ok(CriticalPointBound {
        lipschitz_radius,
        sqrt_radius,
        radius,
        lipschitz_empirical: lip.is_some_and(|(_, e)| e),
    })
}
