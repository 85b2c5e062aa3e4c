//! Certificates and diagnostics computed from solver traces.

use super::{SolverTrace, TraceRow};
use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::report::Certificate;
use crate::tensor::{m_norm_sq, ProductPoint};

/// Descent margins below `-DESCENT_TOL` fail the descent certificate.
pub const DESCENT_TOL: f64 = 1e-10;

fn require_unit_theta(trace: &SolverTrace) -> Result<()> {
    if trace.config.theta_relax != 1.0 {
        return Err(Error::Certificate(format!(
            "descent certificates need theta_relax = 1, run used {}",
            trace.config.theta_relax
        )));
    }
    Ok(())
}

/// Every recorded descent margin is at least `-DESCENT_TOL`.
pub fn descent_certificate(trace: &SolverTrace) -> Result<Certificate> {
    require_unit_theta(trace)?;
    let margins: Vec<f64> = trace
        .rows
        .iter()
        .map(|r| r.descent_margin)
        .filter(|m| !m.is_nan())
        .collect();
    if margins.is_empty() {
        return Err(Error::Certificate("trace too short for a descent margin".into()));
    }
    let worst = margins.iter().fold(f64::NEG_INFINITY, |a, &m| a.max(-m));
    Ok(Certificate::at_most("descent", worst, DESCENT_TOL, margins.len()).analytic())
}

/// `sqrt(2 (||dx||^2/tau + ||dy||^2/sigma))`, an upper bound on `||dz||_M`
/// whenever `tau sigma ||A||^2 < 1`.
pub fn residual_bound_quantity(row: &TraceRow, tau: f64, sigma: f64) -> f64 {
    (2.0 * (row.dx_norm * row.dx_norm / tau + row.dy_norm * row.dy_norm / sigma)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualCertificate {
    pub pass: bool,
    /// First `K` at which the bound fails.
    pub first_violation: Option<usize>,
    /// Largest ratio of the running minimum to its bound.
    pub worst_ratio: f64,
    pub checked: usize,
    pub nu: f64,
}

impl ResidualCertificate {
    pub fn to_certificate(&self) -> Certificate {
        let mut c = Certificate::at_most("min_residual", self.worst_ratio, 1.0, self.checked).analytic();
        c.pass = self.pass;
        c
    }
}

/// Checks, for every `K`, that the smallest step residual among the first
/// `K` updates obeys `min_k r_k <= 2/sqrt(nu K) * sqrt(lyap_1 - lyap_{K+1})`
/// with `nu = min(mu sigma - 3, 1 - rho tau)`.
pub fn min_residual_certificate(trace: &SolverTrace) -> Result<ResidualCertificate> {
    require_unit_theta(trace)?;
    let (tau, sigma) = (trace.config.tau, trace.config.sigma);
    let nu = (trace.mu * sigma - 3.0).min(1.0 - trace.rho * tau);
    if !(nu > 0.0) {
        return Err(Error::Certificate(format!(
            "nu = min(mu sigma - 3, 1 - rho tau) = {nu} is not positive"
        )));
    }
    let rows = &trace.rows;
    if rows.len() < 3 {
        return Err(Error::Certificate("trace needs at least two updates".into()));
    }
    let top = rows[1].lyapunov;
    let mut running = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut first_violation = None;
    let mut checked = 0;
    for big_k in 1..rows.len() - 1 {
        running = running.min(residual_bound_quantity(&rows[big_k + 1], tau, sigma));
        let drop = (top - rows[big_k + 1].lyapunov).max(0.0);
        let bound = 2.0 / (nu * big_k as f64).sqrt() * drop.sqrt();
        let slack = 1e-12 * (1.0 + bound);
        let ratio = running / (bound + slack);
        if ratio.is_nan() {
            continue;
        }
        checked += 1;
        worst_ratio = worst_ratio.max(ratio);
        if running > bound + slack && first_violation.is_none() {
            first_violation = Some(big_k);
        }
    }
    Ok(ResidualCertificate {
        pass: first_violation.is_none(),
        first_violation,
        worst_ratio,
        checked,
        nu,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicFit {
    /// `(rho ||probe_x - x_hat||^2 - mu ||probe_y - y_hat||^2) / 2`
    pub offset: f64,
    /// Offset-corrected gaps; entry `k - 1` belongs to iteration `k`.
    pub gaps: Vec<f64>,
    /// Least-squares coefficient of `log k / k` over the fit window.
    pub c: f64,
    /// `||g - c log k/k|| / ||g||` over the fit window.
    pub rel_residual: f64,
    pub window: (usize, usize),
}

/// Offset-corrected ergodic gaps of a run made with a probe point, and the
/// fit `g_k ~ c log k / k` over `k in [k_lo, k_hi]`.
pub fn ergodic_gap(trace: &SolverTrace, zhat: &ProductPoint, k_lo: usize, k_hi: usize) -> Result<ErgodicFit> {
    let probe = trace
        .probe
        .as_ref()
        .ok_or_else(|| Error::config("ergodic gap needs a run with a probe point"))?;
    let n = trace.iterations();
    if n < 100 {
        return Err(Error::config(format!(
            "ergodic gap needs at least 100 iterations, trace has {n}"
        )));
    }
    let offset = 0.5 * (trace.rho * probe.x.sub(&zhat.x)?.norm_sq() - trace.mu * probe.y.sub(&zhat.y)?.norm_sq());
    let gaps: Vec<f64> = trace.rows[1..].iter().map(|r| r.gap - offset).collect();
    let hi = k_hi.min(n);
    let lo = k_lo.max(1);
    if lo >= hi {
        return Err(Error::config(format!("empty fit window [{k_lo}, {k_hi}]")));
    }
    let (mut gf, mut ff, mut gg) = (0.0, 0.0, 0.0);
    for k in lo..=hi {
        let f = (k as f64).ln() / k as f64;
        let g = gaps[k - 1];
        gf += g * f;
        ff += f * f;
        gg += g * g;
    }
    let c = gf / ff;
    let mut rr = 0.0;
    for k in lo..=hi {
        let f = (k as f64).ln() / k as f64;
        let d = gaps[k - 1] - c * f;
        rr += d * d;
    }
    Ok(ErgodicFit {
        offset,
        gaps,
        c,
        rel_residual: if gg > 0.0 { (rr / gg).sqrt() } else { 0.0 },
        window: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateClass {
    /// Distance reached exactly zero at this iteration.
    Finite {
        steps: usize,
    },
    /// `e_k ~ C rate^k`.
    Linear {
        rate: f64,
    },
    /// `e_k ~ C k^exponent`.
    Power {
        exponent: f64,
    },
    Inconclusive,
}

/// Least squares `v ~ a + s u`; returns `(s, rss)`.
fn line_fit(u: &[f64], v: &[f64]) -> (f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        suv += (a - mu) * (b - mv);
        suu += (a - mu) * (a - mu);
    }
    let s = suv / suu;
    let rss = u
        .iter()
        .zip(v)
        .map(|(a, b)| {
            let r = b - (mv + s * (a - mu));
            r * r
        })
        .sum();
    (s, rss)
}

/// Classifies a distance sequence `e_0, e_1, ...` to the limit.
pub fn classify_distances(e: &[f64]) -> RateClass {
    if e.is_empty() || e.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return RateClass::Inconclusive;
    }
    let e0 = e[0];
    if e0 == 0.0 {
        return RateClass::Finite { steps: 0 };
    }
    if let Some(k) = e.iter().position(|&v| v == 0.0) {
        if e[k - 1] > 1e-8 * e0 && e[k..].iter().all(|&v| v == 0.0) {
            return RateClass::Finite { steps: k };
        }
    }
    if *e.last().unwrap() > e0 {
        return RateClass::Inconclusive;
    }
    let floor = 1e-13 * e0;
    let end = e.iter().skip(1).position(|&v| v <= floor).map_or(e.len(), |p| p + 1);
    if end < 6 {
        return RateClass::Inconclusive;
    }
    let ks: Vec<f64> = (1..end).map(|k| k as f64).collect();
    let logk: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let loge: Vec<f64> = e[1..end].iter().map(|v| v.ln()).collect();
    let (s_lin, rss_lin) = line_fit(&ks, &loge);
    let (s_pow, rss_pow) = line_fit(&logk, &loge);
    if rss_lin <= rss_pow {
        RateClass::Linear { rate: s_lin.exp() }
    } else {
        RateClass::Power { exponent: s_pow }
    }
}

/// Classifies the convergence of the stored iterates to `zhat` in the
/// `M`-norm. Needs a run with `keep_iterates`.
pub fn rate_classify(trace: &SolverTrace, zhat: &ProductPoint, op: &Operator) -> Result<RateClass> {
    if trace.iterates.is_empty() {
        return Err(Error::config("rate classification needs stored iterates"));
    }
    let (tau, sigma) = (trace.config.tau, trace.config.sigma);
    let mut e = Vec::with_capacity(trace.iterates.len());
    for z in &trace.iterates {
        let d = z.sub(zhat)?;
        e.push(m_norm_sq(&d, tau, sigma, op)?.max(0.0).sqrt());
    }
    Ok(classify_distances(&e))
}
