//! Per-iteration records of a solver run and their serialisation.

use serde_json::{json, Value};

use super::PdConfig;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, json_number, numeric_column, Table};
use crate::report::Certificate;
use crate::tensor::{DenseArray, ProductPoint};

pub const TRACE_COLUMNS: [&str; 8] = [
    "k",
    "L",
    "lyapunov",
    "descent_margin",
    "residual_M",
    "dx_norm",
    "dy_norm",
    "gap",
];

/// Row `k` describes `z^k`; differences are `z^{k-1} - z^k`. Undefined
/// entries are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    /// `L(z^k)`
    pub lagrangian: f64,
    /// `L(z^k) + ||z^k - z^{k-1}||_M^2 / 2`
    pub lyapunov: f64,
    /// Slack in the descent inequality between rows `k-1` and `k`.
    pub descent_margin: f64,
    /// `||M (z^{k-1} - z^k)||`
    pub residual_m: f64,
    pub dx_norm: f64,
    pub dy_norm: f64,
    /// Ergodic gap at the running means of `z^1..z^k`, without offset.
    pub gap: f64,
}

impl TraceRow {
    pub(crate) fn initial(lagrangian: f64) -> Self {
        Self {
            k: 0,
            lagrangian,
            lyapunov: lagrangian,
            descent_margin: f64::NAN,
            residual_m: f64::NAN,
            dx_norm: f64::NAN,
            dy_norm: f64::NAN,
            gap: f64::NAN,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub config: PdConfig,
    /// Weak-convexity modulus of `R` used by the certificates.
    pub rho: f64,
    /// Strong-convexity modulus of `F*`.
    pub mu: f64,
    pub rows: Vec<TraceRow>,
    pub final_point: ProductPoint,
    /// All iterates including `z^0`, when requested.
    pub iterates: Vec<ProductPoint>,
    pub probe: Option<ProductPoint>,
    pub converged: bool,
}

impl SolverTrace {
    pub(crate) fn new(config: PdConfig, rho: f64, mu: f64, probe: Option<ProductPoint>) -> Self {
        let empty = DenseArray::zeros(&[1]);
        Self {
            config,
            rho,
            mu,
            rows: Vec::new(),
            final_point: ProductPoint::new(empty.clone(), empty),
            iterates: Vec::new(),
            probe,
            converged: false,
        }
    }

    /// Number of updates performed.
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn final_residual(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.residual_m)
    }

    pub fn min_descent_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.descent_margin)
            .filter(|m| !m.is_nan())
            .fold(f64::INFINITY, f64::min)
    }

    /// `(sum ||dx||^2, sum ||dy||^2)`.
    pub fn square_sums(&self) -> (f64, f64) {
        self.rows.iter().skip(1).fold((0.0, 0.0), |(a, b), r| {
            (a + r.dx_norm * r.dx_norm, b + r.dy_norm * r.dy_norm)
        })
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&TRACE_COLUMNS);
        for r in &self.rows {
            let mut row = vec![r.k.to_string()];
            row.extend(
                [
                    r.lagrangian,
                    r.lyapunov,
                    r.descent_margin,
                    r.residual_m,
                    r.dx_norm,
                    r.dy_norm,
                    r.gap,
                ]
                .iter()
                .map(|&v| fmt_f64(v)),
            );
            t.push(row);
        }
        t
    }

    pub fn config_json(&self) -> Value {
        let c = &self.config;
        json!({
            "tau": json_number(c.tau),
            "sigma": json_number(c.sigma),
            "theta_relax": json_number(c.theta_relax),
            "max_iters": c.max_iters,
            "inner_tol": json_number(c.inner_tol),
            "tol": json_number(c.tol),
            "seed": c.seed,
            "override_constraints": c.override_constraints,
            "rho": json_number(self.rho),
            "mu": json_number(self.mu),
        })
    }

    pub fn summary_json(&self, certificates: &[Certificate]) -> Value {
        json!({
            "config": self.config_json(),
            "certificates": certificates.iter().map(Certificate::to_json).collect::<Vec<_>>(),
            "final_residual": json_number(self.final_residual()),
            "iterations": self.iterations(),
            "converged": self.converged,
        })
    }

    /// Rebuilds a trace (rows and configuration only) from its CSV table and
    /// summary configuration.
    pub fn from_files(table: &Table, config: &Value) -> Result<SolverTrace> {
        let get = |name: &str| -> Result<f64> {
            config
                .get(name)
                .and_then(crate::io::json_f64)
                .ok_or_else(|| Error::config(format!("summary config lacks {name}")))
        };
        let mut cfg = PdConfig::new(get("tau")?, get("sigma")?);
        cfg.theta_relax = get("theta_relax")?;
        cfg.tol = get("tol").unwrap_or(0.0);
        cfg.inner_tol = get("inner_tol").unwrap_or(cfg.inner_tol);
        cfg.max_iters = get("max_iters").map(|v| v as usize).unwrap_or(0);
        cfg.override_constraints = config
            .get("override_constraints")
            .and_then(Value::as_bool)
            .unwrap_or(false);
        let cols: Vec<Vec<f64>> = TRACE_COLUMNS
            .iter()
            .map(|c| numeric_column(table, c))
            .collect::<Result<_>>()?;
        let mut trace = SolverTrace::new(cfg, get("rho")?, get("mu")?, None);
        for i in 0..table.rows.len() {
            trace.rows.push(TraceRow {
                k: cols[0][i] as usize,
                lagrangian: cols[1][i],
                lyapunov: cols[2][i],
                descent_margin: cols[3][i],
                residual_m: cols[4][i],
                dx_norm: cols[5][i],
                dy_norm: cols[6][i],
                gap: cols[7][i],
            });
        }
        Ok(trace)
    }
}
