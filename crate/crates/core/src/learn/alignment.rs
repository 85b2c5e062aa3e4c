//! Comparison of a learned regulariser with the distance to the data manifold.

use super::spiral::SpiralOracle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// Pearson correlation of `R` and `d`; 0 for constant `R`.
    pub correlation: f64,
    /// `max |a + b R - d|` after calibration.
    pub sup_error: f64,
    pub a: f64,
    /// Calibration slope, clamped at 0.
    pub b: f64,
}

/// Least-squares fit `d ~ a + b R` with `b >= 0` on paired samples.
pub fn align_values(r: &[f64], d: &[f64]) -> Alignment {
    let n = r.len() as f64;
    let mr = r.iter().sum::<f64>() / n;
    let md = d.iter().sum::<f64>() / n;
    let (mut srd, mut srr, mut sdd) = (0.0, 0.0, 0.0);
    for (x, y) in r.iter().zip(d) {
        srd += (x - mr) * (y - md);
        srr += (x - mr) * (x - mr);
        sdd += (y - md) * (y - md);
    }
    let (correlation, b) = if srr <= 1e-300 * n || sdd <= 0.0 {
        (0.0, 0.0)
    } else {
        (srd / (srr * sdd).sqrt(), (srd / srr).max(0.0))
    };
    let a = md - b * mr;
    let sup_error = r.iter().zip(d).map(|(x, y)| (a + b * x - y).abs()).fold(0.0, f64::max);
    Alignment {
        correlation,
        sup_error,
        a,
        b,
    }
}

/// Evaluates `reg` and the oracle distance on a `grid_n x grid_n` grid over
/// `[lo, hi]^2` and aligns them.
pub fn distance_alignment(
    reg: impl Fn(&[f64]) -> f64 + Sync,
    oracle: &SpiralOracle,
    lo: f64,
    hi: f64,
    grid_n: usize,
) -> Alignment {
    assert!(grid_n >= 16, "grid_n must be at least 16");
    let step = (hi - lo) / (grid_n - 1) as f64;
    let pairs = crate::exec::map_indexed(grid_n * grid_n, |k| {
        let p = [lo + (k % grid_n) as f64 * step, lo + (k / grid_n) as f64 * step];
        (reg(&p), oracle.distance(p))
    });
    let (r, d): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    align_values(&r, &d)
}
