use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exec;

use super::{LinearOperator, Operator};

/// Sampling step along each ray, in pixel units.
const RAY_STEP: f64 = 0.25;

/// Parallel-beam line-integral operator stored as an explicit sparse weight
/// table. Rays are sampled every quarter pixel and each sample spreads its
/// length over the four neighbouring pixel centres with bilinear weights.
/// The adjoint uses the transposed table, so the pair is exact.
#[derive(Debug, Clone)]
pub struct Radon {
    grid_n: usize,
    domain: Vec<usize>,
    range: Vec<usize>,
    // CSR over rays
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    // CSC over pixels (the transpose)
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    tweights: Vec<f64>,
}

/// Image is `grid_n x grid_n` with unit pixels centred on the origin; detector
/// bins split the image diagonal evenly. Range shape is `[angles, detectors]`.
pub fn make_radon(grid_n: usize, angles: &[f64], detectors: usize) -> Result<Operator> {
    if grid_n < 8 {
        return Err(Error::config(format!("grid_n must be at least 8, got {grid_n}")));
    }
    if angles.is_empty() || detectors == 0 {
        return Err(Error::config(
            "radon transform needs at least one angle and one detector",
        ));
    }
    Ok(Operator::new(Radon::build(grid_n, angles, detectors)))
}

impl Radon {
    fn build(n: usize, angles: &[f64], detectors: usize) -> Self {
        let span = n as f64 * std::f64::consts::SQRT_2;
        let half = (n as f64 - 1.0) / 2.0;
        let steps = (span / RAY_STEP).ceil() as usize;
        let n_rays = angles.len() * detectors;
        let per_ray: Vec<Vec<(usize, f64)>> = exec::map_indexed(n_rays, |ray| {
            let theta = angles[ray / detectors];
            let d = ray % detectors;
            let s = -span / 2.0 + (d as f64 + 0.5) * span / detectors as f64;
            let (c, sn) = (theta.cos(), theta.sin());
            let mut entries: Vec<(usize, f64)> = Vec::new();
            for k in 0..steps {
                let t = -span / 2.0 + (k as f64 + 0.5) * RAY_STEP;
                let px = s * c - t * sn;
                let py = s * sn + t * c;
                let fc = px + half;
                let fr = half - py;
                let (c0, r0) = (fc.floor(), fr.floor());
                let (ac, ar) = (fc - c0, fr - r0);
                for (dr, wr) in [(0.0, 1.0 - ar), (1.0, ar)] {
                    for (dc, wc) in [(0.0, 1.0 - ac), (1.0, ac)] {
                        let (r, cc) = (r0 + dr, c0 + dc);
                        let w = wr * wc * RAY_STEP;
                        if w > 0.0 && r >= 0.0 && cc >= 0.0 && (r as usize) < n && (cc as usize) < n {
                            entries.push((r as usize * n + cc as usize, w));
                        }
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (col, w) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == col => last.1 += w,
                    _ => merged.push((col, w)),
                }
            }
            merged
        });

        let mut row_ptr = vec![0usize];
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        for r in &per_ray {
            for &(c, w) in r {
                cols.push(c);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }

        let npix = n * n;
        let mut counts = vec![0usize; npix];
        for &c in &cols {
            counts[c] += 1;
        }
        let mut col_ptr = vec![0usize; npix + 1];
        for j in 0..npix {
            col_ptr[j + 1] = col_ptr[j] + counts[j];
        }
        let mut fill = col_ptr.clone();
        let mut rows = vec![0usize; cols.len()];
        let mut tweights = vec![0.0; cols.len()];
        for r in 0..n_rays {
            for idx in row_ptr[r]..row_ptr[r + 1] {
                let c = cols[idx];
                rows[fill[c]] = r;
                tweights[fill[c]] = weights[idx];
                fill[c] += 1;
            }
        }

        Self {
            grid_n: n,
            domain: vec![n, n],
            range: vec![angles.len(), detectors],
            row_ptr,
            cols,
            weights,
            col_ptr,
            rows,
            tweights,
        }
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    /// Nonzero `(ray, pixel, weight)` triples in ray-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.row_ptr.len() - 1)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.cols[i], self.weights[i])))
    }

    /// Weight table as CSV with header `row,col,weight`.
    pub fn weights_csv(&self) -> String {
        let mut s = String::from("row,col,weight\n");
        for (r, c, w) in self.triples() {
            let _ = writeln!(s, "{r},{c},{w:.16e}");
        }
        s
    }
}

impl LinearOperator for Radon {
    fn domain_shape(&self) -> &[usize] {
        &self.domain
    }
    fn range_shape(&self) -> &[usize] {
        &self.range
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        exec::fill_indexed(out, |r| {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.weights[i] * x[self.cols[i]];
            }
            acc
        });
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        exec::fill_indexed(out, |c| {
            let mut acc = 0.0;
            for i in self.col_ptr[c]..self.col_ptr[c + 1] {
                acc += self.tweights[i] * y[self.rows[i]];
            }
            acc
        });
    }
}
