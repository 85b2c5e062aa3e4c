//! Double spiral in the plane: two arms `r(t) = a + b t` offset by `pi`.

use rand::Rng;

use crate::rng::{gaussian_vec, stream, Stream};
use crate::tensor::DenseArray;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralShape {
    pub a: f64,
    pub b: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for SpiralShape {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 0.25,
            t_min: 0.5 * std::f64::consts::PI,
            t_max: 2.5 * std::f64::consts::PI,
        }
    }
}

impl SpiralShape {
    pub fn point(&self, arm: usize, t: f64) -> [f64; 2] {
        let r = self.a + self.b * t;
        let phase = t + arm as f64 * std::f64::consts::PI;
        [r * phase.cos(), r * phase.sin()]
    }
}

/// Distance to the two arms, from a dense discretisation refined by a local
/// search along the curve.
#[derive(Debug, Clone)]
pub struct SpiralOracle {
    pub shape: SpiralShape,
    /// Points per arm.
    pub per_arm: usize,
    points: Vec<[f64; 2]>,
    pitch: f64,
}

impl SpiralOracle {
    pub fn new(shape: SpiralShape, per_arm: usize) -> Self {
        let mut points = Vec::with_capacity(2 * per_arm);
        for arm in 0..2 {
            for i in 0..per_arm {
                points.push(shape.point(arm, Self::param(&shape, per_arm, i)));
            }
        }
        let pitch = points
            .windows(2)
            .take(per_arm - 1)
            .map(|w| ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        Self {
            shape,
            per_arm,
            points,
            pitch,
        }
    }

    fn param(shape: &SpiralShape, per_arm: usize, i: usize) -> f64 {
        shape.t_min + (shape.t_max - shape.t_min) * i as f64 / (per_arm - 1) as f64
    }

    /// Largest gap between consecutive discretisation points.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Minimum distance over the discretisation points only.
    pub fn brute_force(&self, p: [f64; 2]) -> f64 {
        self.points
            .iter()
            .map(|q| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2))
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    pub fn distance(&self, p: [f64; 2]) -> f64 {
        let d2 = |q: [f64; 2]| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
        let (best, _) = self
            .points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, d2(*q)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let arm = best / self.per_arm;
        let i = best % self.per_arm;
        let lo = Self::param(&self.shape, self.per_arm, i.saturating_sub(1));
        let hi = Self::param(&self.shape, self.per_arm, (i + 1).min(self.per_arm - 1));
        // golden-section search on the bracketing segment
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let f = |t: f64| d2(self.shape.point(arm, t));
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let refined = f(0.5 * (a + b));
        refined.min(d2(self.points[best])).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SpiralData {
    /// `[2 n, 2]` samples on the arms.
    pub real: DenseArray,
    /// `real` plus Gaussian noise.
    pub noisy: DenseArray,
    pub oracle: SpiralOracle,
}

pub const ORACLE_POINTS_PER_ARM: usize = 10_000;

/// `n_per_arm` points per arm at uniformly random parameters, and their
/// noisy copies.
pub fn spiral_fixture(n_per_arm: usize, noise_sigma: f64, seed: u64) -> SpiralData {
    assert!(n_per_arm >= 1);
    let shape = SpiralShape::default();
    let mut rng = stream(seed, Stream::Fixture);
    let mut real = Vec::with_capacity(4 * n_per_arm);
    for arm in 0..2 {
        for _ in 0..n_per_arm {
            let t = rng.random_range(shape.t_min..=shape.t_max);
            real.extend(shape.point(arm, t));
        }
    }
    let mut nrng = stream(seed, Stream::Noise);
    let noise = gaussian_vec(&mut nrng, real.len());
    let noisy: Vec<f64> = real.iter().zip(&noise).map(|(a, e)| a + noise_sigma * e).collect();
    SpiralData {
        real: DenseArray::new(vec![2 * n_per_arm, 2], real).expect("shape"),
        noisy: DenseArray::new(vec![2 * n_per_arm, 2], noisy).expect("shape"),
        oracle: SpiralOracle::new(shape, ORACLE_POINTS_PER_ARM),
    }
}
