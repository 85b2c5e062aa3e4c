//! Synthetic test images on `[-1, 1]^2`, sampled at pixel centres.

use crate::error::{Error, Result};
use crate::tensor::DenseArray;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Discs,
    Bars,
    MiniShepp,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discs" => Ok(Self::Discs),
            "bars" => Ok(Self::Bars),
            "mini-shepp" => Ok(Self::MiniShepp),
            other => Err(Error::config(format!(
                "unknown phantom kind {other:?} (expected discs, bars or mini-shepp)"
            ))),
        }
    }
}

impl PhantomKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Discs => "discs",
            Self::Bars => "bars",
            Self::MiniShepp => "mini-shepp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: DenseArray,
    pub description: String,
}

/// Ellipses of the head phantom: intensity, semi-axes `(a, b)`, centre
/// `(x0, y0)`, rotation in degrees. Intensities add up; the result is
/// clamped to `[0, 1]`.
pub const MINI_SHEPP: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// Discs: intensity, radius, centre.
const DISCS: [[f64; 4]; 4] = [
    [0.6, 0.45, -0.3, 0.25],
    [1.0, 0.2, 0.4, 0.4],
    [0.4, 0.3, 0.3, -0.45],
    [0.8, 0.12, -0.45, -0.5],
];

/// Bars: intensity, half width, distance of the bar pair from the centre
/// line. Bars come in mirrored pairs.
const BARS: [[f64; 3]; 3] = [[1.0, 0.06, 0.15], [0.7, 0.04, 0.45], [0.4, 0.08, 0.75]];

/// Pixel `(i, j)` of an `n x n` image sits at `x = (2j+1)/n - 1`,
/// `y = 1 - (2i+1)/n`.
fn pixel_centre(n: usize, i: usize, j: usize) -> (f64, f64) {
    let nf = n as f64;
    ((2 * j + 1) as f64 / nf - 1.0, 1.0 - (2 * i + 1) as f64 / nf)
}

fn shepp_value(x: f64, y: f64) -> f64 {
    let mut v = 0.0;
    for &[amp, a, b, x0, y0, deg] in &MINI_SHEPP {
        let (s, c) = deg.to_radians().sin_cos();
        let (dx, dy) = (x - x0, y - y0);
        let u = dx * c + dy * s;
        let w = -dx * s + dy * c;
        if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
            v += amp;
        }
    }
    v
}

fn discs_value(x: f64, y: f64) -> f64 {
    DISCS
        .iter()
        .filter(|&&[_, r, x0, y0]| (x - x0).powi(2) + (y - y0).powi(2) <= r * r)
        .map(|d| d[0])
        .fold(0.0, f64::max)
}

fn bars_value(x: f64, y: f64) -> f64 {
    if y.abs() > 0.7 {
        return 0.0;
    }
    let ax = x.abs();
    BARS.iter()
        .filter(|&&[_, hw, off]| (ax - off).abs() <= hw)
        .map(|b| b[0])
        .fold(0.0, f64::max)
}

pub fn make_phantom(kind: PhantomKind, n: usize) -> Result<Phantom> {
    if n < 16 {
        return Err(Error::config(format!("phantom size must be at least 16, got {n}")));
    }
    let f: fn(f64, f64) -> f64 = match kind {
        PhantomKind::Discs => discs_value,
        PhantomKind::Bars => bars_value,
        PhantomKind::MiniShepp => shepp_value,
    };
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = pixel_centre(n, i, j);
            data.push(f(x, y).clamp(0.0, 1.0));
        }
    }
    let description = match kind {
        PhantomKind::Discs => format!("{n}x{n} image of {} overlapping discs", DISCS.len()),
        PhantomKind::Bars => format!("{n}x{n} image of {} mirrored bar pairs", BARS.len()),
        PhantomKind::MiniShepp => format!("{n}x{n} head phantom from {} ellipses", MINI_SHEPP.len()),
    };
    Ok(Phantom {
        image: DenseArray::new(vec![n, n], data)?,
        description,
    })
}
