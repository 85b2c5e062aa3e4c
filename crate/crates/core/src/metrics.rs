//! Image quality metrics.

use crate::error::{Error, Result};
use crate::tensor::DenseArray;

/// SSIM constants: 11x11 Gaussian window with standard deviation 1.5,
/// stabilisers `C1 = (0.01 peak)^2`, `C2 = (0.03 peak)^2`.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Default dynamic range for normalised images.
pub const DEFAULT_PEAK: f64 = 1.0;

/// Peak signal-to-noise ratio in dB. Returns `f64::INFINITY` when the images
/// are identical.
pub fn psnr(reference: &DenseArray, test: &DenseArray, peak: f64) -> Result<f64> {
    reference.check_shape(test.shape())?;
    if !(peak > 0.0) {
        return Err(Error::config(format!("peak must be positive, got {peak}")));
    }
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b))
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Normalised 1-D Gaussian taps.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut w: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" filtering of a `rows x cols` image.
fn filter_valid(img: &[f64], rows: usize, cols: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (or, oc) = (rows - k + 1, cols - k + 1);
    let mut horiz = vec![0.0; rows * oc];
    for i in 0..rows {
        for j in 0..oc {
            let mut s = 0.0;
            for (t, w) in taps.iter().enumerate() {
                s += w * img[i * cols + j + t];
            }
            horiz[i * oc + j] = s;
        }
    }
    let mut out = vec![0.0; or * oc];
    for i in 0..or {
        for j in 0..oc {
            let mut s = 0.0;
            for (t, w) in taps.iter().enumerate() {
                s += w * horiz[(i + t) * oc + j];
            }
            out[i * oc + j] = s;
        }
    }
    out
}

/// Mean structural similarity over all fully contained Gaussian windows.
pub fn ssim(reference: &DenseArray, test: &DenseArray, peak: f64) -> Result<f64> {
    reference.check_shape(test.shape())?;
    let shape = reference.shape();
    if shape.len() != 2 {
        return Err(Error::config("ssim expects 2-D images"));
    }
    let (rows, cols) = (shape[0], shape[1]);
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::config(format!(
            "image {rows}x{cols} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let x = reference.data();
    let y = test.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(x, rows, cols, &taps);
    let my = filter_valid(y, rows, cols, &taps);
    let sxx = filter_valid(&xx, rows, cols, &taps);
    let syy = filter_valid(&yy, rows, cols, &taps);
    let sxy = filter_valid(&xy, rows, cols, &taps);
    let c1 = (SSIM_K1 * peak).powi(2);
    let c2 = (SSIM_K2 * peak).powi(2);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn random_image(seed: u64, n: usize) -> DenseArray {
        let mut rng = stream(seed, Stream::Fixture);
        DenseArray::new(vec![n, n], (0..n * n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    /// Window-by-window SSIM with the same constants, no separable filtering.
    fn ssim_direct(a: &DenseArray, b: &DenseArray, peak: f64) -> f64 {
        let n = a.shape()[0];
        let m = a.shape()[1];
        let w1 = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
        let c1 = (0.01 * peak) * (0.01 * peak);
        let c2 = (0.03 * peak) * (0.03 * peak);
        let mut acc = 0.0;
        let mut count = 0;
        for i in 0..=n - SSIM_WINDOW {
            for j in 0..=m - SSIM_WINDOW {
                let (mut ux, mut uy) = (0.0, 0.0);
                for p in 0..SSIM_WINDOW {
                    for q in 0..SSIM_WINDOW {
                        let w = w1[p] * w1[q];
                        ux += w * a.at2(i + p, j + q);
                        uy += w * b.at2(i + p, j + q);
                    }
                }
                let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                for p in 0..SSIM_WINDOW {
                    for q in 0..SSIM_WINDOW {
                        let w = w1[p] * w1[q];
                        let dx = a.at2(i + p, j + q) - ux;
                        let dy = b.at2(i + p, j + q) - uy;
                        vx += w * dx * dx;
                        vy += w * dy * dy;
                        cxy += w * dx * dy;
                    }
                }
                acc += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        acc / count as f64
    }

    #[test]
    fn psnr_cases() {
        let a = random_image(1, 8);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-10);
        let c = random_image(2, 8);
        let mse: f64 = a.data().iter().zip(c.data()).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / 64.0;
        let want = 10.0 * (1.0 / mse).log10();
        assert!((psnr(&a, &c, 1.0).unwrap() - want).abs() < 1e-10);
        assert_eq!(psnr(&a, &c, 1.0).unwrap(), psnr(&c, &a, 1.0).unwrap());
        assert!(psnr(&a, &c, 0.0).is_err());
    }

    #[test]
    fn ssim_cases() {
        let a = random_image(3, 16);
        assert!((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &a.zeros_like(), 1.0).unwrap() < 1.0);
        let b = random_image(4, 16);
        let got = ssim(&a, &b, 1.0).unwrap();
        let want = ssim_direct(&a, &b, 1.0);
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert!((-1.0..=1.0).contains(&got));
        let small = random_image(5, 8);
        assert!(matches!(ssim(&small, &small, 1.0), Err(Error::Config(_))));
    }
}
