use crate::error::{Error, Result};
use crate::tensor::DenseArray;

use super::{LinearOperator, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Zero,
    Periodic,
}

/// Centred convolution `(k * x)[i] = sum_j k[j] x[i - (j - c)]` on 1-D or 2-D
/// signals. The adjoint is correlation with the same kernel under the same
/// boundary rule.
#[derive(Debug, Clone)]
pub struct Convolution {
    kernel: Vec<f64>,
    kshape: [usize; 2],
    shape: Vec<usize>,
    sshape: [usize; 2],
    boundary: Boundary,
}

/// Builds a convolution operator for signals of `signal_shape`.
pub fn make_convolution(kernel: &DenseArray, boundary: Boundary, signal_shape: &[usize]) -> Result<Operator> {
    let ks = kernel.shape();
    if ks.len() != signal_shape.len() || !(1..=2).contains(&ks.len()) {
        return Err(Error::config(format!(
            "kernel rank {} must match signal rank {} (1 or 2)",
            ks.len(),
            signal_shape.len()
        )));
    }
    if ks.iter().any(|e| e % 2 == 0) {
        return Err(Error::config(format!("kernel extents must be odd, got {ks:?}")));
    }
    let (kshape, sshape) = if ks.len() == 1 {
        ([1, ks[0]], [1, signal_shape[0]])
    } else {
        ([ks[0], ks[1]], [signal_shape[0], signal_shape[1]])
    };
    Ok(Operator::new(Convolution {
        kernel: kernel.data().to_vec(),
        kshape,
        shape: signal_shape.to_vec(),
        sshape,
        boundary,
    }))
}

impl Convolution {
    fn wrap(&self, i: isize, n: usize) -> Option<usize> {
        match self.boundary {
            Boundary::Zero => (i >= 0 && (i as usize) < n).then_some(i as usize),
            Boundary::Periodic => Some(i.rem_euclid(n as isize) as usize),
        }
    }

    /// `sign = -1` for convolution, `+1` for correlation.
    fn run(&self, x: &[f64], out: &mut [f64], sign: isize) {
        let [kr, kc] = self.kshape;
        let [sr, sc] = self.sshape;
        let (cr, cc) = ((kr / 2) as isize, (kc / 2) as isize);
        for i in 0..sr {
            for j in 0..sc {
                let mut acc = 0.0;
                for a in 0..kr {
                    let di = sign * (a as isize - cr);
                    let Some(ii) = self.wrap(i as isize + di, sr) else {
                        continue;
                    };
                    for b in 0..kc {
                        let dj = sign * (b as isize - cc);
                        if let Some(jj) = self.wrap(j as isize + dj, sc) {
                            acc += self.kernel[a * kc + b] * x[ii * sc + jj];
                        }
                    }
                }
                out[i * sc + j] = acc;
            }
        }
    }
}

impl LinearOperator for Convolution {
    fn domain_shape(&self) -> &[usize] {
        &self.shape
    }
    fn range_shape(&self) -> &[usize] {
        &self.shape
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.run(x, out, -1);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.run(y, out, 1);
    }
}
