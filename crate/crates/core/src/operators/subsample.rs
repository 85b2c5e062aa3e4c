use crate::error::{Error, Result};

use super::{LinearOperator, Operator};

/// Restriction to the entries selected by a mask; the adjoint zero-fills.
#[derive(Debug, Clone)]
pub struct Subsample {
    domain: Vec<usize>,
    range: Vec<usize>,
    kept: Vec<usize>,
}

/// Mask entries are kept where `mask[i]` is true. The norm is exactly 1.
pub fn make_subsample(mask: &[bool], domain_shape: &[usize]) -> Result<Operator> {
    let n: usize = domain_shape.iter().product();
    if mask.len() != n {
        return Err(Error::shape(domain_shape, &[mask.len()]));
    }
    let kept: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
    if kept.is_empty() {
        return Err(Error::config("subsampling mask keeps no entries"));
    }
    Ok(Operator::new(Subsample {
        domain: domain_shape.to_vec(),
        range: vec![kept.len()],
        kept,
    }))
}

impl LinearOperator for Subsample {
    fn domain_shape(&self) -> &[usize] {
        &self.domain
    }
    fn range_shape(&self) -> &[usize] {
        &self.range
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &i) in out.iter_mut().zip(&self.kept) {
            *o = x[i];
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (v, &i) in y.iter().zip(&self.kept) {
            out[i] = *v;
        }
    }
}
