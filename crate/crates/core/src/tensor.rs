//! Dense real arrays and the inner-product geometry used by the solvers.

use crate::error::{Error, Result};
use crate::operators::Operator;

/// Flat row-major `f64` array with shape metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::config(format!("extents must be positive, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape {
                expected: shape,
                found: vec![data.len()],
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; n],
        }
    }

    /// One-dimensional array.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape(&shape, &self.shape));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn check_shape(&self, expected: &[usize]) -> Result<()> {
        if self.shape != expected {
            return Err(Error::shape(expected, &self.shape));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &DenseArray) -> Result<()> {
        self.check_shape(&other.shape)?;
        axpy(a, &other.data, &mut self.data);
        Ok(())
    }

    pub fn sub(&self, other: &DenseArray) -> Result<DenseArray> {
        self.check_shape(&other.shape)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn add(&self, other: &DenseArray) -> Result<DenseArray> {
        self.check_shape(&other.shape)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self {
            shape: self.shape.clone(),
            data,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseArray {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element at a 2-D index; panics if the array is not 2-D.
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j]
    }

    /// Row `i` of a 2-D array.
    pub fn row(&self, i: usize) -> &[f64] {
        assert_eq!(self.shape.len(), 2);
        let c = self.shape[1];
        &self.data[i * c..(i + 1) * c]
    }
}

/// Primal/dual pair `z = (x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub x: DenseArray,
    pub y: DenseArray,
}

impl ProductPoint {
    pub fn new(x: DenseArray, y: DenseArray) -> Self {
        Self { x, y }
    }

    pub fn zeros(op: &Operator) -> Self {
        Self {
            x: DenseArray::zeros(op.domain_shape()),
            y: DenseArray::zeros(op.range_shape()),
        }
    }

    pub fn sub(&self, other: &ProductPoint) -> Result<ProductPoint> {
        Ok(ProductPoint {
            x: self.x.sub(&other.x)?,
            y: self.y.sub(&other.y)?,
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.norm_sq() + self.y.norm_sq()
    }
}

/// Plain left-to-right dot product.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).fold(0.0, |acc, (a, b)| acc + a * b)
}

pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Hilbert inner product `<u, v>`.
pub fn inner(u: &DenseArray, v: &DenseArray) -> Result<f64> {
    u.check_shape(v.shape())?;
    Ok(dot(u.data(), v.data()))
}

/// `||z||_M^2 = (1/tau)||x||^2 - 2<Ax, y> + (1/sigma)||y||^2`.
pub fn m_norm_sq(z: &ProductPoint, tau: f64, sigma: f64, op: &Operator) -> Result<f64> {
    if !(tau > 0.0) || !(sigma > 0.0) {
        return Err(Error::config(format!(
            "step sizes must be positive (tau = {tau}, sigma = {sigma})"
        )));
    }
    z.x.check_shape(op.domain_shape())?;
    z.y.check_shape(op.range_shape())?;
    let ax = op.apply(&z.x)?;
    Ok(z.x.norm_sq() / tau - 2.0 * inner(&ax, &z.y)? + z.y.norm_sq() / sigma)
}

/// Applies the preconditioner `M = [[I/tau, -A*], [-theta A, I/sigma]]`.
pub fn apply_m(z: &ProductPoint, tau: f64, sigma: f64, theta: f64, op: &Operator) -> Result<ProductPoint> {
    let mut mx = z.x.scaled(1.0 / tau);
    mx.axpy(-1.0, &op.adjoint(&z.y)?)?;
    let mut my = z.y.scaled(1.0 / sigma);
    my.axpy(-theta, &op.apply(&z.x)?)?;
    Ok(ProductPoint { x: mx, y: my })
}
