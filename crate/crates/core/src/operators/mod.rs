//! Forward models `A` with exact adjoints, norm estimation and adjoint checks.

mod convolution;
mod norm;
mod radon;
mod subsample;

pub use convolution::{make_convolution, Boundary, Convolution};
pub use norm::{operator_norm, NormEstimate};
pub use radon::{make_radon, Radon};
pub use subsample::{make_subsample, Subsample};

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::{gaussian_vec, stream, Stream};
use crate::tensor::{dot, norm, DenseArray};

/// Largest domain size for which a dense matrix is materialised.
pub const DENSE_COLUMN_LIMIT: usize = 4096;

/// A linear map between flat arrays of fixed shapes together with its adjoint.
pub trait LinearOperator: Send + Sync + Debug {
    fn domain_shape(&self) -> &[usize];
    fn range_shape(&self) -> &[usize];
    /// `out = A x`; slices have the flattened domain/range lengths.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^* y`.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);
}

/// Shared handle to a [`LinearOperator`] plus its cached norm estimate.
#[derive(Debug, Clone)]
pub struct Operator {
    inner: Arc<dyn LinearOperator>,
    norm: Option<NormEstimate>,
}

impl Operator {
    pub fn new(op: impl LinearOperator + 'static) -> Self {
        Self {
            inner: Arc::new(op),
            norm: None,
        }
    }

    pub fn from_arc(inner: Arc<dyn LinearOperator>) -> Self {
        Self { inner, norm: None }
    }

    pub fn domain_shape(&self) -> &[usize] {
        self.inner.domain_shape()
    }

    pub fn range_shape(&self) -> &[usize] {
        self.inner.range_shape()
    }

    pub fn domain_len(&self) -> usize {
        self.domain_shape().iter().product()
    }

    pub fn range_len(&self) -> usize {
        self.range_shape().iter().product()
    }

    pub fn apply(&self, x: &DenseArray) -> Result<DenseArray> {
        x.check_shape(self.domain_shape())?;
        let mut out = DenseArray::zeros(self.range_shape());
        self.inner.apply_into(x.data(), out.data_mut());
        Ok(out)
    }

    pub fn adjoint(&self, y: &DenseArray) -> Result<DenseArray> {
        y.check_shape(self.range_shape())?;
        let mut out = DenseArray::zeros(self.domain_shape());
        self.inner.adjoint_into(y.data(), out.data_mut());
        Ok(out)
    }

    pub fn raw(&self) -> &dyn LinearOperator {
        self.inner.as_ref()
    }

    pub fn norm_estimate(&self) -> Option<&NormEstimate> {
        self.norm.as_ref()
    }

    /// Runs the power method and caches the result.
    pub fn with_norm_estimate(mut self, max_iters: usize, tol: f64, seed: u64) -> Result<Self> {
        let est = operator_norm(&self, max_iters, tol, seed)?;
        self.norm = Some(est);
        Ok(self)
    }

    /// Installs a known norm (e.g. an analytic value) as a converged estimate.
    pub fn with_known_norm(mut self, value: f64) -> Self {
        self.norm = Some(NormEstimate {
            value,
            converged: true,
            iterations: 0,
            history: vec![value],
        });
        self
    }

    /// The cached norm, provided the power method converged.
    pub fn certified_norm(&self) -> Result<f64> {
        match &self.norm {
            Some(n) if n.converged => Ok(n.value),
            Some(n) => Err(Error::config(format!(
                "operator norm estimate did not converge after {} iterations",
                n.iterations
            ))),
            None => Err(Error::config("operator norm has not been estimated")),
        }
    }

    /// Dense matrix of the operator, column by column.
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.domain_len();
        let m = self.range_len();
        if n > DENSE_COLUMN_LIMIT {
            return Err(Error::Unsupported(format!(
                "dense materialisation limited to {DENSE_COLUMN_LIMIT} columns, operator has {n}"
            )));
        }
        let mut mat = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.inner.apply_into(&e, &mut col);
            for i in 0..m {
                mat[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        Ok(mat)
    }
}

/// Dense row-major `rows x cols` matrix operator on 1-D arrays.
#[derive(Debug, Clone)]
pub struct MatrixOp {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    domain: Vec<usize>,
    range: Vec<usize>,
}

impl MatrixOp {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::shape(&[rows, cols], &[data.len()]));
        }
        Ok(Self {
            rows,
            cols,
            data,
            domain: vec![cols],
            range: vec![rows],
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::config("ragged matrix rows"));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

impl LinearOperator for MatrixOp {
    fn domain_shape(&self) -> &[usize] {
        &self.domain
    }
    fn range_shape(&self) -> &[usize] {
        &self.range
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.data[i * self.cols..(i + 1) * self.cols], x);
        }
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.rows {
            let yi = y[i];
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
}

/// Identity on arrays of a given shape.
#[derive(Debug, Clone)]
pub struct Identity {
    shape: Vec<usize>,
}

impl LinearOperator for Identity {
    fn domain_shape(&self) -> &[usize] {
        &self.shape
    }
    fn range_shape(&self) -> &[usize] {
        &self.shape
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

pub fn identity(shape: &[usize]) -> Operator {
    Operator::new(Identity { shape: shape.to_vec() }).with_known_norm(1.0)
}

/// The zero map between two shapes.
#[derive(Debug, Clone)]
pub struct ZeroOp {
    domain: Vec<usize>,
    range: Vec<usize>,
}

impl LinearOperator for ZeroOp {
    fn domain_shape(&self) -> &[usize] {
        &self.domain
    }
    fn range_shape(&self) -> &[usize] {
        &self.range
    }
    fn apply_into(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn adjoint_into(&self, _y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

pub fn zero_operator(domain: &[usize], range: &[usize]) -> Operator {
    Operator::new(ZeroOp {
        domain: domain.to_vec(),
        range: range.to_vec(),
    })
    .with_known_norm(0.0)
}

/// `c A`. A cached norm estimate of `A` carries over scaled by `|c|`.
#[derive(Debug)]
pub struct Scaled {
    inner: Operator,
    factor: f64,
}

pub fn scale(op: &Operator, factor: f64) -> Operator {
    let mut out = Operator::new(Scaled {
        inner: op.clone(),
        factor,
    });
    out.norm = op.norm.as_ref().map(|n| NormEstimate {
        value: n.value * factor.abs(),
        converged: n.converged,
        iterations: n.iterations,
        history: n.history.iter().map(|v| v * factor.abs()).collect(),
    });
    out
}

impl LinearOperator for Scaled {
    fn domain_shape(&self) -> &[usize] {
        self.inner.domain_shape()
    }
    fn range_shape(&self) -> &[usize] {
        self.inner.range_shape()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.inner.raw().apply_into(x, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.raw().adjoint_into(y, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
}

/// `outer ∘ inner`.
#[derive(Debug)]
pub struct Composed {
    outer: Operator,
    inner: Operator,
}

pub fn compose(outer: &Operator, inner: &Operator) -> Result<Operator> {
    if outer.domain_shape() != inner.range_shape() {
        return Err(Error::shape(outer.domain_shape(), inner.range_shape()));
    }
    Ok(Operator::new(Composed {
        outer: outer.clone(),
        inner: inner.clone(),
    }))
}

impl LinearOperator for Composed {
    fn domain_shape(&self) -> &[usize] {
        self.inner.domain_shape()
    }
    fn range_shape(&self) -> &[usize] {
        self.outer.range_shape()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.inner.range_len()];
        self.inner.raw().apply_into(x, &mut mid);
        self.outer.raw().apply_into(&mid, out);
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        let mut mid = vec![0.0; self.outer.domain_len()];
        self.outer.raw().adjoint_into(y, &mut mid);
        self.inner.raw().adjoint_into(&mid, out);
    }
}

/// Worst normalised discrepancy `|<Au,w> - <u,A*w>| / (|Au||w| + |u||A*w|)`
/// over random Gaussian probes.
pub fn adjoint_test(op: &Operator, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::config("adjoint_test needs at least one trial"));
    }
    let mut rng = stream(seed, Stream::Probe);
    let mut worst: f64 = 0.0;
    let (n, m) = (op.domain_len(), op.range_len());
    let mut au = vec![0.0; m];
    let mut atw = vec![0.0; n];
    for _ in 0..trials {
        let u = gaussian_vec(&mut rng, n);
        let w = gaussian_vec(&mut rng, m);
        op.raw().apply_into(&u, &mut au);
        op.raw().adjoint_into(&w, &mut atw);
        let lhs = dot(&au, &w);
        let rhs = dot(&u, &atw);
        let denom = norm(&au) * norm(&w) + norm(&u) * norm(&atw);
        let d = if denom > 0.0 { (lhs - rhs).abs() / denom } else { 0.0 };
        worst = worst.max(d);
    }
    Ok(worst)
}
