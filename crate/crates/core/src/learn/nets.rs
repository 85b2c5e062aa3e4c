//! Dense networks for the learned regulariser. Every layer carries a value
//! and a forward-mode tangent, and the backward pass differentiates both, so
//! parameter gradients of directional derivatives (double backprop) come out
//! of one reverse sweep.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// `mu0 = log(1 + exp(-9))`.
pub fn default_mu0() -> f64 {
    (-9.0f64).exp().ln_1p()
}

/// Upper bound on `|silu'|`, whose supremum 1.09984 is attained near `x = 2.3994`.
pub const SILU_SLOPE_SUP: f64 = 1.1;
/// Supremum of `|silu''|`, attained at `x = 0`.
pub const SILU_CURVATURE_SUP: f64 = 0.5;

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// `(silu, silu', silu'')` at `a`.
pub fn silu3(a: f64) -> (f64, f64, f64) {
    let s = sigmoid(a);
    let d1 = s * (1.0 + a * (1.0 - s));
    let d2 = s * (1.0 - s) * (2.0 + a * (1.0 - 2.0 * s));
    (a * s, d1, d2)
}

/// Affine map `out = w x + b`, `w` row-major `rows x cols`. An empty `b`
/// means no bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize, bias: bool) -> Self {
        Self {
            rows,
            cols,
            w: vec![0.0; rows * cols],
            b: if bias { vec![0.0; rows] } else { Vec::new() },
        }
    }

    /// Gaussian weights with variance `gain^2 / cols`; zero bias.
    pub fn random<R: Rng>(rows: usize, cols: usize, bias: bool, gain: f64, rng: &mut R) -> Self {
        let mut d = Self::zeros(rows, cols, bias);
        let s = gain / (cols as f64).sqrt();
        for w in &mut d.w {
            let g: f64 = StandardNormal.sample(rng);
            *w = s * g;
        }
        d
    }

    pub fn has_bias(&self) -> bool {
        !self.b.is_empty()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b.get(i).copied().unwrap_or(0.0);
        }
    }

    fn apply_linear(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Reverse sweep of `a = w h + b`, `a' = w h'`.
    fn backward(
        &self,
        h: &[f64],
        ht: &[f64],
        abar: &[f64],
        atbar: &[f64],
        grad: &mut Dense,
        hbar: &mut [f64],
        htbar: &mut [f64],
    ) {
        for i in 0..self.rows {
            let (ga, gt) = (abar[i], atbar[i]);
            if ga == 0.0 && gt == 0.0 {
                continue;
            }
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            let grow = &mut grad.w[i * self.cols..(i + 1) * self.cols];
            for j in 0..self.cols {
                grow[j] += ga * h[j] + gt * ht[j];
                hbar[j] += row[j] * ga;
                htbar[j] += row[j] * gt;
            }
            if self.has_bias() {
                grad.b[i] += ga;
            }
        }
    }

    /// Frobenius norm, an upper bound on the spectral norm.
    pub fn frobenius(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Input convex network. Hidden layer `l` computes
/// `z_l = act(wz_l z_{l-1} + wx_l u + b_l)` (no `wz` on the first layer);
/// the last layer is affine with a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct Icnn {
    /// Passthrough weights with bias, one per layer including the output.
    pub wx: Vec<Dense>,
    /// Nonnegative propagation weights; `wz[l - 1]` feeds layer `l`.
    pub wz: Vec<Dense>,
    /// Leaky rectifier slope for negative inputs, in `[0, 1]`.
    pub slope: f64,
}

impl Icnn {
    pub fn new<R: Rng>(input: usize, hidden: &[usize], slope: f64, rng: &mut R) -> Self {
        let mut wx = Vec::new();
        let mut wz = Vec::new();
        let mut prev = None;
        for &h in hidden.iter().chain(std::iter::once(&1)) {
            wx.push(Dense::random(h, input, true, 1.0, rng));
            if let Some(p) = prev {
                let mut d = Dense::random(h, p, false, 1.0, rng);
                d.w.iter_mut().for_each(|v| *v = v.abs());
                wz.push(d);
            }
            prev = Some(h);
        }
        Self { wx, wz, slope }
    }

    pub fn input_dim(&self) -> usize {
        self.wx[0].cols
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.wx[..self.wx.len() - 1].iter().map(|d| d.rows).collect()
    }

    fn act(&self, a: f64) -> (f64, f64) {
        if a > 0.0 {
            (a, 1.0)
        } else {
            (self.slope * a, self.slope)
        }
    }

    pub fn check_structure(&self) -> Result<()> {
        for (l, d) in self.wz.iter().enumerate() {
            if let Some(v) = d.w.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::Structure(format!(
                    "propagation weight {v} < 0 in layer {}",
                    l + 1
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.slope) {
            return Err(Error::Structure(format!(
                "activation slope {} outside [0, 1]",
                self.slope
            )));
        }
        Ok(())
    }

    /// Clamps propagation weights to be nonnegative.
    pub fn project(&mut self) {
        for d in &mut self.wz {
            d.w.iter_mut().for_each(|v| *v = v.max(0.0));
        }
    }

    /// Upper bound on the Lipschitz constant of the input-to-output map.
    pub fn lipschitz_bound(&self) -> f64 {
        let mut l = 0.0;
        for (i, wx) in self.wx.iter().enumerate() {
            let through = if i == 0 { 0.0 } else { self.wz[i - 1].frobenius() * l };
            l = through + wx.frobenius();
        }
        l
    }
}

/// Smooth network: affine layers with `silu` between them. No layers means
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothNet {
    pub layers: Vec<Dense>,
}

impl SmoothNet {
    pub fn new<R: Rng>(input: usize, widths: &[usize], rng: &mut R) -> Self {
        let mut layers = Vec::new();
        let mut prev = input;
        for &w in widths {
            layers.push(Dense::random(w, prev, true, 1.0, rng));
            prev = w;
        }
        Self { layers }
    }

    pub fn identity(dim: usize) -> Self {
        let mut d = Dense::zeros(dim, dim, true);
        for i in 0..dim {
            d.w[i * dim + i] = 1.0;
        }
        Self { layers: vec![d] }
    }

    pub fn output_dim(&self, input: usize) -> usize {
        self.layers.last().map_or(input, |d| d.rows)
    }

    /// `(Lipschitz, gradient-Lipschitz)` upper bounds from layer norms.
    pub fn bounds(&self) -> (f64, f64) {
        let (mut lip, mut beta) = (1.0, 0.0);
        let n = self.layers.len();
        for (i, d) in self.layers.iter().enumerate() {
            let w = d.frobenius();
            lip *= w;
            beta *= w;
            if i + 1 < n {
                // silu after this layer
                beta = SILU_CURVATURE_SUP * lip * lip + SILU_SLOPE_SUP * beta;
                lip *= SILU_SLOPE_SUP;
            }
        }
        (lip, beta)
    }
}

/// Regulariser `icnn(smooth(x)) + (mu0/2) ||x||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Awcr {
    pub smooth: SmoothNet,
    pub icnn: Icnn,
    pub mu0: f64,
}

/// Architecture description used to build and to checkpoint networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input: usize,
    pub smooth: Vec<usize>,
    pub icnn_hidden: Vec<usize>,
    pub slope: f64,
    pub mu0: f64,
}

impl Architecture {
    /// Smooth net `d -> 16 -> 16`, convex net `16 -> 8 -> 1`.
    pub fn standard(input: usize) -> Self {
        Self {
            input,
            smooth: vec![16, 16],
            icnn_hidden: vec![8],
            slope: 0.2,
            mu0: default_mu0(),
        }
    }

    /// Convex-only network with no smooth part.
    pub fn icnn_only(input: usize, hidden: Vec<usize>) -> Self {
        Self {
            input,
            smooth: Vec::new(),
            icnn_hidden: hidden,
            slope: 0.2,
            mu0: default_mu0(),
        }
    }
}

/// Per-sample record of a forward pass with tangent.
#[derive(Debug, Clone)]
pub struct Tape {
    x: Vec<f64>,
    v: Vec<f64>,
    /// Smooth layer inputs and pre-activations with tangents.
    s_in: Vec<(Vec<f64>, Vec<f64>)>,
    s_pre: Vec<(Vec<f64>, Vec<f64>)>,
    u: (Vec<f64>, Vec<f64>),
    /// Hidden pre-activations and outputs of the convex net, with tangents.
    c_pre: Vec<(Vec<f64>, Vec<f64>)>,
    c_out: Vec<(Vec<f64>, Vec<f64>)>,
    pub value: f64,
    /// Directional derivative along `v`.
    pub tangent: f64,
}

impl Tape {
    /// Whether some rectifier input is exactly at its kink.
    pub fn at_kink(&self) -> bool {
        self.c_pre.iter().any(|(a, _)| a.iter().any(|&v| v == 0.0))
    }
}

impl Awcr {
    pub fn new<R: Rng>(arch: &Architecture, rng: &mut R) -> Self {
        let smooth = SmoothNet::new(arch.input, &arch.smooth, rng);
        let icnn = Icnn::new(smooth.output_dim(arch.input), &arch.icnn_hidden, arch.slope, rng);
        Self {
            smooth,
            icnn,
            mu0: arch.mu0,
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input: self.input_dim(),
            smooth: self.smooth.layers.iter().map(|d| d.rows).collect(),
            icnn_hidden: self.icnn.hidden(),
            slope: self.icnn.slope,
            mu0: self.mu0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.smooth.layers.first().map_or(self.icnn.input_dim(), |d| d.cols)
    }

    /// Same architecture with all parameters zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for d in &self.smooth.layers {
            out.push(&d.w);
            out.push(&d.b);
        }
        for d in &self.icnn.wx {
            out.push(&d.w);
            out.push(&d.b);
        }
        for d in &self.icnn.wz {
            out.push(&d.w);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for d in &mut self.smooth.layers {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        for d in &mut self.icnn.wx {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        for d in &mut self.icnn.wz {
            out.push(&mut d.w);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.tensors().into_iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::shape(&[self.param_count()], &[flat.len()]));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[off..off + n]);
            off += n;
        }
        Ok(())
    }

    /// Adds `other` entrywise; both must share the architecture.
    pub fn add_assign(&mut self, other: &Awcr, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    /// Declared weak-convexity modulus of the network part:
    /// `Lipschitz(icnn) * gradient-Lipschitz(smooth)`.
    pub fn declared_modulus(&self) -> (f64, f64, f64) {
        let l = self.icnn.lipschitz_bound();
        let beta = self.smooth.bounds().1;
        (l * beta, l, beta)
    }

    /// Forward pass with tangent direction `v` (zero when `None`).
    pub fn forward(&self, x: &[f64], v: Option<&[f64]>) -> Tape {
        let n = x.len();
        let v = v.map_or_else(|| vec![0.0; n], |v| v.to_vec());
        let mut h = (x.to_vec(), v.clone());
        let mut s_in = Vec::new();
        let mut s_pre = Vec::new();
        let ns = self.smooth.layers.len();
        for (i, d) in self.smooth.layers.iter().enumerate() {
            let mut a = vec![0.0; d.rows];
            let mut at = vec![0.0; d.rows];
            d.apply(&h.0, &mut a);
            d.apply_linear(&h.1, &mut at);
            s_in.push(h);
            let next = if i + 1 < ns {
                let mut z = vec![0.0; d.rows];
                let mut zt = vec![0.0; d.rows];
                for k in 0..d.rows {
                    let (s, s1, _) = silu3(a[k]);
                    z[k] = s;
                    zt[k] = s1 * at[k];
                }
                (z, zt)
            } else {
                (a.clone(), at.clone())
            };
            s_pre.push((a, at));
            h = next;
        }
        let u = h;
        let mut c_pre = Vec::new();
        let mut c_out: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        let nl = self.icnn.wx.len();
        let (mut value, mut tangent) = (0.0, 0.0);
        for l in 0..nl {
            let wx = &self.icnn.wx[l];
            let mut a = vec![0.0; wx.rows];
            let mut at = vec![0.0; wx.rows];
            wx.apply(&u.0, &mut a);
            wx.apply_linear(&u.1, &mut at);
            if l > 0 {
                let wz = &self.icnn.wz[l - 1];
                let (z, zt) = &c_out[l - 1];
                let mut t = vec![0.0; wz.rows];
                wz.apply_linear(z, &mut t);
                a.iter_mut().zip(&t).for_each(|(p, q)| *p += q);
                wz.apply_linear(zt, &mut t);
                at.iter_mut().zip(&t).for_each(|(p, q)| *p += q);
            }
            if l + 1 == nl {
                value = a[0];
                tangent = at[0];
            } else {
                let mut z = vec![0.0; a.len()];
                let mut zt = vec![0.0; a.len()];
                for k in 0..a.len() {
                    let (s, d) = self.icnn.act(a[k]);
                    z[k] = s;
                    zt[k] = d * at[k];
                }
                c_pre.push((a, at));
                c_out.push((z, zt));
            }
        }
        let xx: f64 = x.iter().map(|t| t * t).sum();
        let xv: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        value += 0.5 * self.mu0 * xx;
        tangent += self.mu0 * xv;
        Tape {
            x: x.to_vec(),
            v,
            s_in,
            s_pre,
            u,
            c_pre,
            c_out,
            value,
            tangent,
        }
    }

    /// Reverse sweep of `c_val * value + c_tan * tangent`: accumulates the
    /// parameter gradient into `grad` and returns the input gradient.
    pub fn backward(&self, tape: &Tape, c_val: f64, c_tan: f64, grad: &mut Awcr) -> Vec<f64> {
        let m = tape.u.0.len();
        let mut ubar = vec![0.0; m];
        let mut utbar = vec![0.0; m];
        let nl = self.icnn.wx.len();
        let mut abar = vec![c_val];
        let mut atbar = vec![c_tan];
        for l in (0..nl).rev() {
            let wx = &self.icnn.wx[l];
            wx.backward(
                &tape.u.0,
                &tape.u.1,
                &abar,
                &atbar,
                &mut grad.icnn.wx[l],
                &mut ubar,
                &mut utbar,
            );
            if l == 0 {
                break;
            }
            let wz = &self.icnn.wz[l - 1];
            let (z, zt) = &tape.c_out[l - 1];
            let mut zbar = vec![0.0; z.len()];
            let mut ztbar = vec![0.0; z.len()];
            wz.backward(z, zt, &abar, &atbar, &mut grad.icnn.wz[l - 1], &mut zbar, &mut ztbar);
            // through the rectifier, whose second derivative is zero off the kink
            let (a, _) = &tape.c_pre[l - 1];
            abar = vec![0.0; a.len()];
            atbar = vec![0.0; a.len()];
            for k in 0..a.len() {
                let d = self.icnn.act(a[k]).1;
                abar[k] = zbar[k] * d;
                atbar[k] = ztbar[k] * d;
            }
        }
        let ns = self.smooth.layers.len();
        let mut hbar = ubar;
        let mut htbar = utbar;
        for i in (0..ns).rev() {
            let d = &self.smooth.layers[i];
            let (a, at) = &tape.s_pre[i];
            let (ab, atb) = if i + 1 < ns {
                let mut ab = vec![0.0; a.len()];
                let mut atb = vec![0.0; a.len()];
                for k in 0..a.len() {
                    let (_, s1, s2) = silu3(a[k]);
                    ab[k] = hbar[k] * s1 + htbar[k] * s2 * at[k];
                    atb[k] = htbar[k] * s1;
                }
                (ab, atb)
            } else {
                (hbar, htbar)
            };
            let (h, ht) = &tape.s_in[i];
            let mut nb = vec![0.0; h.len()];
            let mut ntb = vec![0.0; h.len()];
            d.backward(h, ht, &ab, &atb, &mut grad.smooth.layers[i], &mut nb, &mut ntb);
            hbar = nb;
            htbar = ntb;
        }
        for k in 0..hbar.len() {
            hbar[k] += self.mu0 * (c_val * tape.x[k] + c_tan * tape.v[k]);
        }
        hbar
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.forward(x, None).value
    }

    /// `(value, input gradient)`.
    pub fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let tape = self.forward(x, None);
        let mut scratch = self.zeros_like();
        let g = self.backward(&tape, 1.0, 0.0, &mut scratch);
        (tape.value, g)
    }

    /// Value of the convex part alone on a smooth-net output `u`.
    pub fn icnn_forward(&self, u: &[f64]) -> f64 {
        let net = Awcr {
            smooth: SmoothNet { layers: Vec::new() },
            icnn: self.icnn.clone(),
            mu0: 0.0,
        };
        net.eval(u)
    }
}
