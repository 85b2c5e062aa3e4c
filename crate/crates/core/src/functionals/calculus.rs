//! Moduli guaranteed by the weak-convexity calculus.

use crate::error::{Error, Result};

/// Modulus of `f^q` when `f` is nonnegative, `rho`-weakly convex and bounded
/// by `B`: `q B^(q-1) rho`.
pub fn power_modulus(bound: f64, rho: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::config(format!("power must be at least 1, got {q}")));
    }
    if !(bound > 0.0) || !(rho >= 0.0) {
        return Err(Error::config(format!(
            "need bound > 0 and rho >= 0, got {bound}, {rho}"
        )));
    }
    Ok(q * bound.powf(q - 1.0) * rho)
}

/// Modulus of `g o F` for convex `L`-Lipschitz `g` and `F` with
/// `beta`-Lipschitz derivative: `L beta`.
pub fn composition_modulus(lipschitz: f64, beta: f64) -> f64 {
    lipschitz * beta
}
