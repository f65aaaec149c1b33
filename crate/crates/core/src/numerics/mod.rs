//! Small dense linear algebra plus the trainable pieces: the residual
//! adapter, the InfoNCE loss, Adam and a central-difference gradient oracle.

mod adam;
mod adapter;
mod gradcheck;
mod infonce;

pub use adam::AdamState;
pub use adapter::{AdapterGrad, AdapterParams, DEFAULT_ALPHA};
pub use gradcheck::{finite_diff_grad, relative_error};
pub use infonce::{infonce_loss, InfoNce, DEFAULT_TAU};

use crate::error::{L2gError, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unit vector in the direction of `a`; the zero vector maps to itself.
pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    if n == 0.0 {
        return a.to_vec();
    }
    a.iter().map(|v| v / n).collect()
}

/// Cosine similarity with the zero-vector convention `cos(a, 0) = 0`.
///
/// Bitwise-equal nonzero inputs return exactly 1 so that a patch compared
/// with itself always clears any threshold in (0, 1].
pub fn cosine_sim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(L2gError::Contract(format!(
            "cosine_sim dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Gradients of `cos(a, b)` with respect to `a` and `b`. Both are zero when
/// either input is the zero vector.
pub fn cosine_grad(a: &[f64], b: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return (0.0, vec![0.0; a.len()], vec![0.0; b.len()]);
    }
    let c = dot(a, b) / (na * nb);
    let ga = a.iter().zip(b).map(|(ai, bi)| bi / (na * nb) - c * ai / (na * na)).collect();
    let gb = a.iter().zip(b).map(|(ai, bi)| ai / (na * nb) - c * bi / (nb * nb)).collect();
    (c, ga, gb)
}
