use crate::error::{L2gError, Result};

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(L2gError::Contract(format!("finite difference step must be > 0, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe)?;
        probe[i] = orig - h;
        let down = f(&probe)?;
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(L2gError::Oracle(i));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or 0 when both vanish (below 1e-12).
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale = super::norm(a).max(super::norm(b));
    if scale < 1e-12 {
        return diff;
    }
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let g = finite_diff_grad(|x| Ok(x[0] * x[0]), &[3.0], 1e-4).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_grad() {
        let g = finite_diff_grad(|_| Ok(4.2), &[1.0, -2.0, 0.5], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn non_finite_is_an_error() {
        let r = finite_diff_grad(|x| Ok(1.0 / (x[0] - 1e-4)), &[0.0], 1e-4);
        assert!(matches!(r, Err(L2gError::Oracle(0))));
    }

    #[test]
    fn rejects_bad_step() {
        assert!(finite_diff_grad(|_| Ok(0.0), &[1.0], 0.0).is_err());
    }
}
