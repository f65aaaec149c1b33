use rand::Rng;

use crate::error::{L2gError, Result};

pub const DEFAULT_ALPHA: f64 = 0.2;

/// Residual MLP `A(x) = x + alpha * (W2 relu(W1 x + b1) + b2)`.
///
/// `w1` is `hidden × dim` and `w2` is `dim × hidden`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub dim: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub alpha: f64,
}

/// Parameter gradients, same layout as [`AdapterParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl AdapterGrad {
    pub fn zeros(p: &AdapterParams) -> Self {
        AdapterGrad {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: vec![0.0; p.b2.len()],
        }
    }

    pub fn add_assign(&mut self, other: &AdapterGrad) {
        for (a, b) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }
}

impl AdapterParams {
    /// All-zero MLP: the exact identity for any alpha.
    pub fn identity(dim: usize) -> Self {
        Self::zeros(dim, dim, 0.0)
    }

    pub fn zeros(dim: usize, hidden: usize, alpha: f64) -> Self {
        AdapterParams {
            dim,
            hidden,
            w1: vec![0.0; hidden * dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; dim * hidden],
            b2: vec![0.0; dim],
            alpha,
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn random<R: Rng>(dim: usize, hidden: usize, alpha: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(dim, hidden, alpha);
        let limit = (6.0 / (dim + hidden) as f64).sqrt();
        for w in p.w1.iter_mut().chain(p.w2.iter_mut()) {
            *w = rng.gen_range(-limit..limit);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.w1.len() == self.hidden * self.dim
            && self.b1.len() == self.hidden
            && self.w2.len() == self.dim * self.hidden
            && self.b2.len() == self.dim
            && self.dim >= 1
            && self.alpha.is_finite();
        if ok {
            Ok(())
        } else {
            Err(L2gError::Contract("adapter parameter shapes are inconsistent".into()))
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        [&self.w1[..], &self.b1, &self.w2, &self.b2].concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(L2gError::Contract(format!(
                "flat adapter vector has {} values, expected {}",
                flat.len(),
                self.num_params()
            )));
        }
        let (a, rest) = flat.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, d) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
        Ok(())
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.dim..(h + 1) * self.dim];
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[h]
            })
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(L2gError::Contract(format!(
                "adapter expects dim {}, got {}",
                self.dim,
                x.len()
            )));
        }
        if self.alpha == 0.0 {
            return Ok(x.to_vec());
        }
        let act: Vec<f64> = self.hidden_pre(x).into_iter().map(|v| v.max(0.0)).collect();
        Ok((0..self.dim)
            .map(|d| {
                let row = &self.w2[d * self.hidden..(d + 1) * self.hidden];
                let mlp = row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>() + self.b2[d];
                x[d] + self.alpha * mlp
            })
            .collect())
    }

    /// Accumulates parameter gradients for upstream gradient `dy` at input
    /// `x` into `grad`, returning the gradient with respect to `x`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut AdapterGrad) -> Vec<f64> {
        let pre = self.hidden_pre(x);
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let a = self.alpha;
        let mut dact = vec![0.0; self.hidden];
        for d in 0..self.dim {
            let g = a * dy[d];
            grad.b2[d] += g;
            for h in 0..self.hidden {
                grad.w2[d * self.hidden + h] += g * act[h];
                dact[h] += g * self.w2[d * self.hidden + h];
            }
        }
        let mut dx = dy.to_vec();
        for h in 0..self.hidden {
            if pre[h] <= 0.0 {
                continue;
            }
            let g = dact[h];
            grad.b1[h] += g;
            for d in 0..self.dim {
                grad.w1[h * self.dim + d] += g * x[d];
                dx[d] += g * self.w1[h * self.dim + d];
            }
        }
        dx
    }
}
