//! Sample covariance from running sums.
//!
//! Both the batch and the recursive path use the same moment form,
//! `c_ij = S_ij / t - S_i S_j / t^2`, so they agree to rounding.

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;

/// Covariance `(1/t) X Xᵀ - x̄ x̄ᵀ` of the samples (one vector per epoch).
pub fn covariance_batch<S: AsRef<[f64]>>(samples: &[S]) -> Result<Matrix> {
    if samples.len() < 2 {
        return Err(Error::Degenerate(format!(
            "covariance needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let p = samples[0].as_ref().len();
    let mut acc = CovAccumulator::new(p);
    for s in samples {
        acc.update(s.as_ref())?;
    }
    Ok(acc.covariance())
}

/// Running `t`, `S_i` and `S_ij` for a `p`-dimensional stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CovAccumulator {
    t: u64,
    sums: Vec<f64>,
    // upper triangle including the diagonal, row-major
    cross: Vec<f64>,
}

impl CovAccumulator {
    pub fn new(p: usize) -> Self {
        Self {
            t: 0,
            sums: vec![0.0; p],
            cross: vec![0.0; p * (p + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.sums.len()
    }

    pub fn count(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, x: &[f64]) -> Result<()> {
        check_len(self.dim(), x.len())?;
        self.t += 1;
        let mut k = 0;
        for i in 0..x.len() {
            self.sums[i] += x[i];
            for j in i..x.len() {
                self.cross[k] += x[i] * x[j];
                k += 1;
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.sums.iter().map(|s| s / t).collect()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let p = self.dim();
        let k = i * p - i * (i + 1) / 2 + j;
        cov_from_sums(self.t, self.cross[k], self.sums[i], self.sums[j])
    }

    pub fn covariance(&self) -> Matrix {
        let p = self.dim();
        let mut c = Matrix::zeros(p, p);
        let mut k = 0;
        for i in 0..p {
            for j in i..p {
                let v = cov_from_sums(self.t, self.cross[k], self.sums[i], self.sums[j]);
                c[(i, j)] = v;
                c[(j, i)] = v;
                k += 1;
            }
        }
        c
    }
}

/// `S_ij / t - S_i S_j / t^2`; zero before any sample.
pub fn cov_from_sums(t: u64, s_ij: f64, s_i: f64, s_j: f64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    let t = t as f64;
    s_ij / t - s_i * s_j / (t * t)
}
