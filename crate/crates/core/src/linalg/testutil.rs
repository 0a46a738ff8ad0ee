//! Random matrix generators for unit tests.

pub use rand_chacha::ChaCha8Rng;
use rand::Rng;

use crate::linalg::{dot, norm, Matrix};

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    Matrix::from_fn(n, n, |i, j| a[(i, j)] + a[(j, i)])
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut c = a.transpose().matmul(&a).unwrap();
    for i in 0..n {
        c[(i, i)] += 0.1;
    }
    c
}

/// `n x k` matrix with orthonormal columns (Gram-Schmidt on random vectors).
pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < k {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for c in &cols {
                let d = dot(&v, c);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let nv = norm(&v);
        if nv > 1e-6 {
            cols.push(v.into_iter().map(|x| x / nv).collect());
        }
    }
    Matrix::from_columns(&cols, n).unwrap()
}

/// `Q diag(spectrum) Qᵀ` for a random orthogonal `Q`.
pub fn matrix_with_spectrum(rng: &mut ChaCha8Rng, spectrum: &[f64]) -> Matrix {
    let n = spectrum.len();
    let q = random_orthonormal(rng, n, n);
    let c = Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q[(i, k)] * spectrum[k] * q[(j, k)]).sum()
    });
    Matrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]))
}

pub fn vector_error_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum();
    plus.min(minus).sqrt()
}

/// Residual of the least-squares fit of `y` on the columns of `a`, via normal equations.
pub fn least_squares_residual(a: &Matrix, y: &[f64]) -> f64 {
    let k = a.cols();
    let mut g = a.transpose().matmul(a).unwrap();
    let mut rhs = a.tr_mul_vec(y).unwrap();
    // Gaussian elimination, no pivoting needed for SPD
    for i in 0..k {
        for r in (i + 1)..k {
            let f = g[(r, i)] / g[(i, i)];
            for c in i..k {
                g[(r, c)] -= f * g[(i, c)];
            }
            rhs[r] -= f * rhs[i];
        }
    }
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|c| g[(i, c)] * beta[c]).sum();
        beta[i] = (rhs[i] - s) / g[(i, i)];
    }
    let fit = a.mul_vec(&beta).unwrap();
    y.iter().zip(fit).map(|(a, b)| (a - b).powi(2)).sum()
}
