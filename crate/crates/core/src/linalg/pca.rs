//! Projection onto a principal component basis and retained-variance metrics.

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, Matrix, PcaBasis};

/// Fraction of total variance carried by the first `q` eigenvalues.
pub fn retained_variance(values: &[f64], q: usize) -> Result<f64> {
    if values.is_empty() || q == 0 || q > values.len() {
        return Err(Error::Config(format!(
            "q must be in 1..={}, got {q}",
            values.len()
        )));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(values[..q].iter().sum::<f64>() / total)
}

/// Principal component scores `z = Wᵀ (x - mean)`.
pub fn project(w: &Matrix, x: &[f64], mean: &[f64]) -> Result<Vec<f64>> {
    check_len(w.rows(), x.len())?;
    check_len(w.rows(), mean.len())?;
    let centered: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
    w.tr_mul_vec(&centered)
}

/// `x̂ = W z + mean`.
pub fn reconstruct(w: &Matrix, z: &[f64], mean: &[f64]) -> Result<Vec<f64>> {
    check_len(w.rows(), mean.len())?;
    let mut x = w.mul_vec(z)?;
    x.iter_mut().zip(mean).for_each(|(a, m)| *a += m);
    Ok(x)
}

/// `1 - Σ‖x - x̂‖² / Σ‖x - x̄‖²` over `test`, centered at the basis mean.
pub fn empirical_retained_variance<S: AsRef<[f64]>>(basis: &PcaBasis, test: &[S]) -> Result<f64> {
    let curve = retained_variance_curve(basis, test)?;
    Ok(*curve.last().expect("curve has q+1 points"))
}

/// Empirical retained variance for every prefix of the basis: element `q`
/// uses the first `q` components (element 0 is the centroid-only predictor).
pub fn retained_variance_curve<S: AsRef<[f64]>>(basis: &PcaBasis, test: &[S]) -> Result<Vec<f64>> {
    if test.is_empty() {
        return Err(Error::Degenerate("empty test set".into()));
    }
    let q = basis.len();
    let mean = basis.mean();
    let mut residual = vec![0.0; q + 1];
    let mut total = 0.0;
    let mut r = vec![0.0; mean.len()];
    for x in test {
        let x = x.as_ref();
        check_len(mean.len(), x.len())?;
        r.iter_mut()
            .zip(x.iter().zip(mean))
            .for_each(|(ri, (xi, mi))| *ri = xi - mi);
        let sq: f64 = dot(&r, &r);
        total += sq;
        residual[0] += sq;
        for (k, pair) in basis.pairs().iter().enumerate() {
            let zk = dot(&pair.vector, &r);
            r.iter_mut()
                .zip(&pair.vector)
                .for_each(|(ri, wi)| *ri -= zk * wi);
            residual[k + 1] += dot(&r, &r);
        }
    }
    if total <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(residual.into_iter().map(|res| 1.0 - res / total).collect())
}
