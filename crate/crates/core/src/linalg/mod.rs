//! Dense linear algebra and the centralized PCA path.

mod covariance;
mod eigen;
mod jacobi;
mod matrix;
mod pca;

#[cfg(test)]
pub(crate) mod testutil;

pub use covariance::{cov_from_sums, covariance_batch, CovAccumulator};
pub use eigen::{
    aligned_distance, compute_basis, compute_basis_traced, deflated_power_iteration, eigen_sign,
    power_iteration, EigenPair, InitPolicy, PcaBasis, PowerOutcome, FALLBACK_SEED,
};
pub(crate) use eigen::random_start;
pub use jacobi::reference_eigendecomposition;
pub use matrix::{canonical_sign, dot, norm, Matrix};
pub use pca::{
    empirical_retained_variance, project, reconstruct, retained_variance,
    retained_variance_curve,
};
