//! Power iteration with deflation and the eigenpair containers built on it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{canonical_sign, dot, norm, Matrix};

/// Seed used when the diagonal start vector cannot be iterated.
pub const FALLBACK_SEED: u64 = 0x005e_ed0f_9ca9;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub vector: Vec<f64>,
    pub value: f64,
}

/// How the start vector of each component is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// Uniform entries in `[-1, 1)` from a seeded generator, reseeded per component.
    Random { seed: u64 },
    /// `v0[i] = C[i,i]`, what each node can do with purely local knowledge.
    Diagonal,
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::Random { seed: 1 }
    }
}

impl InitPolicy {
    pub fn start_vector(&self, c: &Matrix, component: usize) -> Vec<f64> {
        match *self {
            InitPolicy::Diagonal => c.diagonal(),
            InitPolicy::Random { seed } => random_start(seed, component, c.rows()),
        }
    }
}

pub(crate) fn random_start(seed: u64, component: usize, p: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(component as u64);
    loop {
        let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return v;
        }
    }
}

/// `sign(Σ_i sign(prev[i] · next[i]))`: +1, -1, or 0 when undetermined.
pub fn eigen_sign(prev: &[f64], next: &[f64]) -> i8 {
    debug_assert_eq!(prev.len(), next.len());
    let votes: i64 = prev
        .iter()
        .zip(next)
        .map(|(a, b)| {
            let prod = a * b;
            if prod > 0.0 {
                1
            } else if prod < 0.0 {
                -1
            } else {
                0
            }
        })
        .sum();
    votes.signum() as i8
}

/// `‖next - prev‖` after flipping `next` onto `prev`'s side when their dot is negative.
pub fn aligned_distance(prev: &[f64], next: &[f64]) -> f64 {
    let flip = if dot(prev, next) < 0.0 { -1.0 } else { 1.0 };
    prev.iter()
        .zip(next)
        .map(|(a, b)| (flip * b - a).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Result of one power-iteration run.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerOutcome {
    /// Unit vector of the last iterate (not sign-normalized).
    pub vector: Vec<f64>,
    /// `sign · ‖C v‖` at the last iterate.
    pub value: f64,
    pub sign: i8,
    pub iterations: usize,
    pub converged: bool,
}

fn validate_power_args(c: &Matrix, v0: &[f64], delta: f64, t_max: usize) -> Result<()> {
    c.ensure_symmetric()?;
    check_len(c.rows(), v0.len())?;
    if !(delta > 0.0) {
        return Err(Error::Config(format!("delta must be positive, got {delta}")));
    }
    if t_max == 0 {
        return Err(Error::Config("t_max must be at least 1".into()));
    }
    if norm(v0) == 0.0 {
        return Err(Error::Degenerate("start vector is zero".into()));
    }
    Ok(())
}

/// Power iteration on `C` restricted to the orthogonal complement of `accepted`.
///
/// Each step multiplies by `C`, removes the components along every accepted
/// vector, and normalizes. Runs at most `t_max` steps and stops early once the
/// sign-aligned change between iterates is at most `delta`.
pub fn deflated_power_iteration(
    c: &Matrix,
    accepted: &[Vec<f64>],
    v0: &[f64],
    delta: f64,
    t_max: usize,
) -> Result<PowerOutcome> {
    validate_power_args(c, v0, delta, t_max)?;
    let n0 = norm(v0);
    let mut v: Vec<f64> = v0.iter().map(|x| x / n0).collect();
    let mut iterations = 0;
    loop {
        let mut y = c.mul_vec(&v)?;
        for w in accepted {
            let d = dot(&y, w);
            y.iter_mut().zip(w).for_each(|(yi, wi)| *yi -= d * wi);
        }
        let ny = norm(&y);
        if ny == 0.0 {
            return Err(Error::ZeroVector);
        }
        let next: Vec<f64> = y.iter().map(|x| x / ny).collect();
        iterations += 1;
        let converged = aligned_distance(&v, &next) <= delta;
        if converged || iterations >= t_max {
            let sign = match eigen_sign(&v, &next) {
                // vote tie: fall back to the side the iterate landed on
                0 => dot(&v, &next).signum() as i8,
                s => s,
            };
            return Ok(PowerOutcome {
                vector: next,
                value: f64::from(sign) * ny,
                sign,
                iterations,
                converged,
            });
        }
        v = next;
    }
}

/// Dominant eigenpair of `C` from start vector `v0`, with the iteration count.
pub fn power_iteration(
    c: &Matrix,
    v0: &[f64],
    delta: f64,
    t_max: usize,
) -> Result<(EigenPair, usize)> {
    let out = deflated_power_iteration(c, &[], v0, delta, t_max)?;
    let mut vector = out.vector;
    canonical_sign(&mut vector);
    Ok((
        EigenPair {
            vector,
            value: out.value,
        },
        out.iterations,
    ))
}

/// Up to `q` leading eigenpairs by power iteration with deflation.
///
/// Stops at the first component whose eigenvalue sign is not positive; that
/// component is dropped. A later component whose deflated product vanishes
/// also ends the run (the remaining spectrum is exactly zero).
pub fn compute_basis(
    c: &Matrix,
    q: usize,
    delta: f64,
    t_max: usize,
    policy: InitPolicy,
) -> Result<PcaBasis> {
    Ok(compute_basis_traced(c, q, delta, t_max, policy)?.0)
}

/// As [`compute_basis`], also returning the iteration count of every accepted component.
pub fn compute_basis_traced(
    c: &Matrix,
    q: usize,
    delta: f64,
    t_max: usize,
    policy: InitPolicy,
) -> Result<(PcaBasis, Vec<usize>)> {
    c.ensure_symmetric()?;
    let p = c.rows();
    if q == 0 || q > p {
        return Err(Error::Config(format!("q must be in 1..={p}, got {q}")));
    }
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(q);
    let mut values = Vec::with_capacity(q);
    let mut iterations = Vec::with_capacity(q);
    for k in 0..q {
        let outcome = match run_component(c, &accepted, policy, k, delta, t_max) {
            Ok(o) => o,
            Err(Error::ZeroVector) if k > 0 => break,
            Err(e) => return Err(e),
        };
        if outcome.sign <= 0 {
            break;
        }
        accepted.push(outcome.vector);
        values.push(outcome.value);
        iterations.push(outcome.iterations);
    }
    let pairs = accepted
        .into_iter()
        .zip(values)
        .map(|(vector, value)| EigenPair { vector, value })
        .collect();
    Ok((PcaBasis::new(pairs, vec![0.0; p])?, iterations))
}

fn run_component(
    c: &Matrix,
    accepted: &[Vec<f64>],
    policy: InitPolicy,
    k: usize,
    delta: f64,
    t_max: usize,
) -> Result<PowerOutcome> {
    let v0 = policy.start_vector(c, k);
    let first = if norm(&v0) == 0.0 {
        Err(Error::ZeroVector)
    } else {
        deflated_power_iteration(c, accepted, &v0, delta, t_max)
    };
    match (first, policy) {
        (Err(Error::ZeroVector), InitPolicy::Diagonal) => {
            let v0 = random_start(FALLBACK_SEED, k, c.rows());
            deflated_power_iteration(c, accepted, &v0, delta, t_max)
        }
        (r, _) => r,
    }
}

/// Ordered principal components plus the training centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pairs: Vec<EigenPair>,
    mean: Vec<f64>,
}

impl PcaBasis {
    /// Normalizes and sign-fixes every vector, drops negative eigenvalues, and
    /// orders pairs by nonincreasing eigenvalue. Rejects non-orthogonal input.
    pub fn new(pairs: Vec<EigenPair>, mean: Vec<f64>) -> Result<Self> {
        let p = mean.len();
        let mut kept = Vec::with_capacity(pairs.len());
        for mut pair in pairs {
            check_len(p, pair.vector.len())?;
            if !pair.value.is_finite() || pair.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::Degenerate("non-finite eigenpair".into()));
            }
            if pair.value < 0.0 {
                continue;
            }
            let n = norm(&pair.vector);
            if n == 0.0 {
                return Err(Error::Degenerate("zero eigenvector".into()));
            }
            pair.vector.iter_mut().for_each(|x| *x /= n);
            canonical_sign(&mut pair.vector);
            kept.push(pair);
        }
        kept.sort_by(|a, b| b.value.total_cmp(&a.value));
        for i in 0..kept.len() {
            for j in 0..i {
                let d = dot(&kept[i].vector, &kept[j].vector);
                if d.abs() > 1e-6 {
                    return Err(Error::Degenerate(format!(
                        "basis vectors {j} and {i} not orthogonal (dot {d:e})"
                    )));
                }
            }
        }
        Ok(Self { pairs: kept, mean })
    }

    /// Leading `q` pairs of a full eigendecomposition (negatives removed).
    pub fn from_eigenpairs(pairs: &[EigenPair], q: usize, mean: Vec<f64>) -> Result<Self> {
        let positives: Vec<EigenPair> = pairs.iter().filter(|p| p.value >= 0.0).take(q).cloned().collect();
        Self::new(positives, mean)
    }

    pub fn empty(mean: Vec<f64>) -> Self {
        Self {
            pairs: Vec::new(),
            mean,
        }
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        check_len(self.mean.len(), mean.len())?;
        self.mean = mean;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn truncated(&self, q: usize) -> PcaBasis {
        PcaBasis {
            pairs: self.pairs[..q.min(self.len())].to_vec(),
            mean: self.mean.clone(),
        }
    }

    /// `p x q` matrix with the basis vectors as columns.
    pub fn w(&self) -> Matrix {
        Matrix::from_fn(self.dim(), self.len(), |i, k| self.pairs[k].vector[i])
    }
}
