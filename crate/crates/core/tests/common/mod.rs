//! Shared generators for the integration tests.
#![allow(dead_code)]

use pcag::linalg::{dot, norm, Matrix, PcaBasis};
use pcag::topology::{Neighborhoods, RoutingTree, Sensor, SensorField, SensorId};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < n {
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
    cols
}

/// `Q diag(spectrum) Qᵀ` for a random orthogonal `Q`.
pub fn with_spectrum(rng: &mut ChaCha8Rng, spectrum: &[f64]) -> Matrix {
    let n = spectrum.len();
    let q = random_orthonormal(rng, n);
    let c = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| q[k][i] * spectrum[k] * q[k][j]).sum());
    Matrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]))
}

/// SPD matrix with a geometric spectrum, ratio drawn in `[1.5, 3]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let ratio = rng.gen_range(1.5..3.0);
    let top = rng.gen_range(1.0..10.0);
    let spectrum: Vec<f64> = (0..n).map(|k| top / f64::powi(ratio, k as i32)).collect();
    with_spectrum(rng, &spectrum)
}

pub fn gaussian_samples(rng: &mut ChaCha8Rng, t: usize, p: usize) -> Vec<Vec<f64>> {
    let mix: Vec<Vec<f64>> = (0..p).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..t)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            mix.iter().map(|row| 5.0 + dot(row, &z)).collect()
        })
        .collect()
}

/// Random field whose tree at the returned range spans every sensor.
pub fn random_connected_field(rng: &mut ChaCha8Rng, p: usize) -> (SensorField, f64) {
    loop {
        let sensors: Vec<Sensor> = (0..p)
            .map(|i| Sensor {
                id: SensorId(i as u32 + 1),
                x: rng.gen_range(0.0..40.0),
                y: rng.gen_range(0.0..30.0),
            })
            .collect();
        let root = SensorId(rng.gen_range(1..=p as u32));
        let field = SensorField::new(sensors, root).unwrap();
        let range = rng.gen_range(6.0..25.0);
        if RoutingTree::build(&field, range).is_ok() {
            return (field, range);
        }
    }
}

pub fn tree_and_mask(field: &SensorField, range: f64) -> (Neighborhoods, RoutingTree) {
    let nb = Neighborhoods::build(field, range).unwrap();
    let tree = RoutingTree::build_on(field, &nb).unwrap();
    (nb, tree)
}

/// Frobenius distance between the projectors onto two bases' spans.
pub fn projector_distance(a: &PcaBasis, b: &PcaBasis) -> f64 {
    a.w().projector().sub(&b.w().projector()).unwrap().frobenius_norm()
}

pub fn gram_error(basis: &PcaBasis) -> f64 {
    let pairs = basis.pairs();
    let mut worst: f64 = 0.0;
    for (i, a) in pairs.iter().enumerate() {
        for (j, b) in pairs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&a.vector, &b.vector) - target).abs());
        }
    }
    worst
}

/// Least-squares `y ≈ c0 + c1 x + c2 x²`; returns the coefficients and
/// the residual norm over the norm of `y`.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> ([f64; 3], f64) {
    let mut g = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let f = [1.0, xi, xi * xi];
        for a in 0..3 {
            r[a] += f[a] * yi;
            for b in 0..3 {
                g[a][b] += f[a] * f[b];
            }
        }
    }
    // Gaussian elimination on the 3x3 normal equations
    for i in 0..3 {
        for k in (i + 1)..3 {
            let m = g[k][i] / g[i][i];
            for c in i..3 {
                g[k][c] -= m * g[i][c];
            }
            r[k] -= m * r[i];
        }
    }
    let mut c = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = ((i + 1)..3).map(|k| g[i][k] * c[k]).sum();
        c[i] = (r[i] - s) / g[i][i];
    }
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - c[0] - c[1] * xi - c[2] * xi * xi).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (c, resid / scale)
}
