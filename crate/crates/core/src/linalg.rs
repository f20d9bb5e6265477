//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

const POWER_REL_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;

/// Largest singular value of `m` by power iteration on `MᵀM`.
///
/// The iteration starts from the normalized all-ones vector. When that start
/// lies in the null space of `MᵀM` (e.g. `[1 -1]`), a second run starts from
/// the unit vector of the heaviest column and the larger estimate is kept.
/// Empty and zero matrices return 0.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 || m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let n = m.ncols();
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut best = power_iterate(m, ones);

    let heaviest = (0..n)
        .max_by(|&i, &j| m.column(i).norm_squared().total_cmp(&m.column(j).norm_squared()))
        .unwrap_or(0);
    let mut unit = DVector::zeros(n);
    unit[heaviest] = 1.0;
    let alt = power_iterate(m, unit);
    if alt > best {
        best = alt;
    }
    best
}

fn power_iterate(m: &DMatrix<f64>, mut v: DVector<f64>) -> f64 {
    let mut sigma_sq: f64 = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mv = m * &v;
        let next = m.tr_mul(&mv);
        let norm = next.norm();
        if norm == 0.0 {
            return sigma_sq.sqrt();
        }
        // Rayleigh quotient of MᵀM at the unit vector v.
        let estimate = mv.norm_squared();
        v = next / norm;
        if (estimate - sigma_sq).abs() <= POWER_REL_TOL * estimate {
            sigma_sq = estimate;
            break;
        }
        sigma_sq = estimate;
    }
    // One more Rayleigh quotient at the final direction.
    let final_est = (m * &v).norm_squared();
    final_est.max(sigma_sq).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}
