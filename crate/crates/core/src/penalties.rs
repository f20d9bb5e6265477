//! Quadratic-penalty (`g₁`, `h₁`) and augmented-Lagrangian (`g₂`, `h₂`)
//! terms for the shared constraints, with their gradients and smoothness
//! constants.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::NgnepProblem;

pub use crate::linalg::spectral_norm;

/// Which penalty family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenaltyMode {
    /// `g₁ + h₁`: multipliers are ignored.
    Quadratic,
    /// `g₂ + h₂`: shifted by `λ/β` and `μ/ρ`.
    AugmentedLagrangian,
}

/// Per-group penalty parameters `(β^s, ρ^s)` and multipliers `(λ^s, μ^s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyState {
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
}

impl PenaltyState {
    /// Uniform penalties and zero multipliers sized to `problem`.
    pub fn new(problem: &NgnepProblem, beta0: f64, rho0: f64) -> Self {
        let groups = problem.groups();
        Self {
            beta: vec![beta0; groups.len()],
            rho: vec![rho0; groups.len()],
            lambda: groups.iter().map(|g| vec![0.0; g.num_ineq()]).collect(),
            mu: groups.iter().map(|g| vec![0.0; g.num_eq()]).collect(),
        }
    }

    pub fn validate(&self, problem: &NgnepProblem) -> Result<()> {
        let groups = problem.groups();
        let n = groups.len();
        if self.beta.len() != n || self.rho.len() != n || self.lambda.len() != n || self.mu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.beta.len(),
            });
        }
        for (s, g) in groups.iter().enumerate() {
            if self.lambda[s].len() != g.num_ineq() || self.mu[s].len() != g.num_eq() {
                return Err(Error::InvalidConfig(format!("multiplier sizes do not match group {s}")));
            }
            if !(self.beta[s] > 0.0) || !(self.rho[s] > 0.0) {
                return Err(Error::InvalidConfig(format!("penalties of group {s} must be positive")));
            }
            if self.lambda[s].iter().any(|l| !(*l >= 0.0)) {
                return Err(Error::InvalidConfig(format!("negative inequality multiplier in group {s}")));
            }
        }
        Ok(())
    }

    /// Largest penalty parameter over all groups (1 when there are none).
    pub fn max_penalty(&self) -> f64 {
        self.beta
            .iter()
            .chain(&self.rho)
            .copied()
            .reduce(f64::max)
            .unwrap_or(1.0)
    }

    pub fn min_penalty(&self) -> f64 {
        self.beta
            .iter()
            .chain(&self.rho)
            .copied()
            .reduce(f64::min)
            .unwrap_or(f64::INFINITY)
    }

    pub fn zero_multipliers(&mut self) {
        self.lambda.iter_mut().flatten().for_each(|l| *l = 0.0);
        self.mu.iter_mut().flatten().for_each(|m| *m = 0.0);
    }
}

/// `ℓ_β = Σ β^s‖A_s‖²`, `ℓ_ρ = Σ ρ^s‖E_s‖²`, `ℓ_G = ℓ_β + ℓ_ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessBudget {
    pub l_beta: f64,
    pub l_rho: f64,
    pub l_g: f64,
}

pub fn smoothness_budget(problem: &NgnepProblem, pen: &PenaltyState) -> SmoothnessBudget {
    let mut l_beta = 0.0;
    let mut l_rho = 0.0;
    for s in 0..problem.groups().len() {
        let (na, ne) = problem.group_norms(s);
        l_beta += pen.beta[s] * na * na;
        l_rho += pen.rho[s] * ne * ne;
    }
    SmoothnessBudget {
        l_beta,
        l_rho,
        l_g: l_beta + l_rho,
    }
}

/// Shifted residuals for group `s`: `max{0, A x − b + shift_λ}` and
/// `E x − d + shift_μ`, the shifts being zero in quadratic mode.
fn shifted(problem: &NgnepProblem, pen: &PenaltyState, s: usize, x: &[f64], mode: PenaltyMode) -> (DVector<f64>, DVector<f64>) {
    let g = &problem.groups()[s];
    let xs = g.gather(x, problem.layout());
    let mut ineq = g.ineq_residual(&xs);
    let mut eq = g.eq_residual(&xs);
    if mode == PenaltyMode::AugmentedLagrangian {
        for (r, l) in ineq.iter_mut().zip(&pen.lambda[s]) {
            *r += l / pen.beta[s];
        }
        for (r, m) in eq.iter_mut().zip(&pen.mu[s]) {
            *r += m / pen.rho[s];
        }
    }
    ineq.apply(|v| *v = v.max(0.0));
    (ineq, eq)
}

/// `g + h` under `mode`.
pub fn penalty_value(problem: &NgnepProblem, pen: &PenaltyState, x: &[f64], mode: PenaltyMode) -> f64 {
    (0..problem.groups().len())
        .map(|s| {
            let (ineq, eq) = shifted(problem, pen, s, x, mode);
            0.5 * pen.beta[s] * ineq.norm_squared() + 0.5 * pen.rho[s] * eq.norm_squared()
        })
        .sum()
}

/// `∇(g + h)` under `mode`, assembled blockwise by scattering each group's
/// `A_sᵀ(·)` and `E_sᵀ(·)` onto its members.
pub fn penalty_gradient(problem: &NgnepProblem, pen: &PenaltyState, x: &[f64], mode: PenaltyMode) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (s, g) in problem.groups().iter().enumerate() {
        let (ineq, eq) = shifted(problem, pen, s, x, mode);
        let local = g.a().tr_mul(&(ineq * pen.beta[s])) + g.e().tr_mul(&(eq * pen.rho[s]));
        g.scatter_add(&local, &mut out, problem.layout());
    }
    out
}

/// `∇g₁(x) + ∇h₁(x)`.
pub fn qp_penalty_gradient(problem: &NgnepProblem, pen: &PenaltyState, x: &[f64]) -> Vec<f64> {
    penalty_gradient(problem, pen, x, PenaltyMode::Quadratic)
}

/// `∇g₂(x) + ∇h₂(x)`.
pub fn al_penalty_gradient(problem: &NgnepProblem, pen: &PenaltyState, x: &[f64]) -> Vec<f64> {
    penalty_gradient(problem, pen, x, PenaltyMode::AugmentedLagrangian)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockVector, ConstraintGroup, Player};
    use crate::sets::SimpleSet;
    use approx::assert_abs_diff_eq;

    fn two_scalar_players(groups: Vec<ConstraintGroup>) -> NgnepProblem {
        let players = (0..2)
            .map(|_| Player::new(SimpleSet::uniform_box(1, -2.0, 2.0), |_: &BlockVector| vec![0.0]))
            .collect();
        NgnepProblem::new(players, groups, 1.0, 0.0).unwrap()
    }

    fn sum_cap() -> NgnepProblem {
        two_scalar_players(vec![ConstraintGroup::inequality(vec![0, 1], 2, &[1.0, 1.0], &[1.0]).unwrap()])
    }

    fn diff_eq() -> NgnepProblem {
        two_scalar_players(vec![ConstraintGroup::equality(vec![0, 1], 2, &[1.0, -1.0], &[0.0]).unwrap()])
    }

    #[test]
    fn quadratic_gradient_examples() {
        let p = sum_cap();
        let pen = PenaltyState::new(&p, 2.0, 1.0);
        assert_eq!(qp_penalty_gradient(&p, &pen, &[1.0, 1.0]), vec![2.0, 2.0]);
        assert_eq!(qp_penalty_gradient(&p, &pen, &[0.2, 0.3]), vec![0.0, 0.0]);
        assert_abs_diff_eq!(penalty_value(&p, &pen, &[1.0, 1.0], PenaltyMode::Quadratic), 1.0);

        let p = diff_eq();
        let pen = PenaltyState::new(&p, 1.0, 3.0);
        let g = qp_penalty_gradient(&p, &pen, &[0.7, 0.2]);
        assert_abs_diff_eq!(g[0], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], -1.5, epsilon = 1e-14);
    }

    #[test]
    fn augmented_gradient_examples() {
        let p = sum_cap();
        let mut pen = PenaltyState::new(&p, 2.0, 1.0);
        pen.lambda[0] = vec![4.0];
        assert_eq!(al_penalty_gradient(&p, &pen, &[0.0, 0.0]), vec![2.0, 2.0]);

        let p = diff_eq();
        let mut pen = PenaltyState::new(&p, 1.0, 1.0);
        pen.mu[0] = vec![0.5];
        assert_eq!(al_penalty_gradient(&p, &pen, &[0.0, 0.0]), vec![0.5, -0.5]);
    }

    #[test]
    fn zero_multipliers_reduce_to_quadratic() {
        let p = sum_cap();
        let pen = PenaltyState::new(&p, 3.0, 1.0);
        for x in [[1.0, 1.0], [0.1, 0.2], [-1.0, 2.0]] {
            assert_eq!(qp_penalty_gradient(&p, &pen, &x), al_penalty_gradient(&p, &pen, &x));
            let q = penalty_value(&p, &pen, &x, PenaltyMode::Quadratic);
            let a = penalty_value(&p, &pen, &x, PenaltyMode::AugmentedLagrangian);
            assert!((q - a).abs() <= 1e-15);
        }
        assert_eq!(penalty_value(&p, &pen, &[0.1, 0.2], PenaltyMode::AugmentedLagrangian), 0.0);
    }

    #[test]
    fn smoothness_budget_examples() {
        let p = sum_cap();
        let pen = PenaltyState::new(&p, 4.0, 1.0);
        let b = smoothness_budget(&p, &pen);
        assert_abs_diff_eq!(b.l_beta, 8.0, epsilon = 1e-6);
        assert_eq!(b.l_rho, 0.0);
        assert_abs_diff_eq!(b.l_g, 8.0, epsilon = 1e-6);

        // Two groups with ‖A‖² = 2 and 3 (A = [1 1] and [1 √2]).
        let p = two_scalar_players(vec![
            ConstraintGroup::inequality(vec![0, 1], 2, &[1.0, 1.0], &[1.0]).unwrap(),
            ConstraintGroup::inequality(vec![0, 1], 2, &[1.0, 2f64.sqrt()], &[1.0]).unwrap(),
        ]);
        let mut pen = PenaltyState::new(&p, 1.0, 1.0);
        pen.beta = vec![1.0, 2.0];
        assert_abs_diff_eq!(smoothness_budget(&p, &pen).l_beta, 8.0, epsilon = 1e-6);
    }

    #[test]
    fn max_penalty_covers_both_kinds() {
        let p = sum_cap();
        let mut pen = PenaltyState::new(&p, 4.0, 16.0);
        assert_eq!(pen.max_penalty(), 16.0);
        pen.rho[0] = 1.0;
        assert_eq!(pen.max_penalty(), 4.0);
        assert_eq!(pen.min_penalty(), 1.0);
    }
}
