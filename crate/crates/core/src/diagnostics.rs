//! Solution-quality diagnostics: KKT residuals, the sampled ε-solution test
//! and a brute-force gap for small variational inequalities.

use rand::{rngs::StdRng, SeedableRng};

use crate::amp::CompositeVi;
use crate::error::{Error, Result};
use crate::linalg::{dist, dot};
use crate::model::NgnepProblem;
use crate::penalties::PenaltyState;

/// Feasibility, optimality and complementarity residuals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub r_f: f64,
    pub r_o: f64,
    pub r_c: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.r_f.max(self.r_o).max(self.r_c)
    }

    pub fn all_below(&self, tol: f64) -> bool {
        self.r_f <= tol && self.r_o <= tol && self.r_c <= tol
    }
}

/// KKT residuals at `x` with shared (variational) multipliers taken from
/// `pen.lambda` and `pen.mu`:
///
/// * `R_f = max_s max(‖max{0, A_s x − b_s}‖, ‖E_s x − d_s‖)`
/// * `R_o = ‖x − proj_X̂(x − (v(x) + Σ_s scatter(A_sᵀλ^s + E_sᵀμ^s)))‖`
/// * `R_c = max_s ‖min{λ^s, −(A_s x − b_s)}‖`
pub fn kkt_residuals(problem: &NgnepProblem, x: &[f64], pen: &PenaltyState) -> Result<KktResiduals> {
    let layout = problem.layout();
    let mut stationarity = problem.eval_field(x)?;
    let mut r_f: f64 = 0.0;
    let mut r_c: f64 = 0.0;
    for (s, g) in problem.groups().iter().enumerate() {
        let xs = g.gather(x, layout);
        let ineq = g.ineq_residual(&xs);
        let eq = g.eq_residual(&xs);
        r_f = r_f.max(ineq.map(|v| v.max(0.0)).norm()).max(eq.norm());

        let lambda = nalgebra::DVector::from_column_slice(&pen.lambda[s]);
        let mu = nalgebra::DVector::from_column_slice(&pen.mu[s]);
        let comp = lambda.zip_map(&ineq, |l, r| l.min(-r));
        r_c = r_c.max(comp.norm());

        let local = g.a().tr_mul(&lambda) + g.e().tr_mul(&mu);
        g.scatter_add(&local, &mut stationarity, layout);
    }
    let mut trial: Vec<f64> = x.iter().zip(&stationarity).map(|(xi, si)| xi - si).collect();
    problem.domain().project_in_place(&mut trial);
    Ok(KktResiduals {
        r_f,
        r_o: dist(x, &trial),
        r_c,
    })
}

/// Largest total dimension accepted by [`epsilon_solution_check`].
pub const EPSILON_CHECK_MAX_DIM: usize = 6;

/// Outcome of [`epsilon_solution_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonVerdict {
    pub pass: bool,
    /// All group violations are at most `eps`.
    pub feasible: bool,
    /// Largest `(x̄^ν − y)ᵀ v_ν(y, x̄^{−ν})` found over the searched `y`.
    pub worst_margin: f64,
    /// Player attaining the worst margin.
    pub worst_player: usize,
    pub candidates_checked: usize,
}

/// Sampled certificate for the ε-solution concept on small instances.
///
/// For each player the search covers a grid of its private set (at most
/// `sample_budget` points) plus `sample_budget` random draws, keeping only
/// deviations that satisfy every shared group of that player to within
/// `eps`. Passes when `x` is ε-feasible and no deviation has margin above
/// `eps`.
pub fn epsilon_solution_check(problem: &NgnepProblem, x: &[f64], eps: f64, sample_budget: usize) -> Result<EpsilonVerdict> {
    if problem.dim() > EPSILON_CHECK_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "epsilon_solution_check is limited to {EPSILON_CHECK_MAX_DIM} variables (got {})",
            problem.dim()
        )));
    }
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            actual: x.len(),
        });
    }
    let feasible = problem
        .group_residuals(x)
        .iter()
        .all(|r| r.ineq <= eps && r.eq <= eps);

    let layout = problem.layout();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst_margin = f64::NEG_INFINITY;
    let mut worst_player = 0;
    let mut checked = 0;
    for (nu, player) in problem.players().iter().enumerate() {
        let range = layout.range(nu);
        let own = &x[range.clone()];
        let mut candidates = grid_points(&player.set.bounds(), sample_budget);
        for c in candidates.iter_mut() {
            player.set.project_in_place(c);
        }
        candidates.extend((0..sample_budget).map(|_| player.set.sample(&mut rng)));
        candidates.push(own.to_vec());

        let mut trial = x.to_vec();
        for y in candidates {
            trial[range.clone()].copy_from_slice(&y);
            let admissible = problem.membership(nu).iter().all(|&s| {
                let g = &problem.groups()[s];
                let xs = g.gather(&trial, layout);
                g.ineq_residual(&xs).map(|v| v.max(0.0)).norm() <= eps && g.eq_residual(&xs).norm() <= eps
            });
            if !admissible {
                continue;
            }
            checked += 1;
            let v = problem.eval_joint_gradient(&problem.block_vector(trial.clone())?)?;
            let diff: Vec<f64> = own.iter().zip(&y).map(|(a, b)| a - b).collect();
            let margin = dot(&diff, v.block(nu));
            if margin > worst_margin {
                worst_margin = margin;
                worst_player = nu;
            }
        }
    }
    Ok(EpsilonVerdict {
        pass: feasible && worst_margin <= eps,
        feasible,
        worst_margin,
        worst_player,
        candidates_checked: checked,
    })
}

/// Uniform grid over a box with about `budget` points (at least 2 per axis).
fn grid_points(bounds: &[(f64, f64)], budget: usize) -> Vec<Vec<f64>> {
    let dim = bounds.len();
    let per_axis = ((budget as f64).powf(1.0 / dim as f64).floor() as usize).max(2);
    grid_with_resolution(bounds, per_axis)
}

fn grid_with_resolution(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = bounds
        .iter()
        .map(|&(lo, hi)| {
            if per_axis <= 1 || hi <= lo {
                vec![lo]
            } else {
                (0..per_axis)
                    .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let mut points = vec![Vec::with_capacity(bounds.len())];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Largest total dimension accepted by [`gap_brute_force`].
pub const GAP_MAX_DIM: usize = 3;

/// `max_y {G(z) − G(y) + (z − y)ᵀF(y)}` over a grid of `Z` with
/// `grid_resolution` points per axis (grid points are projected onto `Z`).
pub fn gap_brute_force<V: CompositeVi + ?Sized>(vi: &V, z: &[f64], grid_resolution: usize) -> Result<f64> {
    let domain = vi.domain();
    if domain.dim() > GAP_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "gap_brute_force is limited to {GAP_MAX_DIM} dimensions (got {})",
            domain.dim()
        )));
    }
    let g_z = vi.smooth_value(z);
    let mut best = f64::NEG_INFINITY;
    for mut y in grid_with_resolution(&domain.bounds(), grid_resolution) {
        domain.project_in_place(&mut y);
        let f = vi.field(&y)?;
        let diff: Vec<f64> = z.iter().zip(&y).map(|(a, b)| a - b).collect();
        best = best.max(g_z - vi.smooth_value(&y) + dot(&diff, &f));
    }
    Ok(best)
}
