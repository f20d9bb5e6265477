//! Outer loops: the AMP quadratic penalty method (AMPQP) and the AMP
//! augmented Lagrangian method (AMPAL).
//!
//! Both loops grow the penalties geometrically, shrink the subproblem
//! accuracy `δ_k = δ_0/γ^k`, and warm-start AMP on the penalized VI at the
//! previous outer iterate. AMPAL additionally performs the safeguarded
//! multiplier step after every subproblem.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::amp::{amp_solve, strongly_monotone_schedule, CompositeVi, StopRule, ViConstants};
use crate::diagnostics::{kkt_residuals, KktResiduals};
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model::{BlockVector, GroupResidual, NgnepProblem};
use crate::penalties::{penalty_gradient, penalty_value, smoothness_budget, PenaltyMode, PenaltyState};
use crate::sets::ProductSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ampqp,
    Ampal,
}

impl Algorithm {
    pub fn mode(self) -> PenaltyMode {
        match self {
            Algorithm::Ampqp => PenaltyMode::Quadratic,
            Algorithm::Ampal => PenaltyMode::AugmentedLagrangian,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ampqp => "ampqp",
            Algorithm::Ampal => "ampal",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ampqp" => Ok(Algorithm::Ampqp),
            "ampal" => Ok(Algorithm::Ampal),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Outer-loop parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    /// Growth ratio `γ > 1` of penalties and shrink ratio of `δ`.
    pub gamma: f64,
    /// Initial subproblem accuracy `δ_0 ∈ (0, 1)`.
    pub delta0: f64,
    pub beta0: f64,
    pub rho0: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub penalty_cap: f64,
    pub multiplier_cap: f64,
    /// Grow penalties only when the constraint violation stalls.
    pub adaptive_gating: bool,
    /// Sufficient-decrease factor `τ ∈ (0, 1)` of the gate.
    pub gating_factor: f64,
    /// Residual-check cadence inside AMP.
    pub check_every: usize,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            gamma: 4.0,
            delta0: 0.5,
            beta0: 1.0,
            rho0: 1.0,
            max_outer: 50,
            max_inner: 2000,
            inner_tol: 1e-6,
            outer_tol: 1e-4,
            penalty_cap: 1e12,
            multiplier_cap: 1e6,
            adaptive_gating: true,
            gating_factor: 0.5,
            check_every: 10,
        }
    }
}

impl OuterConfig {
    /// Defaults with `γ = 4` below 100 variables and `γ = 2` otherwise.
    pub fn for_dimension(n: usize) -> Self {
        Self {
            gamma: if n < 100 { 4.0 } else { 2.0 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return bad("gamma must exceed 1");
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return bad("delta0 must lie in (0, 1)");
        }
        if !(self.beta0 > 0.0 && self.rho0 > 0.0) {
            return bad("initial penalties must be positive");
        }
        if !(self.penalty_cap > 0.0 && self.multiplier_cap > 0.0) {
            return bad("caps must be positive");
        }
        if !(self.gating_factor > 0.0 && self.gating_factor < 1.0) {
            return bad("gating factor must lie in (0, 1)");
        }
        if !(self.inner_tol >= 0.0 && self.outer_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    OuterBudget,
    PenaltyCapHit,
    SubproblemFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::OuterBudget => "outer_budget",
            Termination::PenaltyCapHit => "penalty_cap_hit",
            Termination::SubproblemFailure => "subproblem_failure",
        })
    }
}

/// What happened in one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    /// Penalties used by this iteration's subproblem (`β_{k+1}`, `ρ_{k+1}`).
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
    /// `δ_{k+1}`
    pub delta: f64,
    pub grew: bool,
    pub inner_tol: f64,
    pub inner_budget: usize,
    pub inner_iterations: usize,
    pub inner_budget_exhausted: bool,
    pub field_evals: usize,
    pub residuals: KktResiduals,
    pub violation: f64,
}

/// Result of an outer-loop solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_final: BlockVector,
    /// Uniform average of the outer iterates `x_1, …, x_T` (`x_0` if `T = 0`).
    pub x_avg: BlockVector,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub residual_history: Vec<KktResiduals>,
    /// Residuals at the (projected) starting point.
    pub initial_residuals: KktResiduals,
    pub final_residuals: KktResiduals,
    /// Largest penalty parameter at exit.
    pub rho_max: f64,
    pub termination: Termination,
    /// Final penalties and the multipliers used for the residuals. For
    /// AMPQP these are the penalty-implied estimates `β·max{0, Ax − b}`
    /// and `ρ(Ex − d)`.
    pub penalties: PenaltyState,
    /// All `F` evaluations spent inside AMP, residual checks included.
    pub field_evals: usize,
    pub trace: Vec<OuterRecord>,
    /// Diagnostic for a `subproblem_failure`.
    pub failure: Option<String>,
}

/// The penalized VI `v + ∇(g + h)` over `X̂`.
pub struct PenalizedVi<'a> {
    problem: &'a NgnepProblem,
    pen: &'a PenaltyState,
    mode: PenaltyMode,
    constants: ViConstants,
}

impl<'a> PenalizedVi<'a> {
    pub fn new(problem: &'a NgnepProblem, pen: &'a PenaltyState, mode: PenaltyMode) -> Self {
        let budget = smoothness_budget(problem, pen);
        let lf = problem.lipschitz_field();
        Self {
            problem,
            pen,
            mode,
            constants: ViConstants {
                lipschitz_field: lf,
                smoothness: budget.l_g,
                alpha: problem.alpha().min(lf),
            },
        }
    }
}

impl CompositeVi for PenalizedVi<'_> {
    fn domain(&self) -> &ProductSet {
        self.problem.domain()
    }

    fn field(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.problem.eval_field(z)
    }

    fn smooth_grad(&self, z: &[f64]) -> Vec<f64> {
        penalty_gradient(self.problem, self.pen, z, self.mode)
    }

    fn smooth_value(&self, z: &[f64]) -> f64 {
        penalty_value(self.problem, self.pen, z, self.mode)
    }

    fn constants(&self) -> ViConstants {
        self.constants
    }
}

/// Iteration count after which the AMP gap bound drops below `delta`, from
/// the explicit monotone (`16ℓ_G D²/(k(k−1)) + 12ℓ_F D²/(k−1)`) and
/// strongly monotone (`(1 − α_0)^{k−1}(ℓ_F + (ℓ_G + α)/2)D²`) bounds.
pub fn theory_inner_budget(c: &ViConstants, diameter: f64, delta: f64) -> usize {
    let d2 = diameter * diameter;
    let k = if c.alpha > 0.0 {
        match strongly_monotone_schedule(c.lipschitz_field, c.smoothness, c.alpha) {
            Ok((a0, _)) => {
                let scale = (c.lipschitz_field + 0.5 * (c.smoothness + c.alpha)) * d2;
                1.0 + ((scale / delta).ln() / -(1.0 - a0).ln()).max(0.0)
            }
            Err(_) => f64::INFINITY,
        }
    } else {
        let smooth = (32.0 * c.smoothness * d2 / delta).sqrt();
        let lipschitz = 24.0 * c.lipschitz_field * d2 / delta;
        1.0 + smooth.max(lipschitz)
    };
    if k.is_finite() && k < usize::MAX as f64 {
        (k.ceil() as usize).max(1)
    } else {
        usize::MAX
    }
}

/// Grow the penalties unless the largest combined group violation shrank
/// by the factor `tau` since the previous outer iterate. Always grows on
/// the first iteration.
pub fn penalty_gate(prev: Option<&[GroupResidual]>, curr: &[GroupResidual], tau: f64) -> bool {
    let worst = |r: &[GroupResidual]| r.iter().map(GroupResidual::combined).fold(0.0, f64::max);
    match prev {
        None => true,
        Some(prev) => worst(curr) > tau * worst(prev),
    }
}

/// Safeguarded multiplier step:
/// `λ ← min(cap, max{0, λ + β(Ax − b)})`, `μ ← clamp(μ + ρ(Ex − d), ±cap)`.
pub fn update_multipliers(problem: &NgnepProblem, pen: &mut PenaltyState, x: &[f64], cap: f64) {
    for (s, g) in problem.groups().iter().enumerate() {
        let xs = g.gather(x, problem.layout());
        let ineq = g.ineq_residual(&xs);
        let eq = g.eq_residual(&xs);
        for (l, r) in pen.lambda[s].iter_mut().zip(ineq.iter()) {
            *l = (*l + pen.beta[s] * r).max(0.0).min(cap);
        }
        for (m, r) in pen.mu[s].iter_mut().zip(eq.iter()) {
            *m = (*m + pen.rho[s] * r).clamp(-cap, cap);
        }
    }
}

/// Penalty-implied multipliers `β·max{0, Ax − b}` and `ρ(Ex − d)`.
fn implied_multipliers(problem: &NgnepProblem, pen: &mut PenaltyState, x: &[f64], cap: f64) {
    pen.zero_multipliers();
    update_multipliers(problem, pen, x, cap);
}

/// Per-group inequality and equality multipliers `(λ, μ)`.
pub type Multipliers = (Vec<Vec<f64>>, Vec<Vec<f64>>);

const NNLS_MAX_ITER: usize = 500;
const NNLS_TOL: f64 = 1e-8;

/// Multipliers `(λ_0, μ_0)` approximately minimizing
/// `‖v(x_0) + Σ_s scatter(A_sᵀλ^s + E_sᵀμ^s)‖²` over `λ ≥ 0`, by projected
/// gradient with step `1/L`, `L = ‖C‖²` for the stacked constraint matrix
/// `C`. Entries are clamped to `±cap` (`[0, cap]` for `λ`).
pub fn nnls_multiplier_init(problem: &NgnepProblem, x0: &[f64], cap: f64) -> Result<Multipliers> {
    let groups = problem.groups();
    let layout = problem.layout();
    let n = problem.dim();
    let v = DVector::from_vec(problem.eval_field(x0)?);

    // Rows of C in full coordinates: all inequality rows, then all equality rows.
    let n_ineq: usize = groups.iter().map(|g| g.num_ineq()).sum();
    let n_eq: usize = groups.iter().map(|g| g.num_eq()).sum();
    let mut c = DMatrix::zeros(n_ineq + n_eq, n);
    let mut row = 0;
    let mut place = |local: nalgebra::RowDVector<f64>, members: &[usize], row: usize| {
        let mut pos = 0;
        for m in members {
            for col in layout.range(*m) {
                c[(row, col)] = local[pos];
                pos += 1;
            }
        }
    };
    for g in groups {
        for i in 0..g.num_ineq() {
            place(g.a().row(i).into_owned(), g.members(), row);
            row += 1;
        }
    }
    for g in groups {
        for i in 0..g.num_eq() {
            place(g.e().row(i).into_owned(), g.members(), row);
            row += 1;
        }
    }

    let mut y = DVector::zeros(n_ineq + n_eq);
    let lipschitz = spectral_norm(&c).powi(2);
    if lipschitz > 0.0 {
        let project = |y: &mut DVector<f64>| {
            for (i, val) in y.iter_mut().enumerate() {
                *val = if i < n_ineq { val.clamp(0.0, cap) } else { val.clamp(-cap, cap) };
            }
        };
        for _ in 0..NNLS_MAX_ITER {
            let residual = &v + c.tr_mul(&y);
            let grad = &c * residual;
            let mut next = &y - &grad / lipschitz;
            project(&mut next);
            let mapping = (&next - &y).norm() * lipschitz;
            y = next;
            if mapping <= NNLS_TOL {
                break;
            }
        }
    }

    let mut lambda = Vec::with_capacity(groups.len());
    let mut mu = Vec::with_capacity(groups.len());
    let (mut li, mut mi) = (0, n_ineq);
    for g in groups {
        lambda.push(y.rows(li, g.num_ineq()).iter().copied().collect());
        li += g.num_ineq();
        mu.push(y.rows(mi, g.num_eq()).iter().copied().collect());
        mi += g.num_eq();
    }
    Ok((lambda, mu))
}

/// Extra knobs for [`ampal_solve_with`].
#[derive(Debug, Clone, Default)]
pub struct AmpalOptions {
    /// Starting multipliers; NNLS initialization when absent.
    pub initial_multipliers: Option<Multipliers>,
    /// Skip multiplier updates (keeps the initial multipliers).
    pub freeze_multipliers: bool,
}

/// Quadratic-penalty outer loop.
pub fn ampqp_solve(problem: &NgnepProblem, config: &OuterConfig, x0: &[f64]) -> Result<SolveReport> {
    run_outer(problem, config, x0, PenaltyMode::Quadratic, &AmpalOptions::default())
}

/// Augmented Lagrangian outer loop with NNLS multiplier start.
pub fn ampal_solve(problem: &NgnepProblem, config: &OuterConfig, x0: &[f64]) -> Result<SolveReport> {
    run_outer(problem, config, x0, PenaltyMode::AugmentedLagrangian, &AmpalOptions::default())
}

pub fn ampal_solve_with(problem: &NgnepProblem, config: &OuterConfig, x0: &[f64], options: &AmpalOptions) -> Result<SolveReport> {
    run_outer(problem, config, x0, PenaltyMode::AugmentedLagrangian, options)
}

/// Dispatches on the algorithm.
pub fn solve(problem: &NgnepProblem, algorithm: Algorithm, config: &OuterConfig, x0: &[f64]) -> Result<SolveReport> {
    match algorithm {
        Algorithm::Ampqp => ampqp_solve(problem, config, x0),
        Algorithm::Ampal => ampal_solve(problem, config, x0),
    }
}

fn run_outer(
    problem: &NgnepProblem,
    config: &OuterConfig,
    x0: &[f64],
    mode: PenaltyMode,
    options: &AmpalOptions,
) -> Result<SolveReport> {
    config.validate()?;
    let mut x = problem.domain().project(x0)?;
    let augmented = mode == PenaltyMode::AugmentedLagrangian;

    let mut pen = PenaltyState::new(problem, config.beta0.min(config.penalty_cap), config.rho0.min(config.penalty_cap));
    if augmented {
        let (lambda, mu) = match &options.initial_multipliers {
            Some(m) => m.clone(),
            None => nnls_multiplier_init(problem, &x, config.multiplier_cap)?,
        };
        pen.lambda = lambda;
        pen.mu = mu;
        pen.validate(problem)?;
    }

    let diagnostic = |pen: &PenaltyState, x: &[f64]| -> Result<(PenaltyState, KktResiduals)> {
        let mut diag = pen.clone();
        if !augmented {
            implied_multipliers(problem, &mut diag, x, config.multiplier_cap);
        }
        let r = kkt_residuals(problem, x, &diag)?;
        Ok((diag, r))
    };

    let (mut diag_pen, initial_residuals) = diagnostic(&pen, &x)?;
    let mut report = SolveReport {
        x_final: problem.block_vector(x.clone())?,
        x_avg: problem.block_vector(x.clone())?,
        outer_iters: 0,
        inner_iters_total: 0,
        residual_history: Vec::new(),
        initial_residuals,
        final_residuals: initial_residuals,
        rho_max: pen.max_penalty(),
        termination: Termination::OuterBudget,
        penalties: diag_pen.clone(),
        field_evals: 0,
        trace: Vec::new(),
        failure: None,
    };
    if initial_residuals.all_below(config.outer_tol) {
        report.termination = Termination::Converged;
        return Ok(report);
    }

    let diameter = problem.domain().diameter();
    let mut delta = config.delta0;
    let mut sum = vec![0.0; x.len()];
    let mut prev_groups: Option<Vec<GroupResidual>> = None;
    let mut curr_groups = problem.group_residuals(&x);

    for _ in 0..config.max_outer {
        let grew = !config.adaptive_gating || penalty_gate(prev_groups.as_deref(), &curr_groups, config.gating_factor);
        if grew {
            for b in pen.beta.iter_mut().chain(pen.rho.iter_mut()) {
                *b = (*b * config.gamma).min(config.penalty_cap);
            }
        }
        delta /= config.gamma;

        let vi = PenalizedVi::new(problem, &pen, mode);
        let constants = vi.constants();
        let tol = config.inner_tol.max(delta / (diameter * (1.0 + constants.smoothness)));
        let budget = config.max_inner.min(theory_inner_budget(&constants, diameter, delta));
        let stop = StopRule {
            max_iter: budget,
            residual_tol: tol,
            check_every: config.check_every,
        };
        let sol = match amp_solve(&vi, &x, stop) {
            Ok(sol) => sol,
            Err(e @ Error::NonFinite { .. }) => {
                report.termination = Termination::SubproblemFailure;
                report.failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        x = sol.point.clone();

        if augmented && !options.freeze_multipliers {
            update_multipliers(problem, &mut pen, &x, config.multiplier_cap);
        }
        let (dp, residuals) = diagnostic(&pen, &x)?;
        diag_pen = dp;
        if !(residuals.r_f.is_finite() && residuals.r_o.is_finite() && residuals.r_c.is_finite()) {
            report.termination = Termination::SubproblemFailure;
            report.failure = Some("non-finite residuals after subproblem".into());
            break;
        }

        for (acc, xi) in sum.iter_mut().zip(&x) {
            *acc += xi;
        }
        report.outer_iters += 1;
        report.inner_iters_total += sol.iterations;
        report.field_evals += sol.total_field_evals();
        report.residual_history.push(residuals);
        report.final_residuals = residuals;

        prev_groups = Some(std::mem::replace(&mut curr_groups, problem.group_residuals(&x)));
        report.trace.push(OuterRecord {
            beta: pen.beta.clone(),
            rho: pen.rho.clone(),
            delta,
            grew,
            inner_tol: tol,
            inner_budget: budget,
            inner_iterations: sol.iterations,
            inner_budget_exhausted: sol.budget_exhausted,
            field_evals: sol.total_field_evals(),
            residuals,
            violation: curr_groups.iter().map(GroupResidual::combined).fold(0.0, f64::max),
        });
        log::info!(
            "outer {}: beta_max={:.3e} inner={} R_f={:.3e} R_o={:.3e} R_c={:.3e}",
            report.outer_iters,
            pen.max_penalty(),
            sol.iterations,
            residuals.r_f,
            residuals.r_o,
            residuals.r_c
        );

        if residuals.all_below(config.outer_tol) {
            report.termination = Termination::Converged;
            break;
        }
        if pen.min_penalty() >= config.penalty_cap {
            report.termination = Termination::PenaltyCapHit;
            break;
        }
    }

    report.x_final = problem.block_vector(x)?;
    if report.outer_iters > 0 {
        let t = report.outer_iters as f64;
        report.x_avg = problem.block_vector(sum.into_iter().map(|v| v / t).collect())?;
    }
    report.rho_max = pen.max_penalty();
    report.penalties = diag_pen;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockVector, ConstraintGroup, Player};
    use crate::sets::SimpleSet;
    use approx::assert_abs_diff_eq;

    fn scalar_problem(a: &[f64], b: &[f64], e: &[f64], d: &[f64]) -> NgnepProblem {
        NgnepProblem::new(
            vec![Player::new(SimpleSet::uniform_box(1, -5.0, 5.0), |_: &BlockVector| vec![1.0])],
            vec![ConstraintGroup::new(vec![0], 1, a, b, e, d).unwrap()],
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn gate_examples() {
        let r = |v: f64| vec![GroupResidual { ineq: v, eq: 0.0 }];
        assert!(!penalty_gate(Some(&r(1.0)), &r(0.4), 0.5));
        assert!(penalty_gate(Some(&r(1.0)), &r(0.6), 0.5));
        assert!(penalty_gate(None, &r(0.0), 0.5));
    }

    #[test]
    fn multiplier_update_examples() {
        // λ: max{0, 0.5 + 2·(−1)} = 0, with A x − b = 0 − 1.
        let p = scalar_problem(&[1.0], &[1.0], &[], &[]);
        let mut pen = PenaltyState::new(&p, 2.0, 1.0);
        pen.lambda[0] = vec![0.5];
        update_multipliers(&p, &mut pen, &[0.0], 1e6);
        assert_eq!(pen.lambda[0], vec![0.0]);

        // μ: 1 + 4·0.25 = 2, with E x − d = 0.25.
        let p = scalar_problem(&[], &[], &[1.0], &[0.0]);
        let mut pen = PenaltyState::new(&p, 1.0, 4.0);
        pen.mu[0] = vec![1.0];
        update_multipliers(&p, &mut pen, &[0.25], 1e6);
        assert_eq!(pen.mu[0], vec![2.0]);

        // Caps clamp both kinds.
        let mut pen = PenaltyState::new(&p, 1.0, 1e9);
        update_multipliers(&p, &mut pen, &[1.0], 10.0);
        assert_eq!(pen.mu[0], vec![10.0]);
        update_multipliers(&p, &mut pen, &[-1.0], 10.0);
        assert_eq!(pen.mu[0], vec![-10.0]);
    }

    #[test]
    fn nnls_examples() {
        let p = scalar_problem(&[], &[], &[1.0], &[0.0]);
        let (l, m) = nnls_multiplier_init(&p, &[0.0], 1e6).unwrap();
        assert!(l[0].is_empty());
        assert_abs_diff_eq!(m[0][0], -1.0, epsilon = 1e-10);

        let p = scalar_problem(&[1.0], &[0.0], &[], &[]);
        let (l, _) = nnls_multiplier_init(&p, &[0.0], 1e6).unwrap();
        assert_eq!(l[0], vec![0.0]);

        let zero_field = NgnepProblem::new(
            vec![Player::new(SimpleSet::unit_box(2), |_: &BlockVector| vec![0.0, 0.0])],
            vec![ConstraintGroup::new(vec![0], 2, &[1.0, 1.0], &[1.0], &[1.0, -1.0], &[0.0]).unwrap()],
            1.0,
            0.0,
        )
        .unwrap();
        let (l, m) = nnls_multiplier_init(&zero_field, &[0.2, 0.3], 1e6).unwrap();
        assert_eq!(l[0], vec![0.0]);
        assert_eq!(m[0], vec![0.0]);
    }

    #[test]
    fn nnls_matches_active_least_squares() {
        // v = (−1, −1), A = [1 1]: minimize 2(λ − 1)² → λ = 1.
        let players = (0..2)
            .map(|_| Player::new(SimpleSet::unit_box(1), |_: &BlockVector| vec![-1.0]))
            .collect();
        let g = ConstraintGroup::inequality(vec![0, 1], 2, &[1.0, 1.0], &[0.5]).unwrap();
        let p = NgnepProblem::new(players, vec![g], 1.0, 0.0).unwrap();
        let (l, _) = nnls_multiplier_init(&p, &[0.0, 0.0], 1e6).unwrap();
        assert_abs_diff_eq!(l[0][0], 1.0, epsilon = 1e-8);
        let (l, _) = nnls_multiplier_init(&p, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(l[0], vec![0.5]);
    }

    #[test]
    fn config_validation() {
        assert!(OuterConfig::default().validate().is_ok());
        for bad in [
            OuterConfig { gamma: 1.0, ..Default::default() },
            OuterConfig { delta0: 1.0, ..Default::default() },
            OuterConfig { gating_factor: 1.5, ..Default::default() },
            OuterConfig { beta0: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!(OuterConfig::for_dimension(10).gamma, 4.0);
        assert_eq!(OuterConfig::for_dimension(100).gamma, 2.0);
    }

    #[test]
    fn theory_budget_is_finite_and_decreasing_in_delta() {
        let c = ViConstants {
            lipschitz_field: 3.0,
            smoothness: 8.0,
            alpha: 0.0,
        };
        let loose = theory_inner_budget(&c, 1.0, 1e-1);
        let tight = theory_inner_budget(&c, 1.0, 1e-3);
        assert!(loose < tight);
        let strong = ViConstants { alpha: 1.0, ..c };
        assert!(theory_inner_budget(&strong, 1.0, 1e-3) < tight);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Ampqp, Algorithm::Ampal] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert!("newton".parse::<Algorithm>().is_err());
    }
}
