//! Accelerated mirror-prox (AMP) for composite variational inequalities
//!
//! Finds `z⋆ ∈ Z` with `(z − z⋆)ᵀ(F(z⋆) + ∇G(z⋆)) ≥ 0` for all `z ∈ Z`, where
//! `F` is `ℓ_F`-Lipschitz and (α-strongly) monotone and `G` is convex and
//! `ℓ_G`-smooth. Each step costs two evaluations of `F` and one of `∇G`.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist};
use crate::sets::ProductSet;

/// Regularity constants of a composite VI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViConstants {
    /// `ℓ_F > 0`
    pub lipschitz_field: f64,
    /// `ℓ_G ≥ 0`
    pub smoothness: f64,
    /// strong monotonicity modulus, 0 when merely monotone
    pub alpha: f64,
}

impl ViConstants {
    pub fn validate(&self) -> Result<()> {
        let ViConstants {
            lipschitz_field: lf,
            smoothness: lg,
            alpha,
        } = *self;
        if !(lf > 0.0 && lf.is_finite()) {
            return Err(Error::Degenerate(format!("l_F must be positive, got {lf}")));
        }
        if !(lg >= 0.0 && lg.is_finite()) {
            return Err(Error::Degenerate(format!("l_G must be nonnegative, got {lg}")));
        }
        if !(alpha >= 0.0 && alpha <= lf) {
            return Err(Error::Degenerate(format!(
                "alpha must lie in [0, l_F] (alpha = {alpha}, l_F = {lf})"
            )));
        }
        Ok(())
    }
}

/// A composite VI `F + ∇G` over a product of simple sets.
pub trait CompositeVi {
    fn domain(&self) -> &ProductSet;
    /// `F(z)`
    fn field(&self, z: &[f64]) -> Result<Vec<f64>>;
    /// `∇G(z)`
    fn smooth_grad(&self, z: &[f64]) -> Vec<f64>;
    /// `G(z)`, used by gap evaluations.
    fn smooth_value(&self, z: &[f64]) -> f64;
    fn constants(&self) -> ViConstants;
}

type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A composite VI assembled from closures. `G` defaults to zero.
pub struct ClosureVi {
    domain: ProductSet,
    field: VecFn,
    grad: Option<(VecFn, ScalarFn)>,
    constants: ViConstants,
}

impl ClosureVi {
    pub fn new<F>(domain: ProductSet, field: F, constants: ViConstants) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        constants.validate()?;
        Ok(Self {
            domain,
            field: Box::new(field),
            grad: None,
            constants,
        })
    }

    pub fn with_smooth<G, V>(mut self, grad: G, value: V) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.grad = Some((Box::new(grad), Box::new(value)));
        self
    }
}

impl CompositeVi for ClosureVi {
    fn domain(&self) -> &ProductSet {
        &self.domain
    }

    fn field(&self, z: &[f64]) -> Result<Vec<f64>> {
        let out = (self.field)(z);
        if out.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: z.len(),
                actual: out.len(),
            });
        }
        Ok(out)
    }

    fn smooth_grad(&self, z: &[f64]) -> Vec<f64> {
        match &self.grad {
            Some((g, _)) => g(z),
            None => vec![0.0; z.len()],
        }
    }

    fn smooth_value(&self, z: &[f64]) -> f64 {
        match &self.grad {
            Some((_, v)) => v(z),
            None => 0.0,
        }
    }

    fn constants(&self) -> ViConstants {
        self.constants
    }
}

/// `(α_k, γ_k) = (2/(k+1), k/(4ℓ_G + 3kℓ_F))` for monotone `F`.
pub fn monotone_schedule(k: usize, lf: f64, lg: f64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidConfig("schedule index starts at 1".into()));
    }
    if lf < 0.0 || lg < 0.0 {
        return Err(Error::Degenerate("negative Lipschitz constant".into()));
    }
    if lf == 0.0 && lg == 0.0 {
        return Err(Error::Degenerate("l_F = l_G = 0".into()));
    }
    let k = k as f64;
    Ok((2.0 / (k + 1.0), k / (4.0 * lg + 3.0 * k * lf)))
}

/// Constant schedule for α-strongly monotone `F`:
/// `α_k = ¼ min{α/ℓ_F, √(α/ℓ_G)}` (the root term is `+∞` when `ℓ_G = 0`)
/// and `γ_k = α_k / α`.
pub fn strongly_monotone_schedule(lf: f64, lg: f64, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::Degenerate(format!(
            "strongly monotone schedule needs alpha > 0 (got {alpha}); use the monotone schedule"
        )));
    }
    if lf < alpha {
        return Err(Error::Degenerate(format!("l_F = {lf} is below alpha = {alpha}")));
    }
    let root = if lg > 0.0 { (alpha / lg).sqrt() } else { f64::INFINITY };
    let a = 0.25 * (alpha / lf).min(root);
    Ok((a, a / alpha))
}

/// Parameter schedule selected from the VI's constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Monotone { lf: f64, lg: f64 },
    StronglyMonotone { alpha_k: f64, gamma_k: f64 },
}

impl Schedule {
    pub fn for_constants(c: &ViConstants) -> Result<Self> {
        c.validate()?;
        if c.alpha > 0.0 {
            let (alpha_k, gamma_k) = strongly_monotone_schedule(c.lipschitz_field, c.smoothness, c.alpha)?;
            Ok(Schedule::StronglyMonotone { alpha_k, gamma_k })
        } else {
            Ok(Schedule::Monotone {
                lf: c.lipschitz_field,
                lg: c.smoothness,
            })
        }
    }

    pub fn params(&self, k: usize) -> (f64, f64) {
        match *self {
            Schedule::Monotone { lf, lg } => {
                let k = k.max(1) as f64;
                (2.0 / (k + 1.0), k / (4.0 * lg + 3.0 * k * lf))
            }
            Schedule::StronglyMonotone { alpha_k, gamma_k } => (alpha_k, gamma_k),
        }
    }
}

/// Inner-loop iterates. `z_md` is not stored; only `∇G(z_md)` is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub z_ag: Vec<f64>,
    pub k: usize,
    pub alpha_k: f64,
    pub gamma_k: f64,
}

impl AmpState {
    /// `z_1 = w_1 = z_1^ag = start` (assumed feasible).
    pub fn start(start: Vec<f64>, schedule: &Schedule) -> Self {
        let (alpha_k, gamma_k) = schedule.params(1);
        Self {
            w: start.clone(),
            z_ag: start.clone(),
            z: start,
            k: 1,
            alpha_k,
            gamma_k,
        }
    }
}

/// `proj_Z(w − γ·direction)`: the Euclidean prox step.
pub fn prox_step(domain: &ProductSet, w: &[f64], gamma: f64, direction: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = w.iter().zip(direction).map(|(wi, di)| wi - gamma * di).collect();
    domain.project_in_place(&mut out);
    out
}

fn checked(v: Vec<f64>, what: &'static str, iteration: usize) -> Result<Vec<f64>> {
    if all_finite(&v) {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, iteration })
    }
}

/// One AMP iteration: `z^md`, `z_{k+1}`, `w_{k+1}`, `z^ag_{k+1}`.
pub fn amp_step<V: CompositeVi + ?Sized>(vi: &V, schedule: &Schedule, state: &mut AmpState) -> Result<()> {
    let (a, g) = (state.alpha_k, state.gamma_k);
    let k = state.k;
    let z_md: Vec<f64> = state
        .z_ag
        .iter()
        .zip(&state.w)
        .map(|(ag, w)| (1.0 - a) * ag + a * w)
        .collect();
    let grad_md = checked(vi.smooth_grad(&z_md), "smooth gradient", k)?;

    let f_w = checked(vi.field(&state.w)?, "field", k)?;
    let dir: Vec<f64> = f_w.iter().zip(&grad_md).map(|(f, g)| f + g).collect();
    let z_next = prox_step(vi.domain(), &state.w, g, &dir);

    let f_z = checked(vi.field(&z_next)?, "field", k)?;
    let dir: Vec<f64> = f_z.iter().zip(&grad_md).map(|(f, g)| f + g).collect();
    let w_next = prox_step(vi.domain(), &state.w, g, &dir);

    for (ag, zn) in state.z_ag.iter_mut().zip(&z_next) {
        *ag = (1.0 - a) * *ag + a * zn;
    }
    state.z = z_next;
    state.w = w_next;
    state.k += 1;
    let (a, g) = schedule.params(state.k);
    state.alpha_k = a;
    state.gamma_k = g;
    Ok(())
}

/// `‖z − proj_Z(z − η(F(z) + ∇G(z)))‖ / η`.
pub fn natural_residual<V: CompositeVi + ?Sized>(vi: &V, z: &[f64], eta: f64) -> Result<f64> {
    let f = vi.field(z)?;
    let g = vi.smooth_grad(z);
    let dir: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
    let p = prox_step(vi.domain(), z, eta, &dir);
    let r = dist(z, &p) / eta;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFinite {
            what: "natural residual",
            iteration: 0,
        })
    }
}

/// Stopping rule for [`amp_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_iter: usize,
    pub residual_tol: f64,
    /// Residual is evaluated every `check_every` steps and at the last one.
    pub check_every: usize,
}

impl StopRule {
    pub fn new(max_iter: usize, residual_tol: f64) -> Self {
        Self {
            max_iter,
            residual_tol,
            check_every: 10,
        }
    }
}

/// Outcome of [`amp_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmpSolution {
    /// The aggregate iterate `z^ag`.
    pub point: Vec<f64>,
    pub iterations: usize,
    /// Natural residual at `point` from the last check.
    pub residual: f64,
    pub budget_exhausted: bool,
    /// `F` evaluations made by the steps (2 per step).
    pub field_evals: usize,
    /// `∇G` evaluations made by the steps (1 per step).
    pub grad_evals: usize,
    /// Residual checks; each costs one `F` and one `∇G` evaluation.
    pub residual_evals: usize,
}

impl AmpSolution {
    /// All `F` evaluations, including residual checks.
    pub fn total_field_evals(&self) -> usize {
        self.field_evals + self.residual_evals
    }
}

/// Runs AMP from `start` (projected onto `Z`) until the natural residual at
/// `z^ag` drops below the tolerance or the budget runs out. The schedule
/// is strongly monotone when `alpha > 0`, monotone otherwise.
pub fn amp_solve<V: CompositeVi + ?Sized>(vi: &V, start: &[f64], stop: StopRule) -> Result<AmpSolution> {
    let c = vi.constants();
    let schedule = Schedule::for_constants(&c)?;
    let z0 = vi.domain().project(start)?;
    let eta = 1.0 / (c.lipschitz_field + c.smoothness);
    let check_every = stop.check_every.max(1);

    let mut state = AmpState::start(z0, &schedule);
    let mut steps = 0;
    let mut residual_evals = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;

    if stop.max_iter == 0 {
        residual = natural_residual(vi, &state.z_ag, eta)?;
        residual_evals += 1;
        converged = residual <= stop.residual_tol;
    }
    while steps < stop.max_iter {
        amp_step(vi, &schedule, &mut state)?;
        steps += 1;
        if steps % check_every == 0 || steps == stop.max_iter {
            residual = natural_residual(vi, &state.z_ag, eta)?;
            residual_evals += 1;
            if residual <= stop.residual_tol {
                converged = true;
                break;
            }
        }
    }
    Ok(AmpSolution {
        point: state.z_ag,
        iterations: steps,
        residual,
        budget_exhausted: !converged,
        field_evals: 2 * steps,
        grad_evals: steps,
        residual_evals,
    })
}
