//! The NGNEP data model: block-structured strategy profiles, players with
//! private simple sets, and overlapping linear constraint groups.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{rngs::StdRng, SeedableRng};

use crate::error::{Error, Result};
use crate::linalg::{dot, spectral_norm};
use crate::sets::{ProductSet, SimpleSet};

/// Block boundaries of a strategy profile: `offsets[0] = 0`,
/// `offsets[N] = n`, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout(Arc<[usize]>);

impl BlockLayout {
    pub fn from_widths(widths: &[usize]) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidProblem("at least one block is required".into()));
        }
        let mut offsets = Vec::with_capacity(widths.len() + 1);
        offsets.push(0);
        for (i, w) in widths.iter().enumerate() {
            if *w == 0 {
                return Err(Error::InvalidProblem(format!("block {i} has zero width")));
            }
            offsets.push(offsets[i] + w);
        }
        Ok(Self(offsets.into()))
    }

    pub fn from_offsets(offsets: Vec<usize>) -> Result<Self> {
        if offsets.len() < 2 || offsets[0] != 0 || offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProblem(
                "offsets must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self(offsets.into()))
    }

    pub fn num_blocks(&self) -> usize {
        self.0.len() - 1
    }

    pub fn total(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn width(&self, block: usize) -> usize {
        self.0[block + 1] - self.0[block]
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        self.0[block]..self.0[block + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.0
    }
}

/// A joint strategy profile `x = (x¹, …, x^N)`.
#[derive(Clone, PartialEq)]
pub struct BlockVector {
    data: Vec<f64>,
    layout: BlockLayout,
}

impl fmt::Debug for BlockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<&[f64]> = (0..self.num_blocks()).map(|i| self.block(i)).collect();
        f.debug_tuple("BlockVector").field(&blocks).finish()
    }
}

impl BlockVector {
    pub fn new(data: Vec<f64>, layout: BlockLayout) -> Result<Self> {
        if data.len() != layout.total() {
            return Err(Error::DimensionMismatch {
                expected: layout.total(),
                actual: data.len(),
            });
        }
        Ok(Self { data, layout })
    }

    pub fn zeros(layout: BlockLayout) -> Self {
        Self {
            data: vec![0.0; layout.total()],
            layout,
        }
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let widths: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let layout = BlockLayout::from_widths(&widths)?;
        Ok(Self {
            data: blocks.concat(),
            layout,
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn num_blocks(&self) -> usize {
        self.layout.num_blocks()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.layout.range(i)]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.layout.range(i);
        &mut self.data[r]
    }

    pub fn blocks(&self) -> Vec<Vec<f64>> {
        (0..self.num_blocks()).map(|i| self.block(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// One shared constraint group `(N_s, A_s, b_s, E_s, d_s)`:
/// `A_s x^{N_s} ≤ b_s` and `E_s x^{N_s} = d_s`, where `x^{N_s}` stacks the
/// member blocks in member order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGroup {
    members: Vec<usize>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    e: DMatrix<f64>,
    d: DVector<f64>,
}

impl ConstraintGroup {
    /// Builds a group from row-major data. `a`/`e` have as many columns as
    /// `cols`; pass empty slices for an absent side.
    pub fn new(
        members: Vec<usize>,
        cols: usize,
        a: &[f64],
        b: &[f64],
        e: &[f64],
        d: &[f64],
    ) -> Result<Self> {
        let bad = |reason: String| Error::InvalidProblem(format!("constraint group: {reason}"));
        if cols == 0 {
            return Err(bad("group must span at least one column".into()));
        }
        if a.len() != b.len() * cols {
            return Err(bad(format!("A has {} entries, expected {}×{cols}", a.len(), b.len())));
        }
        if e.len() != d.len() * cols {
            return Err(bad(format!("E has {} entries, expected {}×{cols}", e.len(), d.len())));
        }
        Ok(Self {
            members,
            a: DMatrix::from_row_slice(b.len(), cols, a),
            b: DVector::from_column_slice(b),
            e: DMatrix::from_row_slice(d.len(), cols, e),
            d: DVector::from_column_slice(d),
        })
    }

    /// Inequality-only group.
    pub fn inequality(members: Vec<usize>, cols: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(members, cols, a, b, &[], &[])
    }

    /// Equality-only group.
    pub fn equality(members: Vec<usize>, cols: usize, e: &[f64], d: &[f64]) -> Result<Self> {
        Self::new(members, cols, &[], &[], e, d)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn num_ineq(&self) -> usize {
        self.b.len()
    }

    pub fn num_eq(&self) -> usize {
        self.d.len()
    }

    fn validate(&self, index: usize, layout: &BlockLayout) -> Result<()> {
        let bad = |reason: String| Error::InvalidGroup { group: index, reason };
        if self.members.is_empty() {
            return Err(bad("no members".into()));
        }
        if self.members.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("members must be sorted and duplicate-free".into()));
        }
        if let Some(m) = self.members.iter().find(|m| **m >= layout.num_blocks()) {
            return Err(bad(format!("member {m} out of range")));
        }
        let width: usize = self.members.iter().map(|m| layout.width(*m)).sum();
        if self.a.ncols() != width || self.e.ncols() != width {
            return Err(bad(format!(
                "matrices have {} columns, members span {width}",
                self.a.ncols()
            )));
        }
        if self.num_ineq() == 0 && self.num_eq() == 0 {
            return Err(bad("group has neither inequalities nor equalities".into()));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&self.a) || !finite(&self.e) || !self.b.iter().all(|v| v.is_finite()) || !self.d.iter().all(|v| v.is_finite()) {
            return Err(bad("non-finite coefficients".into()));
        }
        Ok(())
    }

    /// Stacks the member blocks of `x` into `x^{N_s}`.
    pub fn gather(&self, x: &[f64], layout: &BlockLayout) -> DVector<f64> {
        let width = self.a.ncols();
        let mut out = Vec::with_capacity(width);
        for m in &self.members {
            out.extend_from_slice(&x[layout.range(*m)]);
        }
        DVector::from_vec(out)
    }

    /// Adds a local (member-stacked) vector into the full-length `out`.
    pub fn scatter_add(&self, local: &DVector<f64>, out: &mut [f64], layout: &BlockLayout) {
        let mut pos = 0;
        for m in &self.members {
            for slot in &mut out[layout.range(*m)] {
                *slot += local[pos];
                pos += 1;
            }
        }
    }

    /// `A_s x^{N_s} − b_s`.
    pub fn ineq_residual(&self, xs: &DVector<f64>) -> DVector<f64> {
        &self.a * xs - &self.b
    }

    /// `E_s x^{N_s} − d_s`.
    pub fn eq_residual(&self, xs: &DVector<f64>) -> DVector<f64> {
        &self.e * xs - &self.d
    }
}

/// Gradient oracle `x ↦ v_ν(x) = ∇_ν θ_ν(x)`; must be pure.
pub type GradientOracle = Arc<dyn Fn(&BlockVector) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct Player {
    pub set: SimpleSet,
    pub oracle: GradientOracle,
}

impl Player {
    pub fn new<F>(set: SimpleSet, oracle: F) -> Self
    where
        F: Fn(&BlockVector) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            set,
            oracle: Arc::new(oracle),
        }
    }
}

impl fmt::Debug for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Player").field("set", &self.set).finish_non_exhaustive()
    }
}

/// Per-group feasibility violations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupResidual {
    /// `‖max{0, A_s x^{N_s} − b_s}‖`
    pub ineq: f64,
    /// `‖E_s x^{N_s} − d_s‖`
    pub eq: f64,
}

impl GroupResidual {
    /// Euclidean combination of both violations.
    pub fn combined(&self) -> f64 {
        self.ineq.hypot(self.eq)
    }
}

/// A monotone NGNEP with shared linear constraints. Immutable once built.
#[derive(Debug, Clone)]
pub struct NgnepProblem {
    players: Vec<Player>,
    groups: Vec<ConstraintGroup>,
    domain: ProductSet,
    lipschitz_theta: f64,
    alpha: f64,
    membership: Vec<Vec<usize>>,
    norms: Vec<(f64, f64)>,
}

impl NgnepProblem {
    pub fn new(
        players: Vec<Player>,
        groups: Vec<ConstraintGroup>,
        lipschitz_theta: f64,
        alpha: f64,
    ) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::InvalidProblem("no players".into()));
        }
        if !(lipschitz_theta > 0.0 && lipschitz_theta.is_finite()) {
            return Err(Error::InvalidProblem("l_theta must be positive and finite".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidProblem("alpha must be nonnegative and finite".into()));
        }
        let domain = ProductSet::new(players.iter().map(|p| p.set.clone()).collect())?;
        let layout = domain.layout().clone();
        let mut membership = vec![Vec::new(); players.len()];
        for (s, g) in groups.iter().enumerate() {
            g.validate(s, &layout)?;
            for m in g.members() {
                membership[*m].push(s);
            }
        }
        let norms = groups
            .iter()
            .map(|g| (spectral_norm(g.a()), spectral_norm(g.e())))
            .collect();
        Ok(Self {
            players,
            groups,
            domain,
            lipschitz_theta,
            alpha,
            membership,
            norms,
        })
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn groups(&self) -> &[ConstraintGroup] {
        &self.groups
    }

    pub fn domain(&self) -> &ProductSet {
        &self.domain
    }

    pub fn layout(&self) -> &BlockLayout {
        self.domain.layout()
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn lipschitz_theta(&self) -> f64 {
        self.lipschitz_theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ℓ_F = √N · ℓ_θ`, the Lipschitz constant of the joint field `v`.
    pub fn lipschitz_field(&self) -> f64 {
        (self.num_players() as f64).sqrt() * self.lipschitz_theta
    }

    /// Groups containing player `nu` (the index set `I_ν`).
    pub fn membership(&self, nu: usize) -> &[usize] {
        &self.membership[nu]
    }

    /// Cached `(‖A_s‖, ‖E_s‖)` for group `s`.
    pub fn group_norms(&self, s: usize) -> (f64, f64) {
        self.norms[s]
    }

    pub fn block_vector(&self, data: Vec<f64>) -> Result<BlockVector> {
        BlockVector::new(data, self.layout().clone())
    }

    /// `v(x) = (v_1(x), …, v_N(x))`.
    pub fn eval_joint_gradient(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.layout() != self.layout() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut out = BlockVector::zeros(self.layout().clone());
        for (nu, player) in self.players.iter().enumerate() {
            let g = (player.oracle)(x);
            let expected = self.layout().width(nu);
            if g.len() != expected {
                return Err(Error::OracleWidth {
                    player: nu,
                    expected,
                    actual: g.len(),
                });
            }
            out.block_mut(nu).copy_from_slice(&g);
        }
        Ok(out)
    }

    /// Joint gradient on a raw slice.
    pub fn eval_field(&self, x: &[f64]) -> Result<Vec<f64>> {
        let bv = self.block_vector(x.to_vec())?;
        Ok(self.eval_joint_gradient(&bv)?.into_vec())
    }

    pub fn group_residuals(&self, x: &[f64]) -> Vec<GroupResidual> {
        self.groups
            .iter()
            .map(|g| {
                let xs = g.gather(x, self.layout());
                let ineq = g.ineq_residual(&xs).map(|v| v.max(0.0)).norm();
                let eq = g.eq_residual(&xs).norm();
                GroupResidual { ineq, eq }
            })
            .collect()
    }

    /// Largest combined group violation at `x` (zero without groups).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.group_residuals(x)
            .iter()
            .map(GroupResidual::combined)
            .fold(0.0, f64::max)
    }

    /// Samples random pairs of `X̂` to estimate `ℓ_θ` and the strong
    /// monotonicity modulus, and warns when the declared constants
    /// contradict the sample.
    pub fn estimate_constants(&self, pairs: usize, seed: u64) -> Result<ConstantEstimate> {
        let mut rng = StdRng::seed_from_u64(seed);
        let layout = self.layout().clone();
        let mut est = ConstantEstimate {
            lipschitz_theta: 0.0,
            alpha: f64::INFINITY,
            min_monotone_inner: f64::INFINITY,
            pairs,
        };
        for _ in 0..pairs {
            let x = self.domain.sample(&mut rng);
            let y = self.domain.sample(&mut rng);
            let vx = self.eval_field(&x)?;
            let vy = self.eval_field(&y)?;
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let dist_sq = dot(&diff, &diff);
            if dist_sq <= 1e-24 {
                continue;
            }
            let dv: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a - b).collect();
            let inner = dot(&diff, &dv);
            est.min_monotone_inner = est.min_monotone_inner.min(inner);
            est.alpha = est.alpha.min(inner / dist_sq);
            for nu in 0..layout.num_blocks() {
                let block = &dv[layout.range(nu)];
                est.lipschitz_theta = est.lipschitz_theta.max((dot(block, block) / dist_sq).sqrt());
            }
        }
        if est.lipschitz_theta > self.lipschitz_theta * (1.0 + 1e-9) {
            log::warn!(
                "declared l_theta = {} is below the sampled lower bound {}",
                self.lipschitz_theta,
                est.lipschitz_theta
            );
        }
        if self.alpha > est.alpha + 1e-9 {
            log::warn!(
                "declared alpha = {} exceeds the sampled upper bound {}",
                self.alpha,
                est.alpha
            );
        }
        if est.min_monotone_inner < -1e-10 {
            log::warn!(
                "sampled monotonicity violated: min (x-y)ᵀ(v(x)-v(y)) = {}",
                est.min_monotone_inner
            );
        }
        Ok(est)
    }
}

/// Result of [`NgnepProblem::estimate_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimate {
    /// Sampled lower bound on `ℓ_θ`.
    pub lipschitz_theta: f64,
    /// Sampled upper bound on the strong monotonicity modulus.
    pub alpha: f64,
    /// Smallest `(x − y)ᵀ(v(x) − v(y))` seen.
    pub min_monotone_inner: f64,
    pub pairs: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn duopoly(cap: f64) -> NgnepProblem {
        let players = (0..2)
            .map(|nu| {
                Player::new(SimpleSet::unit_box(1), move |x: &BlockVector| {
                    let own = x.block(nu)[0];
                    let other = x.block(1 - nu)[0];
                    vec![2.0 * own + other - 1.0]
                })
            })
            .collect();
        let g = ConstraintGroup::inequality(vec![0, 1], 2, &[1.0, 1.0], &[cap]).unwrap();
        NgnepProblem::new(players, vec![g], 5f64.sqrt(), 1.0).unwrap()
    }

    #[test]
    fn joint_gradient_cournot() {
        let p = duopoly(1.0);
        let v = p.eval_joint_gradient(&p.block_vector(vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(v.as_slice(), &[-1.0, -1.0]);
        let t = 1.0 / 3.0;
        let v = p.eval_joint_gradient(&p.block_vector(vec![t, t]).unwrap()).unwrap();
        assert_abs_diff_eq!(v.as_slice()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.as_slice()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn joint_gradient_identity_single_player() {
        let p = NgnepProblem::new(
            vec![Player::new(SimpleSet::uniform_box(2, -5.0, 5.0), |x: &BlockVector| {
                x.block(0).to_vec()
            })],
            vec![],
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(p.eval_field(&[3.0, -2.0]).unwrap(), vec![3.0, -2.0]);
    }

    #[test]
    fn oracle_width_mismatch_is_an_error() {
        let p = NgnepProblem::new(
            vec![Player::new(SimpleSet::unit_box(2), |_: &BlockVector| vec![0.0])],
            vec![],
            1.0,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            p.eval_field(&[0.0, 0.0]),
            Err(Error::OracleWidth { player: 0, expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn group_residual_examples() {
        let p = duopoly(1.0);
        let r = p.group_residuals(&[0.2, 0.3]);
        assert_eq!(r[0], GroupResidual { ineq: 0.0, eq: 0.0 });
        let r = p.group_residuals(&[1.0, 1.0]);
        assert_abs_diff_eq!(r[0].ineq, 1.0, epsilon = 1e-15);

        let players = (0..2)
            .map(|_| Player::new(SimpleSet::unit_box(1), |_: &BlockVector| vec![0.0]))
            .collect();
        let g = ConstraintGroup::equality(vec![0, 1], 2, &[1.0, -1.0], &[0.0]).unwrap();
        let p = NgnepProblem::new(players, vec![g], 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(p.group_residuals(&[0.7, 0.2])[0].eq, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn membership_inverts_groups() {
        let players = (0..3)
            .map(|_| Player::new(SimpleSet::unit_box(1), |_: &BlockVector| vec![0.0]))
            .collect();
        let groups = vec![
            ConstraintGroup::inequality(vec![0, 2], 2, &[1.0, 1.0], &[1.0]).unwrap(),
            ConstraintGroup::inequality(vec![1, 2], 2, &[1.0, 1.0], &[1.0]).unwrap(),
        ];
        let p = NgnepProblem::new(players, groups, 1.0, 0.0).unwrap();
        assert_eq!(p.membership(0), &[0]);
        assert_eq!(p.membership(1), &[1]);
        assert_eq!(p.membership(2), &[0, 1]);
        for nu in 0..3 {
            for s in p.membership(nu) {
                assert!(p.groups()[*s].members().contains(&nu));
            }
        }
    }

    #[test]
    fn invalid_groups_are_rejected() {
        let players = || {
            (0..2)
                .map(|_| Player::new(SimpleSet::unit_box(1), |_: &BlockVector| vec![0.0]))
                .collect::<Vec<_>>()
        };
        let unsorted = ConstraintGroup::inequality(vec![1, 0], 2, &[1.0, 1.0], &[1.0]).unwrap();
        assert!(NgnepProblem::new(players(), vec![unsorted], 1.0, 0.0).is_err());
        let wrong_width = ConstraintGroup::inequality(vec![0], 2, &[1.0, 1.0], &[1.0]).unwrap();
        assert!(NgnepProblem::new(players(), vec![wrong_width], 1.0, 0.0).is_err());
        let out_of_range = ConstraintGroup::inequality(vec![0, 5], 2, &[1.0, 1.0], &[1.0]).unwrap();
        assert!(NgnepProblem::new(players(), vec![out_of_range], 1.0, 0.0).is_err());
        assert!(ConstraintGroup::new(vec![0], 1, &[], &[], &[], &[])
            .map(|g| NgnepProblem::new(players(), vec![g], 1.0, 0.0))
            .unwrap()
            .is_err());
    }

    #[test]
    fn residuals_vanish_on_feasible_points_and_scale_with_violation() {
        let p = duopoly(1.0);
        for x in [[0.0, 0.0], [0.5, 0.5], [0.1, 0.9]] {
            assert_eq!(p.max_violation(&x), 0.0);
        }
        // Single active row: violation t·(x1+x2−1) scales linearly in t.
        let base = p.group_residuals(&[1.0, 0.5])[0].ineq;
        let doubled = p.group_residuals(&[1.5, 0.5])[0].ineq;
        assert_abs_diff_eq!(doubled, 2.0 * base, epsilon = 1e-15);
    }

    #[test]
    fn estimation_recovers_cournot_constants() {
        let p = duopoly(1.0);
        let est = p.estimate_constants(2000, 1).unwrap();
        assert!(est.min_monotone_inner >= -1e-10);
        assert!(est.alpha >= 1.0 - 1e-9);
        assert!(est.lipschitz_theta <= 5f64.sqrt() + 1e-9);
        // For scalar blocks the per-player ratio is at least √5·|cos| ≥ 2-ish.
        assert!(est.lipschitz_theta > 1.0);
    }

    proptest! {
        #[test]
        fn blocks_reassemble(widths in proptest::collection::vec(1usize..4, 1..5), seed in 0u64..1000) {
            use rand::Rng;
            let mut rng = StdRng::seed_from_u64(seed);
            let blocks: Vec<Vec<f64>> = widths.iter().map(|w| (0..*w).map(|_| rng.random()).collect()).collect();
            let bv = BlockVector::from_blocks(&blocks).unwrap();
            prop_assert_eq!(bv.blocks(), blocks.clone());
            let again = BlockVector::from_blocks(&bv.blocks()).unwrap();
            prop_assert_eq!(again, bv);
        }
    }
}
