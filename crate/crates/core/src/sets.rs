//! Simple convex compact sets with closed-form Euclidean projections.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::model::BlockLayout;

/// A private strategy set `X̂_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimpleSet {
    /// Coordinatewise bounds `lower ≤ x ≤ upper`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball `‖x − center‖ ≤ radius`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Scaled probability simplex `{x ≥ 0, Σ x = scale}`.
    Simplex { dim: usize, scale: f64 },
    /// `{0 ≤ x ≤ cap}`; the cap is mandatory for compactness.
    NonnegativeOrthant { dim: usize, cap: Option<f64> },
}

impl SimpleSet {
    pub fn unit_box(dim: usize) -> Self {
        Self::uniform_box(dim, 0.0, 1.0)
    }

    pub fn uniform_box(dim: usize, lower: f64, upper: f64) -> Self {
        SimpleSet::Box {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SimpleSet::Box { lower, .. } => lower.len(),
            SimpleSet::Ball { center, .. } => center.len(),
            SimpleSet::Simplex { dim, .. } | SimpleSet::NonnegativeOrthant { dim, .. } => *dim,
        }
    }

    /// Checks nonemptiness, convexity parameters and compactness.
    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidSet("dimension must be positive".into()));
        }
        match self {
            SimpleSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::InvalidSet("box bounds differ in length".into()));
                }
                for (l, u) in lower.iter().zip(upper) {
                    if !l.is_finite() || !u.is_finite() {
                        return Err(Error::InvalidSet("box bounds must be finite".into()));
                    }
                    if l > u {
                        return Err(Error::InvalidSet(format!("empty box: lower {l} > upper {u}")));
                    }
                }
            }
            SimpleSet::Ball { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidSet("ball radius must be positive".into()));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::InvalidSet("ball center must be finite".into()));
                }
            }
            SimpleSet::Simplex { scale, .. } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidSet("simplex scale must be positive".into()));
                }
            }
            SimpleSet::NonnegativeOrthant { cap, .. } => match cap {
                Some(c) if *c >= 0.0 && c.is_finite() => {}
                Some(_) => return Err(Error::InvalidSet("orthant cap must be finite and nonnegative".into())),
                None => {
                    return Err(Error::InvalidSet(
                        "nonnegative orthant needs a finite cap to be compact".into(),
                    ))
                }
            },
        }
        Ok(())
    }

    /// Euclidean projection of `point` onto the set.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: point.len(),
            });
        }
        let mut out = point.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// In-place projection; `point` must already have the set's dimension.
    pub fn project_in_place(&self, point: &mut [f64]) {
        debug_assert_eq!(point.len(), self.dim());
        match self {
            SimpleSet::Box { lower, upper } => {
                for ((x, l), u) in point.iter_mut().zip(lower).zip(upper) {
                    *x = x.clamp(*l, *u);
                }
            }
            SimpleSet::Ball { center, radius } => {
                let dist = point
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (x, c) in point.iter_mut().zip(center) {
                        *x = c + (*x - c) * scale;
                    }
                }
            }
            SimpleSet::Simplex { scale, .. } => project_simplex(point, *scale),
            SimpleSet::NonnegativeOrthant { cap, .. } => {
                let cap = cap.unwrap_or(f64::INFINITY);
                for x in point.iter_mut() {
                    *x = x.clamp(0.0, cap);
                }
            }
        }
    }

    /// Membership up to `tol` per coordinate (and per defining constraint).
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        if point.len() != self.dim() {
            return false;
        }
        match self {
            SimpleSet::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(x, (l, u))| *x >= l - tol && *x <= u + tol),
            SimpleSet::Ball { center, radius } => {
                let d: Vec<f64> = point.iter().zip(center).map(|(x, c)| x - c).collect();
                norm(&d) <= radius + tol
            }
            SimpleSet::Simplex { scale, .. } => {
                point.iter().all(|x| *x >= -tol) && (point.iter().sum::<f64>() - scale).abs() <= tol * point.len() as f64
            }
            SimpleSet::NonnegativeOrthant { cap, .. } => {
                let cap = cap.unwrap_or(f64::INFINITY);
                point.iter().all(|x| *x >= -tol && *x <= cap + tol)
            }
        }
    }

    /// Upper bound on `sup ‖x − y‖` over the set.
    pub fn diameter(&self) -> f64 {
        let d = match self {
            SimpleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            SimpleSet::Ball { radius, .. } => 2.0 * radius,
            SimpleSet::Simplex { scale, .. } => scale * std::f64::consts::SQRT_2,
            SimpleSet::NonnegativeOrthant { dim, cap } => cap.unwrap_or(f64::INFINITY) * (*dim as f64).sqrt(),
        };
        d.max(f64::MIN_POSITIVE)
    }

    /// Coordinatewise bounding box of the set.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            SimpleSet::Box { lower, upper } => lower.iter().copied().zip(upper.iter().copied()).collect(),
            SimpleSet::Ball { center, radius } => center.iter().map(|c| (c - radius, c + radius)).collect(),
            SimpleSet::Simplex { dim, scale } => vec![(0.0, *scale); *dim],
            SimpleSet::NonnegativeOrthant { dim, cap } => vec![(0.0, cap.unwrap_or(f64::INFINITY)); *dim],
        }
    }

    /// Draws a point of the set. Box, orthant and ball draws are uniform;
    /// simplex draws are uniform (flat Dirichlet).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SimpleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
                .collect(),
            SimpleSet::Ball { center, radius } => {
                let n = center.len();
                let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
                let len = norm(&dir).max(f64::MIN_POSITIVE);
                let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
                center.iter().zip(&dir).map(|(c, d)| c + r * d / len).collect()
            }
            SimpleSet::Simplex { dim, scale } => {
                let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                e.into_iter().map(|v| scale * v / total).collect()
            }
            SimpleSet::NonnegativeOrthant { dim, cap } => {
                let cap = cap.unwrap_or(1.0);
                (0..*dim).map(|_| rng.random_range(0.0..=cap)).collect()
            }
        }
    }
}

/// Sort-and-threshold projection onto `{x ≥ 0, Σ x = scale}`.
fn project_simplex(point: &mut [f64], scale: f64) {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - scale) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in point.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Cartesian product `X̂ = Π X̂_ν` laid out along a [`BlockLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSet {
    sets: Vec<SimpleSet>,
    layout: BlockLayout,
}

impl ProductSet {
    pub fn new(sets: Vec<SimpleSet>) -> Result<Self> {
        for set in &sets {
            set.validate()?;
        }
        let widths: Vec<usize> = sets.iter().map(SimpleSet::dim).collect();
        let layout = BlockLayout::from_widths(&widths)?;
        Ok(Self { sets, layout })
    }

    /// A single box; convenient for standalone variational inequalities.
    pub fn single(set: SimpleSet) -> Result<Self> {
        Self::new(vec![set])
    }

    pub fn sets(&self) -> &[SimpleSet] {
        &self.sets
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn project_in_place(&self, point: &mut [f64]) {
        for (i, set) in self.sets.iter().enumerate() {
            set.project_in_place(&mut point[self.layout.range(i)]);
        }
    }

    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: point.len(),
            });
        }
        let mut out = point.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.dim()
            && self
                .sets
                .iter()
                .enumerate()
                .all(|(i, set)| set.contains(&point[self.layout.range(i)], tol))
    }

    pub fn diameter(&self) -> f64 {
        self.sets.iter().map(|s| s.diameter().powi(2)).sum::<f64>().sqrt()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.sets.iter().flat_map(SimpleSet::bounds).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sets.iter().flat_map(|s| s.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn catalog() -> Vec<SimpleSet> {
        vec![
            SimpleSet::Box {
                lower: vec![0.0, -1.0, 2.0],
                upper: vec![1.0, 1.0, 2.5],
            },
            SimpleSet::Ball {
                center: vec![0.5, -0.5, 1.0],
                radius: 1.5,
            },
            SimpleSet::Simplex { dim: 3, scale: 2.0 },
            SimpleSet::NonnegativeOrthant { dim: 3, cap: Some(0.7) },
        ]
    }

    #[test]
    fn box_clamps() {
        let set = SimpleSet::unit_box(2);
        assert_eq!(set.project(&[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn simplex_examples() {
        let s3 = SimpleSet::Simplex { dim: 3, scale: 1.0 };
        let third = 1.0 / 3.0;
        let p = s3.project(&[third, third, third]).unwrap();
        for v in p {
            assert_abs_diff_eq!(v, third, epsilon = 1e-15);
        }
        let s2 = SimpleSet::Simplex { dim: 2, scale: 1.0 };
        let p = s2.project(&[0.8, 0.6]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], 0.4, epsilon = 1e-12);
    }

    #[test]
    fn simplex_projection_matches_grid_search() {
        // The 2D simplex is the segment (t, 1 − t); brute-force the closest point.
        let s2 = SimpleSet::Simplex { dim: 2, scale: 1.0 };
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let p = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=100_000 {
                let t = i as f64 / 100_000.0;
                let d = (t - p[0]).powi(2) + (1.0 - t - p[1]).powi(2);
                if d < best.0 {
                    best = (d, t);
                }
            }
            let proj = s2.project(&p).unwrap();
            assert_abs_diff_eq!(proj[0], best.1, epsilon = 2e-5);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = SimpleSet::unit_box(2).project(&[1.0]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, actual: 1 });
    }

    #[test]
    fn validation() {
        assert!(SimpleSet::NonnegativeOrthant { dim: 2, cap: None }.validate().is_err());
        assert!(SimpleSet::Ball { center: vec![0.0], radius: 0.0 }.validate().is_err());
        assert!(SimpleSet::Simplex { dim: 2, scale: -1.0 }.validate().is_err());
        assert!(SimpleSet::Box { lower: vec![1.0], upper: vec![0.0] }.validate().is_err());
        assert!(SimpleSet::uniform_box(2, 0.0, f64::INFINITY).validate().is_err());
        for s in catalog() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn diameters_bound_sampled_distances() {
        let mut rng = StdRng::seed_from_u64(11);
        for set in catalog() {
            let d = set.diameter();
            assert!(d.is_finite() && d > 0.0);
            for _ in 0..500 {
                let a = set.sample(&mut rng);
                let b = set.sample(&mut rng);
                assert!(set.contains(&a, 1e-12));
                assert!(crate::linalg::dist(&a, &b) <= d + 1e-12);
            }
        }
    }

    #[test]
    fn nonexpansive_over_random_pairs() {
        let mut rng = StdRng::seed_from_u64(5);
        for set in catalog() {
            for _ in 0..1000 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
                let pp = set.project(&p).unwrap();
                let pq = set.project(&q).unwrap();
                assert!(crate::linalg::dist(&pp, &pq) <= crate::linalg::dist(&p, &q) + 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_closest_over_random_feasible_points() {
        let mut rng = StdRng::seed_from_u64(9);
        for set in catalog() {
            for _ in 0..1000 {
                let p: Vec<f64> = (0..3).map(|_| rng.random_range(-4.0..4.0)).collect();
                let y = set.sample(&mut rng);
                let proj = set.project(&p).unwrap();
                assert!(crate::linalg::dist(&proj, &p) <= crate::linalg::dist(&y, &p) + 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn projection_lands_in_set_and_is_idempotent(
            which in 0usize..4,
            p in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let set = &catalog()[which];
            let once = set.project(&p).unwrap();
            prop_assert!(set.contains(&once, 1e-12));
            let twice = set.project(&once).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
