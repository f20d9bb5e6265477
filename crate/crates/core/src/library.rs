//! Instance generators for the market, transport, Cournot and auction
//! families plus synthetic affine games, and reference solutions for the
//! small ones.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model::NgnepProblem;
use crate::problem_file::{Constants, CostModel, GroupSpec, PlayerSpec, ProblemSpec};
use crate::sets::SimpleSet;

/// Firms selling into price categories `K` (constant field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    /// `c_ν`
    pub marginal_costs: Vec<f64>,
    /// `p^ν`, one vector of length `|K|` per firm.
    pub prices: Vec<Vec<f64>>,
    /// Private allocation caps `C^ν`.
    pub allocation: Vec<f64>,
    /// Public demand caps `D_k`.
    pub demand: Vec<f64>,
}

/// Shippers moving goods from manufacturers `R` to customers `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSpec {
    /// Per shipper, row-major `|R| × |T|` costs `c_rt^ν`.
    pub costs: Vec<Vec<f64>>,
    /// Production capacities `C_r`.
    pub supply: Vec<f64>,
    /// Customer needs `D_t`.
    pub demand: Vec<f64>,
}

/// A shared capacity `Σ_{ν∈members} x^ν ≤ cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityGroup {
    pub members: Vec<usize>,
    pub cap: f64,
}

/// Cournot oligopoly with inverse demand `a − b·x̄` and costs
/// `linear_ν·x + ½kappa_ν·x²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CournotSpec {
    pub a: f64,
    pub b: f64,
    pub linear: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Firm capacities `C_ν`.
    pub capacity: Vec<f64>,
    pub groups: Vec<CapacityGroup>,
}

/// Proportional-share resource auction with budgets and bid capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionSpec {
    /// `c_ν`
    pub values: Vec<f64>,
    /// `q_s`
    pub supply: Vec<f64>,
    /// Entry barriers `d_s > 0`.
    pub barrier: Vec<f64>,
    /// Budgets `b^ν`.
    pub budgets: Vec<f64>,
    /// Bid capacities `C_s`.
    pub bid_capacity: Vec<f64>,
    /// Upper bound on each single bid.
    pub bid_cap: f64,
}

/// Affine game `v(x) = Mx + q` over boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub widths: Vec<usize>,
    /// Row-major `n × n`.
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub groups: Vec<GroupSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceSpec {
    Market(MarketSpec),
    Transport(TransportSpec),
    Cournot(CournotSpec),
    Auction(AuctionSpec),
    SyntheticLinear(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Market,
    Transport,
    Cournot,
    Auction,
    SyntheticLinear,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Market,
        Family::Transport,
        Family::Cournot,
        Family::Auction,
        Family::SyntheticLinear,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Market => "market",
            Family::Transport => "transport",
            Family::Cournot => "cournot",
            Family::Auction => "auction",
            Family::SyntheticLinear => "synthetic_linear",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown family `{s}`")))
    }
}

/// Reference equilibrium with shared multipliers per group.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution {
    pub x: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
}

const MONOTONE_SAMPLES: usize = 400;

fn check_nonnegative(vals: &[f64], what: &str) -> Result<()> {
    if vals.iter().all(|v| v.is_finite() && *v >= 0.0) {
        Ok(())
    } else {
        Err(Error::Instance(format!("{what} must be finite and nonnegative")))
    }
}

fn check_len(len: usize, expected: usize, what: &str) -> Result<()> {
    if len == expected {
        Ok(())
    } else {
        Err(Error::Instance(format!("{what}: expected {expected} entries, got {len}")))
    }
}

impl InstanceSpec {
    pub fn family(&self) -> Family {
        match self {
            InstanceSpec::Market(_) => Family::Market,
            InstanceSpec::Transport(_) => Family::Transport,
            InstanceSpec::Cournot(_) => Family::Cournot,
            InstanceSpec::Auction(_) => Family::Auction,
            InstanceSpec::SyntheticLinear(_) => Family::SyntheticLinear,
        }
    }

    /// Lowers the instance to the file-level description.
    pub fn to_problem_spec(&self) -> Result<ProblemSpec> {
        match self {
            InstanceSpec::Market(m) => market_spec(m),
            InstanceSpec::Transport(t) => transport_spec(t),
            InstanceSpec::Cournot(c) => cournot_spec(c),
            InstanceSpec::Auction(a) => auction_spec(a),
            InstanceSpec::SyntheticLinear(s) => synthetic_spec(s),
        }
    }

    /// Random instance with `players` players; `size` is `|K|`, `|R| = |T|`,
    /// `|S|` or the block width depending on the family (ignored for Cournot).
    pub fn random(family: Family, players: usize, size: usize, seed: u64) -> Result<Self> {
        if players == 0 || size == 0 {
            return Err(Error::Instance("sizes must be positive".into()));
        }
        let mut rng = StdRng::seed_from_u64(seed);
        let n = players;
        Ok(match family {
            Family::Market => InstanceSpec::Market(MarketSpec {
                marginal_costs: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
                prices: (0..n).map(|_| (0..size).map(|_| rng.random_range(1.0..3.0)).collect()).collect(),
                allocation: (0..n).map(|_| rng.random_range(0.5..1.5)).collect(),
                demand: (0..size).map(|_| rng.random_range(0.5..1.0) * n as f64).collect(),
            }),
            Family::Transport => {
                let supply: Vec<f64> = (0..size).map(|_| rng.random_range(0.5..2.0)).collect();
                let total: f64 = supply.iter().sum();
                let weights: Vec<f64> = (0..size).map(|_| rng.random_range(0.5..1.5)).collect();
                let wsum: f64 = weights.iter().sum();
                let demand = weights.iter().map(|w| w / wsum * total).collect();
                InstanceSpec::Transport(TransportSpec {
                    costs: (0..n).map(|_| (0..size * size).map(|_| rng.random_range(0.0..1.0)).collect()).collect(),
                    supply,
                    demand,
                })
            }
            Family::Cournot => {
                let capacity: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.0)).collect();
                InstanceSpec::Cournot(CournotSpec {
                    a: rng.random_range(1.0..2.0),
                    b: rng.random_range(0.5..1.5),
                    linear: (0..n).map(|_| rng.random_range(0.0..0.3)).collect(),
                    kappa: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
                    groups: vec![CapacityGroup {
                        members: (0..n).collect(),
                        cap: rng.random_range(0.2..0.5) * capacity.iter().sum::<f64>(),
                    }],
                    capacity,
                })
            }
            Family::Auction => {
                let supply: Vec<f64> = (0..size).map(|_| rng.random_range(0.5..1.0)).collect();
                InstanceSpec::Auction(AuctionSpec {
                    values: (0..n).map(|_| rng.random_range(0.5..1.0)).collect(),
                    barrier: supply.iter().map(|q| q * rng.random_range(1.5..2.5)).collect(),
                    supply,
                    budgets: (0..n).map(|_| rng.random_range(0.5..1.0)).collect(),
                    bid_capacity: (0..size).map(|_| rng.random_range(0.3..0.6) * n as f64).collect(),
                    bid_cap: 1.0,
                })
            }
            Family::SyntheticLinear => {
                let dim = n * size;
                // Skew part plus a rank-deficient PSD part: monotone, not strongly.
                let skew = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
                let low = DMatrix::from_fn(dim, 1, |_, _| rng.random_range(-1.0..1.0));
                let m = (&skew - skew.transpose()) * 0.5 + &low * low.transpose();
                InstanceSpec::SyntheticLinear(SyntheticSpec {
                    widths: vec![size; n],
                    matrix: m.transpose().as_slice().to_vec(),
                    offset: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    lower: vec![-1.0; dim],
                    upper: vec![1.0; dim],
                    groups: vec![GroupSpec {
                        members: (0..n).collect(),
                        a: (0..dim).map(|_| rng.random_range(0.0..1.0)).collect(),
                        b: vec![0.25],
                        e: vec![],
                        d: vec![],
                    }],
                })
            }
        })
    }
}

fn market_spec(m: &MarketSpec) -> Result<ProblemSpec> {
    let n = m.marginal_costs.len();
    let k = m.demand.len();
    if n == 0 || k == 0 {
        return Err(Error::Instance("market needs firms and price categories".into()));
    }
    check_len(m.prices.len(), n, "prices")?;
    check_len(m.allocation.len(), n, "allocation")?;
    check_nonnegative(&m.marginal_costs, "marginal costs")?;
    check_nonnegative(&m.demand, "demand")?;
    check_nonnegative(&m.allocation, "allocation")?;
    if m.allocation.iter().any(|c| *c <= 0.0) {
        return Err(Error::Instance("allocation caps must be positive".into()));
    }
    let mut players = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n + 1);
    for nu in 0..n {
        check_len(m.prices[nu].len(), k, "prices")?;
        check_nonnegative(&m.prices[nu], "prices")?;
        players.push(PlayerSpec {
            set: SimpleSet::uniform_box(k, 0.0, m.allocation[nu]),
            cost: CostModel::Market {
                marginal_cost: m.marginal_costs[nu],
                prices: m.prices[nu].clone(),
            },
        });
        groups.push(GroupSpec {
            members: vec![nu],
            a: vec![1.0; k],
            b: vec![m.allocation[nu]],
            e: vec![],
            d: vec![],
        });
    }
    // Σ_ν x_k^ν ≤ D_k: row k picks entry k of every block.
    let mut a = vec![0.0; k * n * k];
    for row in 0..k {
        for nu in 0..n {
            a[row * n * k + nu * k + row] = 1.0;
        }
    }
    groups.push(GroupSpec {
        members: (0..n).collect(),
        a,
        b: m.demand.clone(),
        e: vec![],
        d: vec![],
    });
    Ok(ProblemSpec {
        name: Some("market".into()),
        constants: Constants { l_theta: 1.0, alpha: 0.0 },
        players,
        groups,
    })
}

fn transport_spec(t: &TransportSpec) -> Result<ProblemSpec> {
    let n = t.costs.len();
    let (r, tt) = (t.supply.len(), t.demand.len());
    if n == 0 || r == 0 || tt == 0 {
        return Err(Error::Instance("transport needs shippers, manufacturers and customers".into()));
    }
    check_nonnegative(&t.supply, "supply")?;
    check_nonnegative(&t.demand, "demand")?;
    let (cs, ds): (f64, f64) = (t.supply.iter().sum(), t.demand.iter().sum());
    if (cs - ds).abs() > 1e-9 * cs.abs().max(ds.abs()).max(1.0) {
        return Err(Error::Instance(format!("supply {cs} and demand {ds} do not balance")));
    }
    let w = r * tt;
    let mut players = Vec::with_capacity(n);
    for costs in &t.costs {
        check_len(costs.len(), w, "costs")?;
        check_nonnegative(costs, "costs")?;
        let upper = (0..w).map(|i| t.supply[i / tt].min(t.demand[i % tt])).collect();
        players.push(PlayerSpec {
            set: SimpleSet::Box {
                lower: vec![0.0; w],
                upper,
            },
            cost: CostModel::Transport { costs: costs.clone() },
        });
    }
    let cols = n * w;
    let mut e = Vec::with_capacity((r + tt) * cols);
    for ri in 0..r {
        e.extend((0..cols).map(|c| if (c % w) / tt == ri { 1.0 } else { 0.0 }));
    }
    for ti in 0..tt {
        e.extend((0..cols).map(|c| if (c % w) % tt == ti { 1.0 } else { 0.0 }));
    }
    let d = t.supply.iter().chain(&t.demand).copied().collect();
    Ok(ProblemSpec {
        name: Some("transport".into()),
        constants: Constants { l_theta: 1.0, alpha: 0.0 },
        players,
        groups: vec![GroupSpec {
            members: (0..n).collect(),
            a: vec![],
            b: vec![],
            e,
            d,
        }],
    })
}

/// `ℓ_θ` and `α` of the Cournot field, whose Jacobian is
/// `diag(κ) + b(I + 11ᵀ)`.
fn cournot_constants(c: &CournotSpec) -> (f64, f64) {
    let n = c.linear.len() as f64;
    let l_theta = c
        .kappa
        .iter()
        .map(|k| ((n - 1.0) * c.b * c.b + (2.0 * c.b + k).powi(2)).sqrt())
        .fold(0.0, f64::max);
    let alpha = c.b + c.kappa.iter().copied().fold(f64::INFINITY, f64::min);
    (l_theta, alpha)
}

fn cournot_spec(c: &CournotSpec) -> Result<ProblemSpec> {
    let n = c.linear.len();
    if n == 0 {
        return Err(Error::Instance("Cournot needs at least one firm".into()));
    }
    check_len(c.kappa.len(), n, "kappa")?;
    check_len(c.capacity.len(), n, "capacity")?;
    check_nonnegative(&c.kappa, "kappa")?;
    check_nonnegative(&c.capacity, "capacity")?;
    check_nonnegative(&c.linear, "linear costs")?;
    if !(c.a > 0.0 && c.b > 0.0 && c.a.is_finite() && c.b.is_finite()) {
        return Err(Error::Instance("Cournot needs a, b > 0".into()));
    }
    let groups = c
        .groups
        .iter()
        .map(|g| {
            check_nonnegative(&[g.cap], "group capacity")?;
            Ok(GroupSpec {
                members: g.members.clone(),
                a: vec![1.0; g.members.len()],
                b: vec![g.cap],
                e: vec![],
                d: vec![],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (l_theta, alpha) = cournot_constants(c);
    Ok(ProblemSpec {
        name: Some("cournot".into()),
        constants: Constants { l_theta, alpha },
        players: (0..n)
            .map(|nu| PlayerSpec {
                set: SimpleSet::uniform_box(1, 0.0, c.capacity[nu]),
                cost: CostModel::Cournot {
                    a: c.a,
                    b: c.b,
                    linear: c.linear[nu],
                    kappa: c.kappa[nu],
                },
            })
            .collect(),
        groups,
    })
}

fn auction_spec(a: &AuctionSpec) -> Result<ProblemSpec> {
    let n = a.values.len();
    let s = a.supply.len();
    if n == 0 || s == 0 {
        return Err(Error::Instance("auction needs bidders and resources".into()));
    }
    check_len(a.barrier.len(), s, "barrier")?;
    check_len(a.budgets.len(), n, "budgets")?;
    check_len(a.bid_capacity.len(), s, "bid capacity")?;
    for v in [&a.values, &a.supply, &a.budgets, &a.bid_capacity] {
        check_nonnegative(v, "auction coefficients")?;
    }
    if a.barrier.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Instance("entry barriers must be positive".into()));
    }
    if !(a.bid_cap > 0.0 && a.bid_cap.is_finite()) {
        return Err(Error::Instance("bid cap must be positive".into()));
    }
    let mut l_theta: f64 = 0.0;
    for c in &a.values {
        for (q, d) in a.supply.iter().zip(&a.barrier) {
            if c * q > *d {
                return Err(Error::Instance(format!("value·supply {} exceeds barrier {d}", c * q)));
            }
            l_theta = l_theta.max(c * q / (d * d) * ((n + 3) as f64).sqrt());
        }
    }
    let mut groups: Vec<GroupSpec> = (0..n)
        .map(|nu| GroupSpec {
            members: vec![nu],
            a: vec![1.0; s],
            b: vec![a.budgets[nu]],
            e: vec![],
            d: vec![],
        })
        .collect();
    let mut rows = vec![0.0; s * n * s];
    for res in 0..s {
        for nu in 0..n {
            rows[res * n * s + nu * s + res] = 1.0;
        }
    }
    groups.push(GroupSpec {
        members: (0..n).collect(),
        a: rows,
        b: a.bid_capacity.clone(),
        e: vec![],
        d: vec![],
    });
    Ok(ProblemSpec {
        name: Some("auction".into()),
        constants: Constants {
            l_theta: l_theta.max(f64::MIN_POSITIVE),
            alpha: 0.0,
        },
        players: a
            .values
            .iter()
            .map(|c| PlayerSpec {
                set: SimpleSet::uniform_box(s, 0.0, a.bid_cap),
                cost: CostModel::Auction {
                    value: *c,
                    supply: a.supply.clone(),
                    barrier: a.barrier.clone(),
                },
            })
            .collect(),
        groups,
    })
}

fn synthetic_matrix(s: &SyntheticSpec) -> Result<DMatrix<f64>> {
    let n: usize = s.widths.iter().sum();
    check_len(s.matrix.len(), n * n, "matrix")?;
    check_len(s.offset.len(), n, "offset")?;
    check_len(s.lower.len(), n, "lower")?;
    check_len(s.upper.len(), n, "upper")?;
    Ok(DMatrix::from_row_slice(n, n, &s.matrix))
}

fn synthetic_spec(s: &SyntheticSpec) -> Result<ProblemSpec> {
    let m = synthetic_matrix(s)?;
    let sym = (&m + m.transpose()) * 0.5;
    let lambda_min = sym.symmetric_eigenvalues().min();
    if lambda_min < -1e-10 {
        return Err(Error::Instance(format!("matrix is not monotone (λ_min of its symmetric part is {lambda_min})")));
    }
    let mut players = Vec::with_capacity(s.widths.len());
    let mut l_theta: f64 = 0.0;
    let mut start = 0;
    for w in &s.widths {
        let rows = m.rows(start, *w).into_owned();
        l_theta = l_theta.max(spectral_norm(&rows));
        players.push(PlayerSpec {
            set: SimpleSet::Box {
                lower: s.lower[start..start + w].to_vec(),
                upper: s.upper[start..start + w].to_vec(),
            },
            cost: CostModel::CustomLinearQuadratic {
                matrix: s.matrix[start * m.ncols()..(start + w) * m.ncols()].to_vec(),
                offset: s.offset[start..start + w].to_vec(),
            },
        });
        start += w;
    }
    Ok(ProblemSpec {
        name: Some("synthetic_linear".into()),
        constants: Constants {
            l_theta: l_theta.max(f64::MIN_POSITIVE),
            alpha: if lambda_min > 1e-10 { lambda_min } else { 0.0 },
        },
        players,
        groups: s.groups.clone(),
    })
}

/// Builds the problem and, for auctions, enforces sampled monotonicity.
pub fn build_instance(spec: &InstanceSpec) -> Result<NgnepProblem> {
    let problem = spec.to_problem_spec()?.build()?;
    if matches!(spec, InstanceSpec::Auction(_)) {
        let est = problem.estimate_constants(MONOTONE_SAMPLES, 0)?;
        if est.min_monotone_inner < -1e-12 {
            return Err(Error::Instance(format!(
                "auction field is not monotone on the bid box (sampled inner product {})",
                est.min_monotone_inner
            )));
        }
    }
    Ok(problem)
}

/// Reference equilibrium from an independent oracle, when one exists:
/// the symmetric Cournot closed form, or active-set enumeration of the
/// KKT system for small synthetic affine games.
pub fn known_solution(spec: &InstanceSpec) -> Option<KnownSolution> {
    match spec {
        InstanceSpec::Cournot(c) => cournot_symmetric(c),
        InstanceSpec::SyntheticLinear(s) => {
            let problem = synthetic_spec(s).ok()?.build().ok()?;
            let m = synthetic_matrix(s).ok()?;
            affine_kkt_enumeration(&problem, &m, &DVector::from_column_slice(&s.offset), &s.lower, &s.upper)
        }
        _ => None,
    }
}

fn cournot_symmetric(c: &CournotSpec) -> Option<KnownSolution> {
    let n = c.linear.len();
    let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if n == 0 || !same(&c.linear) || !same(&c.kappa) || !same(&c.capacity) || c.groups.len() > 1 {
        return None;
    }
    let shared = c.groups.first();
    if shared.is_some_and(|g| g.members != (0..n).collect::<Vec<_>>()) {
        return None;
    }
    let (lin, kappa, cap) = (c.linear[0], c.kappa[0], c.capacity[0]);
    let nf = n as f64;
    let slope = (nf + 1.0) * c.b + kappa;
    let free = ((c.a - lin) / slope).clamp(0.0, cap);
    let (x, lambda) = match shared {
        Some(g) if nf * free > g.cap => {
            let x = g.cap / nf;
            (x, vec![vec![c.a - lin - slope * x]])
        }
        Some(_) => (free, vec![vec![0.0]]),
        None => (free, vec![]),
    };
    Some(KnownSolution {
        x: vec![x; n],
        mu: vec![vec![]; lambda.len()],
        lambda,
    })
}

const ENUMERATION_LIMIT: usize = 200_000;
const KKT_TOL: f64 = 1e-9;

/// Tries every box status (free/lower/upper) and active set of inequality
/// rows, solving the resulting linear KKT system.
fn affine_kkt_enumeration(
    problem: &NgnepProblem,
    m: &DMatrix<f64>,
    q: &DVector<f64>,
    lower: &[f64],
    upper: &[f64],
) -> Option<KnownSolution> {
    let n = problem.dim();
    let layout = problem.layout();
    // Constraint rows in full coordinates.
    let full_row = |local: nalgebra::RowDVector<f64>, members: &[usize]| {
        let mut row = DVector::zeros(n);
        let mut pos = 0;
        for mem in members {
            for col in layout.range(*mem) {
                row[col] = local[pos];
                pos += 1;
            }
        }
        row
    };
    let mut ineq = Vec::new();
    let mut eq = Vec::new();
    for (s, g) in problem.groups().iter().enumerate() {
        for i in 0..g.num_ineq() {
            ineq.push((s, i, full_row(g.a().row(i).into_owned(), g.members()), g.b()[i]));
        }
        for i in 0..g.num_eq() {
            eq.push((s, i, full_row(g.e().row(i).into_owned(), g.members()), g.d()[i]));
        }
    }
    let combos = 3usize.checked_pow(n as u32)?.checked_mul(1usize.checked_shl(ineq.len() as u32)?)?;
    if combos > ENUMERATION_LIMIT {
        return None;
    }

    let mut status = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for st in status.iter_mut() {
            *st = (c % 3) as u8;
            c /= 3;
        }
        if status.iter().enumerate().any(|(i, st)| *st == 2 && lower[i] == upper[i]) {
            continue;
        }
        for mask in 0..(1usize << ineq.len()) {
            let active: Vec<usize> = (0..ineq.len()).filter(|r| mask & (1 << r) != 0).collect();
            let size = n + active.len() + eq.len();
            let mut k = DMatrix::zeros(size, size);
            let mut rhs = DVector::zeros(size);
            for i in 0..n {
                match status[i] {
                    0 => {
                        k.row_mut(i).columns_mut(0, n).copy_from(&m.row(i));
                        for (j, r) in active.iter().enumerate() {
                            k[(i, n + j)] = ineq[*r].2[i];
                        }
                        for (j, e) in eq.iter().enumerate() {
                            k[(i, n + active.len() + j)] = e.2[i];
                        }
                        rhs[i] = -q[i];
                    }
                    st => {
                        k[(i, i)] = 1.0;
                        rhs[i] = if st == 1 { lower[i] } else { upper[i] };
                    }
                }
            }
            for (j, r) in active.iter().enumerate() {
                k.row_mut(n + j).columns_mut(0, n).copy_from(&ineq[*r].2.transpose());
                rhs[n + j] = ineq[*r].3;
            }
            for (j, e) in eq.iter().enumerate() {
                k.row_mut(n + active.len() + j).columns_mut(0, n).copy_from(&e.2.transpose());
                rhs[n + active.len() + j] = e.3;
            }
            let Some(sol) = k.clone().lu().solve(&rhs) else { continue };
            if (&k * &sol - &rhs).amax() > 1e-10 || !sol.iter().all(|v| v.is_finite()) {
                continue;
            }
            let x = sol.rows(0, n).into_owned();
            let lam = sol.rows(n, active.len()).into_owned();
            let mu = sol.rows(n + active.len(), eq.len()).into_owned();
            if lam.iter().any(|l| *l < -KKT_TOL) {
                continue;
            }
            if (0..n).any(|i| x[i] < lower[i] - KKT_TOL || x[i] > upper[i] + KKT_TOL) {
                continue;
            }
            if ineq.iter().any(|(_, _, row, b)| row.dot(&x) > b + KKT_TOL) {
                continue;
            }
            let mut grad = m * &x + q;
            for (j, r) in active.iter().enumerate() {
                grad += &ineq[*r].2 * lam[j];
            }
            for (j, e) in eq.iter().enumerate() {
                grad += &e.2 * mu[j];
            }
            let sign_ok = (0..n).all(|i| match status[i] {
                0 => true,
                1 => grad[i] >= -KKT_TOL,
                _ => grad[i] <= KKT_TOL,
            });
            if !sign_ok {
                continue;
            }
            let mut lambda: Vec<Vec<f64>> = problem.groups().iter().map(|g| vec![0.0; g.num_ineq()]).collect();
            let mut mus: Vec<Vec<f64>> = problem.groups().iter().map(|g| vec![0.0; g.num_eq()]).collect();
            for (j, r) in active.iter().enumerate() {
                lambda[ineq[*r].0][ineq[*r].1] = lam[j].max(0.0);
            }
            for (j, e) in eq.iter().enumerate() {
                mus[e.0][e.1] = mu[j];
            }
            return Some(KnownSolution {
                x: x.iter().copied().collect(),
                lambda,
                mu: mus,
            });
        }
    }
    None
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 8] = [
    "cournot-inactive",
    "cournot-active",
    "eq-quadratic",
    "monotone-linear",
    "bilinear",
    "market",
    "transport",
    "auction",
];

fn duopoly(cap: f64) -> InstanceSpec {
    InstanceSpec::Cournot(CournotSpec {
        a: 1.0,
        b: 1.0,
        linear: vec![0.0; 2],
        kappa: vec![0.0; 2],
        capacity: vec![1.0; 2],
        groups: vec![CapacityGroup { members: vec![0, 1], cap }],
    })
}

/// Small named instances used by the CLI, tests and benches.
pub fn builtin(name: &str) -> Option<InstanceSpec> {
    Some(match name {
        "cournot-inactive" => duopoly(10.0),
        "cournot-active" => duopoly(0.5),
        // ½‖x − (2, 2)‖² over [0, 3]² with x₁ + x₂ = 1.
        "eq-quadratic" => InstanceSpec::SyntheticLinear(SyntheticSpec {
            widths: vec![2],
            matrix: vec![1.0, 0.0, 0.0, 1.0],
            offset: vec![-2.0, -2.0],
            lower: vec![0.0; 2],
            upper: vec![3.0; 2],
            groups: vec![GroupSpec {
                members: vec![0],
                a: vec![],
                b: vec![],
                e: vec![1.0, 1.0],
                d: vec![1.0],
            }],
        }),
        // Two scalar players with v = [[1, 1], [−1, 0]]x + (−1, 0.5) and a
        // binding shared cap x₁ + x₂ ≤ 0.5; monotone but not strongly.
        "monotone-linear" => InstanceSpec::SyntheticLinear(SyntheticSpec {
            widths: vec![1, 1],
            matrix: vec![1.0, 1.0, -1.0, 0.0],
            offset: vec![-1.0, 0.5],
            lower: vec![-2.0; 2],
            upper: vec![2.0; 2],
            groups: vec![GroupSpec {
                members: vec![0, 1],
                a: vec![1.0, 1.0],
                b: vec![0.5],
                e: vec![],
                d: vec![],
            }],
        }),
        // Zero-sum game u·v with skew field [[0, 1], [−1, 0]]x + (−1, 0.5)
        // and the shared cap u + v ≤ 0.5.
        "bilinear" => InstanceSpec::SyntheticLinear(SyntheticSpec {
            widths: vec![1, 1],
            matrix: vec![0.0, 1.0, -1.0, 0.0],
            offset: vec![-1.0, 0.5],
            lower: vec![-1.0; 2],
            upper: vec![1.0; 2],
            groups: vec![GroupSpec {
                members: vec![0, 1],
                a: vec![1.0, 1.0],
                b: vec![0.5],
                e: vec![],
                d: vec![],
            }],
        }),
        "market" => InstanceSpec::Market(MarketSpec {
            marginal_costs: vec![1.0, 1.5],
            prices: vec![vec![3.0, 2.0], vec![2.5, 4.0]],
            allocation: vec![1.0, 1.5],
            demand: vec![1.2, 1.0],
        }),
        "transport" => InstanceSpec::Transport(TransportSpec {
            costs: vec![vec![1.0, 2.0, 3.0, 1.0], vec![2.0, 1.0, 1.0, 2.5]],
            supply: vec![1.0, 2.0],
            demand: vec![1.5, 1.5],
        }),
        "auction" => InstanceSpec::Auction(AuctionSpec {
            values: vec![1.0, 0.8],
            supply: vec![1.0, 1.0],
            barrier: vec![2.0, 2.0],
            budgets: vec![1.0, 1.0],
            bid_capacity: vec![1.5, 1.5],
            bid_cap: 1.0,
        }),
        _ => return None,
    })
}
