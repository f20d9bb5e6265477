//! Declarative problem description and its TOML file format.
//!
//! ```toml
//! [constants]
//! l_theta = 2.2360679775
//! alpha = 1.0
//!
//! [[players]]
//! set = { kind = "box", lower = [0.0], upper = [1.0] }
//! cost = { model = "cournot", a = 1.0, b = 1.0 }
//!
//! [[players]]
//! set = { kind = "box", lower = [0.0], upper = [1.0] }
//! cost = { model = "cournot", a = 1.0, b = 1.0 }
//!
//! [[groups]]
//! members = [0, 1]
//! a = [1.0, 1.0]
//! b = [0.5]
//! ```
//!
//! Group matrices are row-major over the concatenated member blocks.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlockLayout, ConstraintGroup, GradientOracle, NgnepProblem, Player};
use crate::sets::SimpleSet;

/// Built-in cost models. Each yields the partial gradient `v_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CostModel {
    /// Price taker: `v_ν = c_ν·1 − p^ν`.
    Market { marginal_cost: f64, prices: Vec<f64> },
    /// Shipping cost: `v_ν = c^ν`.
    Transport { costs: Vec<f64> },
    /// Scalar Cournot firm with cost `linear·x + ½kappa·x²` and inverse
    /// demand `a − b·x̄`, `x̄` being the sum of all strategy entries:
    /// `v_ν = linear + kappa·x^ν − a + b·x̄ + b·x^ν`.
    Cournot {
        a: f64,
        b: f64,
        #[serde(default)]
        linear: f64,
        #[serde(default)]
        kappa: f64,
    },
    /// Proportional-share bidder. Every player's block must have one entry
    /// per resource: `v_ν,s = 1 − c·q_s(d_s + Σ_{j≠ν} x_s^j)/(d_s + Σ_j x_s^j)²`.
    Auction { value: f64, supply: Vec<f64>, barrier: Vec<f64> },
    /// Affine field `v_ν = M_ν x + q_ν` with `M_ν` row-major of shape
    /// `width_ν × n`.
    CustomLinearQuadratic { matrix: Vec<f64>, offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub set: SimpleSet,
    pub cost: CostModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub l_theta: f64,
    #[serde(default)]
    pub alpha: f64,
}

/// A complete problem in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub constants: Constants,
    pub players: Vec<PlayerSpec>,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ProblemSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Unsupported(format!("cannot serialize problem: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Builds the problem with analytic gradient oracles.
    pub fn build(&self) -> Result<NgnepProblem> {
        if self.players.is_empty() {
            return Err(Error::InvalidProblem("no players".into()));
        }
        let widths: Vec<usize> = self.players.iter().map(|p| p.set.dim()).collect();
        let layout = BlockLayout::from_widths(&widths)?;
        let players = self
            .players
            .iter()
            .enumerate()
            .map(|(nu, p)| {
                Ok(Player {
                    set: p.set.clone(),
                    oracle: oracle(nu, &p.cost, &layout)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let groups = self
            .groups
            .iter()
            .enumerate()
            .map(|(s, g)| {
                let cols = g.members.iter().map(|m| widths.get(*m).copied().unwrap_or(0)).sum();
                ConstraintGroup::new(g.members.clone(), cols, &g.a, &g.b, &g.e, &g.d).map_err(|e| Error::InvalidGroup {
                    group: s,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        NgnepProblem::new(players, groups, self.constants.l_theta, self.constants.alpha)
    }
}

fn oracle(nu: usize, cost: &CostModel, layout: &BlockLayout) -> Result<GradientOracle> {
    let width = layout.width(nu);
    let expect = |len: usize, what: &str| {
        if len == width {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!(
                "player {nu}: {what} has {len} entries but the set has dimension {width}"
            )))
        }
    };
    let finite = |vals: &[f64], what: &str| {
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidProblem(format!("player {nu}: non-finite {what}")))
        }
    };
    Ok(match cost.clone() {
        CostModel::Market { marginal_cost, prices } => {
            expect(prices.len(), "prices")?;
            finite(&prices, "prices")?;
            let g: Vec<f64> = prices.iter().map(|p| marginal_cost - p).collect();
            Arc::new(move |_| g.clone())
        }
        CostModel::Transport { costs } => {
            expect(costs.len(), "costs")?;
            finite(&costs, "costs")?;
            Arc::new(move |_| costs.clone())
        }
        CostModel::Cournot { a, b, linear, kappa } => {
            expect(1, "a Cournot quantity")?;
            finite(&[a, b, linear, kappa], "coefficients")?;
            Arc::new(move |x| {
                let total: f64 = x.as_slice().iter().sum();
                let own = x.block(nu)[0];
                vec![linear + kappa * own - a + b * total + b * own]
            })
        }
        CostModel::Auction { value, supply, barrier } => {
            expect(supply.len(), "supply")?;
            expect(barrier.len(), "barrier")?;
            finite(&supply, "supply")?;
            if barrier.iter().any(|d| !(*d > 0.0)) {
                return Err(Error::InvalidProblem(format!("player {nu}: entry barriers must be positive")));
            }
            if (0..layout.num_blocks()).any(|j| layout.width(j) != width) {
                return Err(Error::InvalidProblem("auction players must all bid on the same resources".into()));
            }
            Arc::new(move |x| {
                let n = x.num_blocks();
                (0..supply.len())
                    .map(|s| {
                        let own = x.block(nu)[s];
                        let total: f64 = (0..n).map(|j| x.block(j)[s]).sum();
                        let t = barrier[s] + total;
                        1.0 - value * supply[s] * (t - own) / (t * t)
                    })
                    .collect()
            })
        }
        CostModel::CustomLinearQuadratic { matrix, offset } => {
            let n = layout.total();
            expect(offset.len(), "offset")?;
            if matrix.len() != width * n {
                return Err(Error::InvalidProblem(format!(
                    "player {nu}: matrix has {} entries, expected {width}×{n}",
                    matrix.len()
                )));
            }
            finite(&matrix, "matrix")?;
            Arc::new(move |x| {
                let z = x.as_slice();
                matrix
                    .chunks(n)
                    .zip(&offset)
                    .map(|(row, q)| row.iter().zip(z).map(|(m, v)| m * v).sum::<f64>() + q)
                    .collect()
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUOPOLY: &str = r#"
name = "duopoly"

[constants]
l_theta = 2.2360679775
alpha = 1.0

[[players]]
set = { kind = "box", lower = [0.0], upper = [1.0] }
cost = { model = "cournot", a = 1.0, b = 1.0 }

[[players]]
set = { kind = "box", lower = [0.0], upper = [1.0] }
cost = { model = "cournot", a = 1.0, b = 1.0 }

[[groups]]
members = [0, 1]
a = [1.0, 1.0]
b = [0.5]
"#;

    #[test]
    fn parses_and_builds() {
        let spec = ProblemSpec::from_toml_str(DUOPOLY).unwrap();
        let p = spec.build().unwrap();
        assert_eq!(p.num_players(), 2);
        assert_eq!(p.eval_field(&[0.0, 0.0]).unwrap(), vec![-1.0, -1.0]);
        assert_eq!(p.groups()[0].num_ineq(), 1);
    }

    #[test]
    fn round_trips_through_toml() {
        let spec = ProblemSpec::from_toml_str(DUOPOLY).unwrap();
        let text = spec.to_toml_string().unwrap();
        assert_eq!(ProblemSpec::from_toml_str(&text).unwrap(), spec);
    }

    #[test]
    fn parse_errors_carry_location() {
        let broken = DUOPOLY.replace("b = [0.5]", "b = [0.5");
        match ProblemSpec::from_toml_str(&broken) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 19);
                assert!(column >= 1);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
        let unknown = DUOPOLY.replace("model = \"cournot\", a = 1.0, b = 1.0 }\n\n[[groups]]", "model = \"oligopoly\" }\n\n[[groups]]");
        match ProblemSpec::from_toml_str(&unknown) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 14),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn line_column_counts_from_one() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }

    #[test]
    fn structural_errors_are_reported() {
        let bad_width = DUOPOLY.replace("a = [1.0, 1.0]", "a = [1.0]");
        assert!(matches!(
            ProblemSpec::from_toml_str(&bad_width).unwrap().build(),
            Err(Error::InvalidGroup { group: 0, .. })
        ));
        let bad_member = DUOPOLY.replace("members = [0, 1]", "members = [0, 2]");
        assert!(ProblemSpec::from_toml_str(&bad_member).unwrap().build().is_err());
    }

    #[test]
    fn cost_models_evaluate() {
        let spec = ProblemSpec {
            name: None,
            constants: Constants { l_theta: 1.0, alpha: 0.0 },
            players: vec![
                PlayerSpec {
                    set: SimpleSet::unit_box(2),
                    cost: CostModel::Market {
                        marginal_cost: 1.0,
                        prices: vec![3.0, 0.5],
                    },
                },
                PlayerSpec {
                    set: SimpleSet::unit_box(1),
                    cost: CostModel::CustomLinearQuadratic {
                        matrix: vec![1.0, 2.0, 3.0],
                        offset: vec![-1.0],
                    },
                },
            ],
            groups: vec![],
        };
        let p = spec.build().unwrap();
        assert_eq!(p.eval_field(&[0.5, 0.5, 1.0]).unwrap(), vec![-2.0, 0.5, 3.5]);
    }

    #[test]
    fn auction_requires_matching_blocks() {
        let bidder = |w: usize| PlayerSpec {
            set: SimpleSet::unit_box(w),
            cost: CostModel::Auction {
                value: 1.0,
                supply: vec![1.0; w],
                barrier: vec![2.0; w],
            },
        };
        let spec = ProblemSpec {
            name: None,
            constants: Constants { l_theta: 1.0, alpha: 0.0 },
            players: vec![bidder(2), bidder(1)],
            groups: vec![],
        };
        assert!(spec.build().is_err());
    }
}
