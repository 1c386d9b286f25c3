//! The fee game on a fixed channel graph: nodes choose forwarding fees, not channels.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{bipartite_bounds, AnalyticError, BoundCondition};
use crate::closed_form::base_terms;
use crate::cost::{all_node_costs, CostError};
use crate::equilibrium::{
    check_nash_exhaustive, check_nash_restricted, DeviationWitness, EquilibriumError, EquilibriumVerdict,
    ExhaustiveConfig, NashStatus,
};
use crate::menger::disjoint_paths;
use crate::model::{homogeneous_scenario, FeePolicy, GameParams, ModelError, NodeId, PaymentScenario, StrategyProfile};
use crate::rational::{self, integer, Rational};
use crate::topology::{apply_deviation, generate, TopologyFamily};

#[derive(Debug, Error)]
pub enum FeeGameError {
    #[error("the free-fee analysis needs k > 2, got k = {0}")]
    SmallK(u64),
    #[error("fee assignment has {got} entries, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("fee of node {0} is negative")]
    NegativeFee(usize),
    #[error("epsilon must lie strictly between 0 and {bound}, got {epsilon}")]
    Epsilon { epsilon: String, bound: String },
    #[error("malformed fee document: {0}")]
    Document(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Per-node forwarding fees, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeeAssignment {
    #[serde(with = "rational::serde_str_vec")]
    pub fees: Vec<Rational>,
}

impl FeeAssignment {
    pub fn uniform(n: usize, fee: Rational) -> Self {
        Self { fees: vec![fee; n] }
    }

    pub fn fee_of(&self, node: NodeId) -> &Rational {
        &self.fees[node.0]
    }

    pub fn validate(&self, n_nodes: usize) -> Result<(), FeeGameError> {
        if self.fees.len() != n_nodes {
            return Err(FeeGameError::Length {
                got: self.fees.len(),
                expected: n_nodes,
            });
        }
        match self.fees.iter().position(|f| f.is_negative()) {
            Some(i) => Err(FeeGameError::NegativeFee(i)),
            None => Ok(()),
        }
    }

    pub fn policy(&self) -> FeePolicy {
        FeePolicy::PerNode(self.fees.clone())
    }

    pub fn from_json(text: &str) -> Result<Self, FeeGameError> {
        serde_json::from_str(text).map_err(|e| FeeGameError::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fee assignment serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairPaths {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub paths: Vec<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lemma3Certificate {
    /// Two zero-fee internally disjoint paths for every indirect demanded pair.
    Paths { pairs: Vec<PairPaths> },
    /// A demanded pair with fewer than two such paths; `paths` lists those found.
    Violation { pair: PairPaths },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma3Outcome {
    pub holds: bool,
    pub certificate: Lemma3Certificate,
}

fn check_k(k: u64) -> Result<(), FeeGameError> {
    if k <= 2 {
        Err(FeeGameError::SmallK(k))
    } else {
        Ok(())
    }
}

/// Equilibrium condition of the fee game: every demanded pair without a
/// direct channel has two internally node-disjoint paths whose
/// intermediaries all charge zero.
pub fn lemma3_predicate(
    profile: &StrategyProfile,
    fees: &FeeAssignment,
    scenario: &PaymentScenario,
    k: u64,
) -> Result<Lemma3Outcome, FeeGameError> {
    check_k(k)?;
    let n = profile.n_nodes();
    fees.validate(n)?;
    if let Some(node) = scenario.max_node() {
        if node.0 >= n {
            return Err(ModelError::NodeOutOfRange {
                node: node.0,
                n_nodes: n,
            }
            .into());
        }
    }
    let adj = profile.adjacency();
    let pairs: Vec<(NodeId, NodeId)> = scenario
        .iter()
        .filter(|&((s, t), count)| count > 0 && s != t && !profile.connected(s, t))
        .map(|(pair, _)| pair)
        .collect();
    let found: Vec<PairPaths> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let paths = disjoint_paths(&adj, s.0, t.0, |v| fees.fees[v].is_zero(), 2);
            PairPaths {
                sender: s,
                receiver: t,
                paths: paths.into_iter().map(|p| p.into_iter().map(NodeId).collect()).collect(),
            }
        })
        .collect();
    Ok(match found.iter().position(|p| p.paths.len() < 2) {
        Some(i) => Lemma3Outcome {
            holds: false,
            certificate: Lemma3Certificate::Violation { pair: found[i].clone() },
        },
        None => Lemma3Outcome {
            holds: true,
            certificate: Lemma3Certificate::Paths { pairs: found },
        },
    })
}

/// Independent check of a predicate certificate. A violation certificate is
/// accepted if its paths are valid and fewer than two, and the pair is an
/// indirect demanded pair.
pub fn verify_certificate(
    profile: &StrategyProfile,
    fees: &FeeAssignment,
    scenario: &PaymentScenario,
    outcome: &Lemma3Outcome,
) -> bool {
    let valid_pair = |p: &PairPaths| -> bool {
        let mut inner: BTreeSet<NodeId> = BTreeSet::new();
        for path in &p.paths {
            if path.len() < 3 || path[0] != p.sender || path[path.len() - 1] != p.receiver {
                return false;
            }
            if path.windows(2).any(|w| !profile.connected(w[0], w[1])) {
                return false;
            }
            for v in &path[1..path.len() - 1] {
                if *v == p.sender || *v == p.receiver || !fees.fee_of(*v).is_zero() || !inner.insert(*v) {
                    return false;
                }
            }
        }
        true
    };
    match (&outcome.certificate, outcome.holds) {
        (Lemma3Certificate::Paths { pairs }, true) => {
            let indirect = scenario
                .iter()
                .filter(|&((s, t), c)| c > 0 && s != t && !profile.connected(s, t))
                .count();
            pairs.len() == indirect
                && pairs
                    .iter()
                    .all(|p| p.paths.len() >= 2 && scenario.count(p.sender, p.receiver) > 0 && valid_pair(p))
        }
        (Lemma3Certificate::Violation { pair }, false) => {
            pair.paths.len() < 2
                && scenario.count(pair.sender, pair.receiver) > 0
                && !profile.connected(pair.sender, pair.receiver)
                && valid_pair(pair)
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeFeeCertificate {
    /// An indirect pair lacking two zero-fee disjoint paths, with the number it has.
    MissingFreePaths {
        sender: NodeId,
        receiver: NodeId,
        free_paths: usize,
    },
    /// All indirect routes are free, but at fee 0 the active lower-bound
    /// deviation of the fixed-fee analysis is profitable.
    LowerBoundConflict {
        bound: Box<BoundCondition>,
        deviation: String,
        witness: DeviationWitness,
        /// True if the costs were simulated with the given fees; false if
        /// they come from the closed forms at fee 0.
        simulated: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeFeeVerdict {
    pub status: NashStatus,
    pub certificate: FreeFeeCertificate,
}

/// Largest N for which the lower-bound certificate is simulated.
pub const SIMULATION_LIMIT: usize = 64;

/// The complete bipartite graph is never an equilibrium of the fee game.
///
/// In K_{c,d} two outer nodes have as many zero-fee disjoint paths as there
/// are zero-fee centers, and two centers as many as there are zero-fee outer
/// nodes; so the free-path condition holds iff both counts are at least two.
pub fn bipartite_free_fee_verdict(
    params: &GameParams,
    c: usize,
    fees: &FeeAssignment,
) -> Result<FreeFeeVerdict, FeeGameError> {
    check_k(params.k)?;
    let n = params.n_nodes;
    let report = bipartite_bounds(params, c)?;
    fees.validate(n)?;
    let zero_centers = (0..c).filter(|&v| fees.fees[v].is_zero()).count();
    let zero_outers = (c..n).filter(|&v| fees.fees[v].is_zero()).count();
    let missing = if zero_outers < 2 {
        Some((NodeId(0), NodeId(1), zero_outers))
    } else if zero_centers < 2 && n - c >= 2 {
        Some((NodeId(c), NodeId(c + 1), zero_centers))
    } else {
        None
    };
    if let Some((sender, receiver, free_paths)) = missing {
        return Ok(FreeFeeVerdict {
            status: NashStatus::NotNe,
            certificate: FreeFeeCertificate::MissingFreePaths {
                sender,
                receiver,
                free_paths,
            },
        });
    }

    let bound = report.active_lower.expect("bipartite has lower conditions");
    let family = TopologyFamily::CompleteBipartite { centers: c };
    let dev = bound.deviation;
    let node = dev.deviator(family);
    let alternative = dev.alternative(family);
    let (old_cost, new_cost, simulated) = if n <= SIMULATION_LIMIT {
        let scenario = homogeneous_scenario(params);
        let policy = fees.policy();
        let profile = generate(family, n).map_err(AnalyticError::from)?;
        let deviated = apply_deviation(&profile, node, &alternative).map_err(AnalyticError::from)?;
        let old = all_node_costs(&profile, &policy, params, &scenario)?
            .swap_remove(node.0)
            .total;
        let new = all_node_costs(&deviated, &policy, params, &scenario)?
            .swap_remove(node.0)
            .total;
        (old, new, true)
    } else {
        let zero = Rational::zero();
        let old = base_terms(family, n, node)
            .expect("closed form")
            .evaluate(params, &zero);
        (old, dev.terms(family, n).evaluate(params, &zero), false)
    };
    Ok(FreeFeeVerdict {
        status: NashStatus::NotNe,
        certificate: FreeFeeCertificate::LowerBoundConflict {
            deviation: dev.to_string(),
            witness: DeviationWitness {
                node,
                alternative,
                old_cost,
                new_cost,
            },
            bound: Box::new(bound),
            simulated,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StarFeeReport {
    /// `2F_B/(k(N−1)) − ε`.
    #[serde(with = "rational::serde_str")]
    pub fee: Rational,
    /// `2F_B/(k(N−1))`.
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub at_fee: EquilibriumVerdict,
    /// Verdict at `bound + ε`.
    pub above_bound: EquilibriumVerdict,
    #[serde(with = "rational::serde_str")]
    pub center_revenue: Rational,
    /// True if both verdicts come from the exhaustive check.
    pub exhaustive: bool,
}

impl StarFeeReport {
    pub fn confirmed(&self) -> bool {
        self.at_fee.status.is_equilibrium() && self.above_bound.status == NashStatus::NotNe
    }
}

/// Star fee just below its upper bound, checked on both sides of the bound.
/// Uses the exhaustive check up to `config.limit` nodes and the restricted
/// check beyond.
pub fn star_fee_equilibrium(
    params: &GameParams,
    epsilon: &Rational,
    config: &ExhaustiveConfig,
) -> Result<StarFeeReport, FeeGameError> {
    let n = params.n_nodes;
    if n <= 3 {
        return Err(AnalyticError::TooFewNodes(n).into());
    }
    let bound = integer(2) * &params.blockchain_fee / (integer(params.k) * integer(n as u64 - 1));
    if !epsilon.is_positive() || *epsilon >= bound {
        return Err(FeeGameError::Epsilon {
            epsilon: rational::to_ratio_string(epsilon),
            bound: rational::to_ratio_string(&bound),
        });
    }
    let fee = &bound - epsilon;
    let above = &bound + epsilon;
    let star = generate(TopologyFamily::Star, n).map_err(AnalyticError::from)?;
    let scenario = homogeneous_scenario(params);
    let exhaustive = n <= config.limit;
    let verdict = |f: &Rational| -> Result<EquilibriumVerdict, FeeGameError> {
        let policy = FeePolicy::Uniform(f.clone());
        Ok(if exhaustive {
            check_nash_exhaustive(&star, &policy, params, &scenario, config)?
        } else {
            check_nash_restricted(&star, &policy, params, &scenario, TopologyFamily::Star)?.verdict
        })
    };
    let center_revenue = all_node_costs(&star, &FeePolicy::Uniform(fee.clone()), params, &scenario)?
        .swap_remove(0)
        .revenue;
    Ok(StarFeeReport {
        at_fee: verdict(&fee)?,
        above_bound: verdict(&above)?,
        fee,
        bound,
        center_revenue,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn params(n: usize, k: u64) -> GameParams {
        GameParams::new(n, integer(1), k).unwrap()
    }

    #[test]
    fn bipartite_zero_fees_hold() {
        let p = params(7, 3);
        let prof = generate(TopologyFamily::CompleteBipartite { centers: 2 }, 7).unwrap();
        let fees = FeeAssignment::uniform(7, Rational::zero());
        let s = homogeneous_scenario(&p);
        let out = lemma3_predicate(&prof, &fees, &s, 3).unwrap();
        assert!(out.holds);
        assert!(verify_certificate(&prof, &fees, &s, &out));
    }

    #[test]
    fn star_fails() {
        let p = params(5, 3);
        let prof = generate(TopologyFamily::Star, 5).unwrap();
        let fees = FeeAssignment::uniform(5, Rational::zero());
        let s = homogeneous_scenario(&p);
        let out = lemma3_predicate(&prof, &fees, &s, 3).unwrap();
        assert!(!out.holds);
        assert!(verify_certificate(&prof, &fees, &s, &out));
        match out.certificate {
            Lemma3Certificate::Violation { pair } => {
                assert_eq!((pair.sender, pair.receiver), (NodeId(1), NodeId(2)));
                assert_eq!(pair.paths.len(), 1);
            }
            _ => panic!("expected a violation"),
        }
    }

    #[test]
    fn one_paid_center_of_three() {
        let p = params(7, 3);
        let prof = generate(TopologyFamily::CompleteBipartite { centers: 3 }, 7).unwrap();
        let mut fees = FeeAssignment::uniform(7, Rational::zero());
        fees.fees[1] = ratio(1, 10);
        let out = lemma3_predicate(&prof, &fees, &homogeneous_scenario(&p), 3).unwrap();
        assert!(out.holds);
    }

    #[test]
    fn small_k_rejected() {
        let p = params(5, 2);
        let prof = generate(TopologyFamily::Star, 5).unwrap();
        assert!(matches!(
            lemma3_predicate(
                &prof,
                &FeeAssignment::uniform(5, Rational::zero()),
                &homogeneous_scenario(&p),
                2
            ),
            Err(FeeGameError::SmallK(2))
        ));
    }

    #[test]
    fn bipartite_verdicts() {
        let p = params(6, 3);
        let v = bipartite_free_fee_verdict(&p, 3, &FeeAssignment::uniform(6, ratio(1, 10))).unwrap();
        assert_eq!(v.status, NashStatus::NotNe);
        assert!(matches!(
            v.certificate,
            FreeFeeCertificate::MissingFreePaths { free_paths: 0, .. }
        ));

        let v = bipartite_free_fee_verdict(&p, 2, &FeeAssignment::uniform(6, Rational::zero())).unwrap();
        match v.certificate {
            FreeFeeCertificate::LowerBoundConflict { witness, simulated, .. } => {
                assert!(simulated);
                assert!(witness.new_cost < witness.old_cost);
            }
            _ => panic!("expected the lower-bound certificate"),
        }

        let big = params(1000, 3);
        let v = bipartite_free_fee_verdict(&big, 2, &FeeAssignment::uniform(1000, Rational::zero())).unwrap();
        match v.certificate {
            FreeFeeCertificate::LowerBoundConflict { bound, witness, .. } => {
                assert_eq!(rational::format_significant(&bound.value, 7), "0.002000000");
                assert!(witness.new_cost < witness.old_cost);
            }
            _ => panic!("expected the lower-bound certificate"),
        }
    }

    #[test]
    fn star_fee_corollary() {
        let p = params(5, 2);
        let cfg = ExhaustiveConfig::default();
        let r = star_fee_equilibrium(&p, &ratio(1, 20), &cfg).unwrap();
        assert_eq!(r.fee, ratio(1, 5));
        assert!(r.confirmed());
        assert!(star_fee_equilibrium(&p, &Rational::zero(), &cfg).is_err());
        assert!(star_fee_equilibrium(&p, &ratio(1, 4), &cfg).is_err());
    }

    #[test]
    fn fee_document_round_trip() {
        let f = FeeAssignment {
            fees: vec![ratio(1, 10), Rational::zero()],
        };
        assert_eq!(f.to_json(), r#"{"fees":["1/10","0/1"]}"#);
        assert_eq!(FeeAssignment::from_json(&f.to_json()).unwrap(), f);
        assert!(FeeAssignment::from_json(r#"{"fees":["0.25"]}"#).is_ok());
    }
}
