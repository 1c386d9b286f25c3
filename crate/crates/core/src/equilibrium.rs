//! Nash-equilibrium checks by unilateral deviation.
//!
//! [`check_nash_exhaustive`] tries every peer subset for every node;
//! [`check_nash_restricted`] tries only the named deviation families and
//! scales to thousands of nodes. Costs are compared exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::closed_form::{base_terms, Deviation};
use crate::cost::{all_node_costs, costs_from_stats, CostError};
use crate::model::{homogeneous_scenario, FeePolicy, GameParams, ModelError, NodeId, PaymentScenario, StrategyProfile};
use crate::rational::{self, Rational};
use crate::routing::all_route_stats;
use crate::topology::{apply_deviation, generate, TopologyError, TopologyFamily};

pub const EXHAUSTIVE_LIMIT_ENV: &str = "CHANNELGAME_EXHAUSTIVE_LIMIT";
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 10;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("exhaustive search is limited to {limit} nodes (got {n}); use the restricted check for named families or raise {EXHAUSTIVE_LIMIT_ENV}")]
    OverLimit { n: usize, limit: usize },
    #[error("profile is not the {family} profile on {n} nodes")]
    FamilyMismatch { family: TopologyFamily, n: usize },
    #[error("lemma scan supports at most {limit} nodes with multiplicity {multiplicity} (got {n})")]
    ScanLimit { n: usize, limit: usize, multiplicity: u32 },
    #[error("scaled cost does not fit in 128 bits")]
    ScaleOverflow,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NashStatus {
    StrictNe,
    WeakNe,
    NotNe,
}

impl NashStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NashStatus::StrictNe => "STRICT_NE",
            NashStatus::WeakNe => "WEAK_NE",
            NashStatus::NotNe => "NOT_NE",
        }
    }

    pub fn is_equilibrium(self) -> bool {
        self != NashStatus::NotNe
    }
}

impl fmt::Display for NashStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NashStatus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NashStatus {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "STRICT_NE" => Ok(NashStatus::StrictNe),
            "WEAK_NE" => Ok(NashStatus::WeakNe),
            "NOT_NE" => Ok(NashStatus::NotNe),
            _ => Err(serde::de::Error::custom(format!("unknown status `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviationWitness {
    pub node: NodeId,
    pub alternative: BTreeSet<NodeId>,
    #[serde(with = "rational::serde_str")]
    pub old_cost: Rational,
    #[serde(with = "rational::serde_str")]
    pub new_cost: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquilibriumVerdict {
    pub status: NashStatus,
    pub witness: Option<DeviationWitness>,
    /// Alternatives (over all nodes) whose cost equals the node's current cost.
    pub ties: u64,
}

impl EquilibriumVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn from_parts(witness: Option<DeviationWitness>, ties: u64) -> Self {
        let status = match (&witness, ties) {
            (Some(_), _) => NashStatus::NotNe,
            (None, 0) => NashStatus::StrictNe,
            (None, _) => NashStatus::WeakNe,
        };
        Self { status, witness, ties }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveConfig {
    pub limit: usize,
    /// Also try channels to nodes that already opened one to the deviator.
    pub allow_duplicates: bool,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        Self {
            limit: DEFAULT_EXHAUSTIVE_LIMIT,
            allow_duplicates: false,
        }
    }
}

impl ExhaustiveConfig {
    /// Default configuration with the limit taken from the environment when set.
    pub fn from_env() -> Self {
        let limit = std::env::var(EXHAUSTIVE_LIMIT_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_EXHAUSTIVE_LIMIT);
        Self {
            limit,
            ..Self::default()
        }
    }

    fn check(&self, n: usize) -> Result<(), EquilibriumError> {
        if n > self.limit {
            Err(EquilibriumError::OverLimit { n, limit: self.limit })
        } else {
            Ok(())
        }
    }
}

fn node_total(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    node: NodeId,
) -> Result<Rational, CostError> {
    let stats = all_route_stats(profile, policy, params, scenario)?;
    let mut costs = costs_from_stats(profile, policy, params, scenario, &stats);
    Ok(costs.swap_remove(node.0).total)
}

fn candidates(profile: &StrategyProfile, node: NodeId, allow_duplicates: bool) -> Vec<NodeId> {
    (0..profile.n_nodes())
        .map(NodeId)
        .filter(|&v| v != node && (allow_duplicates || profile.multiplicity(v, node) == 0))
        .collect()
}

fn subset(cands: &[NodeId], mask: u64) -> BTreeSet<NodeId> {
    cands
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, &v)| v)
        .collect()
}

/// Is `node`'s current strategy exactly the simple set `alt`?
fn is_current(profile: &StrategyProfile, node: NodeId, alt: &BTreeSet<NodeId>) -> bool {
    let cur = profile.strategy_multi(node);
    cur.len() == alt.len() && cur.iter().all(|(p, &m)| m == 1 && alt.contains(p))
}

/// Every alternative strategy of `node` with its cost.
fn alternatives(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    node: NodeId,
    allow_duplicates: bool,
) -> Result<Vec<(BTreeSet<NodeId>, Rational)>, EquilibriumError> {
    let cands = candidates(profile, node, allow_duplicates);
    (0..1u64 << cands.len())
        .into_par_iter()
        .map(|mask| {
            let alt = subset(&cands, mask);
            let mut deviated = profile.clone();
            deviated.set_strategy(node, &alt);
            let cost = node_total(&deviated, policy, params, scenario, node)?;
            Ok((alt, cost))
        })
        .collect()
}

fn prepare(profile: &StrategyProfile, policy: &FeePolicy, params: &GameParams) -> Result<(), EquilibriumError> {
    if profile.n_nodes() != params.n_nodes {
        return Err(ModelError::Document(format!(
            "profile has {} nodes, parameters say {}",
            profile.n_nodes(),
            params.n_nodes
        ))
        .into());
    }
    policy.validate(params.n_nodes)?;
    Ok(())
}

/// Tries every subset of peers for every node.
pub fn check_nash_exhaustive(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    config: &ExhaustiveConfig,
) -> Result<EquilibriumVerdict, EquilibriumError> {
    config.check(params.n_nodes)?;
    prepare(profile, policy, params)?;
    let current = all_node_costs(profile, policy, params, scenario)?;
    let mut ties = 0u64;
    let mut witness = None;
    for node in params.nodes() {
        let old = &current[node.0].total;
        let alts = alternatives(profile, policy, params, scenario, node, config.allow_duplicates)?;
        let mut best: Option<(Vec<NodeId>, &Rational)> = None;
        for (alt, cost) in &alts {
            if is_current(profile, node, alt) {
                continue;
            }
            if cost == old {
                ties += 1;
            } else if cost < old {
                let key: Vec<NodeId> = alt.iter().copied().collect();
                if best.as_ref().is_none_or(|(b, _)| key < *b) {
                    best = Some((key, cost));
                }
            }
        }
        if witness.is_none() {
            if let Some((alt, cost)) = best {
                witness = Some(DeviationWitness {
                    node,
                    alternative: alt.into_iter().collect(),
                    old_cost: old.clone(),
                    new_cost: cost.clone(),
                });
            }
        }
    }
    Ok(EquilibriumVerdict::from_parts(witness, ties))
}

/// Restricted-check verdict together with the deviation family of the witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestrictedVerdict {
    #[serde(flatten)]
    pub verdict: EquilibriumVerdict,
    pub deviation: Option<String>,
    /// Number of deviations evaluated.
    pub evaluated: usize,
}

/// A named deviation of the restricted search.
#[derive(Debug, Clone)]
struct NamedDeviation {
    node: NodeId,
    alternative: BTreeSet<NodeId>,
    closed: Option<Deviation>,
    name: String,
}

fn path_deviations(n: usize) -> Vec<NamedDeviation> {
    let mut out = Vec::new();
    for j in 2..n {
        out.push(NamedDeviation {
            node: NodeId(0),
            alternative: [NodeId(j)].into_iter().collect(),
            closed: None,
            name: format!("path endpoint re-attach (to {j})"),
        });
    }
    for j in 2..n {
        out.push(NamedDeviation {
            node: NodeId(0),
            alternative: [NodeId(1), NodeId(j)].into_iter().collect(),
            closed: None,
            name: format!("path endpoint extra channel (to {j})"),
        });
    }
    out
}

/// Tries only the named deviation families on their representative nodes.
///
/// Costs come from the closed forms for the homogeneous scenario under a
/// uniform fee, and from simulation otherwise.
pub fn check_nash_restricted(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    family: TopologyFamily,
) -> Result<RestrictedVerdict, EquilibriumError> {
    prepare(profile, policy, params)?;
    let n = params.n_nodes;
    if generate(family, n).ok().as_ref() != Some(profile) {
        return Err(EquilibriumError::FamilyMismatch { family, n });
    }
    let mut devs: Vec<NamedDeviation> = match family {
        TopologyFamily::Path => path_deviations(n),
        _ => Deviation::enumerate(family, n)
            .into_iter()
            .map(|d| NamedDeviation {
                node: d.deviator(family),
                alternative: d.alternative(family),
                closed: Some(d),
                name: d.to_string(),
            })
            .collect(),
    };
    devs.sort_by_key(|d| d.node);

    let closed_fee = match policy.uniform_fee() {
        Some(f0) if *scenario == homogeneous_scenario(params) && family != TopologyFamily::Path => Some(f0),
        _ => None,
    };
    let nodes: BTreeSet<NodeId> = devs.iter().map(|d| d.node).collect();
    let mut base: BTreeMap<NodeId, Rational> = BTreeMap::new();
    for &node in &nodes {
        let cost = match closed_fee {
            Some(f0) => base_terms(family, n, node)
                .expect("non-path family")
                .evaluate(params, f0),
            None => node_total(profile, policy, params, scenario, node)?,
        };
        base.insert(node, cost);
    }
    let costs: Vec<Rational> = devs
        .par_iter()
        .map(|d| match (closed_fee, d.closed) {
            (Some(f0), Some(closed)) => Ok(closed.terms(family, n).evaluate(params, f0)),
            _ => {
                let deviated = apply_deviation(profile, d.node, &d.alternative)?;
                Ok(node_total(&deviated, policy, params, scenario, d.node)?)
            }
        })
        .collect::<Result<_, EquilibriumError>>()?;

    let mut ties = 0;
    let mut witness = None;
    let mut deviation = None;
    for (d, cost) in devs.iter().zip(&costs) {
        let old = &base[&d.node];
        if cost == old {
            ties += 1;
        } else if cost < old && witness.is_none() {
            witness = Some(DeviationWitness {
                node: d.node,
                alternative: d.alternative.clone(),
                old_cost: old.clone(),
                new_cost: cost.clone(),
            });
            deviation = Some(d.name.clone());
        }
    }
    Ok(RestrictedVerdict {
        verdict: EquilibriumVerdict::from_parts(witness, ties),
        deviation,
        evaluated: devs.len(),
    })
}

/// Cost-minimizing replacement strategy for `node`; ties go to fewer
/// channels, then to the lexicographically smaller peer list.
pub fn best_response(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    node: NodeId,
    config: &ExhaustiveConfig,
) -> Result<(BTreeSet<NodeId>, Rational), EquilibriumError> {
    config.check(params.n_nodes)?;
    prepare(profile, policy, params)?;
    params.check_node(node)?;
    let alts = alternatives(profile, policy, params, scenario, node, config.allow_duplicates)?;
    let best = alts
        .into_iter()
        .min_by(|(a, ca), (b, cb)| {
            ca.cmp(cb)
                .then(a.len().cmp(&b.len()))
                .then_with(|| a.iter().cmp(b.iter()))
        })
        .expect("the empty strategy is always available");
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicsTrace {
    /// The initial profile followed by the profile after each round.
    pub profiles: Vec<StrategyProfile>,
    pub rounds: usize,
    /// True when a full round changed nothing.
    pub converged: bool,
}

impl DynamicsTrace {
    pub fn last(&self) -> &StrategyProfile {
        self.profiles.last().expect("trace holds the initial profile")
    }
}

/// Round-robin best-response dynamics. A node switches only on a strict improvement.
pub fn best_response_dynamics(
    initial: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    max_rounds: usize,
    config: &ExhaustiveConfig,
) -> Result<DynamicsTrace, EquilibriumError> {
    config.check(params.n_nodes)?;
    prepare(initial, policy, params)?;
    let mut profiles = vec![initial.clone()];
    let mut current = initial.clone();
    for round in 1..=max_rounds {
        let mut changed = false;
        for node in params.nodes() {
            let (alt, cost) = best_response(&current, policy, params, scenario, node, config)?;
            let old = node_total(&current, policy, params, scenario, node)?;
            if cost < old {
                current.set_strategy(node, &alt);
                changed = true;
            }
        }
        profiles.push(current.clone());
        if !changed {
            return Ok(DynamicsTrace {
                profiles,
                rounds: round,
                converged: true,
            });
        }
    }
    Ok(DynamicsTrace {
        profiles,
        rounds: max_rounds,
        converged: false,
    })
}

pub const SCAN_LIMIT_MULTISET: usize = 4;
pub const SCAN_LIMIT_SET: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaScanReport {
    pub n_nodes: usize,
    pub max_multiplicity: u32,
    pub profiles: u64,
    pub strict: u64,
    pub weak: u64,
    pub not_ne: u64,
    pub strict_with_duplicate: u64,
    pub strict_with_onchain: u64,
    pub weak_with_duplicate: u64,
    pub weak_with_onchain: u64,
}

impl LemmaScanReport {
    /// No strict equilibrium opens a channel twice.
    pub fn duplicates_excluded(&self) -> bool {
        self.strict_with_duplicate == 0
    }

    /// No strict equilibrium settles a demanded payment on-chain.
    pub fn onchain_excluded(&self) -> bool {
        self.strict_with_onchain == 0
    }
}

/// Scans every strategy profile: multiset mode (multiplicity up to 2) for
/// N ≤ 4, set mode for N = 5.
pub fn lemma_properties_scan(params: &GameParams, policy: &FeePolicy) -> Result<LemmaScanReport, EquilibriumError> {
    let m = if params.n_nodes <= SCAN_LIMIT_MULTISET { 2 } else { 1 };
    lemma_properties_scan_with(params, policy, &homogeneous_scenario(params), m)
}

struct EdgeIndex {
    n: usize,
    index: Vec<Vec<usize>>,
}

impl EdgeIndex {
    fn new(n: usize) -> Self {
        let mut index = vec![vec![usize::MAX; n]; n];
        let mut e = 0;
        for u in 0..n {
            for v in u + 1..n {
                index[u][v] = e;
                index[v][u] = e;
                e += 1;
            }
        }
        Self { n, index }
    }

    fn edges(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn profile_of(&self, mask: u32) -> StrategyProfile {
        let mut p = StrategyProfile::empty(self.n);
        for u in 0..self.n {
            for v in u + 1..self.n {
                if mask >> self.index[u][v] & 1 == 1 {
                    p.insert(NodeId(u), NodeId(v));
                }
            }
        }
        p
    }
}

/// One node's strategy: multiplicity per peer, peers in increasing id order.
#[derive(Clone)]
struct Strategy {
    channels: i128,
    /// Edges touched (as a bitmask over the simple graph).
    mask: u32,
    /// Contains a multiplicity above one.
    doubled: bool,
}

fn strategies_of(u: usize, idx: &EdgeIndex, m: u32) -> Vec<Strategy> {
    let peers: Vec<usize> = (0..idx.n).filter(|&v| v != u).collect();
    let count = (m as usize + 1).pow(peers.len() as u32);
    (0..count)
        .map(|mut code| {
            let mut mults = Vec::with_capacity(peers.len());
            let mut mask = 0u32;
            for &v in &peers {
                let mult = (code % (m as usize + 1)) as u32;
                code /= m as usize + 1;
                if mult > 0 {
                    mask |= 1 << idx.index[u][v];
                }
                mults.push(mult);
            }
            Strategy {
                channels: mults.iter().map(|&x| x as i128).sum(),
                doubled: mults.iter().any(|&x| x > 1),
                mask,
            }
        })
        .collect()
}

/// Full profile-space scan with strategies of multiplicity at most `max_multiplicity`.
pub fn lemma_properties_scan_with(
    params: &GameParams,
    policy: &FeePolicy,
    scenario: &PaymentScenario,
    max_multiplicity: u32,
) -> Result<LemmaScanReport, EquilibriumError> {
    let n = params.n_nodes;
    let limit = if max_multiplicity >= 2 {
        SCAN_LIMIT_MULTISET
    } else {
        SCAN_LIMIT_SET
    };
    if n > limit || max_multiplicity == 0 || max_multiplicity > 2 {
        return Err(EquilibriumError::ScanLimit {
            n,
            limit,
            multiplicity: max_multiplicity,
        });
    }
    policy.validate(n)?;
    let idx = EdgeIndex::new(n);
    let graphs = 1u32 << idx.edges();

    // routing part of each node's cost (on-chain + sending − revenue) per simple graph
    let per_graph: Vec<(Vec<Rational>, bool)> = (0..graphs)
        .into_par_iter()
        .map(|mask| {
            let p = idx.profile_of(mask);
            let stats = all_route_stats(&p, policy, params, scenario)?;
            let onchain = stats.values().any(|s| s.is_on_chain());
            let costs = costs_from_stats(&p, policy, params, scenario, &stats);
            Ok((costs.into_iter().map(|c| c.total - c.channel_cost).collect(), onchain))
        })
        .collect::<Result<_, CostError>>()?;

    let mut denom = params.blockchain_fee.denom().clone();
    for (costs, _) in &per_graph {
        for c in costs {
            denom = denom.lcm(c.denom());
        }
    }
    let scale = |q: &Rational| -> Result<i128, EquilibriumError> {
        (q * Rational::from_integer(denom.clone()))
            .to_integer()
            .to_i128()
            .ok_or(EquilibriumError::ScaleOverflow)
    };
    let fb = scale(&params.blockchain_fee)?;
    let mut routing = vec![vec![0i128; n]; graphs as usize];
    let mut onchain = vec![false; graphs as usize];
    for (g, (costs, oc)) in per_graph.iter().enumerate() {
        onchain[g] = *oc;
        for (u, c) in costs.iter().enumerate() {
            routing[g][u] = scale(c)?;
        }
    }

    let strategies: Vec<Vec<Strategy>> = (0..n).map(|u| strategies_of(u, &idx, max_multiplicity)).collect();
    let per_node = strategies[0].len();
    let total = (per_node as u64).pow(n as u32);

    // (node, mask of the edges opened by the others) -> (min cost, number of strategies at the min)
    let mut best_cache: Vec<HashMap<u32, (i128, u32)>> = vec![HashMap::new(); n];
    for (u, cache) in best_cache.iter_mut().enumerate() {
        for others in 0..graphs {
            let mut min = i128::MAX;
            let mut count = 0;
            for s in &strategies[u] {
                let cost = s.channels * fb + routing[(others | s.mask) as usize][u];
                if cost < min {
                    min = cost;
                    count = 1;
                } else if cost == min {
                    count += 1;
                }
            }
            cache.insert(others, (min, count));
        }
    }

    let report = (0..total)
        .into_par_iter()
        .fold(
            || LemmaScanReport {
                n_nodes: n,
                max_multiplicity,
                profiles: 0,
                strict: 0,
                weak: 0,
                not_ne: 0,
                strict_with_duplicate: 0,
                strict_with_onchain: 0,
                weak_with_duplicate: 0,
                weak_with_onchain: 0,
            },
            |mut acc, code| {
                let mut picks = Vec::with_capacity(n);
                let mut c = code;
                for _ in 0..n {
                    picks.push((c % per_node as u64) as usize);
                    c /= per_node as u64;
                }
                let chosen: Vec<&Strategy> = picks.iter().enumerate().map(|(u, &i)| &strategies[u][i]).collect();
                let graph = chosen.iter().fold(0u32, |m, s| m | s.mask);
                let mut status = NashStatus::StrictNe;
                for u in 0..n {
                    let others = chosen
                        .iter()
                        .enumerate()
                        .filter(|&(v, _)| v != u)
                        .fold(0u32, |m, (_, s)| m | s.mask);
                    let cur = chosen[u].channels * fb + routing[graph as usize][u];
                    let (min, count) = best_cache[u][&others];
                    if cur > min {
                        status = NashStatus::NotNe;
                        break;
                    }
                    if count > 1 {
                        status = NashStatus::WeakNe;
                    }
                }
                let duplicate = chosen.iter().any(|s| s.doubled) || {
                    let mut seen = 0u32;
                    chosen.iter().any(|s| {
                        let clash = seen & s.mask != 0;
                        seen |= s.mask;
                        clash
                    })
                };
                let oc = onchain[graph as usize];
                acc.profiles += 1;
                match status {
                    NashStatus::StrictNe => {
                        acc.strict += 1;
                        acc.strict_with_duplicate += duplicate as u64;
                        acc.strict_with_onchain += oc as u64;
                    }
                    NashStatus::WeakNe => {
                        acc.weak += 1;
                        acc.weak_with_duplicate += duplicate as u64;
                        acc.weak_with_onchain += oc as u64;
                    }
                    NashStatus::NotNe => acc.not_ne += 1,
                }
                acc
            },
        )
        .reduce_with(|mut a, b| {
            a.profiles += b.profiles;
            a.strict += b.strict;
            a.weak += b.weak;
            a.not_ne += b.not_ne;
            a.strict_with_duplicate += b.strict_with_duplicate;
            a.strict_with_onchain += b.strict_with_onchain;
            a.weak_with_duplicate += b.weak_with_duplicate;
            a.weak_with_onchain += b.weak_with_onchain;
            a
        })
        .expect("at least one profile");
    Ok(report)
}
