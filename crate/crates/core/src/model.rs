//! Domain types: nodes, channels, strategy profiles, payment scenarios and fee policies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("game needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("blockchain fee must be positive")]
    NonPositiveBlockchainFee,
    #[error("k must be at least 1")]
    ZeroPaymentsPerPair,
    #[error("node {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("negative fee for node {0}")]
    NegativeFee(usize),
    #[error("per-node fee list has {got} entries, expected {expected}")]
    FeeListLength { got: usize, expected: usize },
    #[error("payment from node {0} to itself")]
    SelfPayment(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("malformed document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(index: usize) -> Self {
        NodeId(index)
    }
}

/// Number of nodes, on-chain fee `F_B` and payments per ordered pair `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameParams {
    pub n_nodes: usize,
    #[serde(with = "rational::serde_str")]
    pub blockchain_fee: Rational,
    pub k: u64,
}

impl GameParams {
    pub fn new(n_nodes: usize, blockchain_fee: Rational, k: u64) -> Result<Self, ModelError> {
        let params = Self {
            n_nodes,
            blockchain_fee,
            k,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_nodes < 2 {
            return Err(ModelError::TooFewNodes(self.n_nodes));
        }
        if !self.blockchain_fee.is_positive() {
            return Err(ModelError::NonPositiveBlockchainFee);
        }
        if self.k == 0 {
            return Err(ModelError::ZeroPaymentsPerPair);
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n_nodes).map(NodeId)
    }

    pub fn check_node(&self, node: NodeId) -> Result<(), ModelError> {
        if node.0 < self.n_nodes {
            Ok(())
        } else {
            Err(ModelError::NodeOutOfRange {
                node: node.0,
                n_nodes: self.n_nodes,
            })
        }
    }
}

/// A channel paid for by `opener`. Routing treats it as an undirected edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Channel {
    pub opener: NodeId,
    pub peer: NodeId,
}

/// The channels each node opens. Multiplicities above one only appear when
/// duplicates are inserted explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrategyProfile {
    opens: Vec<BTreeMap<NodeId, u32>>,
}

impl StrategyProfile {
    /// The empty profile: nobody opens anything.
    pub fn empty(n_nodes: usize) -> Self {
        Self {
            opens: vec![BTreeMap::new(); n_nodes],
        }
    }

    /// Builds a profile from `(opener, peer)` pairs. Repeated pairs become
    /// duplicate channels. Ids must be in range; self-loops are kept so that
    /// `validate_profile` can report them.
    pub fn from_channels<I>(n_nodes: usize, channels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut profile = Self::empty(n_nodes);
        for (opener, peer) in channels {
            for id in [opener, peer] {
                if id >= n_nodes {
                    return Err(ModelError::NodeOutOfRange { node: id, n_nodes });
                }
            }
            *profile.opens[opener].entry(NodeId(peer)).or_insert(0) += 1;
        }
        Ok(profile)
    }

    pub fn n_nodes(&self) -> usize {
        self.opens.len()
    }

    /// Opens a channel from `opener` to `peer` unless that exact channel exists.
    pub fn insert(&mut self, opener: NodeId, peer: NodeId) {
        self.opens[opener.0].entry(peer).or_insert(1);
    }

    /// Opens one more channel from `opener` to `peer`, creating a duplicate if one exists.
    pub fn insert_duplicate(&mut self, opener: NodeId, peer: NodeId) {
        *self.opens[opener.0].entry(peer).or_insert(0) += 1;
    }

    /// Distinct peers `node` opens channels to.
    pub fn peers_of(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.opens[node.0].keys().copied()
    }

    pub fn peer_set(&self, node: NodeId) -> BTreeSet<NodeId> {
        self.peers_of(node).collect()
    }

    pub fn multiplicity(&self, opener: NodeId, peer: NodeId) -> u32 {
        self.opens[opener.0].get(&peer).copied().unwrap_or(0)
    }

    /// μ_u: channels opened (and paid for) by `node`, counting duplicates.
    pub fn channel_count(&self, node: NodeId) -> u64 {
        self.opens[node.0].values().map(|&m| m as u64).sum()
    }

    /// μ: total number of channels.
    pub fn total_channels(&self) -> u64 {
        (0..self.n_nodes()).map(|u| self.channel_count(NodeId(u))).sum()
    }

    /// Every channel, repeated once per multiplicity, ordered by opener then peer.
    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        for (u, peers) in self.opens.iter().enumerate() {
            for (&peer, &m) in peers {
                for _ in 0..m {
                    out.push(Channel {
                        opener: NodeId(u),
                        peer,
                    });
                }
            }
        }
        out
    }

    /// Replaces `node`'s strategy by the given peer set.
    pub fn set_strategy(&mut self, node: NodeId, peers: &BTreeSet<NodeId>) {
        self.opens[node.0] = peers.iter().map(|&p| (p, 1)).collect();
    }

    pub(crate) fn strategy_multi(&self, node: NodeId) -> &BTreeMap<NodeId, u32> {
        &self.opens[node.0]
    }

    /// True if `a` and `b` share more than one channel in total.
    pub fn has_duplicate_between(&self, a: NodeId, b: NodeId) -> bool {
        self.multiplicity(a, b) + self.multiplicity(b, a) > 1
    }

    pub fn has_duplicates(&self) -> bool {
        (0..self.n_nodes()).any(|u| {
            self.peers_of(NodeId(u))
                .any(|v| self.has_duplicate_between(NodeId(u), v))
        })
    }

    /// Undirected simple adjacency lists (sorted, deduplicated, self-loops dropped).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut adj = vec![BTreeSet::new(); n];
        for (u, peers) in self.opens.iter().enumerate() {
            for &peer in peers.keys() {
                if peer.0 != u {
                    adj[u].insert(peer.0);
                    adj[peer.0].insert(u);
                }
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// True if a channel exists between `a` and `b` in either direction.
    pub fn connected(&self, a: NodeId, b: NodeId) -> bool {
        self.multiplicity(a, b) > 0 || self.multiplicity(b, a) > 0
    }
}

/// Ordered `(sender, receiver)` demands with payment counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaymentScenario {
    demands: BTreeMap<(NodeId, NodeId), u64>,
}

impl PaymentScenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, sender: NodeId, receiver: NodeId, count: u64) -> Result<(), ModelError> {
        if sender == receiver {
            return Err(ModelError::SelfPayment(sender.0));
        }
        if count > 0 {
            *self.demands.entry((sender, receiver)).or_insert(0) += count;
        }
        Ok(())
    }

    pub fn count(&self, sender: NodeId, receiver: NodeId) -> u64 {
        self.demands.get(&(sender, receiver)).copied().unwrap_or(0)
    }

    /// Pairs with positive demand, in `(sender, receiver)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((NodeId, NodeId), u64)> + '_ {
        self.demands.iter().map(|(&pair, &count)| (pair, count))
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// P: total number of payments.
    pub fn total(&self) -> u64 {
        self.demands.values().sum()
    }

    pub fn senders(&self) -> BTreeSet<NodeId> {
        self.demands.keys().map(|&(s, _)| s).collect()
    }

    pub fn max_node(&self) -> Option<NodeId> {
        self.demands.keys().map(|&(s, t)| s.max(t)).max()
    }
}

/// Every node pays `k` times to every other node.
pub fn homogeneous_scenario(params: &GameParams) -> PaymentScenario {
    let mut scenario = PaymentScenario::new();
    for s in params.nodes() {
        for t in params.nodes() {
            if s != t {
                scenario.demands.insert((s, t), params.k);
            }
        }
    }
    scenario
}

/// Forwarding fees charged by intermediaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeePolicy {
    /// Every node charges the same fee `f0`.
    Uniform(#[serde(with = "rational::serde_str")] Rational),
    /// Node `i` charges `fees[i]`.
    PerNode(#[serde(with = "rational::serde_str_vec")] Vec<Rational>),
}

impl FeePolicy {
    pub fn fee_of(&self, node: NodeId) -> &Rational {
        match self {
            FeePolicy::Uniform(f0) => f0,
            FeePolicy::PerNode(fees) => &fees[node.0],
        }
    }

    pub fn validate(&self, n_nodes: usize) -> Result<(), ModelError> {
        match self {
            FeePolicy::Uniform(f0) => {
                if f0.is_negative() {
                    return Err(ModelError::NegativeFee(0));
                }
            }
            FeePolicy::PerNode(fees) => {
                if fees.len() != n_nodes {
                    return Err(ModelError::FeeListLength {
                        got: fees.len(),
                        expected: n_nodes,
                    });
                }
                if let Some(i) = fees.iter().position(|f| f.is_negative()) {
                    return Err(ModelError::NegativeFee(i));
                }
            }
        }
        Ok(())
    }

    pub fn uniform_fee(&self) -> Option<&Rational> {
        match self {
            FeePolicy::Uniform(f0) => Some(f0),
            FeePolicy::PerNode(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FeePolicy::Uniform(f0) => f0.is_zero(),
            FeePolicy::PerNode(fees) => fees.iter().all(Zero::is_zero),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Informational,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SelfLoop,
    PeerOutOfRange { peer: usize },
    DuplicateChannel { peer: usize },
    ProfileSizeMismatch { expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
    pub severity: Severity,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::SelfLoop => write!(f, "self-loop at node {}", self.node),
            ViolationKind::PeerOutOfRange { peer } => {
                write!(f, "node {} opens to unknown peer {}", self.node, peer)
            }
            ViolationKind::DuplicateChannel { peer } => {
                write!(f, "duplicate channel between {} and {}", self.node, peer)
            }
            ViolationKind::ProfileSizeMismatch { expected } => {
                write!(f, "profile has node {} but the game has {} nodes", self.node, expected)
            }
        }
    }
}

/// Lists invariant violations. Duplicates are informational; self-loops and bad ids are errors.
pub fn validate_profile(profile: &StrategyProfile, params: &GameParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if profile.n_nodes() != params.n_nodes {
        out.push(Violation {
            node: NodeId(profile.n_nodes().saturating_sub(1)),
            kind: ViolationKind::ProfileSizeMismatch {
                expected: params.n_nodes,
            },
            severity: Severity::Error,
        });
    }
    for u in 0..profile.n_nodes() {
        let node = NodeId(u);
        for peer in profile.peers_of(node) {
            if peer == node {
                out.push(Violation {
                    node,
                    kind: ViolationKind::SelfLoop,
                    severity: Severity::Error,
                });
            } else if peer.0 >= params.n_nodes {
                out.push(Violation {
                    node,
                    kind: ViolationKind::PeerOutOfRange { peer: peer.0 },
                    severity: Severity::Error,
                });
            } else if profile.has_duplicate_between(node, peer) && (profile.multiplicity(node, peer) > 1 || node < peer)
            {
                // report each duplicated pair once
                out.push(Violation {
                    node,
                    kind: ViolationKind::DuplicateChannel { peer: peer.0 },
                    severity: Severity::Informational,
                });
            }
        }
    }
    out
}

/// Fails on the first error-severity violation.
pub fn ensure_valid(profile: &StrategyProfile, params: &GameParams) -> Result<(), ModelError> {
    match validate_profile(profile, params)
        .into_iter()
        .find(|v| v.severity == Severity::Error)
    {
        Some(v) => Err(ModelError::InvalidProfile(v.to_string())),
        None => Ok(()),
    }
}

/// JSON profile document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub n_nodes: usize,
    #[serde(with = "rational::serde_str")]
    pub blockchain_fee: Rational,
    pub k: u64,
    pub channels: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_policy: Option<FeePolicy>,
}

impl ProfileDocument {
    pub fn new(params: &GameParams, profile: &StrategyProfile, fee_policy: Option<FeePolicy>) -> Self {
        Self {
            n_nodes: params.n_nodes,
            blockchain_fee: params.blockchain_fee.clone(),
            k: params.k,
            channels: profile.channels().into_iter().map(|c| [c.opener.0, c.peer.0]).collect(),
            fee_policy,
        }
    }

    pub fn params(&self) -> Result<GameParams, ModelError> {
        GameParams::new(self.n_nodes, self.blockchain_fee.clone(), self.k)
    }

    pub fn profile(&self) -> Result<StrategyProfile, ModelError> {
        StrategyProfile::from_channels(self.n_nodes, self.channels.iter().map(|&[o, p]| (o, p)))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))?;
        if let Some(policy) = &doc.fee_policy {
            policy.validate(doc.n_nodes)?;
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile document serializes")
    }
}

/// JSON scenario document: `{"demands": [[sender, receiver, count], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub demands: Vec<[u64; 3]>,
}

impl ScenarioDocument {
    pub fn new(scenario: &PaymentScenario) -> Self {
        Self {
            demands: scenario.iter().map(|((s, t), c)| [s.0 as u64, t.0 as u64, c]).collect(),
        }
    }

    pub fn scenario(&self, n_nodes: usize) -> Result<PaymentScenario, ModelError> {
        let mut scenario = PaymentScenario::new();
        for &[s, t, count] in &self.demands {
            for id in [s, t] {
                if id as usize >= n_nodes {
                    return Err(ModelError::NodeOutOfRange {
                        node: id as usize,
                        n_nodes,
                    });
                }
            }
            scenario.add(NodeId(s as usize), NodeId(t as usize), count)?;
        }
        Ok(scenario)
    }
}
