//! Cheapest-route statistics per ordered sender/receiver pair.
//!
//! A route's cost is the sum of the fees of its intermediate nodes (under a
//! uniform fee: intermediates × `f0`). Cheapest routes are ranked by
//! `(cost, hops)`, so with a positive uniform fee they are exactly the
//! shortest paths by hop count. Routes are counted combinatorially: for every
//! source we build the tight-predecessor DAG, count paths from the source
//! forward (`sigma`) and into each target backward (`tau`); a node `u` lies on
//! `sigma[u] * tau[u]` cheapest routes to that target.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use num_traits::Zero;
use thiserror::Error;

use crate::model::{ensure_valid, FeePolicy, GameParams, ModelError, NodeId, PaymentScenario, StrategyProfile};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("sender and receiver are both node {0}")]
    SelfPair(NodeId),
    #[error("route count overflow")]
    CountOverflow,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutedPayment {
    pub min_cost: Rational,
    /// σ: number of cheapest routes.
    pub route_count: u128,
    /// σ(u) for every strict intermediate with a nonzero count, ordered by node.
    pub intermediaries: Vec<(NodeId, u128)>,
}

impl RoutedPayment {
    pub fn intermediary_count(&self, node: NodeId) -> u128 {
        self.intermediaries
            .binary_search_by_key(&node, |&(n, _)| n)
            .map(|i| self.intermediaries[i].1)
            .unwrap_or(0)
    }

    /// Probability that `node` forwards the payment when one cheapest route is
    /// picked uniformly at random.
    pub fn share_of(&self, node: NodeId) -> Rational {
        Rational::new(self.intermediary_count(node).into(), self.route_count.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RouteOutcome {
    /// No route strictly cheaper than the blockchain fee.
    OnChain,
    Routed(RoutedPayment),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteStats {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub outcome: RouteOutcome,
}

impl RouteStats {
    pub fn is_on_chain(&self) -> bool {
        matches!(self.outcome, RouteOutcome::OnChain)
    }

    pub fn routed(&self) -> Option<&RoutedPayment> {
        match &self.outcome {
            RouteOutcome::Routed(r) => Some(r),
            RouteOutcome::OnChain => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Label {
    cost: Rational,
    hops: usize,
}

/// Tight-predecessor DAG of cheapest routes from one source.
struct SourceTree {
    source: usize,
    label: Vec<Option<Label>>,
    sigma: Vec<u128>,
    preds: Vec<Vec<usize>>,
    /// Reached nodes in nondecreasing label order.
    order: Vec<usize>,
    position: Vec<usize>,
}

impl SourceTree {
    fn build(adj: &[Vec<usize>], policy: &FeePolicy, source: usize) -> Result<Self, RoutingError> {
        match policy {
            FeePolicy::Uniform(f0) => Self::breadth_first(adj, f0, source),
            FeePolicy::PerNode(_) => Self::cheapest_first(adj, policy, source),
        }
    }

    fn breadth_first(adj: &[Vec<usize>], f0: &Rational, source: usize) -> Result<Self, RoutingError> {
        let n = adj.len();
        let mut hops: Vec<Option<usize>> = vec![None; n];
        let mut sigma = vec![0u128; n];
        let mut preds = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        hops[source] = Some(0);
        sigma[source] = 1;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let hv = hops[v].expect("queued nodes are labelled");
            for &w in &adj[v] {
                match hops[w] {
                    None => {
                        hops[w] = Some(hv + 1);
                        queue.push_back(w);
                        sigma[w] = sigma[v];
                        preds[w].push(v);
                    }
                    Some(hw) if hw == hv + 1 => {
                        sigma[w] = sigma[w].checked_add(sigma[v]).ok_or(RoutingError::CountOverflow)?;
                        preds[w].push(v);
                    }
                    Some(_) => {}
                }
            }
        }
        let label = hops
            .into_iter()
            .map(|h| {
                h.map(|hops| Label {
                    cost: if hops <= 1 {
                        Rational::zero()
                    } else {
                        f0 * Rational::from_integer((hops as u64 - 1).into())
                    },
                    hops,
                })
            })
            .collect();
        Ok(Self::finish(source, label, sigma, preds, order))
    }

    fn cheapest_first(adj: &[Vec<usize>], policy: &FeePolicy, source: usize) -> Result<Self, RoutingError> {
        let n = adj.len();
        let mut best: Vec<Option<Label>> = vec![None; n];
        let mut done = vec![false; n];
        let mut sigma = vec![0u128; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut order = Vec::with_capacity(n);
        let mut heap = BinaryHeap::new();
        best[source] = Some(Label {
            cost: Rational::zero(),
            hops: 0,
        });
        heap.push(Reverse((Rational::zero(), 0usize, source)));
        while let Some(Reverse((cost, hops, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            let current = best[v].as_ref().expect("pushed nodes are labelled");
            if current.cost != cost || current.hops != hops {
                continue;
            }
            done[v] = true;
            sigma[v] = if v == source {
                1
            } else {
                preds[v]
                    .iter()
                    .try_fold(0u128, |acc, &p| acc.checked_add(sigma[p]))
                    .ok_or(RoutingError::CountOverflow)?
            };
            order.push(v);
            let step = if v == source {
                Rational::zero()
            } else {
                policy.fee_of(NodeId(v)).clone()
            };
            let candidate = Label {
                cost: &cost + &step,
                hops: hops + 1,
            };
            for &w in &adj[v] {
                if done[w] {
                    continue;
                }
                match best[w].as_ref().map(|b| candidate.cmp(b)) {
                    None | Some(Ordering::Less) => {
                        best[w] = Some(candidate.clone());
                        preds[w] = vec![v];
                        heap.push(Reverse((candidate.cost.clone(), candidate.hops, w)));
                    }
                    Some(Ordering::Equal) => preds[w].push(v),
                    Some(Ordering::Greater) => {}
                }
            }
        }
        Ok(Self::finish(source, best, sigma, preds, order))
    }

    fn finish(
        source: usize,
        label: Vec<Option<Label>>,
        sigma: Vec<u128>,
        preds: Vec<Vec<usize>>,
        order: Vec<usize>,
    ) -> Self {
        let mut position = vec![usize::MAX; label.len()];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        Self {
            source,
            label,
            sigma,
            preds,
            order,
            position,
        }
    }

    fn outcome(&self, target: usize, blockchain_fee: &Rational) -> Result<RouteOutcome, RoutingError> {
        let Some(label) = &self.label[target] else {
            return Ok(RouteOutcome::OnChain);
        };
        if label.cost >= *blockchain_fee {
            return Ok(RouteOutcome::OnChain);
        }
        let end = self.position[target];
        let mut tau = vec![0u128; self.label.len()];
        tau[target] = 1;
        for &v in self.order[..=end].iter().rev() {
            if tau[v] == 0 {
                continue;
            }
            for &p in &self.preds[v] {
                tau[p] = tau[p].checked_add(tau[v]).ok_or(RoutingError::CountOverflow)?;
            }
        }
        let mut intermediaries = Vec::new();
        for u in 0..tau.len() {
            if u != self.source && u != target && tau[u] > 0 {
                let through = self.sigma[u].checked_mul(tau[u]).ok_or(RoutingError::CountOverflow)?;
                intermediaries.push((NodeId(u), through));
            }
        }
        Ok(RouteOutcome::Routed(RoutedPayment {
            min_cost: label.cost.clone(),
            route_count: self.sigma[target],
            intermediaries,
        }))
    }
}

fn check_inputs(profile: &StrategyProfile, policy: &FeePolicy, params: &GameParams) -> Result<(), RoutingError> {
    ensure_valid(profile, params)?;
    policy.validate(params.n_nodes)?;
    Ok(())
}

/// Cheapest-route statistics for one ordered pair.
pub fn route_stats(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    sender: NodeId,
    receiver: NodeId,
) -> Result<RouteStats, RoutingError> {
    check_inputs(profile, policy, params)?;
    params.check_node(sender)?;
    params.check_node(receiver)?;
    if sender == receiver {
        return Err(RoutingError::SelfPair(sender));
    }
    let tree = SourceTree::build(&profile.adjacency(), policy, sender.0)?;
    Ok(RouteStats {
        sender,
        receiver,
        outcome: tree.outcome(receiver.0, &params.blockchain_fee)?,
    })
}

/// Statistics for every pair with positive demand, one DAG pass per sender.
pub fn all_route_stats(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
) -> Result<BTreeMap<(NodeId, NodeId), RouteStats>, RoutingError> {
    check_inputs(profile, policy, params)?;
    if let Some(max) = scenario.max_node() {
        params.check_node(max)?;
    }
    let adj = profile.adjacency();
    let mut out = BTreeMap::new();
    let mut tree: Option<SourceTree> = None;
    for ((sender, receiver), _) in scenario.iter() {
        if tree.as_ref().map(|t| t.source) != Some(sender.0) {
            tree = Some(SourceTree::build(&adj, policy, sender.0)?);
        }
        let outcome = tree
            .as_ref()
            .expect("tree built for sender")
            .outcome(receiver.0, &params.blockchain_fee)?;
        out.insert(
            (sender, receiver),
            RouteStats {
                sender,
                receiver,
                outcome,
            },
        );
    }
    Ok(out)
}
