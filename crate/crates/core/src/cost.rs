//! Per-node cost, social cost and the social optimum.

use std::collections::BTreeMap;
use std::io::Write;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::model::{FeePolicy, GameParams, NodeId, PaymentScenario, StrategyProfile};
use crate::rational::{self, Rational};
use crate::routing::{all_route_stats, RouteOutcome, RouteStats, RoutingError};

#[derive(Debug, Error)]
pub enum CostError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("sum of node costs {summed} differs from (mu + b) * F_B = {expected}")]
    Conservation { summed: String, expected: String },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `total = channel_cost + onchain_cost + sending_fees - revenue`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostBreakdown {
    pub node: NodeId,
    #[serde(with = "rational::serde_str")]
    pub channel_cost: Rational,
    #[serde(with = "rational::serde_str")]
    pub onchain_cost: Rational,
    #[serde(with = "rational::serde_str")]
    pub sending_fees: Rational,
    #[serde(with = "rational::serde_str")]
    pub revenue: Rational,
    #[serde(with = "rational::serde_str")]
    pub total: Rational,
    /// b_u: payments this node sends on-chain.
    pub onchain_payments: u64,
}

impl CostBreakdown {
    fn zero(node: NodeId) -> Self {
        Self {
            node,
            channel_cost: Rational::zero(),
            onchain_cost: Rational::zero(),
            sending_fees: Rational::zero(),
            revenue: Rational::zero(),
            total: Rational::zero(),
            onchain_payments: 0,
        }
    }
}

/// Costs of all nodes from precomputed route statistics.
pub fn costs_from_stats(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    stats: &BTreeMap<(NodeId, NodeId), RouteStats>,
) -> Vec<CostBreakdown> {
    let fb = &params.blockchain_fee;
    let mut out: Vec<CostBreakdown> = params.nodes().map(CostBreakdown::zero).collect();
    for ((sender, receiver), count) in scenario.iter() {
        let count_q = Rational::from_integer(count.into());
        match &stats[&(sender, receiver)].outcome {
            RouteOutcome::OnChain => {
                out[sender.0].onchain_payments += count;
            }
            RouteOutcome::Routed(route) => {
                if !route.min_cost.is_zero() {
                    out[sender.0].sending_fees += &count_q * &route.min_cost;
                }
                for &(node, through) in &route.intermediaries {
                    let fee = policy.fee_of(node);
                    if fee.is_zero() {
                        continue;
                    }
                    let share = Rational::new(through.into(), route.route_count.into());
                    out[node.0].revenue += &count_q * fee * share;
                }
            }
        }
    }
    for c in &mut out {
        c.channel_cost = fb * Rational::from_integer(profile.channel_count(c.node).into());
        c.onchain_cost = fb * Rational::from_integer(c.onchain_payments.into());
        c.total = &c.channel_cost + &c.onchain_cost + &c.sending_fees - &c.revenue;
    }
    out
}

pub fn all_node_costs(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
) -> Result<Vec<CostBreakdown>, CostError> {
    let stats = all_route_stats(profile, policy, params, scenario)?;
    Ok(costs_from_stats(profile, policy, params, scenario, &stats))
}

pub fn node_cost(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
    node: NodeId,
) -> Result<CostBreakdown, CostError> {
    if node.0 >= params.n_nodes {
        return Err(CostError::UnknownNode(node));
    }
    let mut all = all_node_costs(profile, policy, params, scenario)?;
    Ok(all.swap_remove(node.0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SocialCostReport {
    /// −W, the sum of all node costs.
    #[serde(with = "rational::serde_str")]
    pub social_cost: Rational,
    /// μ: channels opened.
    pub mu: u64,
    /// b: payments executed on-chain.
    pub b: u64,
    /// (N − 1)·F_B.
    #[serde(with = "rational::serde_str")]
    pub optimum: Rational,
    pub is_social_optimum: bool,
}

impl SocialCostReport {
    /// Social cost over the optimum; the price of anarchy when the profile is an equilibrium.
    pub fn ratio_to_optimum(&self) -> Rational {
        &self.social_cost / &self.optimum
    }
}

/// Social cost computed two ways (summed node costs and `(mu + b)·F_B`),
/// cross-checked for equality.
pub fn social_cost(
    profile: &StrategyProfile,
    policy: &FeePolicy,
    params: &GameParams,
    scenario: &PaymentScenario,
) -> Result<SocialCostReport, CostError> {
    let costs = all_node_costs(profile, policy, params, scenario)?;
    social_cost_from(&costs, profile, params)
}

pub fn social_cost_from(
    costs: &[CostBreakdown],
    profile: &StrategyProfile,
    params: &GameParams,
) -> Result<SocialCostReport, CostError> {
    let summed: Rational = costs.iter().map(|c| &c.total).sum();
    let mu = profile.total_channels();
    let b: u64 = costs.iter().map(|c| c.onchain_payments).sum();
    let expected = &params.blockchain_fee * Rational::from_integer((mu + b).into());
    if summed != expected {
        return Err(CostError::Conservation {
            summed: rational::to_ratio_string(&summed),
            expected: rational::to_ratio_string(&expected),
        });
    }
    let optimum = &params.blockchain_fee * Rational::from_integer((params.n_nodes as u64 - 1).into());
    Ok(SocialCostReport {
        is_social_optimum: summed == optimum,
        social_cost: summed,
        mu,
        b,
        optimum,
    })
}

/// CSV columns `node,channel_cost,onchain_cost,sending_fees,revenue,total,total_exact`.
pub fn write_costs_csv<W: Write>(costs: &[CostBreakdown], precision: u32, writer: W) -> Result<(), CostError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "node",
        "channel_cost",
        "onchain_cost",
        "sending_fees",
        "revenue",
        "total",
        "total_exact",
    ])?;
    for c in costs {
        w.write_record([
            c.node.to_string(),
            rational::format_fixed(&c.channel_cost, precision),
            rational::format_fixed(&c.onchain_cost, precision),
            rational::format_fixed(&c.sending_fees, precision),
            rational::format_fixed(&c.revenue, precision),
            rational::format_fixed(&c.total, precision),
            rational::to_ratio_string(&c.total),
        ])?;
    }
    w.flush()?;
    Ok(())
}
