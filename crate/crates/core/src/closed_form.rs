//! Closed-form node costs for the named topologies and their deviation families.
//!
//! A node's cost is described by [`CostTerms`]: the channels it pays for,
//! groups of receivers reached through a fixed number of intermediaries, and
//! groups of ordered pairs whose cheapest routes it forwards with a given
//! share. [`CostTerms::linear`] gives the polynomial form
//! `fixed·F_B + per_fee·k·f0` that holds while every route is cheaper than
//! `F_B`; [`CostTerms::evaluate`] applies the on-chain fallback exactly as the
//! routing engine does.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use crate::model::{GameParams, NodeId};
use crate::rational::{integer, ratio, Rational};
use crate::topology::TopologyFamily;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendTerm {
    pub receivers: u64,
    pub intermediates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardTerm {
    pub ordered_pairs: u64,
    /// Intermediates on each cheapest route of these pairs.
    pub intermediates: u64,
    pub share: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CostTerms {
    pub channels: u64,
    pub sends: Vec<SendTerm>,
    pub forwards: Vec<ForwardTerm>,
}

/// `fixed·F_B + per_fee·k·f0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCost {
    pub fixed: Rational,
    pub per_fee: Rational,
}

impl LinearCost {
    pub fn at(&self, params: &GameParams, f0: &Rational) -> Rational {
        &self.fixed * &params.blockchain_fee + &self.per_fee * integer(params.k) * f0
    }

    /// Value of `k·f0/F_B` at which `self - other` changes sign, if it does.
    pub fn crossing(&self, other: &LinearCost) -> Option<Rational> {
        let slope = &self.per_fee - &other.per_fee;
        if slope.is_zero() {
            None
        } else {
            Some(-(&self.fixed - &other.fixed) / slope)
        }
    }
}

impl CostTerms {
    fn new(channels: u64) -> Self {
        Self {
            channels,
            ..Self::default()
        }
    }

    fn send(mut self, receivers: u64, intermediates: u64) -> Self {
        if receivers > 0 {
            self.sends.push(SendTerm {
                receivers,
                intermediates,
            });
        }
        self
    }

    fn forward(mut self, ordered_pairs: u64, intermediates: u64, share: Rational) -> Self {
        if ordered_pairs > 0 {
            self.forwards.push(ForwardTerm {
                ordered_pairs,
                intermediates,
                share,
            });
        }
        self
    }

    pub fn linear(&self) -> LinearCost {
        let paid: u64 = self.sends.iter().map(|s| s.receivers * s.intermediates).sum();
        let earned: Rational = self.forwards.iter().map(|f| integer(f.ordered_pairs) * &f.share).sum();
        LinearCost {
            fixed: integer(self.channels),
            per_fee: integer(paid) - earned,
        }
    }

    /// Exact cost with routes costing at least `F_B` settled on-chain.
    pub fn evaluate(&self, params: &GameParams, f0: &Rational) -> Rational {
        let fb = &params.blockchain_fee;
        let k = integer(params.k);
        let mut total = integer(self.channels) * fb;
        for s in &self.sends {
            let route = integer(s.intermediates) * f0;
            let per_payment = if route < *fb { route } else { fb.clone() };
            total += &k * integer(s.receivers) * per_payment;
        }
        for f in &self.forwards {
            if integer(f.intermediates) * f0 < *fb {
                total -= &k * integer(f.ordered_pairs) * &f.share * f0;
            }
        }
        total
    }
}

/// A corner deviation of one of the named families, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Deviation {
    /// Star: an outer node opens channels to `a` other outer nodes.
    StarOuter { a: usize },
    /// Two-star: a center keeps only `b` outer nodes.
    TwoStarA { b: usize },
    /// Two-star: a center links to the other center and keeps `b` outer nodes.
    TwoStarB { b: usize },
    /// Two-star: an outer node opens channels to `b` other outer nodes.
    TwoStarC { b: usize },
    /// Bipartite: a center keeps only `b` outer nodes.
    BipartiteA { b: usize },
    /// Bipartite: a center links to `a` other centers and keeps `b >= 1` outer nodes.
    BipartiteB { a: usize, b: usize },
    /// Bipartite: a center links to `a` other centers and drops every outer node.
    BipartiteC { a: usize },
    /// Bipartite: an outer node opens channels to `b` other outer nodes.
    BipartiteD { b: usize },
    /// Clique: node 0 keeps only `a` channels.
    CliqueA { a: usize },
    /// Clique: node `i` (neither first nor last) keeps `a` of its channels.
    CliqueB { i: usize, a: usize },
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Deviation::StarOuter { a } => write!(f, "star outer (a={a})"),
            Deviation::TwoStarA { b } => write!(f, "two-star A (b={b})"),
            Deviation::TwoStarB { b } => write!(f, "two-star B (b={b})"),
            Deviation::TwoStarC { b } => write!(f, "two-star C (b={b})"),
            Deviation::BipartiteA { b } => write!(f, "bipartite A (b={b})"),
            Deviation::BipartiteB { a, b } => write!(f, "bipartite B (a={a}, b={b})"),
            Deviation::BipartiteC { a } => write!(f, "bipartite C (a={a})"),
            Deviation::BipartiteD { b } => write!(f, "bipartite D (b={b})"),
            Deviation::CliqueA { a } => write!(f, "clique A (a={a})"),
            Deviation::CliqueB { i, a } => write!(f, "clique B (i={i}, a={a})"),
        }
    }
}

fn range_set(range: std::ops::Range<usize>) -> BTreeSet<NodeId> {
    range.map(NodeId).collect()
}

fn centers_of(family: TopologyFamily) -> usize {
    match family {
        TopologyFamily::CompleteBipartite { centers } => centers,
        TopologyFamily::TwoStar => 2,
        _ => 1,
    }
}

impl Deviation {
    /// Every deviation of the family's enumerated list, over the full parameter ranges.
    pub fn enumerate(family: TopologyFamily, n: usize) -> Vec<Deviation> {
        let mut out = Vec::new();
        match family {
            TopologyFamily::Path => {}
            TopologyFamily::Star => {
                out.extend((1..=n.saturating_sub(2)).map(|a| Deviation::StarOuter { a }));
            }
            TopologyFamily::TwoStar => {
                let m = n - 2;
                out.extend((1..m).map(|b| Deviation::TwoStarA { b }));
                out.extend((0..=m).map(|b| Deviation::TwoStarB { b }));
                out.extend((1..m).map(|b| Deviation::TwoStarC { b }));
            }
            TopologyFamily::CompleteBipartite { centers: c } => {
                let d = n - c;
                out.extend((1..d).map(|b| Deviation::BipartiteA { b }));
                for a in 1..c {
                    out.extend((1..=d).map(|b| Deviation::BipartiteB { a, b }));
                }
                out.extend((1..c).map(|a| Deviation::BipartiteC { a }));
                out.extend((1..d).map(|b| Deviation::BipartiteD { b }));
            }
            TopologyFamily::Clique => {
                out.extend((1..=n.saturating_sub(2)).map(|a| Deviation::CliqueA { a }));
                for i in 1..n.saturating_sub(1) {
                    out.extend((0..=n - 2 - i).map(|a| Deviation::CliqueB { i, a }));
                }
            }
        }
        out
    }

    /// The node that deviates (a representative of its symmetry class).
    pub fn deviator(&self, family: TopologyFamily) -> NodeId {
        match *self {
            Deviation::StarOuter { .. } => NodeId(1),
            Deviation::TwoStarC { .. } => NodeId(2),
            Deviation::BipartiteD { .. } => NodeId(centers_of(family)),
            Deviation::CliqueB { i, .. } => NodeId(i),
            _ => NodeId(0),
        }
    }

    /// The deviator's replacement peer set.
    pub fn alternative(&self, family: TopologyFamily) -> BTreeSet<NodeId> {
        let c = centers_of(family);
        match *self {
            Deviation::StarOuter { a } => range_set(2..2 + a),
            Deviation::TwoStarA { b } => range_set(2..2 + b),
            Deviation::TwoStarB { b } => {
                let mut s = range_set(2..2 + b);
                s.insert(NodeId(1));
                s
            }
            Deviation::TwoStarC { b } => range_set(3..3 + b),
            Deviation::BipartiteA { b } => range_set(c..c + b),
            Deviation::BipartiteB { a, b } => {
                let mut s = range_set(1..1 + a);
                s.extend(range_set(c..c + b));
                s
            }
            Deviation::BipartiteC { a } => range_set(1..1 + a),
            Deviation::BipartiteD { b } => range_set(c + 1..c + 1 + b),
            Deviation::CliqueA { a } => range_set(1..1 + a),
            Deviation::CliqueB { i, a } => range_set(i + 1..i + 1 + a),
        }
    }

    /// Cost terms of the deviator after deviating; the rest of the profile is unchanged.
    pub fn terms(&self, family: TopologyFamily, n: usize) -> CostTerms {
        let n64 = n as u64;
        match *self {
            Deviation::StarOuter { a } => {
                let a = a as u64;
                CostTerms::new(a)
                    .send(1 + a, 0)
                    .send(n64 - 2 - a, 1)
                    .forward(a * a.saturating_sub(1), 1, ratio(1, 2))
            }
            Deviation::TwoStarA { b } => {
                let (m, b) = (n64 - 2, b as u64);
                CostTerms::new(b)
                    .send(b, 0)
                    .send(1, 1)
                    .send(m - b, 2)
                    .forward(b * b.saturating_sub(1), 1, ratio(1, 2))
            }
            Deviation::TwoStarB { b } => {
                let (m, b) = (n64 - 2, b as u64);
                CostTerms::new(b + 1)
                    .send(b + 1, 0)
                    .send(m - b, 1)
                    .forward(b * b.saturating_sub(1), 1, ratio(1, 2))
            }
            Deviation::TwoStarC { b } => {
                let (m, b) = (n64 - 2, b as u64);
                CostTerms::new(b)
                    .send(2 + b, 0)
                    .send(m - 1 - b, 1)
                    .forward(2, 1, ratio(1, m as i64))
                    .forward(b * b.saturating_sub(1), 1, ratio(1, 3))
            }
            Deviation::BipartiteA { b } => {
                let (c, d, b) = bip(family, n, b);
                CostTerms::new(b).send(b, 0).send(c - 1, 1).send(d - b, 2).forward(
                    b * b.saturating_sub(1),
                    1,
                    ratio(1, c as i64),
                )
            }
            Deviation::BipartiteB { a, b } => {
                let (c, d, b) = bip(family, n, b);
                let a = a as u64;
                CostTerms::new(a + b)
                    .send(a + b, 0)
                    .send(d - b, 1)
                    .send(c - 1 - a, 1)
                    .forward(b * b.saturating_sub(1), 1, ratio(1, c as i64))
                    .forward(a * a.saturating_sub(1), 1, ratio(1, d as i64 + 1))
            }
            Deviation::BipartiteC { a } => {
                let (c, d, a) = bip(family, n, a);
                CostTerms::new(a).send(a, 0).send(d, 1).send(c - 1 - a, 2).forward(
                    a * a.saturating_sub(1),
                    1,
                    ratio(1, d as i64 + 1),
                )
            }
            Deviation::BipartiteD { b } => {
                let (c, d, b) = bip(family, n, b);
                CostTerms::new(b)
                    .send(c + b, 0)
                    .send(d - 1 - b, 1)
                    .forward(c * (c - 1), 1, ratio(1, d as i64))
                    .forward(b * b.saturating_sub(1), 1, ratio(1, c as i64 + 1))
            }
            Deviation::CliqueA { a } => {
                let a = a as u64;
                CostTerms::new(a).send(a, 0).send(n64 - 1 - a, 1)
            }
            Deviation::CliqueB { i, a } => {
                let (i, a) = (i as u64, a as u64);
                CostTerms::new(a).send(i + a, 0).send(n64 - 1 - i - a, 1)
            }
        }
    }
}

fn bip(family: TopologyFamily, n: usize, x: usize) -> (u64, u64, u64) {
    let c = centers_of(family) as u64;
    (c, n as u64 - c, x as u64)
}

/// Cost terms of `node` in the undeviated profile of a named family.
/// `None` for the path, which has no closed form here.
pub fn base_terms(family: TopologyFamily, n: usize, node: NodeId) -> Option<CostTerms> {
    let n64 = n as u64;
    let terms = match family {
        TopologyFamily::Path => return None,
        TopologyFamily::Star => {
            if node.0 == 0 {
                CostTerms::new(n64 - 1)
                    .send(n64 - 1, 0)
                    .forward((n64 - 1) * (n64 - 2), 1, ratio(1, 1))
            } else {
                CostTerms::new(0).send(1, 0).send(n64 - 2, 1)
            }
        }
        TopologyFamily::TwoStar | TopologyFamily::CompleteBipartite { .. } => {
            let c = centers_of(family) as u64;
            let d = n64 - c;
            if (node.0 as u64) < c {
                CostTerms::new(d)
                    .send(d, 0)
                    .send(c - 1, 1)
                    .forward(d * (d - 1), 1, ratio(1, c as i64))
            } else {
                CostTerms::new(0)
                    .send(c, 0)
                    .send(d - 1, 1)
                    .forward(c * (c - 1), 1, ratio(1, d as i64))
            }
        }
        TopologyFamily::Clique => CostTerms::new(n64 - 1 - node.0 as u64).send(n64 - 1, 0),
    };
    Some(terms)
}
