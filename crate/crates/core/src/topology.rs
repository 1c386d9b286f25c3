//! Generators for the named strategy profiles and unilateral deviations.
//!
//! Node ids: the star center is 0; two-star centers are 0 and 1; bipartite
//! centers are `0..c`; in the clique node `i` opens to every `j > i`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{NodeId, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("{family} needs at least {min} nodes, got {n}")]
    TooFewNodes { family: String, min: usize, n: usize },
    #[error("bipartite center count {c} must lie in [2, {max}] for {n} nodes")]
    CenterCount { c: usize, max: usize, n: usize },
    #[error("unknown topology `{0}` (expected path|star|two-star|bipartite:<c>|clique)")]
    UnknownFamily(String),
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node {0} cannot open a channel to itself")]
    SelfLoop(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyFamily {
    Path,
    Star,
    TwoStar,
    CompleteBipartite { centers: usize },
    Clique,
}

impl fmt::Display for TopologyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyFamily::Path => write!(f, "path"),
            TopologyFamily::Star => write!(f, "star"),
            TopologyFamily::TwoStar => write!(f, "two-star"),
            TopologyFamily::CompleteBipartite { centers } => write!(f, "bipartite:{centers}"),
            TopologyFamily::Clique => write!(f, "clique"),
        }
    }
}

impl FromStr for TopologyFamily {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "path" => Ok(Self::Path),
            "star" => Ok(Self::Star),
            "two-star" => Ok(Self::TwoStar),
            "clique" => Ok(Self::Clique),
            _ => s
                .strip_prefix("bipartite:")
                .and_then(|c| c.parse().ok())
                .map(|centers| Self::CompleteBipartite { centers })
                .ok_or_else(|| TopologyError::UnknownFamily(s.to_string())),
        }
    }
}

impl TopologyFamily {
    pub fn check(&self, n: usize) -> Result<(), TopologyError> {
        let min = match self {
            TopologyFamily::TwoStar => 3,
            TopologyFamily::CompleteBipartite { .. } => 4,
            _ => 2,
        };
        if n < min {
            return Err(TopologyError::TooFewNodes {
                family: self.to_string(),
                min,
                n,
            });
        }
        if let TopologyFamily::CompleteBipartite { centers } = *self {
            if centers < 2 || centers > n / 2 {
                return Err(TopologyError::CenterCount {
                    c: centers,
                    max: n / 2,
                    n,
                });
            }
        }
        Ok(())
    }

    /// μ of the generated profile.
    pub fn channel_count(&self, n: usize) -> u64 {
        let n = n as u64;
        match *self {
            TopologyFamily::Path | TopologyFamily::Star => n - 1,
            TopologyFamily::TwoStar => 2 * (n - 2),
            TopologyFamily::CompleteBipartite { centers } => centers as u64 * (n - centers as u64),
            TopologyFamily::Clique => n * (n - 1) / 2,
        }
    }
}

pub fn generate(family: TopologyFamily, n: usize) -> Result<StrategyProfile, TopologyError> {
    family.check(n)?;
    let channels: Vec<(usize, usize)> = match family {
        TopologyFamily::Path => (0..n - 1).map(|i| (i, i + 1)).collect(),
        TopologyFamily::Star => (1..n).map(|j| (0, j)).collect(),
        TopologyFamily::TwoStar => (0..2).flat_map(|c| (2..n).map(move |o| (c, o))).collect(),
        TopologyFamily::CompleteBipartite { centers } => {
            (0..centers).flat_map(|c| (centers..n).map(move |o| (c, o))).collect()
        }
        TopologyFamily::Clique => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
    };
    Ok(StrategyProfile::from_channels(n, channels).expect("generated ids are in range"))
}

/// Copy of `profile` in which `node` opens exactly `new_peers`.
pub fn apply_deviation(
    profile: &StrategyProfile,
    node: NodeId,
    new_peers: &BTreeSet<NodeId>,
) -> Result<StrategyProfile, TopologyError> {
    let n = profile.n_nodes();
    if node.0 >= n {
        return Err(TopologyError::NodeOutOfRange { node: node.0, n });
    }
    if let Some(bad) = new_peers.iter().find(|p| p.0 >= n) {
        return Err(TopologyError::NodeOutOfRange { node: bad.0, n });
    }
    if new_peers.contains(&node) {
        return Err(TopologyError::SelfLoop(node.0));
    }
    let mut out = profile.clone();
    out.set_strategy(node, new_peers);
    Ok(out)
}

/// Finds the named family (with default node-id conventions) that generates `profile`.
pub fn identify(profile: &StrategyProfile) -> Option<TopologyFamily> {
    let n = profile.n_nodes();
    let mut candidates = vec![
        TopologyFamily::Star,
        TopologyFamily::Path,
        TopologyFamily::TwoStar,
        TopologyFamily::Clique,
    ];
    candidates.extend((2..=n / 2).map(|centers| TopologyFamily::CompleteBipartite { centers }));
    candidates
        .into_iter()
        .find(|f| generate(*f, n).map(|g| &g == profile).unwrap_or(false))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[usize]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn star_and_clique_shapes() {
        let s = generate(TopologyFamily::Star, 5).unwrap();
        assert_eq!(s.peer_set(NodeId(0)), ids(&[1, 2, 3, 4]));
        assert_eq!(s.total_channels(), 4);
        let c = generate(TopologyFamily::Clique, 5).unwrap();
        assert_eq!(c.total_channels(), 10);
        assert_eq!(c.peer_set(NodeId(2)), ids(&[3, 4]));
    }

    #[test]
    fn bipartite_two_is_two_star() {
        assert_eq!(
            generate(TopologyFamily::CompleteBipartite { centers: 2 }, 6).unwrap(),
            generate(TopologyFamily::TwoStar, 6).unwrap()
        );
    }

    #[test]
    fn bipartite_center_bounds() {
        assert!(generate(TopologyFamily::CompleteBipartite { centers: 4 }, 7).is_err());
        assert!(generate(TopologyFamily::CompleteBipartite { centers: 1 }, 7).is_err());
        assert!(generate(TopologyFamily::CompleteBipartite { centers: 3 }, 7).is_ok());
    }

    #[test]
    fn channel_counts_match_generators() {
        for n in 4..=12 {
            let mut fams = vec![
                TopologyFamily::Path,
                TopologyFamily::Star,
                TopologyFamily::TwoStar,
                TopologyFamily::Clique,
            ];
            fams.extend((2..=n / 2).map(|centers| TopologyFamily::CompleteBipartite { centers }));
            for f in fams {
                let p = generate(f, n).unwrap();
                assert_eq!(p.total_channels(), f.channel_count(n), "{f} n={n}");
                assert!(!p.has_duplicates());
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for name in ["path", "star", "two-star", "bipartite:7", "clique"] {
            assert_eq!(name.parse::<TopologyFamily>().unwrap().to_string(), name);
        }
        assert!("bipartite:x".parse::<TopologyFamily>().is_err());
        assert!("wheel".parse::<TopologyFamily>().is_err());
    }

    #[test]
    fn deviation_changes_one_node() {
        let star = generate(TopologyFamily::Star, 5).unwrap();
        let dev = apply_deviation(&star, NodeId(3), &ids(&[1])).unwrap();
        assert_eq!(dev.peer_set(NodeId(3)), ids(&[1]));
        assert_eq!(dev.peer_set(NodeId(0)), star.peer_set(NodeId(0)));
        assert!(star.peer_set(NodeId(3)).is_empty());

        let two = generate(TopologyFamily::TwoStar, 6).unwrap();
        let b = apply_deviation(&two, NodeId(0), &ids(&[1, 2, 3, 4, 5])).unwrap();
        assert_eq!(b.channel_count(NodeId(0)), 5);

        let none = apply_deviation(&two, NodeId(1), &BTreeSet::new()).unwrap();
        assert_eq!(none.channel_count(NodeId(1)), 0);

        assert_eq!(
            apply_deviation(&star, NodeId(2), &ids(&[2])),
            Err(TopologyError::SelfLoop(2))
        );
        assert!(apply_deviation(&star, NodeId(9), &ids(&[])).is_err());
    }

    #[test]
    fn identify_recovers_family() {
        for f in [
            TopologyFamily::Path,
            TopologyFamily::Star,
            TopologyFamily::Clique,
            TopologyFamily::CompleteBipartite { centers: 3 },
        ] {
            assert_eq!(identify(&generate(f, 7).unwrap()), Some(f));
        }
        assert_eq!(identify(&StrategyProfile::empty(5)), None);
    }
}
