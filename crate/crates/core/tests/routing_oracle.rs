//! Routing and cost checked against brute-force simple-path enumeration.

use std::collections::BTreeMap;

use channelgame::cost::all_node_costs;
use channelgame::model::homogeneous_scenario;
use channelgame::rational::{integer, ratio};
use channelgame::routing::{route_stats, RouteOutcome};
use channelgame::{FeePolicy, GameParams, NodeId, Rational, StrategyProfile};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

struct Brute {
    min_cost: Rational,
    count: u128,
    through: BTreeMap<usize, u128>,
}

fn simple_paths(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn dfs(adj: &[Vec<usize>], u: usize, t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if u == t {
            out.push(path.clone());
            return;
        }
        for &v in &adj[u] {
            if !path.contains(&v) {
                path.push(v);
                dfs(adj, v, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    dfs(adj, s, t, &mut vec![s], &mut out);
    out
}

/// Cheapest routes by (fee sum, hop count); `None` means on-chain.
fn brute(adj: &[Vec<usize>], policy: &FeePolicy, fb: &Rational, s: usize, t: usize) -> Option<Brute> {
    let paths = simple_paths(adj, s, t);
    let keyed: Vec<(Rational, usize, &Vec<usize>)> = paths
        .iter()
        .map(|p| {
            let cost: Rational = p[1..p.len() - 1]
                .iter()
                .map(|&v| policy.fee_of(NodeId(v)).clone())
                .sum();
            (cost, p.len(), p)
        })
        .collect();
    let (best_cost, best_len) = keyed.iter().map(|(c, l, _)| (c.clone(), *l)).min()?;
    if best_cost >= *fb {
        return None;
    }
    let mut through = BTreeMap::new();
    let mut count = 0;
    for (c, l, p) in &keyed {
        if *c == best_cost && *l == best_len {
            count += 1;
            for &v in &p[1..p.len() - 1] {
                *through.entry(v).or_insert(0) += 1;
            }
        }
    }
    Some(Brute {
        min_cost: best_cost,
        count,
        through,
    })
}

fn random_profile(rng: &mut StdRng, n: usize, density: f64) -> StrategyProfile {
    let mut channels = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                if rng.gen_bool(0.5) {
                    channels.push((u, v));
                } else {
                    channels.push((v, u));
                }
            }
        }
    }
    StrategyProfile::from_channels(n, channels).unwrap()
}

fn random_policy(rng: &mut StdRng, n: usize) -> FeePolicy {
    if rng.gen_bool(0.5) {
        FeePolicy::Uniform(ratio(rng.gen_range(0..8), 10))
    } else {
        // small fee alphabet so that equal-cost ties are common
        FeePolicy::PerNode((0..n).map(|_| ratio(rng.gen_range(0..4), 4)).collect())
    }
}

#[test]
fn routes_match_enumeration() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..300 {
        let n = rng.gen_range(2..=7);
        let density = rng.gen_range(0.2..0.9);
        let profile = random_profile(&mut rng, n, density);
        let policy = random_policy(&mut rng, n);
        let params = GameParams::new(n, integer(1), 1).unwrap();
        let adj = profile.adjacency();
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let got = route_stats(&profile, &policy, &params, NodeId(s), NodeId(t)).unwrap();
                match (brute(&adj, &policy, &params.blockchain_fee, s, t), &got.outcome) {
                    (None, RouteOutcome::OnChain) => {}
                    (Some(b), RouteOutcome::Routed(r)) => {
                        assert_eq!(r.min_cost, b.min_cost);
                        assert_eq!(r.route_count, b.count);
                        let through: BTreeMap<usize, u128> = r.intermediaries.iter().map(|&(v, c)| (v.0, c)).collect();
                        assert_eq!(through, b.through, "{s}->{t} in {:?}", adj);
                    }
                    (b, o) => panic!("{s}->{t}: brute on-chain={} routed={o:?} in {adj:?}", b.is_none()),
                }
            }
        }
    }
}

#[test]
fn node_costs_match_enumeration() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..150 {
        let n = rng.gen_range(3..=6);
        let profile = random_profile(&mut rng, n, 0.5);
        let policy = random_policy(&mut rng, n);
        let k = rng.gen_range(1..=3);
        let params = GameParams::new(n, ratio(rng.gen_range(1..=4), 2), k).unwrap();
        let costs = all_node_costs(&profile, &policy, &params, &homogeneous_scenario(&params)).unwrap();
        let adj = profile.adjacency();
        let kq = integer(k);
        let mut expected: Vec<Rational> = (0..n)
            .map(|u| &params.blockchain_fee * integer(profile.channel_count(NodeId(u))))
            .collect();
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                match brute(&adj, &policy, &params.blockchain_fee, s, t) {
                    None => expected[s] += &kq * &params.blockchain_fee,
                    Some(b) => {
                        expected[s] += &kq * &b.min_cost;
                        for (v, c) in b.through {
                            let share = Rational::new((c as i64).into(), (b.count as i64).into());
                            expected[v] -= &kq * policy.fee_of(NodeId(v)) * share;
                        }
                    }
                }
            }
        }
        for u in 0..n {
            assert_eq!(costs[u].total, expected[u], "node {u}");
        }
    }
}
