//! Randomized invariants.

use std::collections::BTreeSet;

use channelgame::analytic::{bipartite_bounds, two_star_bounds, ConditionLabel};
use channelgame::cost::{all_node_costs, node_cost, social_cost};
use channelgame::equilibrium::{check_nash_exhaustive, EquilibriumVerdict, ExhaustiveConfig};
use channelgame::feegame::{lemma3_predicate, verify_certificate, FeeAssignment};
use channelgame::model::{homogeneous_scenario, ProfileDocument, ScenarioDocument};
use channelgame::rational::{integer, ratio};
use channelgame::topology::{apply_deviation, generate, TopologyFamily};
use channelgame::{FeePolicy, GameParams, NodeId, PaymentScenario, Rational, StrategyProfile};
use proptest::prelude::*;

/// A random multigraph profile: each entry is (opener, peer, copies).
fn profile_strategy(max_n: usize) -> impl Strategy<Value = StrategyProfile> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 1u32..=2), 0..=n * 2).prop_map(move |edges| {
            let mut p = StrategyProfile::empty(n);
            for (u, v, copies) in edges {
                if u == v {
                    continue;
                }
                if p.multiplicity(NodeId(u), NodeId(v)) == 0 {
                    p.insert(NodeId(u), NodeId(v));
                }
                if copies == 2 {
                    p.insert_duplicate(NodeId(u), NodeId(v));
                }
            }
            p
        })
    })
}

fn rational_strategy(max_num: i64, den: i64) -> impl Strategy<Value = Rational> {
    (0..=max_num).prop_map(move |x| ratio(x, den))
}

fn policy_strategy(n: usize) -> impl Strategy<Value = FeePolicy> {
    prop_oneof![
        rational_strategy(12, 8).prop_map(FeePolicy::Uniform),
        prop::collection::vec(rational_strategy(4, 4), n).prop_map(FeePolicy::PerNode),
    ]
}

fn scenario_strategy(n: usize) -> impl Strategy<Value = PaymentScenario> {
    prop::collection::vec((0..n, 0..n, 1u64..=3), 0..=n * 3).prop_map(|demands| {
        let mut s = PaymentScenario::new();
        for (u, v, c) in demands {
            if u != v {
                s.add(NodeId(u), NodeId(v), c).unwrap();
            }
        }
        s
    })
}

fn game_strategy(max_n: usize) -> impl Strategy<Value = (StrategyProfile, FeePolicy, GameParams, PaymentScenario)> {
    profile_strategy(max_n).prop_flat_map(|p| {
        let n = p.n_nodes();
        (
            Just(p),
            policy_strategy(n),
            (1i64..=4, 1u64..=3).prop_map(move |(fb, k)| GameParams::new(n, ratio(fb, 2), k).unwrap()),
            scenario_strategy(n),
        )
    })
}

/// Random labelled tree by random parent pointers over a shuffled order.
fn tree_strategy() -> impl Strategy<Value = StrategyProfile> {
    (2usize..=10).prop_flat_map(|n| {
        (
            Just(n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(any::<prop::sample::Index>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(n, order, parents, flips)| {
                let mut p = StrategyProfile::empty(n);
                for i in 1..n {
                    let (u, v) = (order[i], order[parents[i].index(i)]);
                    if flips[i] {
                        p.insert(NodeId(u), NodeId(v));
                    } else {
                        p.insert(NodeId(v), NodeId(u));
                    }
                }
                p
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fees_are_conserved((profile, policy, params, scenario) in game_strategy(10)) {
        let costs = all_node_costs(&profile, &policy, &params, &scenario).unwrap();
        let paid: Rational = costs.iter().map(|c| &c.sending_fees).sum();
        let earned: Rational = costs.iter().map(|c| &c.revenue).sum();
        prop_assert_eq!(paid, earned);
        let report = social_cost(&profile, &policy, &params, &scenario).unwrap();
        let expected = &params.blockchain_fee * integer(report.mu + report.b);
        prop_assert_eq!(report.social_cost, expected);
        let mu: u64 = params.nodes().map(|u| profile.channel_count(u)).sum();
        prop_assert_eq!(mu, profile.total_channels());
    }
}

proptest! {
    #[test]
    fn spanning_trees_are_socially_optimal(tree in tree_strategy(), k in 1u64..=3) {
        let n = tree.n_nodes();
        let params = GameParams::new(n, integer(1), k).unwrap();
        // every route has at most n − 2 intermediaries
        let f0 = ratio(1, n as i64);
        let report = social_cost(&tree, &FeePolicy::Uniform(f0), &params, &homogeneous_scenario(&params)).unwrap();
        prop_assert_eq!(report.b, 0);
        prop_assert!(report.is_social_optimum);
        prop_assert_eq!(report.social_cost, integer(n as u64 - 1));
    }

    #[test]
    fn profile_documents_round_trip((profile, policy, params, _s) in game_strategy(10)) {
        let doc = ProfileDocument::new(&params, &profile, Some(policy.clone()));
        let back = ProfileDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.profile().unwrap(), profile);
        prop_assert_eq!(back.params().unwrap(), params);
        prop_assert_eq!(back.fee_policy, Some(policy));
    }

    #[test]
    fn scenario_documents_round_trip((_p, _f, params, scenario) in game_strategy(10)) {
        let doc = ScenarioDocument::new(&scenario);
        let text = serde_json::to_string(&doc).unwrap();
        let back: ScenarioDocument = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.scenario(params.n_nodes).unwrap(), scenario);
    }

    #[test]
    fn fee_assignments_round_trip(fees in prop::collection::vec(rational_strategy(50, 7), 1..12)) {
        let a = FeeAssignment { fees };
        prop_assert_eq!(FeeAssignment::from_json(&a.to_json()).unwrap(), a);
    }

    #[test]
    fn verdicts_round_trip(n in 2usize..=5, num in 0i64..20, k in 1u64..=2) {
        let params = GameParams::new(n, integer(1), k).unwrap();
        let profile = generate(TopologyFamily::Star, n).unwrap();
        let v = check_nash_exhaustive(
            &profile,
            &FeePolicy::Uniform(ratio(num, 10)),
            &params,
            &homogeneous_scenario(&params),
            &ExhaustiveConfig::default(),
        )
        .unwrap();
        prop_assert_eq!(EquilibriumVerdict::from_json(&v.to_json()).unwrap(), v);
        let params_back: GameParams = serde_json::from_str(&serde_json::to_string(&params).unwrap()).unwrap();
        prop_assert_eq!(params_back, params);
    }

    #[test]
    fn lemma3_is_monotone_and_certified(
        (profile, fees, scenario, lower) in profile_strategy(9).prop_flat_map(|p| {
            let n = p.n_nodes();
            (Just(p), prop::collection::vec(prop_oneof![Just(0i64), Just(1)], n), scenario_strategy(n), 0..n)
        })
    ) {
        let fees = FeeAssignment { fees: fees.into_iter().map(|x| ratio(x, 3)).collect() };
        let out = lemma3_predicate(&profile, &fees, &scenario, 3).unwrap();
        prop_assert!(verify_certificate(&profile, &fees, &scenario, &out));
        let mut reduced = fees.clone();
        reduced.fees[lower] = ratio(0, 1);
        let after = lemma3_predicate(&profile, &reduced, &scenario, 3).unwrap();
        prop_assert!(verify_certificate(&profile, &reduced, &scenario, &after));
        if out.holds {
            prop_assert!(after.holds);
        }
    }

    #[test]
    fn positive_fee_cut_vertex_breaks_lemma3(n in 3usize..=12, fee in 1i64..5, a in 1usize..12, b in 1usize..12) {
        prop_assume!(a < n && b < n && a != b);
        let star = generate(TopologyFamily::Star, n).unwrap();
        let mut fees = FeeAssignment::uniform(n, ratio(0, 1));
        fees.fees[0] = ratio(fee, 10);
        let mut scenario = PaymentScenario::new();
        scenario.add(NodeId(a), NodeId(b), 1).unwrap();
        let out = lemma3_predicate(&star, &fees, &scenario, 3).unwrap();
        prop_assert!(!out.holds);
        prop_assert!(verify_certificate(&star, &fees, &scenario, &out));
    }

    #[test]
    fn deviation_changes_one_strategy(
        (profile, node, peers) in profile_strategy(8).prop_flat_map(|p| {
            let n = p.n_nodes();
            (Just(p), 0..n, prop::collection::btree_set(0..n, 0..n))
        })
    ) {
        let peers: BTreeSet<NodeId> = peers.into_iter().filter(|&v| v != node).map(NodeId).collect();
        let out = apply_deviation(&profile, NodeId(node), &peers).unwrap();
        prop_assert_eq!(out.peer_set(NodeId(node)), peers);
        for u in 0..profile.n_nodes() {
            if u != node {
                for v in 0..profile.n_nodes() {
                    prop_assert_eq!(out.multiplicity(NodeId(u), NodeId(v)), profile.multiplicity(NodeId(u), NodeId(v)));
                }
            }
        }
    }

    #[test]
    fn bipartite_with_two_centers_is_the_two_star(n in 5usize..=100_000) {
        let params = GameParams::new(n, integer(1), 1).unwrap();
        let bip = bipartite_bounds(&params, 2).unwrap();
        let two = two_star_bounds(&params).unwrap();
        prop_assert_eq!(&bip.feasible, &two.feasible);
        let values = |r: &channelgame::analytic::BoundsReport| {
            let mut v: Vec<(String, Rational)> = r
                .conditions
                .iter()
                .map(|c| (c.direction.to_string(), c.value.clone()))
                .collect();
            v.sort();
            v.dedup();
            v
        };
        // the bipartite family also lists degenerate Deviation B corners that never bind
        let bip_values = values(&bip);
        for v in values(&two) {
            prop_assert!(bip_values.contains(&v), "{:?} missing at n={}", v, n);
        }
    }

    #[test]
    fn deviation_b_upper_never_binds_before_d(n in 5usize..=100_000, c_seed in any::<prop::sample::Index>()) {
        let c = 2 + c_seed.index(n / 2 - 1);
        let params = GameParams::new(n, integer(1), 1).unwrap();
        let r = bipartite_bounds(&params, c).unwrap();
        let b = r.condition(ConditionLabel::BipBACminus1BD).unwrap();
        let d = r.condition(ConditionLabel::BipDBDminus1).unwrap();
        prop_assert_eq!(&d.value, &ratio(c as i64 + 1, n as i64 - 1));
        prop_assert_eq!(&b.value, &ratio((n - c + 1) as i64, n as i64 - 1));
        prop_assert!(d.value <= b.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn verdicts_are_deterministic_and_unilateral((profile, policy, params, scenario) in game_strategy(5)) {
        let cfg = ExhaustiveConfig::default();
        let a = check_nash_exhaustive(&profile, &policy, &params, &scenario, &cfg).unwrap();
        let b = check_nash_exhaustive(&profile, &policy, &params, &scenario, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        if let Some(w) = a.witness {
            prop_assert!(w.new_cost < w.old_cost);
            let deviated = apply_deviation(&profile, w.node, &w.alternative).unwrap();
            prop_assert_eq!(node_cost(&deviated, &policy, &params, &scenario, w.node).unwrap().total, w.new_cost);
            prop_assert_eq!(node_cost(&profile, &policy, &params, &scenario, w.node).unwrap().total, w.old_cost);
        }
    }
}

#[test]
fn generated_families_have_predicted_channel_counts() {
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
            assert!(!p.has_duplicates());
            let expected = match f {
                TopologyFamily::Path | TopologyFamily::Star => n - 1,
                TopologyFamily::TwoStar => 2 * (n - 2),
                TopologyFamily::CompleteBipartite { centers } => centers * (n - centers),
                TopologyFamily::Clique => n * (n - 1) / 2,
            };
            assert_eq!(p.total_channels(), expected as u64, "{f} n={n}");
        }
        assert_eq!(
            generate(TopologyFamily::CompleteBipartite { centers: 2 }, n).unwrap(),
            generate(TopologyFamily::TwoStar, n).unwrap()
        );
        let params = GameParams::new(n, integer(1), 2).unwrap();
        let s = homogeneous_scenario(&params);
        for ((u, v), c) in s.iter() {
            assert_eq!(s.count(v, u), c);
        }
    }
}
