#![allow(dead_code)]

use channelgame::closed_form::{base_terms, Deviation};
use channelgame::cost::all_node_costs;
use channelgame::model::homogeneous_scenario;
use channelgame::rational::{format_significant, parse_rational};
use channelgame::topology::{apply_deviation, generate, TopologyFamily};
use channelgame::{FeePolicy, GameParams, NodeId, Rational};

/// Printed rows of the published bipartite table: (N, c, lower, upper).
pub const PRINTED_TABLE1: [(usize, usize, &str, &str); 24] = [
    (1000, 2, ".2000000e-2", ".30030e-2"),
    (1000, 3, ".2999991e-2", ".40040e-2"),
    (1000, 5, ".4999925e-2", ".60060e-2"),
    (1000, 10, ".9999192e-2", ".11011e-1"),
    (1000, 100, ".9970024e-1", ".10110"),
    (1000, 499, ".4975016", ".50050"),
    (1000, 500, ".4984984", ".50150"),
    (10000, 2, ".20000e-3", ".30003e-3"),
    (10000, 3, ".29997e-3", ".40004e-3"),
    (10000, 5, ".49995e-3", ".60006e-3"),
    (10000, 10, ".99990e-3", ".11001e-2"),
    (10000, 100, ".99981e-2", ".10101e-1"),
    (10000, 1000, ".99971e-1", ".10011"),
    (10000, 4999, ".49976", ".50005"),
    (10000, 5000, ".49985", ".50015"),
    (100000, 2, ".200000e-4", ".300003e-4"),
    (100000, 3, ".299997e-4", ".400004e-4"),
    (100000, 5, ".499995e-4", ".600006e-4"),
    (100000, 10, ".999990e-4", ".110001e-3"),
    (100000, 100, ".999990e-3", ".101001e-2"),
    (100000, 1000, ".999971e-2", ".100101e-1"),
    (100000, 10000, ".999971e-1", ".100011"),
    (100000, 49999, ".499976", ".500005"),
    (100000, 50000, ".499985", ".500015"),
];

/// Significant digits of a printed mantissa such as `.30030e-2`.
pub fn printed_digits(printed: &str) -> u32 {
    let mantissa = printed.split('e').next().unwrap();
    mantissa.trim_start_matches('.').len() as u32
}

/// Does `value`, rounded half-even to the printed number of significant
/// digits, equal the printed number?
pub fn matches_printed(value: &Rational, printed: &str) -> bool {
    let rounded = format_significant(value, printed_digits(printed));
    parse_rational(&rounded).unwrap() == parse_rational(printed).unwrap()
}

pub fn named_families(n: usize) -> Vec<TopologyFamily> {
    let mut out = vec![TopologyFamily::Star, TopologyFamily::TwoStar, TopologyFamily::Clique];
    out.extend((2..=n / 2).map(|centers| TopologyFamily::CompleteBipartite { centers }));
    out
}

/// Every disagreement between closed-form and simulated costs for one
/// family, covering every base node and every listed deviation.
pub fn closed_form_mismatches(family: TopologyFamily, params: &GameParams, f0: &Rational) -> Vec<String> {
    let n = params.n_nodes;
    let policy = FeePolicy::Uniform(f0.clone());
    let scenario = homogeneous_scenario(params);
    let profile = generate(family, n).unwrap();
    let base = all_node_costs(&profile, &policy, params, &scenario).unwrap();
    let mut out = Vec::new();
    for u in 0..n {
        let closed = base_terms(family, n, NodeId(u)).unwrap().evaluate(params, f0);
        if closed != base[u].total {
            out.push(format!(
                "{family} n={n} f0={f0} base node {u}: closed {closed} simulated {}",
                base[u].total
            ));
        }
    }
    for dev in Deviation::enumerate(family, n) {
        let node = dev.deviator(family);
        let deviated = apply_deviation(&profile, node, &dev.alternative(family)).unwrap();
        let simulated = all_node_costs(&deviated, &policy, params, &scenario).unwrap()[node.0]
            .total
            .clone();
        let closed = dev.terms(family, n).evaluate(params, f0);
        if closed != simulated {
            out.push(format!(
                "{family} n={n} f0={f0} {dev}: closed {closed} simulated {simulated}"
            ));
        }
    }
    out
}
