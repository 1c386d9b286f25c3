//! Closed-form fee bounds for the named topologies.
//!
//! Bound values are exact rationals in units of `F_B/k`. Each corner
//! condition carries the published formula (`value`) and the crossing point
//! of the closed-form costs of the base and deviated strategies
//! (`cost_root`); the two agree except where noted in the tests.

use std::fmt;
use std::io::Write;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::closed_form::{base_terms, CostTerms, Deviation};
use crate::equilibrium::{DeviationWitness, EquilibriumVerdict, NashStatus};
use crate::model::{GameParams, NodeId};
use crate::rational::{self, integer, Rational};
use crate::topology::{TopologyError, TopologyFamily};

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("closed-form bounds need more than 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("fee must be nonnegative, got {0}")]
    NegativeFee(String),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Lower,
    Upper,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "LOWER",
            Direction::Upper => "UPPER",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionLabel {
    StarA1,
    StarANminus2,
    TwoStarAB1,
    TwoStarABNminus3,
    TwoStarBB0,
    TwoStarBBNminus2,
    TwoStarCB1,
    TwoStarCBNminus3,
    BipAB1,
    BipABDminus1,
    BipBA1B1,
    BipBA1BD,
    BipBACminus1B1,
    BipBACminus1BD,
    BipCA1,
    BipCACminus1,
    BipDB1,
    BipDBDminus1,
    CliqueA,
    CliqueB,
}

impl ConditionLabel {
    pub fn as_str(self) -> &'static str {
        use ConditionLabel::*;
        match self {
            StarA1 => "Star-a1",
            StarANminus2 => "Star-aNminus2",
            TwoStarAB1 => "TwoStar-A-b1",
            TwoStarABNminus3 => "TwoStar-A-bNminus3",
            TwoStarBB0 => "TwoStar-B-b0",
            TwoStarBBNminus2 => "TwoStar-B-bNminus2",
            TwoStarCB1 => "TwoStar-C-b1",
            TwoStarCBNminus3 => "TwoStar-C-bNminus3",
            BipAB1 => "Bip-A-b1",
            BipABDminus1 => "Bip-A-bDminus1",
            BipBA1B1 => "Bip-B-a1b1",
            BipBA1BD => "Bip-B-a1bD",
            BipBACminus1B1 => "Bip-B-aCminus1b1",
            BipBACminus1BD => "Bip-B-aCminus1bD",
            BipCA1 => "Bip-C-a1",
            BipCACminus1 => "Bip-C-aCminus1",
            BipDB1 => "Bip-D-b1",
            BipDBDminus1 => "Bip-D-bDminus1",
            CliqueA => "Clique-A",
            CliqueB => "Clique-B",
        }
    }

    /// Conditions kept in the published reduced form of each family's band;
    /// they win ties in active-bound selection.
    pub fn is_reduced(self) -> bool {
        use ConditionLabel::*;
        matches!(
            self,
            StarANminus2 | TwoStarBB0 | TwoStarCBNminus3 | BipBA1B1 | BipCA1 | BipDBDminus1 | CliqueA
        )
    }

    /// Conjectured index used in the "active lb/ub" columns of the published
    /// bipartite table: lower conditions are numbered in list order, upper
    /// conditions by distinct formula (1, (N−c+1)/(N−1), (c+1)/(N−1)).
    pub fn published_index(self) -> Option<u8> {
        use ConditionLabel::*;
        Some(match self {
            BipAB1 => 1,
            BipABDminus1 => 2,
            BipBA1B1 => 3,
            BipBACminus1B1 => 4,
            BipCA1 => 5,
            BipCACminus1 => 6,
            BipBA1BD | BipDB1 => 1,
            BipBACminus1BD => 2,
            BipDBDminus1 => 3,
            _ => return None,
        })
    }
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ConditionLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundCondition {
    pub label: ConditionLabel,
    pub direction: Direction,
    /// Published formula, in units of F_B/k.
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    /// Crossing point of the closed-form costs, in units of F_B/k.
    #[serde(with = "rational::serde_str_opt")]
    pub cost_root: Option<Rational>,
    /// The corner deviation this condition comes from.
    pub deviation: Deviation,
}

impl BoundCondition {
    /// The bound in money units: `value·F_B/k`.
    pub fn money(&self, params: &GameParams) -> Rational {
        &self.value * &params.blockchain_fee / integer(params.k)
    }

    /// Whether `x` (in F_B/k units) satisfies the strict inequality.
    pub fn admits(&self, x: &Rational) -> bool {
        match self.direction {
            Direction::Lower => *x > self.value,
            Direction::Upper => *x < self.value,
        }
    }
}

/// Open interval `(lower, upper)` in F_B/k units; `upper = None` is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeeInterval {
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str_opt")]
    pub upper: Option<Rational>,
}

impl FeeInterval {
    pub fn is_empty(&self) -> bool {
        matches!(&self.upper, Some(u) if *u <= self.lower)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        *x > self.lower && self.upper.as_ref().is_none_or(|u| x < u)
    }

    /// Midpoint, or `lower + 1` when unbounded above.
    pub fn interior_point(&self) -> Option<Rational> {
        if self.is_empty() {
            return None;
        }
        Some(match &self.upper {
            Some(u) => (&self.lower + u) / integer(2),
            None => &self.lower + integer(1),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub family: TopologyFamily,
    pub n_nodes: usize,
    pub conditions: Vec<BoundCondition>,
    pub active_lower: Option<BoundCondition>,
    pub active_upper: Option<BoundCondition>,
    pub feasible: FeeInterval,
}

impl BoundsReport {
    fn new(family: TopologyFamily, n_nodes: usize, conditions: Vec<BoundCondition>) -> Self {
        let active_lower = select(&conditions, Direction::Lower);
        let active_upper = select(&conditions, Direction::Upper);
        let feasible = FeeInterval {
            lower: active_lower.as_ref().map_or_else(Rational::zero, |c| c.value.clone()),
            upper: active_upper.as_ref().map(|c| c.value.clone()),
        };
        Self {
            family,
            n_nodes,
            conditions,
            active_lower,
            active_upper,
            feasible,
        }
    }

    pub fn condition(&self, label: ConditionLabel) -> Option<&BoundCondition> {
        self.conditions.iter().find(|c| c.label == label)
    }
}

fn select(conditions: &[BoundCondition], direction: Direction) -> Option<BoundCondition> {
    let mut best: Option<&BoundCondition> = None;
    for c in conditions.iter().filter(|c| c.direction == direction) {
        best = match best {
            None => Some(c),
            Some(b) => {
                let better = match direction {
                    Direction::Lower => c.value > b.value,
                    Direction::Upper => c.value < b.value,
                };
                if better || (c.value == b.value && c.label.is_reduced() && !b.label.is_reduced()) {
                    Some(c)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.cloned()
}

fn q(n: i128) -> Rational {
    Rational::from_integer(n.into())
}

fn frac(num: i128, den: i128) -> Rational {
    Rational::new(num.into(), den.into())
}

fn corner(
    family: TopologyFamily,
    n: usize,
    label: ConditionLabel,
    direction: Direction,
    value: Rational,
    deviation: Deviation,
) -> BoundCondition {
    let base = base_terms(family, n, deviation.deviator(family)).expect("named family has a closed form");
    let cost_root = deviation.terms(family, n).linear().crossing(&base.linear());
    BoundCondition {
        label,
        direction,
        value,
        cost_root,
        deviation,
    }
}

fn require_n(n: usize) -> Result<(), AnalyticError> {
    if n <= 3 {
        Err(AnalyticError::TooFewNodes(n))
    } else {
        Ok(())
    }
}

pub fn star_bounds(params: &GameParams) -> Result<BoundsReport, AnalyticError> {
    let n = params.n_nodes;
    require_n(n)?;
    let fam = TopologyFamily::Star;
    let ni = n as i128;
    use ConditionLabel::*;
    use Direction::*;
    let conditions = vec![
        corner(fam, n, StarA1, Upper, q(1), Deviation::StarOuter { a: 1 }),
        corner(
            fam,
            n,
            StarANminus2,
            Upper,
            frac(2, ni - 1),
            Deviation::StarOuter { a: n - 2 },
        ),
    ];
    Ok(BoundsReport::new(fam, n, conditions))
}

pub fn two_star_bounds(params: &GameParams) -> Result<BoundsReport, AnalyticError> {
    let n = params.n_nodes;
    require_n(n)?;
    let fam = TopologyFamily::TwoStar;
    let ni = n as i128;
    use ConditionLabel::*;
    use Direction::*;
    let conditions = vec![
        corner(fam, n, TwoStarAB1, Lower, frac(2, ni + 2), Deviation::TwoStarA { b: 1 }),
        corner(
            fam,
            n,
            TwoStarABNminus3,
            Lower,
            frac(1, ni - 1),
            Deviation::TwoStarA { b: n - 3 },
        ),
        corner(fam, n, TwoStarBB0, Lower, frac(2, ni), Deviation::TwoStarB { b: 0 }),
        corner(fam, n, TwoStarBBNminus2, Upper, q(1), Deviation::TwoStarB { b: n - 2 }),
        corner(fam, n, TwoStarCB1, Upper, q(1), Deviation::TwoStarC { b: 1 }),
        corner(
            fam,
            n,
            TwoStarCBNminus3,
            Upper,
            frac(3, ni - 1),
            Deviation::TwoStarC { b: n - 3 },
        ),
    ];
    Ok(BoundsReport::new(fam, n, conditions))
}

/// The three reduced conditions of the published bipartite band, in F_B/k units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBipartite {
    pub lower_1: Rational,
    pub lower_2: Rational,
    pub upper: Rational,
}

pub fn bipartite_reduced(n: usize, c: usize) -> ReducedBipartite {
    let (n, c) = (n as i128, c as i128);
    ReducedBipartite {
        lower_1: frac(c * n - c * c - 2 * c, n * n - c * n + n - 3 * c),
        lower_2: frac(c * n - c * c - c, n * n - c * n - n + c * c - 2 * c),
        upper: frac(c + 1, n - 1),
    }
}

pub fn bipartite_bounds(params: &GameParams, c: usize) -> Result<BoundsReport, AnalyticError> {
    let n = params.n_nodes;
    require_n(n)?;
    let fam = TopologyFamily::CompleteBipartite { centers: c };
    fam.check(n)?;
    let d = n - c;
    let (ni, ci) = (n as i128, c as i128);
    let red = bipartite_reduced(n, c);
    use ConditionLabel::*;
    use Direction::*;
    let conditions = vec![
        corner(fam, n, BipAB1, Lower, frac(ci, ni + ci), Deviation::BipartiteA { b: 1 }),
        corner(
            fam,
            n,
            BipABDminus1,
            Lower,
            frac(ci, 2 * ni - 2),
            Deviation::BipartiteA { b: d - 1 },
        ),
        corner(
            fam,
            n,
            BipBA1B1,
            Lower,
            red.lower_1,
            Deviation::BipartiteB { a: 1, b: 1 },
        ),
        corner(fam, n, BipBA1BD, Upper, q(1), Deviation::BipartiteB { a: 1, b: d }),
        corner(
            fam,
            n,
            BipBACminus1B1,
            Lower,
            frac(
                ci * ni * ni - 3 * ci * ci * ni + ci * ni + 2 * ci * ci * ci - 2 * ci * ci,
                ni * ni * ni - 2 * ci * ni * ni + ci * ni - ni + ci * ci - ci,
            ),
            Deviation::BipartiteB { a: c - 1, b: 1 },
        ),
        corner(
            fam,
            n,
            BipBACminus1BD,
            Upper,
            frac(ni - ci + 1, ni - 1),
            Deviation::BipartiteB { a: c - 1, b: d },
        ),
        corner(fam, n, BipCA1, Lower, red.lower_2, Deviation::BipartiteC { a: 1 }),
        corner(
            fam,
            n,
            BipCACminus1,
            Lower,
            frac(
                ci * ni * ni - 3 * ci * ci * ni + 2 * ci * ni + 2 * ci * ci * ci - 3 * ci * ci + ci,
                ni * ni * ni - 2 * ci * ni * ni + 2 * ci * ni - ni,
            ),
            Deviation::BipartiteC { a: c - 1 },
        ),
        corner(fam, n, BipDB1, Upper, q(1), Deviation::BipartiteD { b: 1 }),
        corner(
            fam,
            n,
            BipDBDminus1,
            Upper,
            red.upper,
            Deviation::BipartiteD { b: d - 1 },
        ),
    ];
    Ok(BoundsReport::new(fam, n, conditions))
}

pub fn clique_bounds(params: &GameParams) -> Result<BoundsReport, AnalyticError> {
    let n = params.n_nodes;
    require_n(n)?;
    let fam = TopologyFamily::Clique;
    use ConditionLabel::*;
    use Direction::*;
    let conditions = vec![
        corner(fam, n, CliqueA, Lower, q(1), Deviation::CliqueA { a: n - 2 }),
        corner(fam, n, CliqueB, Lower, q(1), Deviation::CliqueB { i: 1, a: n - 3 }),
    ];
    Ok(BoundsReport::new(fam, n, conditions))
}

pub fn clique_threshold(params: &GameParams) -> Result<BoundCondition, AnalyticError> {
    Ok(clique_bounds(params)?
        .active_lower
        .expect("clique has lower conditions"))
}

/// Bounds for any named family except the path.
pub fn family_bounds(params: &GameParams, family: TopologyFamily) -> Result<Option<BoundsReport>, AnalyticError> {
    Ok(Some(match family {
        TopologyFamily::Path => return Ok(None),
        TopologyFamily::Star => star_bounds(params)?,
        TopologyFamily::TwoStar => two_star_bounds(params)?,
        TopologyFamily::CompleteBipartite { centers } => bipartite_bounds(params, centers)?,
        TopologyFamily::Clique => clique_bounds(params)?,
    }))
}

/// Cost terms of path endpoint 0 when it opens a channel to each of `peers`
/// instead of only to node 1.
fn path_endpoint_terms(n: usize, peers: &[usize]) -> CostTerms {
    let mut terms = CostTerms {
        channels: peers.len() as u64,
        ..CostTerms::default()
    };
    for j in 1..n {
        // intermediates to j: the attachment point itself plus the path between
        let hops = peers.iter().map(|&p| p.abs_diff(j)).min().expect("at least one peer");
        terms.sends.push(crate::closed_form::SendTerm {
            receivers: 1,
            intermediates: hops as u64,
        });
    }
    terms
}

/// Whether the path is a Nash equilibrium at uniform fee `f0`.
///
/// At `f0 = 0` every node is indifferent between its own edge and re-attaching
/// elsewhere. With a positive fee below `F_B`, endpoint 0 pays less by
/// attaching to the middle node. Once every indirect route is priced on-chain
/// (`f0 ≥ F_B`), opening a second channel saves `(k − 1)·F_B`, which is a
/// strict gain only for `k ≥ 2`.
pub fn path_verdict(params: &GameParams, f0: &Rational) -> Result<EquilibriumVerdict, AnalyticError> {
    let n = params.n_nodes;
    require_n(n)?;
    if f0.is_negative() {
        return Err(AnalyticError::NegativeFee(rational::to_ratio_string(f0)));
    }
    let base = path_endpoint_terms(n, &[1]).evaluate(params, f0);
    let candidates = [vec![n / 2], vec![1, 2]];
    let mut ties = 0;
    for peers in &candidates {
        let cost = path_endpoint_terms(n, peers).evaluate(params, f0);
        if cost < base {
            return Ok(EquilibriumVerdict {
                status: NashStatus::NotNe,
                witness: Some(DeviationWitness {
                    node: NodeId(0),
                    alternative: peers.iter().map(|&p| NodeId(p)).collect(),
                    old_cost: base,
                    new_cost: cost,
                }),
                ties: 0,
            });
        }
        if cost == base {
            ties += 1;
        }
    }
    let status = if ties > 0 {
        NashStatus::WeakNe
    } else {
        NashStatus::StrictNe
    };
    Ok(EquilibriumVerdict {
        status,
        witness: None,
        ties,
    })
}

/// The published bipartite table's (N, c) pairs, in row order.
pub const PAPER_TABLE1: [(usize, usize); 24] = [
    (1_000, 2),
    (1_000, 3),
    (1_000, 5),
    (1_000, 10),
    (1_000, 100),
    (1_000, 499),
    (1_000, 500),
    (10_000, 2),
    (10_000, 3),
    (10_000, 5),
    (10_000, 10),
    (10_000, 100),
    (10_000, 1_000),
    (10_000, 4_999),
    (10_000, 5_000),
    (100_000, 2),
    (100_000, 3),
    (100_000, 5),
    (100_000, 10),
    (100_000, 100),
    (100_000, 1_000),
    (100_000, 10_000),
    (100_000, 49_999),
    (100_000, 50_000),
];

pub const TABLE_SIG_DIGITS: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub n_nodes: usize,
    pub centers: usize,
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
    pub lower_decimal: String,
    pub upper_decimal: String,
    pub lower_label: ConditionLabel,
    pub upper_label: ConditionLabel,
    pub lower_index: Option<u8>,
    pub upper_index: Option<u8>,
}

pub fn table1(pairs: &[(usize, usize)]) -> Result<Vec<Table1Row>, AnalyticError> {
    pairs
        .par_iter()
        .map(|&(n, c)| {
            let params = GameParams::new(n, integer(1), 1).map_err(|_| AnalyticError::TooFewNodes(n))?;
            let report = bipartite_bounds(&params, c)?;
            let lo = report.active_lower.expect("bipartite has lower conditions");
            let up = report.active_upper.expect("bipartite has upper conditions");
            Ok(Table1Row {
                n_nodes: n,
                centers: c,
                lower_decimal: rational::format_significant(&lo.value, TABLE_SIG_DIGITS),
                upper_decimal: rational::format_significant(&up.value, TABLE_SIG_DIGITS),
                lower_index: lo.label.published_index(),
                upper_index: up.label.published_index(),
                lower_label: lo.label,
                upper_label: up.label,
                lower: lo.value,
                upper: up.value,
            })
        })
        .collect()
}

/// Bipartite bound reports for every `c` in `2..=N/2`.
pub fn figure1_data(n: usize) -> Result<Vec<BoundsReport>, AnalyticError> {
    require_n(n)?;
    let params = GameParams::new(n, integer(1), 1).map_err(|_| AnalyticError::TooFewNodes(n))?;
    (2..=n / 2)
        .into_par_iter()
        .map(|c| bipartite_bounds(&params, c))
        .collect()
}

/// CSV columns `c,condition_label,direction,value_exact,value_decimal`.
pub fn write_bounds_csv<W: Write>(reports: &[BoundsReport], writer: W) -> Result<(), AnalyticError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["c", "condition_label", "direction", "value_exact", "value_decimal"])?;
    for r in reports {
        let c = match r.family {
            TopologyFamily::CompleteBipartite { centers } => centers.to_string(),
            _ => String::new(),
        };
        for cond in &r.conditions {
            w.write_record([
                c.clone(),
                cond.label.to_string(),
                cond.direction.to_string(),
                rational::to_ratio_string(&cond.value),
                rational::format_significant(&cond.value, TABLE_SIG_DIGITS),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Band plot: active upper bound (red) and active lower bound (blue) against c.
pub fn figure1_svg(reports: &[BoundsReport]) -> String {
    const W: f64 = 800.0;
    const H: f64 = 500.0;
    const M: f64 = 60.0;
    let points: Vec<(f64, f64, f64)> = reports
        .iter()
        .filter_map(|r| {
            let c = match r.family {
                TopologyFamily::CompleteBipartite { centers } => centers as f64,
                _ => return None,
            };
            let lo = rational::to_f64(&r.feasible.lower);
            let up = rational::to_f64(r.feasible.upper.as_ref()?);
            Some((c, lo, up))
        })
        .collect();
    let n = reports.first().map_or(0, |r| r.n_nodes);
    let (x_min, x_max) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let y_max = points.iter().fold(0.0f64, |m, p| m.max(p.2));
    let sx = |x: f64| {
        if x_max > x_min {
            M + (x - x_min) / (x_max - x_min) * (W - 2.0 * M)
        } else {
            W / 2.0
        }
    };
    let sy = |y: f64| {
        if y_max > 0.0 {
            H - M - y / y_max * (H - 2.0 * M)
        } else {
            H - M
        }
    };
    let line = |pick: fn(&(f64, f64, f64)) -> f64| {
        points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(pick(p))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
    svg.push_str(&format!(
        "<line x1=\"{M}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{y}\" stroke=\"black\"/>\n",
        y = H - M,
        x = W - M
    ));
    if !points.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{M}\" y=\"{:.2}\" font-size=\"12\">c = {x_min}</text>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">c = {x_max}</text>\n",
            H - M + 20.0,
            W - M,
            H - M + 20.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{M}\" font-size=\"12\" text-anchor=\"end\">{y_max:.6}</text>\n",
            M - 5.0
        ));
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            line(|p| p.2)
        ));
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            line(|p| p.1)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"30\" font-size=\"14\" text-anchor=\"middle\">Bipartite fee band, N = {n} (units of F_B/k)</text>\n",
        W / 2.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn params(n: usize) -> GameParams {
        GameParams::new(n, integer(1), 1).unwrap()
    }

    #[test]
    fn star_band() {
        let r = star_bounds(&params(5)).unwrap();
        assert!(r.active_lower.is_none());
        assert_eq!(r.feasible.upper, Some(ratio(1, 2)));
        assert_eq!(r.active_upper.unwrap().label, ConditionLabel::StarANminus2);
        let r4 = star_bounds(&params(4)).unwrap();
        assert_eq!(r4.feasible.upper, Some(ratio(2, 3)));
        assert!(star_bounds(&params(3)).is_err());
    }

    #[test]
    fn two_star_band() {
        let r = two_star_bounds(&params(6)).unwrap();
        assert_eq!(
            r.feasible,
            FeeInterval {
                lower: ratio(1, 3),
                upper: Some(ratio(3, 5))
            }
        );
        let r4 = two_star_bounds(&params(4)).unwrap();
        assert_eq!(
            r4.feasible,
            FeeInterval {
                lower: ratio(1, 2),
                upper: Some(ratio(1, 1))
            }
        );
        assert!(!r4.feasible.is_empty());
    }

    #[test]
    fn published_formulas_are_cost_roots() {
        for n in 4..=40usize {
            let mut reports = vec![
                star_bounds(&params(n)).unwrap(),
                two_star_bounds(&params(n)).unwrap(),
                clique_bounds(&params(n)).unwrap(),
            ];
            reports.extend((2..=n / 2).map(|c| bipartite_bounds(&params(n), c).unwrap()));
            for r in reports {
                for cond in &r.conditions {
                    let root = cond.cost_root.clone().expect("corner has a nonzero fee slope");
                    if cond.label == ConditionLabel::BipBA1B1 {
                        let (ni, ci) = (n as i64, r.family_centers() as i64);
                        assert_eq!(root, ratio(ci * (ni - ci - 2), ni * ni - ci * ni - ni - ci));
                    } else {
                        assert_eq!(root, cond.value, "{} n={n} {:?}", cond.label, r.family);
                    }
                }
            }
        }
    }

    #[test]
    fn directions_match_cost_slopes() {
        for n in 4..=20usize {
            for c in 2..=n / 2 {
                let fam = TopologyFamily::CompleteBipartite { centers: c };
                for cond in bipartite_bounds(&params(n), c).unwrap().conditions {
                    let dev = cond.deviation.terms(fam, n).linear();
                    let base = base_terms(fam, n, cond.deviation.deviator(fam)).unwrap().linear();
                    let slope = &dev.per_fee - &base.per_fee;
                    let expected = if slope.is_positive() {
                        Direction::Lower
                    } else {
                        Direction::Upper
                    };
                    assert_eq!(cond.direction, expected, "{}", cond.label);
                }
            }
        }
    }

    #[test]
    fn reduction_to_two_star() {
        for n in [5usize, 6, 10, 100, 1000] {
            let b = bipartite_bounds(&params(n), 2).unwrap();
            let t = two_star_bounds(&params(n)).unwrap();
            assert_eq!(b.feasible, t.feasible);
        }
    }

    #[test]
    fn upper_dominance() {
        for n in [10usize, 101, 1000] {
            for c in 2..=n / 2 {
                let r = bipartite_bounds(&params(n), c).unwrap();
                let d = &r.condition(ConditionLabel::BipDBDminus1).unwrap().value;
                let b = &r.condition(ConditionLabel::BipBACminus1BD).unwrap().value;
                assert!(d <= b);
            }
        }
    }

    #[test]
    fn clique_threshold_units() {
        let p = GameParams::new(5, integer(2), 4).unwrap();
        let t = clique_threshold(&p).unwrap();
        assert_eq!(t.value, integer(1));
        assert_eq!(t.money(&p), ratio(1, 2));
        assert!(!t.admits(&integer(1)));
    }

    #[test]
    fn path_cases() {
        let p = GameParams::new(6, integer(1), 1).unwrap();
        assert_eq!(path_verdict(&p, &ratio(0, 1)).unwrap().status, NashStatus::WeakNe);
        let v = path_verdict(&p, &ratio(1, 100)).unwrap();
        assert_eq!(v.status, NashStatus::NotNe);
        let w = v.witness.unwrap();
        assert_eq!(w.alternative, [NodeId(3)].into_iter().collect());
        assert!(w.new_cost < w.old_cost);
        assert!(path_verdict(&p, &ratio(-1, 100)).is_err());
        assert_eq!(path_verdict(&p, &ratio(2, 1)).unwrap().status, NashStatus::WeakNe);
        let p2 = GameParams::new(6, integer(1), 2).unwrap();
        assert_eq!(path_verdict(&p2, &ratio(2, 1)).unwrap().status, NashStatus::NotNe);
    }

    #[test]
    fn figure_rows_and_band() {
        assert_eq!(figure1_data(10).unwrap().len(), 4);
        let data = figure1_data(1000).unwrap();
        assert_eq!(data.len(), 499);
        assert!(data.iter().all(|r| !r.feasible.is_empty()));
        let svg = figure1_svg(&data);
        assert_eq!(svg, figure1_svg(&figure1_data(1000).unwrap()));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn table_labels() {
        let rows = table1(&[(1000, 2), (1000, 500)]).unwrap();
        assert_eq!(rows[0].lower_decimal, "0.002000000");
        assert_eq!(rows[0].upper_decimal, "0.003003003");
        assert_eq!((rows[0].lower_index, rows[0].upper_index), (Some(5), Some(3)));
        assert_eq!((rows[1].lower_index, rows[1].upper_index), (Some(3), Some(3)));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_bounds_csv(&figure1_data(6).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "c,condition_label,direction,value_exact,value_decimal"
        );
        assert_eq!(text.lines().count(), 1 + 10 * 2);
        assert!(text.contains("2,Bip-C-a1,LOWER,1/3,0.3333333"));
    }

    impl BoundsReport {
        fn family_centers(&self) -> usize {
            match self.family {
                TopologyFamily::CompleteBipartite { centers } => centers,
                _ => 0,
            }
        }
    }
}
