//! Command-line front end.
//!
//! Exit status: 0 on success, 2 on usage or precondition errors, 1 when a
//! computation is refused (for example an exhaustive search above its limit).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analytic::{self, BoundsReport, Table1Row, PAPER_TABLE1, TABLE_SIG_DIGITS};
use crate::cost::{all_node_costs, social_cost_from, write_costs_csv};
use crate::equilibrium::{
    self, best_response_dynamics, check_nash_exhaustive, check_nash_restricted, EquilibriumError, ExhaustiveConfig,
};
use crate::feegame::{self, FeeAssignment};
use crate::model::{
    homogeneous_scenario, FeePolicy, GameParams, PaymentScenario, ProfileDocument, ScenarioDocument, StrategyProfile,
};
use crate::rational::{self, parse_rational, Rational};
use crate::topology::{identify, TopologyFamily};

#[derive(Debug, Parser)]
#[command(
    name = "channelgame",
    version,
    about = "Payment-channel network creation game analyzer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exhaustive,
    Restricted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Paper,
}

fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn pairs_arg(s: &str) -> Result<(usize, usize), String> {
    let (n, c) = s.split_once(':').ok_or_else(|| format!("expected N:c, got `{s}`"))?;
    Ok((
        n.trim().parse().map_err(|_| format!("bad node count `{n}`"))?,
        c.trim().parse().map_err(|_| format!("bad center count `{c}`"))?,
    ))
}

#[derive(Debug, Args)]
pub struct GameArgs {
    /// On-chain fee F_B (money units, `p/q` or decimal).
    #[arg(long, default_value = "1", value_parser = rational_arg)]
    pub blockchain_fee: Rational,
    /// Payments per ordered pair.
    #[arg(long, default_value_t = 1)]
    pub k: u64,
}

#[derive(Debug, Args)]
pub struct FeeArgs {
    /// Uniform forwarding fee f0 (money units).
    #[arg(long, value_parser = rational_arg, conflicts_with = "fees")]
    pub fee: Option<Rational>,
    /// Per-node fee document `{"fees": [...]}`.
    #[arg(long)]
    pub fees: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form equilibrium fee bounds of a named topology.
    Bounds {
        /// path | star | two-star | bipartite | bipartite:<c> | clique
        #[arg(long)]
        family: String,
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        centers: Option<usize>,
        /// Fee for the path verdict.
        #[arg(long, value_parser = rational_arg)]
        fee: Option<Rational>,
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Bipartite bound table.
    Table1 {
        #[arg(long, value_enum, conflicts_with = "pairs")]
        preset: Option<Preset>,
        /// Comma-separated N:c pairs.
        #[arg(long, value_delimiter = ',', value_parser = pairs_arg)]
        pairs: Vec<(usize, usize)>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Bipartite band over all c for one N, as SVG plus optional CSV.
    PlotBounds {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-node costs of a profile.
    Cost {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        fee: FeeArgs,
        /// Scenario document `{"demands": [[s, t, count], ...]}`; homogeneous by default.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        precision: u32,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Nash-equilibrium check of a profile.
    Nash {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        fee: FeeArgs,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
        /// Family for the restricted check; recognized from the profile when omitted.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        allow_duplicates: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Round-robin best-response dynamics.
    Dynamics {
        #[arg(long)]
        profile: PathBuf,
        #[command(flatten)]
        fee: FeeArgs,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        max_rounds: usize,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// The fee game on a fixed graph.
    Feegame {
        #[command(subcommand)]
        command: FeegameCommand,
    },
    /// Full profile scan for the duplicate-channel and on-chain properties.
    LemmaScan {
        #[arg(long)]
        nodes: usize,
        #[arg(long, value_parser = rational_arg)]
        fee: Rational,
        #[command(flatten)]
        game: GameArgs,
        /// Maximum channel multiplicity (2 allowed up to 4 nodes).
        #[arg(long)]
        multiplicity: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum FeegameCommand {
    /// Two free disjoint paths for every indirect pair?
    Lemma3 {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        fees: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Free-fee verdict for the complete bipartite graph.
    Bipartite {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        centers: usize,
        #[command(flatten)]
        fee: FeeArgs,
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Star fee just below its upper bound.
    StarFee {
        #[arg(long)]
        nodes: usize,
        #[arg(long, value_parser = rational_arg)]
        epsilon: Rational,
        #[command(flatten)]
        game: GameArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

/// Error carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let error = e.into();
        let refused = error.chain().any(|cause| {
            matches!(
                cause.downcast_ref::<EquilibriumError>(),
                Some(
                    EquilibriumError::OverLimit { .. }
                        | EquilibriumError::ScanLimit { .. }
                        | EquilibriumError::ScaleOverflow
                )
            )
        });
        Self {
            code: if refused { 1 } else { 2 },
            error,
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {:#}", e.error);
            e.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Bounds {
            family,
            nodes,
            centers,
            fee,
            game,
            format,
        } => bounds(&family, nodes, centers, fee, &game, format, out),
        Command::Table1 { preset, pairs, format } => {
            let pairs = match (preset, pairs.is_empty()) {
                (Some(Preset::Paper), _) | (None, true) => PAPER_TABLE1.to_vec(),
                (None, false) => pairs,
            };
            let rows = analytic::table1(&pairs)?;
            print_table1(&rows, format, out)
        }
        Command::PlotBounds { nodes, output, csv } => {
            let data = analytic::figure1_data(nodes)?;
            fs::write(&output, analytic::figure1_svg(&data))
                .with_context(|| format!("writing {}", output.display()))?;
            if let Some(path) = csv {
                let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
                analytic::write_bounds_csv(&data, file)?;
            }
            let empty = data.iter().filter(|r| r.feasible.is_empty()).count();
            writeln!(
                out,
                "wrote {} ({} values of c, {} with an empty band)",
                output.display(),
                data.len(),
                empty
            )?;
            Ok(())
        }
        Command::Cost {
            profile,
            fee,
            scenario,
            precision,
            format,
        } => {
            let (params, profile, policy, scenario) = load(&profile, &fee, scenario.as_deref())?;
            let costs = all_node_costs(&profile, &policy, &params, &scenario)?;
            let social = social_cost_from(&costs, &profile, &params)?;
            match format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&json!({"costs": costs, "social": social}))?
                )?,
                Format::Csv => write_costs_csv(&costs, precision, &mut *out)?,
                Format::Human => {
                    writeln!(
                        out,
                        "{:>4}  {:>14} {:>14} {:>14} {:>14} {:>14}",
                        "node", "channels", "on-chain", "sending", "revenue", "total"
                    )?;
                    for c in &costs {
                        writeln!(
                            out,
                            "{:>4}  {:>14} {:>14} {:>14} {:>14} {:>14}",
                            c.node.0,
                            rational::format_fixed(&c.channel_cost, precision),
                            rational::format_fixed(&c.onchain_cost, precision),
                            rational::format_fixed(&c.sending_fees, precision),
                            rational::format_fixed(&c.revenue, precision),
                            rational::format_fixed(&c.total, precision),
                        )?;
                    }
                    writeln!(
                        out,
                        "social cost {} (mu = {}, b = {}), optimum {}, ratio {}",
                        rational::to_ratio_string(&social.social_cost),
                        social.mu,
                        social.b,
                        rational::to_ratio_string(&social.optimum),
                        rational::format_fixed(&social.ratio_to_optimum(), precision)
                    )?;
                }
            }
            Ok(())
        }
        Command::Nash {
            profile,
            fee,
            scenario,
            mode,
            family,
            allow_duplicates,
            format,
        } => {
            let (params, profile, policy, scenario) = load(&profile, &fee, scenario.as_deref())?;
            let text = match mode {
                Mode::Exhaustive => {
                    let config = ExhaustiveConfig {
                        allow_duplicates,
                        ..ExhaustiveConfig::from_env()
                    };
                    let v = check_nash_exhaustive(&profile, &policy, &params, &scenario, &config)?;
                    match format {
                        Format::Human => human_verdict(&v, None),
                        _ => v.to_json(),
                    }
                }
                Mode::Restricted => {
                    let family = match family {
                        Some(f) => parse_family(&f, None)?,
                        None => {
                            identify(&profile).ok_or_else(|| anyhow!("profile is not a named family; pass --family"))?
                        }
                    };
                    let v = check_nash_restricted(&profile, &policy, &params, &scenario, family)?;
                    match format {
                        Format::Human => human_verdict(&v.verdict, v.deviation.as_deref()),
                        _ => serde_json::to_string(&v)?,
                    }
                }
            };
            writeln!(out, "{text}")?;
            Ok(())
        }
        Command::Dynamics {
            profile,
            fee,
            scenario,
            max_rounds,
            format,
        } => {
            let (params, profile, policy, scenario) = load(&profile, &fee, scenario.as_deref())?;
            let config = ExhaustiveConfig::from_env();
            let trace = best_response_dynamics(&profile, &policy, &params, &scenario, max_rounds, &config)?;
            let costs = all_node_costs(trace.last(), &policy, &params, &scenario)?;
            let social = social_cost_from(&costs, trace.last(), &params)?;
            match format {
                Format::Human => {
                    writeln!(
                        out,
                        "{} after {} round(s); final social cost {} (optimum {})",
                        if trace.converged { "converged" } else { "not converged" },
                        trace.rounds,
                        rational::to_ratio_string(&social.social_cost),
                        rational::to_ratio_string(&social.optimum)
                    )?;
                    for (i, p) in trace.profiles.iter().enumerate() {
                        writeln!(out, "round {i}: {}", channel_list(p))?;
                    }
                }
                _ => {
                    let profiles: Vec<_> = trace
                        .profiles
                        .iter()
                        .map(|p| ProfileDocument::new(&params, p, None))
                        .collect();
                    writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "converged": trace.converged,
                            "rounds": trace.rounds,
                            "social_cost": rational::to_ratio_string(&social.social_cost),
                            "profiles": profiles,
                        }))?
                    )?;
                }
            }
            Ok(())
        }
        Command::Feegame { command } => feegame_command(command, out),
        Command::LemmaScan {
            nodes,
            fee,
            game,
            multiplicity,
            format,
        } => {
            let params = GameParams::new(nodes, game.blockchain_fee, game.k)?;
            let policy = FeePolicy::Uniform(fee);
            let report = match multiplicity {
                Some(m) => {
                    equilibrium::lemma_properties_scan_with(&params, &policy, &homogeneous_scenario(&params), m)?
                }
                None => equilibrium::lemma_properties_scan(&params, &policy)?,
            };
            match format {
                Format::Human => {
                    writeln!(
                        out,
                        "{} profiles (multiplicity <= {}): {} strict, {} weak, {} not NE",
                        report.profiles, report.max_multiplicity, report.strict, report.weak, report.not_ne
                    )?;
                    writeln!(
                        out,
                        "strict NE with a duplicate channel: {}; with an on-chain payment: {}",
                        report.strict_with_duplicate, report.strict_with_onchain
                    )?;
                    writeln!(
                        out,
                        "weak NE with a duplicate channel: {}; with an on-chain payment: {}",
                        report.weak_with_duplicate, report.weak_with_onchain
                    )?;
                }
                _ => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
            }
            Ok(())
        }
    }
}

fn feegame_command(command: FeegameCommand, out: &mut dyn Write) -> CliResult {
    match command {
        FeegameCommand::Lemma3 {
            profile,
            fees,
            scenario,
            format,
        } => {
            let doc = read_profile(&profile)?;
            let params = doc.params()?;
            let prof = doc.profile()?;
            let fees = read_fees(&fees)?;
            let scenario = load_scenario(scenario.as_deref(), &params)?;
            let outcome = feegame::lemma3_predicate(&prof, &fees, &scenario, params.k)?;
            match format {
                Format::Human => writeln!(out, "{}", if outcome.holds { "holds" } else { "fails" })?,
                _ => writeln!(out, "{}", serde_json::to_string_pretty(&outcome)?)?,
            }
            Ok(())
        }
        FeegameCommand::Bipartite {
            nodes,
            centers,
            fee,
            game,
            format,
        } => {
            let params = GameParams::new(nodes, game.blockchain_fee, game.k)?;
            let fees = match (fee.fee, fee.fees) {
                (Some(f), _) => FeeAssignment::uniform(nodes, f),
                (None, Some(path)) => read_fees(&path)?,
                (None, None) => FeeAssignment::uniform(nodes, Rational::from_integer(0.into())),
            };
            let v = feegame::bipartite_free_fee_verdict(&params, centers, &fees)?;
            match format {
                Format::Human => writeln!(out, "{}", v.status)?,
                _ => writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?,
            }
            Ok(())
        }
        FeegameCommand::StarFee {
            nodes,
            epsilon,
            game,
            format,
        } => {
            let params = GameParams::new(nodes, game.blockchain_fee, game.k)?;
            let r = feegame::star_fee_equilibrium(&params, &epsilon, &ExhaustiveConfig::from_env())?;
            match format {
                Format::Human => writeln!(
                    out,
                    "fee {} : {}; at bound + epsilon : {}; center revenue {}",
                    rational::to_ratio_string(&r.fee),
                    r.at_fee.status,
                    r.above_bound.status,
                    rational::to_ratio_string(&r.center_revenue)
                )?,
                _ => writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?,
            }
            Ok(())
        }
    }
}

fn parse_family(name: &str, centers: Option<usize>) -> Result<TopologyFamily, CliError> {
    if name == "bipartite" {
        let centers = centers.ok_or_else(|| anyhow!("bipartite needs --centers"))?;
        return Ok(TopologyFamily::CompleteBipartite { centers });
    }
    Ok(name.parse::<TopologyFamily>()?)
}

fn bounds(
    family: &str,
    nodes: usize,
    centers: Option<usize>,
    fee: Option<Rational>,
    game: &GameArgs,
    format: Format,
    out: &mut dyn Write,
) -> CliResult {
    let family = parse_family(family, centers)?;
    let params = GameParams::new(nodes, game.blockchain_fee.clone(), game.k)?;
    let Some(report) = analytic::family_bounds(&params, family)? else {
        let fee = fee.ok_or_else(|| anyhow!("the path verdict needs --fee"))?;
        let v = analytic::path_verdict(&params, &fee)?;
        match format {
            Format::Human => writeln!(out, "{}", human_verdict(&v, None))?,
            _ => writeln!(out, "{}", v.to_json())?,
        }
        return Ok(());
    };
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Csv => analytic::write_bounds_csv(std::slice::from_ref(&report), &mut *out)?,
        Format::Human => print_bounds(&report, &params, out)?,
    }
    Ok(())
}

fn sig(x: &Rational) -> String {
    rational::format_significant(x, TABLE_SIG_DIGITS)
}

fn print_bounds(report: &BoundsReport, params: &GameParams, out: &mut dyn Write) -> CliResult {
    writeln!(
        out,
        "{} on {} nodes (bounds in units of F_B/k; money = value * F_B/k)",
        report.family, report.n_nodes
    )?;
    writeln!(
        out,
        "{:<20} {:<6} {:>14} {:>14}  exact",
        "condition", "dir", "F_B/k", "money"
    )?;
    for c in &report.conditions {
        writeln!(
            out,
            "{:<20} {:<6} {:>14} {:>14}  {}",
            c.label.as_str(),
            c.direction.as_str(),
            sig(&c.value),
            sig(&c.money(params)),
            rational::to_ratio_string(&c.value)
        )?;
    }
    let describe = |c: &Option<analytic::BoundCondition>| match c {
        Some(c) => format!("{} ({}), money {}", sig(&c.value), c.label, sig(&c.money(params))),
        None => "none".to_string(),
    };
    writeln!(out, "lower {}", describe(&report.active_lower))?;
    writeln!(out, "upper {}", describe(&report.active_upper))?;
    writeln!(
        out,
        "band ({}, {}){}",
        sig(&report.feasible.lower),
        report.feasible.upper.as_ref().map_or("inf".to_string(), sig),
        if report.feasible.is_empty() { " empty" } else { "" }
    )?;
    Ok(())
}

fn print_table1(rows: &[Table1Row], format: Format, out: &mut dyn Write) -> CliResult {
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(rows)?)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([
                "n",
                "c",
                "lower_exact",
                "lower_decimal",
                "upper_exact",
                "upper_decimal",
                "lower_label",
                "upper_label",
                "lower_index",
                "upper_index",
            ])?;
            for r in rows {
                w.write_record([
                    r.n_nodes.to_string(),
                    r.centers.to_string(),
                    rational::to_ratio_string(&r.lower),
                    r.lower_decimal.clone(),
                    rational::to_ratio_string(&r.upper),
                    r.upper_decimal.clone(),
                    r.lower_label.to_string(),
                    r.upper_label.to_string(),
                    r.lower_index.map_or(String::new(), |i| i.to_string()),
                    r.upper_index.map_or(String::new(), |i| i.to_string()),
                ])?;
            }
            w.flush()?;
        }
        Format::Human => {
            writeln!(
                out,
                "{:>7} {:>6} {:>14} {:>14}  {:<18} {:<18} idx",
                "N", "c", "lower", "upper", "active lower", "active upper"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{:>7} {:>6} {:>14} {:>14}  {:<18} {:<18} {}/{}",
                    r.n_nodes,
                    r.centers,
                    r.lower_decimal,
                    r.upper_decimal,
                    r.lower_label.as_str(),
                    r.upper_label.as_str(),
                    r.lower_index.map_or("-".into(), |i| i.to_string()),
                    r.upper_index.map_or("-".into(), |i| i.to_string()),
                )?;
            }
        }
    }
    Ok(())
}

fn human_verdict(v: &equilibrium::EquilibriumVerdict, deviation: Option<&str>) -> String {
    let mut s = format!("{} (ties: {})", v.status, v.ties);
    if let Some(w) = &v.witness {
        let alt: Vec<String> = w.alternative.iter().map(|n| n.0.to_string()).collect();
        s.push_str(&format!(
            "\nnode {} switches to {{{}}}: cost {} -> {}",
            w.node.0,
            alt.join(", "),
            rational::to_ratio_string(&w.old_cost),
            rational::to_ratio_string(&w.new_cost)
        ));
        if let Some(d) = deviation {
            s.push_str(&format!(" ({d})"));
        }
    }
    s
}

fn channel_list(p: &StrategyProfile) -> String {
    let parts: Vec<String> = p
        .channels()
        .iter()
        .map(|c| format!("{}->{}", c.opener.0, c.peer.0))
        .collect();
    if parts.is_empty() {
        "(no channels)".to_string()
    } else {
        parts.join(" ")
    }
}

fn read_profile(path: &Path) -> Result<ProfileDocument, CliError> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ProfileDocument::from_json(&text)?)
}

fn read_fees(path: &Path) -> Result<FeeAssignment, CliError> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FeeAssignment::from_json(&text)?)
}

fn load_scenario(path: Option<&Path>, params: &GameParams) -> Result<PaymentScenario, CliError> {
    match path {
        None => Ok(homogeneous_scenario(params)),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: ScenarioDocument = serde_json::from_str(&text).context("malformed scenario document")?;
            Ok(doc.scenario(params.n_nodes)?)
        }
    }
}

type Loaded = (GameParams, StrategyProfile, FeePolicy, PaymentScenario);

fn load(profile: &Path, fee: &FeeArgs, scenario: Option<&Path>) -> Result<Loaded, CliError> {
    let doc = read_profile(profile)?;
    let params = doc.params()?;
    let prof = doc.profile()?;
    let policy = match (&fee.fee, &fee.fees, &doc.fee_policy) {
        (Some(f), _, _) => FeePolicy::Uniform(f.clone()),
        (None, Some(path), _) => {
            let fees = read_fees(path)?;
            fees.validate(params.n_nodes)?;
            fees.policy()
        }
        (None, None, Some(p)) => p.clone(),
        (None, None, None) => {
            return Err(anyhow!("no fee given: pass --fee or --fees, or set fee_policy in the profile").into())
        }
    };
    policy.validate(params.n_nodes)?;
    crate::model::ensure_valid(&prof, &params)?;
    let scenario = load_scenario(scenario, &params)?;
    Ok((params, prof, policy, scenario))
}
