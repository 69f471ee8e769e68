//! Command-line front end: scenario files, the comparison table, game
//! reports and the property suite.
//!
//! Exit codes: 0 success, 1 property violation, 2 configuration error,
//! 3 runtime bound exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::game::{self, GameError, GameOptions, Phase};
use crate::rpredicate::{self, Fault};
use crate::strategies::{
    bribe_sweep, grief_sweep, simulate, HorizonError, MinerPolicy, PartyStrategy, StrategyProfile, SweepCase,
};
use crate::swaps::{Protocol, SwapError, SwapParams, Variant};
use crate::types::Round;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

/// The only config schema version understood.
pub const SCHEMA: u32 = 1;

/// Horizon used by the table and the check suite.
pub const SWEEP_HORIZON: Round = 60;

#[derive(Debug, Parser)]
#[command(name = "fourswap", version, about = "Two-chain atomic swap simulator and game solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for written artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "full")]
    pub phase: Phase,
    /// Where to write the game tree in DOT format.
    #[arg(long, global = true)]
    pub dot: Option<PathBuf>,
    /// Miners per chain.
    #[arg(long, global = true)]
    pub miners: Option<u8>,
    #[arg(long, global = true, hide = true)]
    pub inject_fault: bool,
    /// Comma-separated subset of checks; `none` runs nothing.
    #[arg(long, global = true, hide = true)]
    pub only: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate one scenario and print its trace and utilities.
    Run,
    /// Reproduce the protocol comparison table.
    Table,
    /// Build and solve the game tree.
    Game,
    /// Run the property suite.
    Check,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub horizon: Option<Round>,
    #[serde(default)]
    pub params: SwapParams,
    #[serde(default)]
    pub strategies: StrategyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_variant() -> String {
    "4s".to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub a: String,
    pub b: String,
    pub miner_a: String,
    pub miner_b: String,
    pub miners: u8,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            a: "honest".into(),
            b: "honest".into(),
            miner_a: "greedy-slash".into(),
            miner_b: "greedy-slash".into(),
            miners: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub trace: bool,
    pub utility: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { trace: true, utility: true }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            schema: SCHEMA,
            variant: default_variant(),
            seed: 0,
            horizon: None,
            params: SwapParams::default(),
            strategies: StrategyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub variant: Variant,
    pub params: SwapParams,
    pub profile: StrategyProfile,
    pub horizon: Round,
    pub seed: u64,
    pub output: OutputConfig,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error("runtime bound exceeded: {0}")]
    Bound(String),
    #[error("property violation: {0}")]
    Violation(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Horizon(_) | CliError::Bound(_) => EXIT_BOUND,
            CliError::Violation(_) => EXIT_VIOLATION,
        }
    }
}

impl From<SwapError> for CliError {
    fn from(e: SwapError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::Horizon(h) => CliError::Horizon(h),
            GameError::TooLarge(_) => CliError::Bound(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn resolve(&self) -> Result<Scenario, CliError> {
        if self.schema != SCHEMA {
            return Err(CliError::Config(format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        let variant: Variant = self.variant.parse().map_err(CliError::Config)?;
        self.params.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.strategies;
        let a: PartyStrategy = s.a.parse().map_err(CliError::Config)?;
        let b: PartyStrategy = s.b.parse().map_err(CliError::Config)?;
        let miner_a: MinerPolicy = s.miner_a.parse().map_err(CliError::Config)?;
        let miner_b: MinerPolicy = s.miner_b.parse().map_err(CliError::Config)?;
        if s.miners == 0 {
            return Err(CliError::Config("strategies.miners must be at least 1".into()));
        }
        Ok(Scenario {
            variant,
            horizon: self.horizon.unwrap_or(self.params.t4 + 10),
            params: self.params.clone(),
            profile: StrategyProfile { a, b, miner: [miner_a, miner_b], miners: s.miners },
            seed: self.seed,
            output: self.output.clone(),
        })
    }
}

impl Scenario {
    pub fn protocol(&self) -> Result<Protocol, CliError> {
        Ok(Protocol::new(self.variant, self.params.clone(), self.seed)?)
    }
}

/// Text printed to stdout and files to write into `--out`.
#[derive(Debug, Default)]
pub struct Report {
    pub text: String,
    pub files: Vec<(String, String)>,
    pub violation: Option<String>,
}

pub fn cmd_run(s: &Scenario) -> Result<Report, CliError> {
    let protocol = s.protocol()?;
    let trace = simulate(&protocol, &s.profile, s.horizon)?;
    let mut text = format!(
        "# scenario variant={} seed={} horizon={} a={} b={} miners={}\n",
        s.variant, s.seed, s.horizon, s.profile.a, s.profile.b, s.profile.miners
    );
    if s.output.trace {
        text.push_str("# trace\n");
        for e in &trace.events {
            let _ = writeln!(text, "{e}");
        }
    }
    if s.output.utility {
        text.push_str("# utilities\n");
        text.push_str(&crate::strategies::render_utility(&trace.utility));
    }
    let deviated: Vec<String> = trace.deviated.iter().map(|p| p.to_string()).collect();
    let _ = writeln!(
        text,
        "# summary\nconfirmations={} completed={} completion_round={} capital_lockup={} deviated={}",
        trace.confirmations(),
        if trace.completed { "yes" } else { "no" },
        trace.completion_round().map_or("-".to_string(), |r| r.to_string()),
        trace.capital_lockup,
        if deviated.is_empty() { "-".to_string() } else { deviated.join(",") }
    );
    let files = vec![("trace.log".to_string(), trace.render()), ("summary.txt".to_string(), text.clone())];
    Ok(Report { text, files, violation: None })
}

/// One measured row of the comparison table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub variant: Variant,
    /// Most on-chain transactions over the honest run and every abandonment.
    pub txns: usize,
    /// Every abandonment after the first principal lock costs the abandoner.
    pub griefing_resistant: bool,
    /// Every refund bribe leaves the briber worse off.
    pub bribery_safe: bool,
    pub honest_rounds: Option<Round>,
    pub cases: usize,
}

pub fn table_row(variant: Variant, params: &SwapParams, seed: u64) -> Result<TableRow, CliError> {
    let p = Protocol::new(variant, params.clone(), seed)?;
    let (honest, cases) = grief_sweep(&p, SWEEP_HORIZON)?;
    let txns = cases.iter().map(|c| c.confirmations).chain([honest.confirmations()]).max().unwrap_or(0);
    let relevant: Vec<&SweepCase> = cases.iter().filter(|c| c.deviated && c.after_lock).collect();
    let bribes = bribe_sweep(&p, SWEEP_HORIZON)?;
    Ok(TableRow {
        variant,
        txns,
        griefing_resistant: !relevant.is_empty() && relevant.iter().all(|c| c.penalized()),
        bribery_safe: !bribes.is_empty() && bribes.iter().all(|c| c.penalized()),
        honest_rounds: honest.completion_round(),
        cases: cases.len() + bribes.len(),
    })
}

pub const TABLE_VARIANTS: [Variant; 4] = [Variant::TierNolan, Variant::Hedged, Variant::GriefFree, Variant::FourSwap];

pub fn table_rows(params: &SwapParams, seed: u64) -> Result<Vec<TableRow>, CliError> {
    TABLE_VARIANTS.iter().map(|&v| table_row(v, params, seed)).collect()
}

pub fn render_table(rows: &[TableRow]) -> String {
    let yes = |b: bool| if b { "Yes" } else { "No" };
    let mut out = format!("{:<12} {:>5} {:<9} {:<8} {:>13}\n", "protocol", "txns", "griefing", "bribery", "honest_rounds");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:<9} {:<8} {:>13}",
            r.variant.display_name(),
            r.txns,
            yes(r.griefing_resistant),
            yes(r.bribery_safe),
            r.honest_rounds.map_or("-".to_string(), |x| x.to_string())
        );
    }
    out
}

pub fn cmd_table(s: &Scenario) -> Result<Report, CliError> {
    let rows = table_rows(&s.params, s.seed)?;
    let text = render_table(&rows);
    Ok(Report { files: vec![("table.txt".into(), text.clone())], text, violation: None })
}

pub fn cmd_game(s: &Scenario, phase: Phase, miners: u8) -> Result<Report, CliError> {
    let protocol = s.protocol()?;
    let opts = GameOptions { phase, miners, ..GameOptions::default() };
    let tree = game::build_tree(&protocol, &opts)?;
    let sol = game::backward_induction(&tree);
    let mut text = game::render_report(&tree, &sol);
    let GameNodeWorld(confirmed) = GameNodeWorld::of(&tree, sol.leaf);
    let _ = writeln!(text, "confirmed: {}", confirmed.join(", "));
    let yes = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(text, "SPNE verified: {}", yes(game::verify_spne(&tree, &sol.choice)));
    let _ = writeln!(text, "SPNE = honest path: {}", yes(game::matches_honest(&protocol, &tree, &sol)));
    let mut files = vec![("game_profile.tsv".to_string(), game::profile_table(&tree, &sol)), ("game_report.txt".to_string(), text.clone())];
    files.push(("game.dot".to_string(), game::export_dot(&tree, Some(&sol))));
    Ok(Report { text, files, violation: None })
}

/// Labels of the swap transactions confirmed in a leaf's world.
struct GameNodeWorld(Vec<String>);

impl GameNodeWorld {
    fn of(tree: &game::GameTree, leaf: game::NodeId) -> Self {
        let game::GameNode::Leaf { world, .. } = tree.node(leaf) else { return GameNodeWorld(Vec::new()) };
        let mut out = Vec::new();
        for chain in crate::types::Chain::BOTH {
            for (_, tx) in &world.chain(chain).confirmed {
                if tx.label != "genesis" {
                    out.push(tx.label.clone());
                }
            }
        }
        GameNodeWorld(out)
    }
}

pub const CHECKS: [&str; 5] = ["rpredicate", "slashing", "multi-miner", "grief", "bribe"];

/// Runs the selected property checks; `fault` corrupts the lock used by the
/// predicate oracle.
pub fn cmd_check(s: &Scenario, only: Option<&str>, fault: bool) -> Result<Report, CliError> {
    let selected: Vec<&str> = match only.map(str::trim) {
        None => CHECKS.to_vec(),
        Some("" | "none") => Vec::new(),
        Some(list) => {
            let names: Vec<&str> = list.split(',').map(str::trim).collect();
            if let Some(bad) = names.iter().find(|n| !CHECKS.contains(n)) {
                return Err(CliError::Config(format!("unknown check `{bad}` (expected one of {})", CHECKS.join(", "))));
            }
            CHECKS.iter().copied().filter(|c| names.contains(c)).collect()
        }
    };
    let mut text = String::new();
    let mut failures = Vec::new();
    let mut total = 0usize;
    let params = s.params.clone();
    let protocol = Protocol::new(Variant::FourSwap, params.clone(), s.seed)?;
    for check in &selected {
        let (cases, problem) = match *check {
            "rpredicate" => {
                let report = rpredicate::oracle_equivalence(&protocol, fault.then_some(Fault::DropBrFromClaimB));
                let first = report.disagreements.first().map(|d| {
                    format!("{} {} {}: predicate={} evaluator={}", d.flags, d.party, d.path, d.predicate, d.evaluator)
                });
                (report.cases, first)
            }
            "slashing" => {
                let tree = game::build_tree(&protocol, &GameOptions { prune_slash: false, ..GameOptions::default() })?;
                let v = game::check_slashing_dominance(&tree);
                (tree.decision_count(), v.first().map(|x| x.to_string()))
            }
            "multi-miner" => {
                let mut pairs = 0;
                let mut problem = None;
                for n in [2, 3] {
                    let r = game::multi_miner_equivalence(&protocol, &GameOptions::default(), n)?;
                    pairs += r.leaf_pairs;
                    if !r.ok() && problem.is_none() {
                        problem = Some(format!("{n} miners: {}", r.mismatches.first().cloned().unwrap_or("induced paths differ".into())));
                    }
                }
                (pairs, problem)
            }
            "grief" => {
                let (_, cases) = grief_sweep(&protocol, SWEEP_HORIZON)?;
                let relevant: Vec<_> = cases.into_iter().filter(|c| c.deviated && c.after_lock).collect();
                let bad = relevant.iter().find(|c| !c.penalized()).map(describe_case);
                (relevant.len(), bad)
            }
            _ => {
                let cases = bribe_sweep(&protocol, SWEEP_HORIZON)?;
                let bad = cases.iter().find(|c| !c.penalized()).map(describe_case);
                (cases.len(), bad)
            }
        };
        total += cases;
        match problem {
            None => {
                let _ = writeln!(text, "check {check}: PASS ({cases} cases)");
            }
            Some(p) => {
                let _ = writeln!(text, "check {check}: FAIL ({cases} cases) {p}");
                failures.push(format!("{check}: {p}"));
            }
        }
    }
    if total == 0 {
        text.push_str("warning: 0 cases checked\n");
    }
    let violation = (!failures.is_empty()).then(|| failures.join("; "));
    Ok(Report { files: vec![("check.txt".into(), text.clone())], text, violation })
}

fn describe_case(c: &SweepCase) -> String {
    format!("{} {}: utility {} vs honest {}", c.party, c.strategy, c.utility, c.honest_utility)
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.miners {
        config.strategies.miners = n;
    }
    let scenario = config.resolve()?;
    let report = match cli.command {
        Command::Run => cmd_run(&scenario)?,
        Command::Table => cmd_table(&scenario)?,
        Command::Game => {
            let report = cmd_game(&scenario, cli.phase, scenario.profile.miners)?;
            if let Some(path) = &cli.dot {
                let dot = &report.files.iter().find(|(n, _)| n == "game.dot").expect("dot is rendered").1;
                std::fs::write(path, dot).map_err(|source| CliError::Io { path: path.clone(), source })?;
            }
            report
        }
        Command::Check => cmd_check(&scenario, cli.only.as_deref(), cli.inject_fault)?,
    };
    if let Some(dir) = &cli.out {
        write_files(dir, &report.files)?;
    }
    Ok(report)
}

/// Parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(report) => {
            let _ = stdout.write_all(report.text.as_bytes());
            match report.violation {
                Some(v) => {
                    let _ = writeln!(stderr, "property violation: {v}");
                    EXIT_VIOLATION
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("fourswap").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn config_defaults_and_overrides() {
        let c = ScenarioConfig::parse("schema = 1\nvariant = \"tn\"\n[params]\npremium_b = 20\n[strategies]\nb = \"abandon-after:2\"\n").unwrap();
        let s = c.resolve().unwrap();
        assert_eq!(s.variant, Variant::TierNolan);
        assert_eq!(s.params.premium_b, 20);
        assert_eq!(s.profile.b, PartyStrategy::AbandonAfter(2));
        assert_eq!(s.horizon, 50);
    }

    #[test]
    fn config_errors() {
        assert!(ScenarioConfig::parse("variant = \"4s\"").is_err());
        assert!(ScenarioConfig::parse("schema = 1\ncolour = 3").is_err());
        let bad_schema = ScenarioConfig::parse("schema = 2").unwrap();
        assert_eq!(bad_schema.resolve().unwrap_err().exit_code(), EXIT_CONFIG);
        let bad_params = ScenarioConfig::parse("schema = 1\n[params]\npremium_a = 50\n").unwrap();
        assert_eq!(bad_params.resolve().unwrap_err().exit_code(), EXIT_CONFIG);
        let bad_strategy = ScenarioConfig::parse("schema = 1\n[strategies]\na = \"sneaky\"\n").unwrap();
        assert!(bad_strategy.resolve().is_err());
    }

    #[test]
    fn honest_run_summary() {
        let (code, out, _) = run_args(&["run"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("confirmations=4 completed=yes completion_round=4"), "{out}");
    }

    #[test]
    fn unknown_command_is_config_error() {
        assert_eq!(run_args(&["fly"]).0, EXIT_CONFIG);
        assert_eq!(run_args(&["game", "--phase", "half"]).0, EXIT_CONFIG);
    }

    #[test]
    fn empty_check_warns() {
        let (code, out, _) = run_args(&["check", "--only", "none"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("0 cases"));
    }

    #[test]
    fn faulty_predicate_check_fails() {
        let (code, out, err) = run_args(&["check", "--only", "rpredicate", "--inject-fault"]);
        assert_eq!(code, EXIT_VIOLATION);
        assert!(out.contains("check rpredicate: FAIL"));
        assert!(err.contains("claim_B-A"), "{err}");
    }
}
