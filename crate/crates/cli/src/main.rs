//! `comrade`: headless episodes, mode comparisons, classifier evaluation,
//! region replays and the live WebSocket server.
//!
//! Exit status is 0 on success, 2 for configuration and input errors and 3
//! for unparseable files. `COMRADE_LOG` sets the log filter (default `warn`).

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use comrade_core::harness::{self, CompanionMode, PlayerPolicy, Scenario};
use comrade_core::player_model::{evaluate_configs, Candidate};
use comrade_core::{CellPoint, Error, RegionSet, Result};

#[derive(Parser)]
#[command(name = "comrade", version, about = "Complementary companion testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one seeded episode and writes its report.
    Simulate(SimulateArgs),
    /// Runs every mode over seeds 1..=N and prints mean and std per mode.
    Compare(CompareArgs),
    /// Ranks classifier candidates on a recorded trace.
    EvalClassifiers(EvalArgs),
    /// Rebuilds the region partition from a list of action points.
    ReplayRegions(ReplayArgs),
    /// Serves live sessions over WebSocket.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario JSON; defaults apply when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArg {
    fn load(&self) -> Result<Scenario> {
        match &self.scenario {
            Some(p) => Scenario::load(p),
            None => Ok(Scenario::default()),
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    /// turtle, rusher, spreader, feature_driven, or a JSON policy file.
    #[arg(long, default_value = "turtle")]
    player: String,
    /// complementary, random, mimic or none.
    #[arg(long, default_value = "complementary")]
    companion: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    max_ticks: u64,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the player trace as JSON Lines.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Writes every companion decision as JSON Lines.
    #[arg(long)]
    decisions_out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[arg(long, default_value = "turtle")]
    player: String,
    /// Comma-separated companion modes.
    #[arg(long, default_value = "complementary,random,mimic,none", value_delimiter = ',')]
    modes: Vec<String>,
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    #[arg(long, default_value_t = 20_000)]
    max_ticks: u64,
    /// Writes the comparison and every episode report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trace in JSON Lines.
    #[arg(long)]
    trace: PathBuf,
    /// JSON array of candidates, e.g. `[{"classifier":{"type":"majority_class"}}]`.
    #[arg(long)]
    candidates: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Points as a JSON array or JSON Lines of `{"x":..,"y":..}` objects.
    /// A trace file works too.
    #[arg(long)]
    points: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArg,
    /// Overrides the scenario map width.
    #[arg(long)]
    width: Option<u32>,
    /// Overrides the scenario map height.
    #[arg(long)]
    height: Option<u32>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Where disconnected sessions are saved.
    #[arg(long, default_value = "sessions")]
    data_dir: PathBuf,
    /// Companion mode for sessions whose hello does not choose one.
    #[arg(long, default_value = "complementary")]
    mode: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COMRADE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
        Command::EvalClassifiers(a) => eval_classifiers(a),
        Command::ReplayRegions(a) => replay_regions(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("comrade: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => 3,
        _ => 2,
    }
}

fn policy(spec: &str) -> Result<PlayerPolicy> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() });
    }
    PlayerPolicy::parse(spec)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, format!("{text}\n"))?),
        None => emit(text),
    }
}

/// Prints to stdout without panicking when the reader has gone away.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    Ok(writeln!(std::io::stdout().lock(), "{text}")?)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let scenario = a.scenario.load()?;
    let policy = policy(&a.player)?;
    let mode = CompanionMode::parse(&a.companion)?;
    let run = harness::run_episode_full(&scenario, &policy, mode, a.seed, a.max_ticks)?;
    if let Some(p) = &a.trace_out {
        harness::export_trace(p, &run.trace)?;
    }
    if let Some(p) = &a.decisions_out {
        let mut text = String::new();
        for d in &run.decisions {
            text.push_str(&serde_json::to_string(d).expect("decision serializes"));
            text.push('\n');
        }
        fs::write(p, text)?;
    }
    write_or_print(a.out.as_deref(), &run.report.to_json())
}

fn compare(a: CompareArgs) -> Result<()> {
    let scenario = a.scenario.load()?;
    let policy = policy(&a.player)?;
    let modes = a.modes.iter().map(|m| CompanionMode::parse(m.trim())).collect::<Result<Vec<_>>>()?;
    let (cmp, reports) = harness::compare_modes(&scenario, &policy, &modes, a.seeds, a.max_ticks)?;
    use std::fmt::Write;
    let mut table = format!("policy {}, seeds 1..={}, max_ticks {}\n", cmp.policy, cmp.seeds, cmp.max_ticks);
    let _ = writeln!(
        table,
        "{:<14} {:>14} {:>12} {:>14} {:>12}",
        "mode", "survival_mean", "survival_sd", "score_mean", "score_sd"
    );
    for r in &cmp.rows {
        let _ = writeln!(
            table,
            "{:<14} {:>14.1} {:>12.1} {:>14.1} {:>12.1}",
            r.mode.name(),
            r.survival_mean,
            r.survival_std,
            r.score_mean,
            r.score_std
        );
    }
    if modes.contains(&CompanionMode::Complementary) {
        for other in [CompanionMode::Random, CompanionMode::Mimic, CompanionMode::None] {
            if let Some(m) = cmp.survival_margin(CompanionMode::Complementary, other) {
                let _ = writeln!(table, "survival margin complementary - {}: {m:+.1}", other.name());
            }
        }
    }
    emit(table.trim_end())?;
    if let Some(p) = &a.out {
        let doc = serde_json::json!({ "comparison": cmp, "reports": reports });
        fs::write(p, serde_json::to_string_pretty(&doc).expect("comparison serializes"))?;
    }
    Ok(())
}

fn eval_classifiers(a: EvalArgs) -> Result<()> {
    let trace = harness::import_trace(&a.trace)?;
    let text = fs::read_to_string(&a.candidates)?;
    let candidates: Vec<Candidate> =
        serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
    let eval = evaluate_configs(&trace, &candidates)?;
    emit(&serde_json::to_string_pretty(&eval).expect("evaluation serializes"))
}

fn read_points(path: &Path) -> Result<Vec<CellPoint>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() });
    }
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        points.push(serde_json::from_str(line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?);
    }
    Ok(points)
}

fn replay_regions(a: ReplayArgs) -> Result<()> {
    let scenario = a.scenario.load()?;
    let width = a.width.unwrap_or(scenario.game.map_width);
    let height = a.height.unwrap_or(scenario.game.map_height);
    let rs = RegionSet::replay(width, height, read_points(&a.points)?)?;
    emit(&rs.dump_json())
}

fn serve(a: ServeArgs) -> Result<()> {
    let scenario = a.scenario.load()?;
    scenario.validate()?;
    let mode = CompanionMode::parse(&a.mode)?;
    let addr: SocketAddr =
        format!("{}:{}", a.host, a.port).parse().map_err(|e| Error::Config(format!("bad address: {e}")))?;
    let cfg = comrade_server::ServerConfig { scenario, mode, data_dir: a.data_dir };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(comrade_server::bind_and_serve(addr, cfg))?;
    Ok(())
}
