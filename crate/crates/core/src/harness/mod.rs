//! Scripted-player episodes, companion mode comparisons and persistence.

mod episode;
mod policy;

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use episode::{CompanionMode, CompanionRng, Decision, DecisionJob, Episode, EpisodeStats, EPISODE_FORMAT_VERSION};
pub use policy::{PlayerPolicy, PolicyRunner, ScriptedAction};

use crate::companion::CompanionConfig;
use crate::engine::GameConfig;
use crate::error::{Error, Result};
use crate::player_model::{action_distribution, ActionHistogram, Trace, TraceEntry};

/// A scenario file: game rules plus companion knobs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub game: GameConfig,
    pub companion: CompanionConfig,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.companion.validate(&self.game)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Short hex digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&json)[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub seed: u64,
    pub policy: String,
    pub mode: CompanionMode,
    pub config_digest: String,
    /// Tick at which the game ended, or the tick cap.
    pub survival_ticks: u64,
    pub game_over: bool,
    pub final_score: i64,
    pub leaks: u32,
    pub kills: u32,
    pub spawned: u64,
    pub live_enemies: u64,
    pub base_health: u32,
    pub player_actions: u64,
    pub companion_actions: u64,
    pub companion_unseen_actions: u64,
    pub player_histogram: Option<ActionHistogram>,
    pub companion_histogram: Option<ActionHistogram>,
    pub histogram_l1: Option<f64>,
    pub decisions: u64,
    pub branch_counts: BTreeMap<String, u64>,
    pub revalidation_failures: u64,
    pub final_state_hash: String,
}

impl EpisodeReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A finished episode with its artifacts.
pub struct EpisodeRun {
    pub report: EpisodeReport,
    pub trace: Trace<f64>,
    pub decisions: Vec<Decision>,
}

pub fn run_episode(
    scenario: &Scenario,
    policy: &PlayerPolicy,
    mode: CompanionMode,
    seed: u64,
    max_ticks: u64,
) -> Result<EpisodeReport> {
    run_episode_full(scenario, policy, mode, seed, max_ticks).map(|r| r.report)
}

pub fn run_episode_full(
    scenario: &Scenario,
    policy: &PlayerPolicy,
    mode: CompanionMode,
    seed: u64,
    max_ticks: u64,
) -> Result<EpisodeRun> {
    let mut ep = Episode::new(Arc::new(scenario.clone()), mode, seed)?;
    let mut runner = PolicyRunner::new(policy.clone());
    let mut player_rng = ChaCha8Rng::seed_from_u64(seed ^ episode::PLAYER_STREAM);
    while ep.state.tick < max_ticks && !ep.state.over {
        for (kind, cell) in runner.next_actions(&ep.state, &mut player_rng) {
            // Scripted actions may be rejected; that is part of the script.
            if let Err(e) = ep.player_action(kind, cell) {
                log::debug!("tick {}: player {kind:?} at {cell:?} rejected: {e}", ep.state.tick);
            }
        }
        ep.tick(true);
    }
    Ok(EpisodeRun { report: report(&ep, policy.name()), trace: ep.trace.clone(), decisions: ep.decision_log.clone() })
}

/// Summarizes an episode in its current state.
pub fn report(ep: &Episode, policy: &str) -> EpisodeReport {
    let s = &ep.state;
    let player_histogram = action_distribution(ep.stats.player_actions.iter().copied()).ok();
    let companion_histogram = action_distribution(ep.stats.companion_actions.iter().copied()).ok();
    let histogram_l1 = match (&player_histogram, &companion_histogram) {
        (Some(p), Some(c)) => Some(p.l1_distance(c)),
        _ => None,
    };
    EpisodeReport {
        seed: ep.seed,
        policy: policy.into(),
        mode: ep.mode,
        config_digest: ep.scenario.digest(),
        survival_ticks: s.tick,
        game_over: s.over,
        final_score: s.score(&s.config.score_weights),
        leaks: s.leaks,
        kills: s.kills,
        spawned: s.spawned as u64,
        live_enemies: s.enemies.len() as u64,
        base_health: s.base_health,
        player_actions: ep.stats.player_actions.len() as u64,
        companion_actions: ep.stats.companion_actions.len() as u64,
        companion_unseen_actions: ep.stats.companion_unseen,
        player_histogram,
        companion_histogram,
        histogram_l1,
        decisions: ep.stats.decisions,
        branch_counts: ep.stats.branch_counts.clone(),
        revalidation_failures: ep.stats.revalidation_failures,
        final_state_hash: format!("{:016x}", s.state_hash()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: CompanionMode,
    pub episodes: usize,
    pub survival_mean: f64,
    pub survival_std: f64,
    pub score_mean: f64,
    pub score_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub policy: String,
    pub seeds: u64,
    pub max_ticks: u64,
    pub rows: Vec<ModeSummary>,
}

impl Comparison {
    pub fn row(&self, mode: CompanionMode) -> Option<&ModeSummary> {
        self.rows.iter().find(|r| r.mode == mode)
    }

    /// Mean survival of `a` minus mean survival of `b`.
    pub fn survival_margin(&self, a: CompanionMode, b: CompanionMode) -> Option<f64> {
        Some(self.row(a)?.survival_mean - self.row(b)?.survival_mean)
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every mode over seeds `1..=n_seeds` and aggregates.
pub fn compare_modes(
    scenario: &Scenario,
    policy: &PlayerPolicy,
    modes: &[CompanionMode],
    n_seeds: u64,
    max_ticks: u64,
) -> Result<(Comparison, Vec<EpisodeReport>)> {
    if n_seeds < 2 {
        return Err(Error::Config("compare needs at least 2 seeds".into()));
    }
    scenario.validate()?;
    let jobs: Vec<(CompanionMode, u64)> = modes.iter().flat_map(|&m| (1..=n_seeds).map(move |s| (m, s))).collect();
    let reports: Vec<EpisodeReport> =
        jobs.par_iter().map(|&(m, s)| run_episode(scenario, policy, m, s, max_ticks)).collect::<Result<_>>()?;
    let rows = modes
        .iter()
        .map(|&mode| {
            let mine: Vec<&EpisodeReport> = reports.iter().filter(|r| r.mode == mode).collect();
            let surv: Vec<f64> = mine.iter().map(|r| r.survival_ticks as f64).collect();
            let score: Vec<f64> = mine.iter().map(|r| r.final_score as f64).collect();
            let (survival_mean, survival_std) = mean_std(&surv);
            let (score_mean, score_std) = mean_std(&score);
            ModeSummary { mode, episodes: mine.len(), survival_mean, survival_std, score_mean, score_std }
        })
        .collect();
    Ok((Comparison { policy: policy.name().into(), seeds: n_seeds, max_ticks, rows }, reports))
}

/// Writes a trace as JSON Lines, one entry per line.
pub fn export_trace(path: &Path, trace: &Trace<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in trace.entries() {
        serde_json::to_writer(&mut out, e).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a JSON Lines trace. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn import_trace(path: &Path) -> Result<Trace<f64>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut trace = Trace::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: TraceEntry<f64> =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        trace.push(entry).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ActionKind;
    use crate::grid::CellPoint;

    fn small_trace(n: usize) -> Trace<f64> {
        let mut t = Trace::new();
        for i in 0..n {
            let k = ActionKind::ACTIONS[i % 4];
            let sv = vec![i as f64 * 0.5, -(i as f64), 1e-7 * i as f64];
            t.record(sv, k, CellPoint::new(i as u32 % 40, i as u32 % 24), i as u64 * 3 + 1).unwrap();
        }
        t
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let t = small_trace(500);
        export_trace(&p, &t).unwrap();
        assert_eq!(import_trace(&p).unwrap(), t);
    }

    #[test]
    fn empty_trace_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(import_trace(&p).unwrap().is_empty());
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        export_trace(&p, &small_trace(5)).unwrap();
        let mut text = std::fs::read_to_string(&p).unwrap();
        text.push_str("{\"tick\":99,\"kind\":\"Repair\",\"x\":1");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(import_trace(&p), Err(Error::Parse { line: 6, .. })));
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn scenario_json_defaults_and_errors() {
        let s = Scenario::from_json("{}").unwrap();
        assert_eq!(s, Scenario::default());
        assert!(matches!(Scenario::from_json("{\"game\":"), Err(Error::Parse { .. })));
        let bad = r#"{"companion":{"p_help":2.0}}"#;
        assert!(matches!(Scenario::from_json(bad), Err(Error::Config(_))));
        assert_eq!(s.digest().len(), 16);
    }

    #[test]
    fn none_mode_has_no_companion_actions() {
        let r = run_episode(&Scenario::default(), &PlayerPolicy::Turtle, CompanionMode::None, 7, 3000).unwrap();
        assert_eq!(r.companion_actions, 0);
        assert_eq!(r.decisions, 0);
        assert_eq!(r.kills as u64 + r.leaks as u64 + r.live_enemies, r.spawned);
    }

    #[test]
    fn compare_aggregates_its_episodes() {
        let sc = Scenario::default();
        let (cmp, reports) = compare_modes(&sc, &PlayerPolicy::Rusher, &[CompanionMode::None], 3, 1500).unwrap();
        let mean = reports.iter().map(|r| r.survival_ticks as f64).sum::<f64>() / 3.0;
        assert_eq!(cmp.rows.len(), 1);
        assert_eq!(cmp.rows[0].survival_mean, mean);
        assert!(compare_modes(&sc, &PlayerPolicy::Rusher, &[CompanionMode::None], 1, 10).is_err());
    }
}
