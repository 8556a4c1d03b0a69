use std::sync::Arc;

use comrade_core::harness::{self, CompanionMode, Episode, PlayerPolicy, Scenario};
use comrade_core::{ActionKind, Actor, CellPoint, GameConfig, GameState, Rect, Trace};
use proptest::prelude::*;

/// (tick offset, kind index, x, y) player commands, applied when possible.
type Plan = Vec<(u64, usize, u32, u32)>;

fn plan() -> impl Strategy<Value = Plan> {
    prop::collection::vec((0u64..120, 0usize..4, 0u32..40, 0u32..24), 0..12)
}

/// Runs the plan; `check` sees the state after every tick.
fn play(seed: u64, plan: &Plan, mut check: impl FnMut(&GameState)) -> GameState {
    let mut s = GameState::new(GameConfig::default(), seed).unwrap();
    for &(wait, k, x, y) in plan {
        for _ in 0..wait {
            s.step(1);
            check(&s);
        }
        let kind = ActionKind::ACTIONS[k];
        let rect = Rect::new(x, y, x + 1, y + 1);
        if !s.is_busy(Actor::Player) && s.is_possible(kind, &rect) {
            s.apply_action(Actor::Player, kind, &rect).unwrap();
        }
    }
    for _ in 0..300 {
        s.step(1);
        check(&s);
    }
    s
}

fn quick() -> Scenario {
    let mut sc = Scenario::default();
    sc.companion.intro_threshold = 3;
    sc.companion.retrain_every = 3;
    sc.companion.horizon_ticks = 150;
    sc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn engine_runs_are_reproducible(seed in any::<u64>(), plan in plan()) {
        let a = play(seed, &plan, |_| {});
        let b = play(seed, &plan, |_| {});
        prop_assert_eq!(a.state_hash(), b.state_hash());
        prop_assert_eq!(a.canonical_bytes(), b.canonical_bytes());
    }

    #[test]
    fn enemies_are_conserved(seed in any::<u64>(), plan in plan()) {
        play(seed, &plan, |s| {
            assert_eq!(s.kills as u64 + s.leaks as u64 + s.live_enemies() as u64, s.spawned as u64);
        });
    }

    #[test]
    fn snapshots_resume_identically(seed in any::<u64>(), plan in plan(), cut in 1u64..400) {
        let mut s = play(seed, &plan, |_| {});
        let restored = GameState::restore(&s.snapshot());
        prop_assert_eq!(restored.state_hash(), s.state_hash());
        let mut r = restored;
        s.step(cut);
        r.step(cut);
        prop_assert_eq!(r.state_hash(), s.state_hash());
    }

    #[test]
    fn traces_round_trip_through_jsonl(
        entries in prop::collection::vec((1u64..50, 0usize..4, 0u32..40, 0u32..24, prop::collection::vec(-1e6f64..1e6, comrade_core::engine::FEATURE_COUNT)), 0..40)
    ) {
        let mut trace = Trace::new();
        let mut tick = 0;
        for (gap, k, x, y, sv) in entries {
            tick += gap;
            trace.record(sv, ActionKind::ACTIONS[k], CellPoint::new(x, y), tick).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        harness::export_trace(&path, &trace).unwrap();
        prop_assert_eq!(harness::import_trace(&path).unwrap(), trace);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn episodes_are_reproducible_and_account_for_every_decision(
        seed in 0u64..1000,
        policy in prop::sample::select(vec![PlayerPolicy::Turtle, PlayerPolicy::Rusher, PlayerPolicy::Spreader]),
        mode in prop::sample::select(vec![CompanionMode::Complementary, CompanionMode::Random, CompanionMode::Mimic]),
    ) {
        let sc = quick();
        let a = harness::run_episode(&sc, &policy, mode, seed, 3000).unwrap();
        let b = harness::run_episode(&sc, &policy, mode, seed, 3000).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.branch_counts.values().sum::<u64>(), a.decisions);
        prop_assert_eq!(a.kills as u64 + a.leaks as u64 + a.live_enemies, a.spawned);
    }

    #[test]
    fn saved_episodes_continue_identically(seed in 0u64..1000, cut in 100u64..800) {
        let sc = Arc::new(quick());
        let mut a = Episode::new(sc, CompanionMode::Complementary, seed).unwrap();
        let drive = |ep: &mut Episode, until: u64| {
            while ep.state.tick < until && !ep.state.over {
                if ep.state.tick.is_multiple_of(40) {
                    let y = (ep.state.tick / 40 % 20) as u32 + 2;
                    let _ = ep.player_action(ActionKind::BuildWall, CellPoint::new(3, y));
                }
                ep.tick(true);
            }
        };
        drive(&mut a, cut);
        let mut b = Episode::from_bytes(&a.to_bytes().unwrap()).unwrap();
        drive(&mut a, 1200);
        drive(&mut b, 1200);
        prop_assert_eq!(a.state.state_hash(), b.state.state_hash());
        prop_assert_eq!(a.decision_log.len(), b.decision_log.len());
    }
}
