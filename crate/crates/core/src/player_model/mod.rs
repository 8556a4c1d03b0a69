//! Player trace recording and next-action prediction.

mod classifier;
mod model;

use serde::{Deserialize, Serialize};

pub use classifier::{Classifier, ClassifierKind, DecisionTree, KNearest, Label, Node};
pub use model::{evaluate_configs, predict_next, train, Candidate, CandidateScore, Evaluation, PredictorModel};

pub use crate::engine::FeatureConfig;
use crate::engine::{ActionKind, PerAction};
use crate::error::{Error, Result};
use crate::grid::CellPoint;
use crate::regions::{RegionId, RegionSet};
use crate::scalar::Scalar;

/// One recorded player action. Serialized as `{tick, kind, x, y, sv}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TraceEntry<F> {
    pub tick: u64,
    pub kind: ActionKind,
    #[serde(flatten)]
    pub point: CellPoint,
    /// Full state vector captured when the action started.
    pub sv: Vec<F>,
}

/// Append-only, tick-ordered record of player actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Trace<F> {
    entries: Vec<TraceEntry<F>>,
}

impl<F> Default for Trace<F> {
    fn default() -> Self {
        Self { entries: Vec::new() }
    }
}

impl<F: Scalar> Trace<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, sv: Vec<F>, kind: ActionKind, point: CellPoint, tick: u64) -> Result<()> {
        self.push(TraceEntry { tick, kind, point, sv })
    }

    pub fn push(&mut self, entry: TraceEntry<F>) -> Result<()> {
        if entry.kind == ActionKind::Idle {
            return Err(Error::Domain("idle actions are never recorded".into()));
        }
        if let Some(last) = self.entries.last() {
            if entry.tick <= last.tick {
                return Err(Error::Domain(format!("tick {} not after previous tick {}", entry.tick, last.tick)));
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TraceEntry<F>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The first `n` entries.
    pub fn prefix(&self, n: usize) -> Self {
        Self { entries: self.entries[..n.min(self.entries.len())].to_vec() }
    }

    pub fn contains_kind(&self, kind: ActionKind) -> bool {
        self.entries.iter().any(|e| e.kind == kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = ActionKind> + '_ {
        self.entries.iter().map(|e| e.kind)
    }
}

/// Distinct (kind, region) pairs in first-occurrence order, with regions
/// looked up in the current partition.
pub fn seen_pairs<F: Scalar>(trace: &Trace<F>, rs: &RegionSet) -> Result<Vec<(ActionKind, RegionId)>> {
    let mut out: Vec<(ActionKind, RegionId)> = Vec::new();
    for e in trace.entries() {
        let pair = (e.kind, rs.lookup(e.point)?);
        if !out.contains(&pair) {
            out.push(pair);
        }
    }
    Ok(out)
}

/// Non-idle kinds the player has never performed, in declaration order.
pub fn unseen_actions<F: Scalar>(trace: &Trace<F>) -> Vec<ActionKind> {
    ActionKind::ACTIONS.into_iter().filter(|&k| !trace.contains_kind(k)).collect()
}

/// Normalized frequency of each non-idle action kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionHistogram(pub PerAction<f64>);

impl ActionHistogram {
    pub fn get(&self, kind: ActionKind) -> f64 {
        self.0.get(kind)
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        ActionKind::ACTIONS.iter().map(|&k| (self.get(k) - other.get(k)).abs()).sum()
    }

    pub fn support(&self) -> Vec<ActionKind> {
        ActionKind::ACTIONS.into_iter().filter(|&k| self.get(k) > 0.0).collect()
    }
}

/// Histogram of an action log. `Idle` entries are ignored.
pub fn action_distribution<I: IntoIterator<Item = ActionKind>>(kinds: I) -> Result<ActionHistogram> {
    let mut counts = [0u64; 4];
    for k in kinds {
        if k != ActionKind::Idle {
            counts[k.index()] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("no actions to summarize".into()));
    }
    let f = |i: usize| counts[i] as f64 / total as f64;
    Ok(ActionHistogram(PerAction { build_tower: f(0), build_wall: f(1), repair: f(2), upgrade_tower: f(3) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(tick: u64, kind: ActionKind, x: u32, y: u32) -> TraceEntry<f64> {
        TraceEntry { tick, kind, point: CellPoint::new(x, y), sv: vec![tick as f64] }
    }

    #[test]
    fn record_enforces_order_and_kind() {
        let mut t = Trace::new();
        t.push(entry(5, ActionKind::BuildTower, 1, 1)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(matches!(t.push(entry(5, ActionKind::BuildWall, 1, 1)), Err(Error::Domain(_))));
        assert!(matches!(t.push(entry(9, ActionKind::Idle, 1, 1)), Err(Error::Domain(_))));
        t.push(entry(6, ActionKind::BuildWall, 1, 1)).unwrap();
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn entry_json_layout() {
        let e = entry(3, ActionKind::Repair, 4, 5);
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"tick":3,"kind":"Repair","x":4,"y":5,"sv":[3.0]}"#);
    }

    #[test]
    fn seen_pairs_follow_current_regions() {
        let mut rs = RegionSet::new(40, 24).unwrap();
        let mut t = Trace::new();
        t.push(entry(1, ActionKind::BuildTower, 2, 2)).unwrap();
        t.push(entry(2, ActionKind::BuildTower, 30, 2)).unwrap();
        assert!(seen_pairs(&Trace::<f64>::new(), &rs).unwrap().is_empty());
        // both points share the single region
        assert_eq!(seen_pairs(&t, &rs).unwrap(), vec![(ActionKind::BuildTower, RegionId(0))]);
        rs.record_action_point(CellPoint::new(2, 2)).unwrap();
        assert_eq!(
            seen_pairs(&t, &rs).unwrap(),
            vec![(ActionKind::BuildTower, RegionId(0)), (ActionKind::BuildTower, RegionId(1))]
        );
    }

    #[test]
    fn unseen_sets() {
        let mut t = Trace::new();
        assert_eq!(unseen_actions(&t), ActionKind::ACTIONS.to_vec());
        t.push(entry(1, ActionKind::BuildTower, 0, 0)).unwrap();
        assert_eq!(unseen_actions(&t), vec![ActionKind::BuildWall, ActionKind::Repair, ActionKind::UpgradeTower]);
        for (i, k) in ActionKind::ACTIONS.into_iter().enumerate() {
            t.push(entry(2 + i as u64, k, 0, 0)).unwrap();
        }
        assert!(unseen_actions(&t).is_empty());
    }

    #[test]
    fn distribution() {
        use ActionKind::*;
        let h = action_distribution([BuildTower, BuildTower, BuildTower, Repair]).unwrap();
        assert_eq!(h.get(BuildTower), 0.75);
        assert_eq!(h.get(Repair), 0.25);
        assert_eq!(h.l1_distance(&h), 0.0);
        let u = action_distribution(ActionKind::ACTIONS).unwrap();
        assert!(ActionKind::ACTIONS.iter().all(|&k| u.get(k) == 0.25));
        assert!(action_distribution([]).is_err());
        assert!(action_distribution([Idle]).is_err());
    }
}
