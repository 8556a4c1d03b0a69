use serde::{Deserialize, Serialize};

use super::classifier::{Classifier, ClassifierKind};
use super::Trace;
use crate::engine::{ActionKind, FeatureConfig};
use crate::error::{Error, Result};
use crate::regions::{RegionId, RegionSet};
use crate::scalar::Scalar;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Two classifiers over the same features: one for the next action kind,
/// one for the region it will happen in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct PredictorModel<F> {
    pub format_version: u32,
    pub classifier: ClassifierKind,
    pub feature_config: FeatureConfig,
    pub trained_at_tick: u64,
    pub trained_on: usize,
    pub kind_head: Classifier<F, ActionKind>,
    pub region_head: Classifier<F, RegionId>,
}

impl<F: Scalar> PredictorModel<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format {}", m.format_version)));
        }
        Ok(m)
    }
}

/// Fits both heads. Region labels come from looking up each stored point in
/// `rs`, the partition as it is now.
pub fn train<F: Scalar>(
    trace: &Trace<F>,
    rs: &RegionSet,
    kind: ClassifierKind,
    fc: &FeatureConfig,
) -> Result<PredictorModel<F>> {
    if trace.is_empty() {
        return Err(Error::InsufficientData("cannot train on an empty trace".into()));
    }
    let x: Vec<Vec<F>> = trace.entries().iter().map(|e| e.sv.clone()).collect();
    if x.iter().any(|row| fc.indices().iter().any(|&i| i >= row.len())) {
        return Err(Error::Config("feature selection exceeds stored vector length".into()));
    }
    let kinds: Vec<ActionKind> = trace.kinds().collect();
    let regions: Vec<RegionId> = trace.entries().iter().map(|e| rs.lookup(e.point)).collect::<Result<_>>()?;
    Ok(PredictorModel {
        format_version: MODEL_FORMAT_VERSION,
        classifier: kind,
        feature_config: fc.clone(),
        trained_at_tick: trace.entries().last().map_or(0, |e| e.tick),
        trained_on: trace.len(),
        kind_head: Classifier::fit(kind, &x, &kinds, fc.indices())?,
        region_head: Classifier::fit(kind, &x, &regions, fc.indices())?,
    })
}

/// Predicted next (kind, region) for a full state vector.
pub fn predict_next<F: Scalar>(model: &PredictorModel<F>, sv: &[F]) -> (ActionKind, RegionId) {
    (model.kind_head.predict(sv), model.region_head.predict(sv))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub features: FeatureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate: Candidate,
    pub window_accuracies: Vec<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub best: usize,
    pub table: Vec<CandidateScore>,
}

impl Evaluation {
    pub fn winner(&self) -> &CandidateScore {
        &self.table[self.best]
    }
}

/// Train-end and test-end fractions (percent) of the forward-chaining windows.
const WINDOWS: [usize; 3] = [50, 65, 80];
const TEST_PCT: usize = 15;

/// `(train_end, test_end)` index pairs for a trace of length `n`.
pub(crate) fn forward_windows(n: usize) -> Vec<(usize, usize)> {
    let test_len = (n * TEST_PCT / 100).max(1);
    WINDOWS
        .iter()
        .map(|p| {
            let train_end = (n * p / 100).max(1);
            (train_end, (train_end + test_len).min(n))
        })
        .collect()
}

/// Scores each candidate by kind-prediction accuracy averaged over three
/// expanding forward-chained windows; the best is the first maximum.
pub fn evaluate_configs<F: Scalar>(trace: &Trace<F>, candidates: &[Candidate]) -> Result<Evaluation> {
    if trace.len() < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 entries, have {}", trace.len())));
    }
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to evaluate".into()));
    }
    let x: Vec<Vec<F>> = trace.entries().iter().map(|e| e.sv.clone()).collect();
    let y: Vec<ActionKind> = trace.kinds().collect();
    let windows = forward_windows(trace.len());
    let mut table = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let mut accs = Vec::with_capacity(windows.len());
        for &(train_end, test_end) in &windows {
            let clf = Classifier::fit(cand.classifier, &x[..train_end], &y[..train_end], cand.features.indices())?;
            let correct = (train_end..test_end).filter(|&i| clf.predict(&x[i]) == y[i]).count();
            accs.push(correct as f64 / (test_end - train_end) as f64);
        }
        let accuracy = accs.iter().sum::<f64>() / accs.len() as f64;
        table.push(CandidateScore { candidate: cand.clone(), window_accuracies: accs, accuracy });
    }
    let mut best = 0;
    for (i, row) in table.iter().enumerate() {
        if row.accuracy > table[best].accuracy {
            best = i;
        }
    }
    Ok(Evaluation { best, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellPoint;
    use crate::player_model::TraceEntry;

    /// BuildWall iff feature 0 < 50, else BuildTower; other features noise.
    pub(crate) fn separable_trace(n: usize) -> Trace<f64> {
        let mut t = Trace::new();
        for i in 0..n {
            let f0 = ((i * 37) % 100) as f64;
            let mut sv = vec![0.0; crate::engine::FEATURE_COUNT];
            sv[0] = f0;
            sv[1] = ((i * 11) % 7) as f64;
            let kind = if f0 < 50.0 { ActionKind::BuildWall } else { ActionKind::BuildTower };
            let x = if kind == ActionKind::BuildWall { 3 } else { 30 };
            t.push(TraceEntry { tick: i as u64 + 1, kind, point: CellPoint::new(x, 5), sv }).unwrap();
        }
        t
    }

    fn tree() -> ClassifierKind {
        ClassifierKind::DecisionTree { max_depth: 8, min_samples_split: 2 }
    }

    #[test]
    fn separable_trace_fits_exactly() {
        let t = separable_trace(200);
        let mut rs = RegionSet::new(40, 24).unwrap();
        rs.record_action_point(CellPoint::new(3, 5)).unwrap();
        let m = train(&t, &rs, tree(), &FeatureConfig::full()).unwrap();
        for e in t.entries() {
            assert_eq!(m.kind_head.predict(&e.sv), e.kind);
        }
        let mut sv = vec![0.0; 10];
        sv[0] = 10.0;
        assert_eq!(predict_next(&m, &sv), (ActionKind::BuildWall, RegionId(0)));
        sv[0] = 90.0;
        assert_eq!(predict_next(&m, &sv), (ActionKind::BuildTower, RegionId(1)));
    }

    #[test]
    fn single_entry_predicts_itself() {
        let mut t = Trace::new();
        t.record(vec![1.0; 10], ActionKind::Repair, CellPoint::new(7, 7), 4).unwrap();
        let rs = RegionSet::new(40, 24).unwrap();
        for kind in [tree(), ClassifierKind::KNearest { k: 3 }, ClassifierKind::MajorityClass] {
            let m = train(&t, &rs, kind, &FeatureConfig::full()).unwrap();
            assert_eq!(predict_next(&m, &[55.0; 10]), (ActionKind::Repair, RegionId(0)));
        }
    }

    #[test]
    fn empty_trace_is_insufficient() {
        let rs = RegionSet::new(4, 4).unwrap();
        assert!(matches!(
            train(&Trace::<f64>::new(), &rs, tree(), &FeatureConfig::full()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let t = separable_trace(120);
        let rs = RegionSet::replay(40, 24, t.entries().iter().map(|e| e.point)).unwrap();
        let a = train(&t, &rs, tree(), &FeatureConfig::full()).unwrap().to_json();
        let b = train(&t, &rs, tree(), &FeatureConfig::full()).unwrap().to_json();
        assert_eq!(a, b);
        let back = PredictorModel::<f64>::from_json(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }

    #[test]
    fn windows_layout() {
        assert_eq!(forward_windows(100), vec![(50, 65), (65, 80), (80, 95)]);
        assert_eq!(forward_windows(10), vec![(5, 6), (6, 7), (8, 9)]);
    }

    #[test]
    fn tree_beats_majority_on_separable() {
        let t = separable_trace(200);
        let cands = vec![
            Candidate { classifier: ClassifierKind::MajorityClass, features: FeatureConfig::full() },
            Candidate { classifier: tree(), features: FeatureConfig::full() },
        ];
        let ev = evaluate_configs(&t, &cands).unwrap();
        assert_eq!(ev.best, 1);
        assert_eq!(ev.winner().accuracy, 1.0);
        assert_eq!(ev.table.len(), 2);

        let single = evaluate_configs(&t, &cands[..1]).unwrap();
        assert_eq!(single.best, 0);
        assert!((0.0..=1.0).contains(&single.table[0].accuracy));
        assert!(evaluate_configs(&t.prefix(9), &cands).is_err());
    }

    #[test]
    fn ties_go_to_list_order() {
        let t = separable_trace(60);
        let c = Candidate { classifier: tree(), features: FeatureConfig::full() };
        let ev = evaluate_configs(&t, &[c.clone(), c]).unwrap();
        assert_eq!(ev.best, 0);
    }
}
