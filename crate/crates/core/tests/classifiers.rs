use comrade_core::player_model::{evaluate_configs, Candidate, ClassifierKind, DecisionTree, FeatureConfig};
use comrade_core::{ActionKind, CellPoint, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Walks the tree through its JSON form only.
fn walk(node: &Value, x: &[f64]) -> u8 {
    match node["node"].as_str().unwrap() {
        "leaf" => node["label"].as_u64().unwrap() as u8,
        "split" => {
            let f = node["feature"].as_u64().unwrap() as usize;
            let t = node["threshold"].as_f64().unwrap();
            walk(if x[f] < t { &node["left"] } else { &node["right"] }, x)
        }
        other => panic!("unexpected node tag {other}"),
    }
}

#[test]
fn tree_predictions_match_a_walk_of_its_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sample = |rng: &mut ChaCha8Rng| (0..6).map(|_| rng.random_range(-50.0..50.0)).collect::<Vec<f64>>();
    let x: Vec<Vec<f64>> = (0..400).map(|_| sample(&mut rng)).collect();
    // A noisy rule over a few features, so the tree has some depth.
    let y: Vec<u8> = x
        .iter()
        .map(|r| {
            let base = u8::from(r[0] > 5.0) + 2 * u8::from(r[3] + r[1] > 0.0);
            if rng.random_bool(0.1) {
                rng.random_range(0..4)
            } else {
                base
            }
        })
        .collect();
    let tree = DecisionTree::fit(&x, &y, &[0, 1, 2, 3, 4, 5], 6, 2).unwrap();
    assert!(tree.depth() >= 3);
    let json = serde_json::to_value(&tree).unwrap();
    for _ in 0..1000 {
        let q = sample(&mut rng);
        assert_eq!(tree.predict(&q), walk(&json["root"], &q), "at {q:?}");
    }
}

#[test]
fn random_labels_give_sane_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut trace = Trace::new();
    for t in 0..300u64 {
        let sv: Vec<f64> = (0..comrade_core::engine::FEATURE_COUNT).map(|_| rng.random_range(0.0..100.0)).collect();
        let kind = ActionKind::ACTIONS[rng.random_range(0..ActionKind::ACTIONS.len())];
        trace.record(sv, kind, CellPoint::new(rng.random_range(0..40), rng.random_range(0..24)), t + 1).unwrap();
    }
    let candidates = vec![
        Candidate { classifier: ClassifierKind::MajorityClass, features: FeatureConfig::full() },
        Candidate {
            classifier: ClassifierKind::DecisionTree { max_depth: 32, min_samples_split: 2 },
            features: FeatureConfig::full(),
        },
    ];
    let eval = evaluate_configs(&trace, &candidates).unwrap();
    assert_eq!(eval.table.len(), candidates.len());
    assert!(eval.best < candidates.len());
    for row in &eval.table {
        assert!((0.0..=1.0).contains(&row.accuracy));
        assert!(row.window_accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
    }
    // Nothing to learn: a deep tree cannot do much better than chance.
    assert!(eval.table[1].accuracy < 0.6, "{}", eval.table[1].accuracy);
}
