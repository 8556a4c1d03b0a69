//! Small classifiers over projected feature vectors.

use std::cmp::Ordering;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Label types a classifier can predict.
pub trait Label: Copy + Ord + std::fmt::Debug + Serialize + DeserializeOwned + Send + Sync + 'static {}
impl<T> Label for T where T: Copy + Ord + std::fmt::Debug + Serialize + DeserializeOwned + Send + Sync + 'static {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree { max_depth: usize, min_samples_split: usize },
    KNearest { k: usize },
    MajorityClass,
}

impl Default for ClassifierKind {
    fn default() -> Self {
        ClassifierKind::DecisionTree { max_depth: 8, min_samples_split: 2 }
    }
}

impl ClassifierKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ClassifierKind::DecisionTree { max_depth: 0, .. } => {
                Err(Error::Config("decision tree max_depth must be at least 1".into()))
            }
            ClassifierKind::KNearest { k: 0 } => Err(Error::Config("k must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Majority label; ties go to the label whose latest occurrence is most recent.
pub(crate) fn majority<L: Label>(labels: impl IntoIterator<Item = (usize, L)>) -> Option<L> {
    let mut tally: Vec<(L, usize, usize)> = Vec::new();
    for (pos, l) in labels {
        match tally.iter_mut().find(|t| t.0 == l) {
            Some(t) => {
                t.1 += 1;
                t.2 = t.2.max(pos);
            }
            None => tally.push((l, 1, pos)),
        }
    }
    tally.into_iter().max_by_key(|t| (t.1, t.2)).map(|t| t.0)
}

fn gini<F: Scalar>(counts: &[usize], n: usize) -> F {
    if n == 0 {
        return F::zero();
    }
    let n = F::from_usize(n).unwrap();
    F::one()
        - counts.iter().fold(F::zero(), |acc, &c| {
            let p = F::from_usize(c).unwrap() / n;
            acc + p * p
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<F, L> {
    Leaf {
        label: L,
        samples: usize,
    },
    /// Samples with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: Box<Node<F, L>>,
        right: Box<Node<F, L>>,
    },
}

impl<F: Scalar, L: Label> Node<F, L> {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn features_used(&self, out: &mut Vec<usize>) {
        if let Node::Split { feature, left, right, .. } = self {
            out.push(*feature);
            left.features_used(out);
            right.features_used(out);
        }
    }
}

/// CART tree with Gini impurity and axis-aligned thresholds. Feature indices
/// refer to positions in the full state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<F, L> {
    pub root: Node<F, L>,
}

struct TreeBuilder<'a, F> {
    x: &'a [Vec<F>],
    y: &'a [usize],
    n_classes: usize,
    features: &'a [usize],
    max_depth: usize,
    min_samples_split: usize,
}

impl<F: Scalar> TreeBuilder<'_, F> {
    fn build<L: Label>(&self, idx: Vec<usize>, depth: usize, classes: &[L]) -> Node<F, L> {
        let label = majority(idx.iter().map(|&i| (i, classes[self.y[i]]))).expect("non-empty node");
        let mut counts = vec![0usize; self.n_classes];
        for &i in &idx {
            counts[self.y[i]] += 1;
        }
        let n = idx.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.max_depth || n < self.min_samples_split || pure {
            return Node::Leaf { label, samples: n };
        }
        let parent = gini::<F>(&counts, n);
        let total = F::from_usize(n).unwrap();
        let mut best: Option<(F, usize, F)> = None;
        let mut order = idx.clone();
        for &f in self.features {
            order.sort_by(|&a, &b| self.x[a][f].partial_cmp(&self.x[b][f]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            for k in 0..n - 1 {
                let c = self.y[order[k]];
                left[c] += 1;
                right[c] -= 1;
                let (a, b) = (self.x[order[k]][f], self.x[order[k + 1]][f]);
                if a == b {
                    continue;
                }
                let (nl, nr) = (k + 1, n - k - 1);
                let weighted = (F::from_usize(nl).unwrap() * gini::<F>(&left, nl)
                    + F::from_usize(nr).unwrap() * gini::<F>(&right, nr))
                    / total;
                if best.is_none_or(|(w, _, _)| weighted < w) {
                    let mut thr = a + (b - a) * F::half();
                    if thr <= a {
                        thr = b;
                    }
                    best = Some((weighted, f, thr));
                }
            }
        }
        match best {
            Some((w, feature, threshold)) if w < parent => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[i][feature] < threshold);
                Node::Split {
                    feature,
                    threshold,
                    left: Box::new(self.build(l, depth + 1, classes)),
                    right: Box::new(self.build(r, depth + 1, classes)),
                }
            }
            _ => Node::Leaf { label, samples: n },
        }
    }
}

impl<F: Scalar, L: Label> DecisionTree<F, L> {
    pub fn fit(
        x: &[Vec<F>],
        labels: &[L],
        features: &[usize],
        max_depth: usize,
        min_samples_split: usize,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("cannot fit a tree on zero samples".into()));
        }
        let mut classes: Vec<L> = labels.to_vec();
        classes.sort();
        classes.dedup();
        let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).unwrap()).collect();
        let builder = TreeBuilder {
            x,
            y: &y,
            n_classes: classes.len(),
            features,
            max_depth,
            min_samples_split: min_samples_split.max(2),
        };
        Ok(Self { root: builder.build((0..x.len()).collect(), 0, &classes) })
    }

    pub fn predict(&self, x: &[F]) -> L {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// k-nearest neighbours on min-max normalized features, Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest<F, L> {
    pub k: usize,
    pub features: Vec<usize>,
    pub mins: Vec<F>,
    pub maxs: Vec<F>,
    pub points: Vec<Vec<F>>,
    pub labels: Vec<L>,
}

impl<F: Scalar, L: Label> KNearest<F, L> {
    pub fn fit(x: &[Vec<F>], labels: &[L], features: &[usize], k: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InsufficientData("cannot fit k-NN on zero samples".into()));
        }
        let mut mins = vec![F::infinity(); features.len()];
        let mut maxs = vec![F::neg_infinity(); features.len()];
        for row in x {
            for (j, &f) in features.iter().enumerate() {
                mins[j] = mins[j].min(row[f]);
                maxs[j] = maxs[j].max(row[f]);
            }
        }
        let mut model =
            Self { k, features: features.to_vec(), mins, maxs, points: Vec::new(), labels: labels.to_vec() };
        model.points = x.iter().map(|row| model.normalize(row)).collect();
        Ok(model)
    }

    fn normalize(&self, row: &[F]) -> Vec<F> {
        self.features
            .iter()
            .enumerate()
            .map(|(j, &f)| {
                let span = self.maxs[j] - self.mins[j];
                if span > F::zero() {
                    (row[f] - self.mins[j]) / span
                } else {
                    F::zero()
                }
            })
            .collect()
    }

    pub fn predict(&self, x: &[F]) -> L {
        let q = self.normalize(x);
        let mut dist: Vec<(F, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).fold(F::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b)), i))
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        let mut votes: Vec<(L, usize, usize)> = Vec::new();
        for (rank, &(_, i)) in dist.iter().take(self.k).enumerate() {
            let l = self.labels[i];
            match votes.iter_mut().find(|v| v.0 == l) {
                Some(v) => v.1 += 1,
                None => votes.push((l, 1, rank)),
            }
        }
        votes.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2))).map(|v| v.0).expect("k >= 1")
    }
}

/// A trained classifier of any supported kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classifier<F, L> {
    DecisionTree(DecisionTree<F, L>),
    KNearest(KNearest<F, L>),
    MajorityClass { label: L },
}

impl<F: Scalar, L: Label> Classifier<F, L> {
    /// Fits on full state vectors restricted to `features`.
    pub fn fit(kind: ClassifierKind, x: &[Vec<F>], labels: &[L], features: &[usize]) -> Result<Self> {
        kind.validate()?;
        if x.is_empty() || x.len() != labels.len() {
            return Err(Error::InsufficientData(format!("{} samples, {} labels", x.len(), labels.len())));
        }
        Ok(match kind {
            ClassifierKind::DecisionTree { max_depth, min_samples_split } => {
                Classifier::DecisionTree(DecisionTree::fit(x, labels, features, max_depth, min_samples_split)?)
            }
            ClassifierKind::KNearest { k } => Classifier::KNearest(KNearest::fit(x, labels, features, k)?),
            ClassifierKind::MajorityClass => {
                Classifier::MajorityClass { label: majority(labels.iter().copied().enumerate()).unwrap() }
            }
        })
    }

    pub fn predict(&self, x: &[F]) -> L {
        match self {
            Classifier::DecisionTree(t) => t.predict(x),
            Classifier::KNearest(k) => k.predict(x),
            Classifier::MajorityClass { label } => *label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_values() {
        assert_eq!(gini::<f64>(&[3, 1], 4), 0.375);
        assert_eq!(gini::<f64>(&[4, 0], 4), 0.0);
        assert_eq!(gini::<f64>(&[], 0), 0.0);
    }

    #[test]
    fn majority_prefers_recent_on_tie() {
        assert_eq!(majority([(0, 'a'), (1, 'b')]), Some('b'));
        assert_eq!(majority([(0, 'b'), (1, 'a')]), Some('a'));
        assert_eq!(majority([(0, 'a'), (1, 'a'), (2, 'b')]), Some('a'));
        assert_eq!(majority::<char>([]), None);
    }

    #[test]
    fn tree_separates_threshold() {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let y: Vec<u8> = (0..100).map(|i| u8::from(i >= 50)).collect();
        let t = DecisionTree::fit(&x, &y, &[0, 1], 4, 2).unwrap();
        assert_eq!(t.depth(), 1);
        for (row, l) in x.iter().zip(&y) {
            assert_eq!(t.predict(row), *l);
        }
        match &t.root {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 49.5);
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn tree_respects_depth_and_feature_subset() {
        let x: Vec<Vec<f32>> = (0..64).map(|i| vec![(i % 2) as f32, (i / 2 % 2) as f32, (i / 4) as f32]).collect();
        let y: Vec<u8> = (0..64).map(|i| ((i % 2) ^ (i / 2 % 2)) as u8).collect();
        let t = DecisionTree::fit(&x, &y, &[1, 0], 1, 2).unwrap();
        assert!(t.depth() <= 1);
        let t = DecisionTree::fit(&x, &y, &[2], 5, 2).unwrap();
        let mut used = Vec::new();
        t.root.features_used(&mut used);
        assert!(used.iter().all(|&f| f == 2));
    }

    #[test]
    fn knn_uses_normalized_distance() {
        // feature 1 has a huge range; after normalization both matter equally
        let x = vec![vec![0.0, 0.0], vec![1.0, 1000.0], vec![0.0, 1000.0]];
        let y = vec!['a', 'b', 'c'];
        let m = KNearest::fit(&x, &y, &[0, 1], 1).unwrap();
        assert_eq!(m.predict(&[0.9, 900.0]), 'b');
        assert_eq!(m.predict(&[0.1, 0.0]), 'a');
        let m3 = KNearest::fit(&x, &y, &[0, 1], 3).unwrap();
        // three-way tie on votes: nearest wins
        assert_eq!(m3.predict(&[0.1, 950.0]), 'c');
    }

    #[test]
    fn invalid_kinds() {
        let x = vec![vec![0.0f64]];
        assert!(Classifier::fit(ClassifierKind::KNearest { k: 0 }, &x, &[1u8], &[0]).is_err());
        assert!(Classifier::fit(ClassifierKind::DecisionTree { max_depth: 0, min_samples_split: 2 }, &x, &[1u8], &[0])
            .is_err());
        assert!(Classifier::<f64, u8>::fit(ClassifierKind::MajorityClass, &[], &[], &[0]).is_err());
    }

    #[test]
    fn kind_json_shape() {
        let k: ClassifierKind =
            serde_json::from_str(r#"{"type":"decision_tree","max_depth":3,"min_samples_split":2}"#).unwrap();
        assert_eq!(k, ClassifierKind::DecisionTree { max_depth: 3, min_samples_split: 2 });
        let k: ClassifierKind = serde_json::from_str(r#"{"type":"majority_class"}"#).unwrap();
        assert_eq!(k, ClassifierKind::MajorityClass);
    }
}
