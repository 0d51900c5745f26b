//! Nearest-mean classification of stable ranks.
//!
//! A class is summarized by the pointwise mean of its training stable ranks
//! (one mean per homology degree). A test element goes to the class whose
//! means minimize the sum over degrees of the `L_p` distances (`p = 1` by
//! default). Accuracy is estimated with repeated random subsampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::function_space::{lp_distance, pointwise_mean, MonotoneL1, StepFunction};

/// Stable ranks of one class: for each degree, one step function per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledInvariantSet {
    pub label: String,
    pub degree_map: BTreeMap<usize, Vec<StepFunction>>,
}

impl LabeledInvariantSet {
    pub fn new(
        label: impl Into<String>,
        degree_map: BTreeMap<usize, Vec<StepFunction>>,
    ) -> Result<Self> {
        let set = Self {
            label: label.into(),
            degree_map,
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let mut lens = self.degree_map.values().map(Vec::len);
        let Some(first) = lens.next() else {
            return Err(Error::Classification(format!(
                "class {} has no degrees",
                self.label
            )));
        };
        if first == 0 {
            return Err(Error::Classification(format!(
                "class {} has no samples",
                self.label
            )));
        }
        if lens.any(|l| l != first) {
            return Err(Error::Classification(format!(
                "class {} has different sample counts per degree",
                self.label
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.degree_map.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.degree_map.keys().copied()
    }

    /// Sample `i` across all degrees.
    pub fn sample(&self, i: usize) -> BTreeMap<usize, &StepFunction> {
        self.degree_map.iter().map(|(d, fs)| (*d, &fs[i])).collect()
    }

    fn means_of(&self, indices: &[usize]) -> Result<BTreeMap<usize, StepFunction>> {
        self.degree_map
            .iter()
            .map(|(d, fs)| Ok((*d, pointwise_mean(indices.iter().map(|&i| &fs[i]))?)))
            .collect()
    }
}

/// Per-degree mean stable ranks of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub label: String,
    pub means: BTreeMap<usize, StepFunction>,
}

/// The mean of every sample, per degree.
pub fn build_classifier(train: &LabeledInvariantSet) -> Result<Classifier> {
    train.validate()?;
    let all: Vec<usize> = (0..train.len()).collect();
    Ok(Classifier {
        label: train.label.clone(),
        means: train.means_of(&all)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    /// Index into the classifier list.
    pub index: usize,
    pub score: ExtendedReal,
    /// Another classifier reached the same minimal score.
    pub tied: bool,
    /// Every classifier scored `∞`; `index` is then 0.
    pub all_infinite: bool,
}

/// Sum over degrees of `L_p(classifier, test)`.
pub fn score(
    classifier: &Classifier,
    test: &BTreeMap<usize, &StepFunction>,
    p: f64,
) -> Result<ExtendedReal> {
    if classifier.means.len() != test.len() || !classifier.means.keys().eq(test.keys()) {
        return Err(Error::Classification(format!(
            "classifier {} and test element have different degree sets",
            classifier.label
        )));
    }
    classifier
        .means
        .iter()
        .try_fold(ExtendedReal::ZERO, |acc, (d, mean)| {
            Ok(acc + lp_distance(mean, test[d], p)?)
        })
}

/// Picks the classifier with the smallest combined distance; ties go to the
/// earliest classifier in the list.
pub fn classify(
    classifiers: &[Classifier],
    test: &BTreeMap<usize, &StepFunction>,
    p: f64,
) -> Result<Decision> {
    if classifiers.is_empty() {
        return Err(Error::Classification("no classifiers".into()));
    }
    let scores = classifiers
        .iter()
        .map(|c| score(c, test, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(decide(&scores))
}

fn decide(scores: &[ExtendedReal]) -> Decision {
    let (index, best) =
        scores.iter().enumerate().fold(
            (0, scores[0]),
            |(bi, bs), (i, s)| if *s < bs { (i, *s) } else { (bi, bs) },
        );
    Decision {
        index,
        score: best,
        tied: scores.iter().filter(|s| **s == best).count() > 1,
        all_infinite: best.is_infinite(),
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            counts: vec![vec![0.0; k]; k],
        }
    }

    /// Divides every row by its sum (rows summing to zero are left alone).
    pub fn normalized(&self) -> Self {
        let counts = self
            .counts
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                if total > 0.0 {
                    row.iter().map(|c| c / total).collect()
                } else {
                    row.clone()
                }
            })
            .collect();
        Self {
            labels: self.labels.clone(),
            counts,
        }
    }
}

/// Average of the diagonal.
pub fn mean_accuracy(cm: &ConfusionMatrix) -> f64 {
    let k = cm.labels.len();
    if k == 0 {
        return 0.0;
    }
    (0..k).map(|i| cm.counts[i][i]).sum::<f64>() / k as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidationParams {
    /// Training samples per class; the rest of each class is tested.
    pub train_size: usize,
    pub folds: usize,
    pub seed: u64,
    /// Exponent of the `L_p` distance.
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    1.0
}

impl Default for CrossValidationParams {
    fn default() -> Self {
        Self {
            train_size: 200,
            folds: 20,
            seed: 0,
            p: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Per-fold row-normalized matrices averaged over folds.
    pub confusion: ConfusionMatrix,
    pub fold_accuracies: Vec<f64>,
    pub ties: usize,
    pub all_infinite: usize,
}

/// Repeated random subsampling: in each fold every class is split at random
/// into `train_size` training and remaining test samples.
pub fn cross_validate(
    data: &[LabeledInvariantSet],
    params: &CrossValidationParams,
) -> Result<CrossValidation> {
    if data.is_empty() {
        return Err(Error::Classification("no classes".into()));
    }
    if params.folds == 0 || params.train_size == 0 {
        return Err(Error::Classification(
            "folds and train_size must be positive".into(),
        ));
    }
    for class in data {
        class.validate()?;
        if class.len() <= params.train_size {
            return Err(Error::Classification(format!(
                "class {} has {} samples, needs more than train_size = {}",
                class.label,
                class.len(),
                params.train_size
            )));
        }
        if !class.degrees().eq(data[0].degrees()) {
            return Err(Error::Classification(format!(
                "class {} has a different degree set",
                class.label
            )));
        }
    }
    let labels: Vec<String> = data.iter().map(|c| c.label.clone()).collect();

    let folds = (0..params.folds)
        .into_par_iter()
        .map(|fold| run_fold(data, params, fold))
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = ConfusionMatrix::zeros(labels);
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let (mut ties, mut all_infinite) = (0, 0);
    for fold in &folds {
        let normalized = fold.confusion.normalized();
        fold_accuracies.push(mean_accuracy(&normalized));
        for (acc_row, row) in confusion.counts.iter_mut().zip(&normalized.counts) {
            for (a, x) in acc_row.iter_mut().zip(row) {
                *a += x;
            }
        }
        ties += fold.ties;
        all_infinite += fold.all_infinite;
    }
    let n = params.folds as f64;
    confusion.counts.iter_mut().flatten().for_each(|x| *x /= n);
    Ok(CrossValidation {
        confusion,
        fold_accuracies,
        ties,
        all_infinite,
    })
}

struct FoldResult {
    confusion: ConfusionMatrix,
    ties: usize,
    all_infinite: usize,
}

fn run_fold(
    data: &[LabeledInvariantSet],
    params: &CrossValidationParams,
    fold: usize,
) -> Result<FoldResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(fold as u64);
    let mut classifiers = Vec::with_capacity(data.len());
    let mut tests = Vec::new();
    for (class_index, class) in data.iter().enumerate() {
        let mut indices: Vec<usize> = (0..class.len()).collect();
        indices.shuffle(&mut rng);
        let (train, test) = indices.split_at(params.train_size);
        classifiers.push(Classifier {
            label: class.label.clone(),
            means: class.means_of(train)?,
        });
        tests.extend(test.iter().map(|&i| (class_index, i)));
    }
    let fast: Option<Vec<Vec<MonotoneL1>>> = (params.p == 1.0).then(|| {
        classifiers
            .iter()
            .map(|c| c.means.values().map(MonotoneL1::new).collect())
            .collect()
    });
    let decisions = tests
        .par_iter()
        .map(|&(c, i)| {
            let sample = data[c].sample(i);
            let d = match &fast {
                Some(indexed) => {
                    let scores: Vec<ExtendedReal> = indexed
                        .iter()
                        .map(|means| {
                            means
                                .iter()
                                .zip(sample.values())
                                .fold(ExtendedReal::ZERO, |acc, (m, f)| acc + m.distance(f))
                        })
                        .collect();
                    decide(&scores)
                }
                None => classify(&classifiers, &sample, params.p)?,
            };
            Ok((c, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut confusion = ConfusionMatrix::zeros(data.iter().map(|c| c.label.clone()).collect());
    let (mut ties, mut all_infinite) = (0, 0);
    for (truth, d) in decisions {
        confusion.counts[truth][d.index] += 1.0;
        ties += usize::from(d.tied);
        all_infinite += usize::from(d.all_infinite);
    }
    Ok(FoldResult {
        confusion,
        ties,
        all_infinite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(end: f64) -> StepFunction {
        StepFunction::indicator(end).unwrap()
    }

    fn one_degree(label: &str, fs: Vec<StepFunction>) -> LabeledInvariantSet {
        LabeledInvariantSet::new(label, BTreeMap::from([(1, fs)])).unwrap()
    }

    fn test_of(f: &StepFunction) -> BTreeMap<usize, &StepFunction> {
        BTreeMap::from([(1, f)])
    }

    #[test]
    fn classifier_examples() {
        let single = build_classifier(&one_degree("a", vec![ind(2.0)])).unwrap();
        assert_eq!(single.means[&1], ind(2.0));
        let two = build_classifier(&one_degree("a", vec![ind(2.0), ind(4.0)])).unwrap();
        assert_eq!(
            two.means[&1],
            StepFunction::new(vec![2.0, 4.0], vec![1.0, 0.5, 0.0]).unwrap()
        );
        let same = build_classifier(&one_degree("a", vec![ind(3.0); 5])).unwrap();
        assert_eq!(same.means[&1], ind(3.0));
        assert!(LabeledInvariantSet::new("x", BTreeMap::from([(1, vec![])])).is_err());
    }

    #[test]
    fn classify_examples() {
        let a = build_classifier(&one_degree("a", vec![ind(1.0)])).unwrap();
        let b = build_classifier(&one_degree("b", vec![ind(5.0)])).unwrap();
        let cs = vec![a, b];
        assert_eq!(classify(&cs, &test_of(&ind(5.0)), 1.0).unwrap().index, 1);
        assert_eq!(classify(&cs, &test_of(&ind(1.0)), 1.0).unwrap().index, 0);
        assert!(classify(&[], &test_of(&ind(1.0)), 1.0).is_err());
    }

    #[test]
    fn degree_sums_decide() {
        // H0 favours A by 0.4, H1 favours B by 0.1
        let test0 = ind(1.0);
        let test1 = ind(1.0);
        let a = Classifier {
            label: "a".into(),
            means: BTreeMap::from([(0, ind(1.0)), (1, ind(1.3))]),
        };
        let b = Classifier {
            label: "b".into(),
            means: BTreeMap::from([(0, ind(1.4)), (1, ind(1.2))]),
        };
        let test = BTreeMap::from([(0, &test0), (1, &test1)]);
        let d = classify(&[a.clone(), b.clone()], &test, 1.0).unwrap();
        assert_eq!(d.index, 0);
        assert!((d.score.value() - 0.3).abs() < 1e-12);
        assert!((score(&b, &test, 1.0).unwrap().value() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ties_and_infinite_scores() {
        let a = build_classifier(&one_degree("a", vec![ind(1.0)])).unwrap();
        let b = build_classifier(&one_degree("b", vec![ind(3.0)])).unwrap();
        let d = classify(&[a.clone(), b.clone()], &test_of(&ind(2.0)), 1.0).unwrap();
        assert_eq!((d.index, d.tied), (0, true));
        let one = StepFunction::constant(1.0).unwrap();
        let d = classify(&[a.clone(), b], &test_of(&one), 1.0).unwrap();
        assert!(d.all_infinite);
        assert_eq!(d.index, 0);
        let c = build_classifier(&one_degree("c", vec![one.clone()])).unwrap();
        assert_eq!(classify(&[a, c], &test_of(&one), 1.0).unwrap().index, 1);
    }

    #[test]
    fn separated_classes_give_identity() {
        let data: Vec<_> = (0..3)
            .map(|k| {
                let base = 10.0 * (k + 1) as f64;
                one_degree(
                    &format!("c{k}"),
                    (0..6).map(|i| ind(base + 0.1 * i as f64)).collect(),
                )
            })
            .collect();
        let params = CrossValidationParams {
            train_size: 3,
            folds: 4,
            seed: 9,
            p: 1.0,
        };
        let cv = cross_validate(&data, &params).unwrap();
        assert_eq!(mean_accuracy(&cv.confusion), 1.0);
        for (i, row) in cv.confusion.counts.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert_eq!(*x, if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(cv, cross_validate(&data, &params).unwrap());
        let loo = cross_validate(
            &data,
            &CrossValidationParams {
                train_size: 5,
                folds: 1,
                ..params.clone()
            },
        )
        .unwrap();
        for row in &loo.confusion.counts {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(cross_validate(
            &data,
            &CrossValidationParams {
                train_size: 6,
                ..params
            }
        )
        .is_err());
    }

    #[test]
    fn accuracy_examples() {
        let labels: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let mut id = ConfusionMatrix::zeros(labels.clone());
        (0..4).for_each(|i| id.counts[i][i] = 1.0);
        assert_eq!(mean_accuracy(&id), 1.0);
        let mut uniform = ConfusionMatrix::zeros(labels);
        uniform.counts.iter_mut().flatten().for_each(|x| *x = 0.25);
        assert_eq!(mean_accuracy(&uniform), 0.25);
    }
}
