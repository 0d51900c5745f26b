use std::collections::BTreeMap;

use rand::Rng;
use stablerank_core::classification::score;
use stablerank_core::{
    build_classifier, classify, cross_validate, mean_accuracy, Classifier, ConfusionMatrix,
    CrossValidationParams, LabeledInvariantSet, StepFunction,
};
use stablerank_testkit::{random_step_function, rng};

fn sf(b: &[f64], v: &[f64]) -> StepFunction {
    StepFunction::new(b.to_vec(), v.to_vec()).unwrap()
}

fn single_degree(label: &str, fs: Vec<StepFunction>) -> LabeledInvariantSet {
    LabeledInvariantSet::new(label, BTreeMap::from([(0, fs)])).unwrap()
}

fn test_of(f: &StepFunction) -> BTreeMap<usize, &StepFunction> {
    BTreeMap::from([(0, f)])
}

/// Class `k` holds noisy indicators of `[k, k + 1)`-ish supports.
fn noisy_classes(seed: u64, classes: usize, per_class: usize) -> Vec<LabeledInvariantSet> {
    let mut r = rng(seed);
    (0..classes)
        .map(|k| {
            let fs = (0..per_class)
                .map(|_| {
                    let end = 1.0 + k as f64 + r.gen_range(-0.8..0.8);
                    sf(&[end], &[r.gen_range(1..4) as f64, 0.0])
                })
                .collect();
            single_degree(&format!("class{k}"), fs)
        })
        .collect()
}

#[test]
fn classifier_examples() {
    let f = sf(&[1.0, 3.0], &[2.0, 1.0, 0.0]);
    assert_eq!(
        build_classifier(&single_degree("a", vec![f.clone()]))
            .unwrap()
            .means[&0],
        f
    );
    assert_eq!(
        build_classifier(&single_degree("a", vec![f.clone(); 5]))
            .unwrap()
            .means[&0],
        f
    );
    let mean = build_classifier(&single_degree(
        "a",
        vec![
            StepFunction::indicator(2.0).unwrap(),
            StepFunction::indicator(4.0).unwrap(),
        ],
    ))
    .unwrap();
    assert_eq!(mean.means[&0], sf(&[2.0, 4.0], &[1.0, 0.5, 0.0]));
    assert!(LabeledInvariantSet::new("x", BTreeMap::from([(0, vec![])])).is_err());
    assert!(
        LabeledInvariantSet::new("x", BTreeMap::from([(0, vec![f.clone()]), (1, vec![])])).is_err()
    );
}

#[test]
fn classify_examples() {
    let a = Classifier {
        label: "a".into(),
        means: BTreeMap::from([(0, StepFunction::indicator(1.0).unwrap())]),
    };
    let b = Classifier {
        label: "b".into(),
        means: BTreeMap::from([(0, sf(&[2.0, 3.0], &[1.0, 1.0 - 1e-9, 0.0]))]),
    };
    let t = StepFunction::indicator(1.0).unwrap();
    let d = classify(&[b.clone(), a.clone()], &test_of(&t), 1.0).unwrap();
    assert_eq!((d.index, d.score.value(), d.tied), (1, 0.0, false));

    // H0 favors A by 0.4, H1 favors B by 0.1
    let zero = StepFunction::zero();
    let h0_test = StepFunction::indicator(1.0).unwrap();
    let h1_test = StepFunction::indicator(1.0).unwrap();
    let ca = Classifier {
        label: "A".into(),
        means: BTreeMap::from([
            (0, StepFunction::indicator(1.1).unwrap()),
            (1, StepFunction::indicator(1.3).unwrap()),
        ]),
    };
    let cb = Classifier {
        label: "B".into(),
        means: BTreeMap::from([
            (0, StepFunction::indicator(1.5).unwrap()),
            (1, StepFunction::indicator(1.2).unwrap()),
        ]),
    };
    let test = BTreeMap::from([(0, &h0_test), (1, &h1_test)]);
    assert!((score(&ca, &test, 1.0).unwrap().value() - 0.4).abs() < 1e-12);
    assert!((score(&cb, &test, 1.0).unwrap().value() - 0.7).abs() < 1e-12);
    assert_eq!(
        classify(&[cb.clone(), ca.clone()], &test, 1.0)
            .unwrap()
            .index,
        1
    );

    // infinite distances lose to finite ones; all-infinite picks the first
    let one = StepFunction::constant(1.0).unwrap();
    let inf = Classifier {
        label: "inf".into(),
        means: BTreeMap::from([(0, one.clone())]),
    };
    let fin = Classifier {
        label: "fin".into(),
        means: BTreeMap::from([(0, StepFunction::indicator(50.0).unwrap())]),
    };
    let d = classify(&[inf.clone(), fin], &test_of(&zero), 1.0).unwrap();
    assert_eq!((d.index, d.all_infinite), (1, false));
    let d = classify(&[inf.clone(), inf], &test_of(&zero), 1.0).unwrap();
    assert_eq!((d.index, d.all_infinite, d.tied), (0, true, true));
    assert!(classify(&[], &test_of(&zero), 1.0).is_err());
    assert!(classify(&[ca], &test_of(&zero), 1.0).is_err());
}

#[test]
fn relabeling_and_duplicates_do_not_change_decisions() {
    let mut r = rng(51);
    for _ in 0..200 {
        let classifiers: Vec<Classifier> = (0..5)
            .map(|k| Classifier {
                label: format!("c{k}"),
                means: BTreeMap::from([(0, random_step_function(&mut r, 5, 0.01, 10.0, 1.0))]),
            })
            .collect();
        let t = random_step_function(&mut r, 5, 0.01, 10.0, 1.0);
        let d = classify(&classifiers, &test_of(&t), 1.0).unwrap();
        if d.tied {
            continue;
        }
        let winner = &classifiers[d.index].label;
        let mut permuted = classifiers.clone();
        permuted.reverse();
        let dp = classify(&permuted, &test_of(&t), 1.0).unwrap();
        assert_eq!(&permuted[dp.index].label, winner);
        let mut with_copy = classifiers.clone();
        with_copy.push(classifiers[d.index].clone());
        let dc = classify(&with_copy, &test_of(&t), 1.0).unwrap();
        assert_eq!(&with_copy[dc.index].label, winner);
    }
}

#[test]
fn separated_classes_give_the_identity() {
    let classes: Vec<LabeledInvariantSet> = (0..3)
        .map(|k| {
            single_degree(
                &format!("c{k}"),
                (0..10)
                    .map(|_| StepFunction::indicator(1.0 + 10.0 * k as f64).unwrap())
                    .collect(),
            )
        })
        .collect();
    let params = CrossValidationParams {
        train_size: 4,
        folds: 5,
        seed: 1,
        p: 1.0,
    };
    let cv = cross_validate(&classes, &params).unwrap();
    for (i, row) in cv.confusion.counts.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            assert_eq!(*x, if i == j { 1.0 } else { 0.0 });
        }
    }
    assert_eq!(mean_accuracy(&cv.confusion), 1.0);
    assert_eq!(cv.fold_accuracies, vec![1.0; 5]);
}

#[test]
fn cross_validation_contract() {
    let classes = noisy_classes(52, 4, 30);
    let params = CrossValidationParams {
        train_size: 10,
        folds: 7,
        seed: 9,
        p: 1.0,
    };
    let cv = cross_validate(&classes, &params).unwrap();
    assert_eq!(cv, cross_validate(&classes, &params).unwrap());
    for row in &cv.confusion.counts {
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(row.iter().all(|x| *x >= 0.0));
    }
    let acc = mean_accuracy(&cv.confusion);
    let fold_mean = cv.fold_accuracies.iter().sum::<f64>() / 7.0;
    assert!((acc - fold_mean).abs() < 1e-12);
    assert!(acc > 0.25, "better than chance: {acc}");
    let other = cross_validate(
        &classes,
        &CrossValidationParams {
            seed: 10,
            ..params.clone()
        },
    )
    .unwrap();
    assert_ne!(other.fold_accuracies, cv.fold_accuracies);

    let loo = cross_validate(
        &classes,
        &CrossValidationParams {
            train_size: 29,
            folds: 1,
            seed: 0,
            p: 1.0,
        },
    )
    .unwrap();
    for row in &loo.confusion.counts {
        assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
    assert!(cross_validate(
        &classes,
        &CrossValidationParams {
            train_size: 30,
            ..params.clone()
        }
    )
    .is_err());
    assert!(cross_validate(&classes, &CrossValidationParams { folds: 0, ..params }).is_err());
}

#[test]
fn mean_accuracy_examples() {
    let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let mut identity = ConfusionMatrix::zeros(labels.clone());
    for i in 0..3 {
        identity.counts[i][i] = 1.0;
    }
    assert_eq!(mean_accuracy(&identity), 1.0);
    let mut uniform = ConfusionMatrix::zeros(labels);
    uniform.counts.iter_mut().flatten().for_each(|x| *x = 7.0);
    assert!((mean_accuracy(&uniform.normalized()) - 1.0 / 3.0).abs() < 1e-15);
}
