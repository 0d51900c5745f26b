use stablerank_core::processes::{
    ifs_map, sample, sample_baddeley_silverman, sample_clusters, sample_normal, sample_points,
};
use stablerank_core::{simulate_batch, Process, ProcessSpec};

fn spec(process: &Process, seed: u64) -> ProcessSpec {
    ProcessSpec {
        process: process.clone(),
        seed,
    }
}

#[test]
fn deterministic_per_seed() {
    for p in Process::defaults() {
        let a = sample(&spec(&p, 7)).unwrap();
        assert_eq!(a, sample(&spec(&p, 7)).unwrap());
        assert_ne!(a, sample(&spec(&p, 8)).unwrap());
        let batch = simulate_batch(&p, 8, 100).unwrap();
        assert_eq!(batch, simulate_batch(&p, 8, 100).unwrap());
        for (i, pc) in batch.iter().enumerate() {
            assert_eq!(pc, &sample(&spec(&p, 100 + i as u64)).unwrap());
        }
    }
    assert!(simulate_batch(&Process::by_name("poisson").unwrap(), 0, 1).is_err());
}

#[test]
fn supports() {
    for name in ["poisson", "baddeley-silverman", "ifs"] {
        let p = Process::by_name(name).unwrap();
        for seed in 0..50 {
            for pt in sample_points(&spec(&p, seed)).unwrap() {
                assert!(
                    (0.0..=1.0).contains(&pt.0) && (0.0..=1.0).contains(&pt.1),
                    "{name}: {pt:?}"
                );
            }
        }
    }
    let matern = Process::by_name("matern").unwrap();
    for seed in 0..50 {
        for cluster in sample_clusters(&spec(&matern, seed)).unwrap() {
            let (px, py) = cluster.parent;
            assert!((0.0..=1.0).contains(&px) && (0.0..=1.0).contains(&py));
            for (x, y) in cluster.children {
                assert!(((x - px).powi(2) + (y - py).powi(2)).sqrt() <= 0.1 + 1e-12);
            }
        }
    }
    assert!(sample_clusters(&spec(&Process::by_name("poisson").unwrap(), 0)).is_err());
}

#[test]
fn cluster_draws_match_realizations() {
    for name in ["matern", "thomas"] {
        let p = Process::by_name(name).unwrap();
        for seed in 0..20 {
            let children: Vec<(f64, f64)> = sample_clusters(&spec(&p, seed))
                .unwrap()
                .into_iter()
                .flat_map(|c| c.children)
                .collect();
            assert_eq!(children, sample_points(&spec(&p, seed)).unwrap());
        }
    }
}

#[test]
fn baddeley_silverman_tiles_hold_zero_one_or_ten_points() {
    for seed in 0..200 {
        let pc = sample_baddeley_silverman(1.0 / 14.0, seed).unwrap();
        let mut counts = [[0usize; 14]; 14];
        for p in pc.points() {
            counts[((p[1] * 14.0) as usize).min(13)][((p[0] * 14.0) as usize).min(13)] += 1;
        }
        assert!(counts.iter().flatten().all(|c| [0, 1, 10].contains(c)));
    }
    assert!(sample_baddeley_silverman(0.3, 0).is_err());
    assert!(sample_baddeley_silverman(0.25, 0).is_ok());
}

#[test]
fn ifs_maps_preserve_the_unit_square() {
    for i in 0..5 {
        for x in 0..=20 {
            for y in 0..=20 {
                let (u, v) = ifs_map(i, (x as f64 / 20.0, y as f64 / 20.0));
                assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
            }
        }
    }
    assert_eq!(ifs_map(3, (0.5, 0.5)), (0.75, 0.25));
    assert_eq!(ifs_map(4, (0.5, 0.5)), (0.25, 0.75));
}

#[test]
fn point_count_means() {
    let batches = 2000;
    for p in Process::defaults() {
        let total: usize = (0..batches)
            .map(|seed| sample_points(&spec(&p, seed)).unwrap().len())
            .sum();
        let mean = total as f64 / batches as f64;
        let expected = p.expected_points();
        assert!(
            (mean - expected).abs() <= 0.02 * expected,
            "{}: {mean} vs {expected}",
            p.name()
        );
    }
}

#[test]
fn normal_coordinates_center_on_mu() {
    let pc = sample_normal(20_000.0, 0.5, 0.2, 3).unwrap();
    let n = pc.len() as f64;
    let mean = pc.points().map(|p| p[0] + p[1]).sum::<f64>() / (2.0 * n);
    assert!((mean - 0.5).abs() <= 3.0 * 0.2 / (2.0 * n).sqrt());
}

#[test]
fn thomas_child_covariance() {
    let thomas = Process::by_name("thomas").unwrap();
    let mut d = Vec::new();
    let mut seed = 0;
    while d.len() < 100_000 {
        for c in sample_clusters(&spec(&thomas, seed)).unwrap() {
            d.extend(
                c.children
                    .iter()
                    .map(|(x, y)| (x - c.parent.0, y - c.parent.1)),
            );
        }
        seed += 1;
    }
    let n = d.len() as f64;
    let sxx = d.iter().map(|v| v.0 * v.0).sum::<f64>() / n;
    let syy = d.iter().map(|v| v.1 * v.1).sum::<f64>() / n;
    let sxy = d.iter().map(|v| v.0 * v.1).sum::<f64>() / n;
    assert!(
        (sxx - 0.01).abs() <= 0.05 * 0.01 && (syy - 0.01).abs() <= 0.05 * 0.01,
        "{sxx} {syy}"
    );
    assert!(sxy.abs() <= 0.05 * 0.01);
}

#[test]
fn spec_json() {
    let s: ProcessSpec =
        serde_json::from_str(r#"{"kind":"matern","kappa":40,"mu":5,"radius":0.1,"seed":3}"#)
            .unwrap();
    assert_eq!(s.process, Process::by_name("matern").unwrap());
    assert_eq!(
        serde_json::from_str::<ProcessSpec>(&serde_json::to_string(&s).unwrap()).unwrap(),
        s
    );
    assert!(
        serde_json::from_str::<ProcessSpec>(r#"{"kind":"poisson","lambda":200,"seed":-1}"#)
            .is_err()
    );
    assert!(Process::Poisson { lambda: -1.0 }.validate().is_err());
}
