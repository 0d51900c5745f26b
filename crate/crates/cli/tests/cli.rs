use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use stablerank_cli::commands;
use stablerank_cli::config::{ContourSource, PipelineConfig, ProcessEntry, Source};
use stablerank_cli::dataset::Dataset;
use stablerank_cli::pipeline::{self, Manifest, MANIFEST_FILE};
use stablerank_core::io::{
    parse_ripser, write_barcode_csv, write_point_cloud_csv, write_ripser, BarcodeFormat,
};
use stablerank_core::{simulate_batch, Barcode, Contour, Density, Process};

const TINY: &str = r#"
name = "tiny"
[source]
kind = "simulate"
samples_per_class = 6
base_seed = 10
processes = ["baddeley-silverman", { kind = "poisson", lambda = 40 }, { kind = "matern", kappa = 8, mu = 5, radius = 0.05 }]
[classification]
train_size = 3
folds = 3
seed = 2
[outputs]
stem_plots_per_class = 1
write_points = true
"#;

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn config_defaults_and_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let c = PipelineConfig::from_toml_str("[source]\nkind = \"simulate\"\n", dir.path()).unwrap();
    assert_eq!(c.name, "run");
    assert_eq!(c.persistence.degrees, vec![0, 1]);
    assert_eq!(c.contour(), Contour::standard());
    assert_eq!(
        (
            c.classification.train_size,
            c.classification.folds,
            c.classification.p
        ),
        (200, 20, 1.0)
    );
    let Source::Simulate {
        samples_per_class,
        processes,
        ..
    } = &c.source
    else {
        panic!()
    };
    assert_eq!(*samples_per_class, 500);
    assert_eq!(processes.len(), 6);

    let shift = Contour::shift(Density::new(vec![0.1], vec![2.0, 1.0]).unwrap());
    std::fs::write(
        dir.path().join("c.json"),
        serde_json::to_string(&shift).unwrap(),
    )
    .unwrap();
    let text = "[source]\nkind = \"points\"\ndir = \"clouds\"\n[contour]\nfile = \"c.json\"\n";
    let c = PipelineConfig::from_toml_str(text, dir.path()).unwrap();
    assert_eq!(c.contour, ContourSource::Inline(shift));
    assert_eq!(
        c.source,
        Source::Points {
            dir: dir.path().join("clouds")
        }
    );

    let inline = "[source]\nkind = \"simulate\"\n[contour]\nkind = \"exponential\"\nparam = 2.0\nalpha = 5.0\n";
    let c = PipelineConfig::from_toml_str(inline, dir.path()).unwrap();
    assert_eq!(
        c.contour(),
        Contour::exponential(2.0)
            .unwrap()
            .truncate(5.0.try_into().unwrap())
    );
}

#[test]
fn config_rejects_bad_input() {
    let base = Path::new(".");
    for bad in [
        "[source]\nkind = \"simulate\"\nprocesses = [\"poisson\", \"poisson\"]\n",
        "[source]\nkind = \"simulate\"\nprocesses = [\"gaussian\"]\n",
        "[source]\nkind = \"simulate\"\nprocesses = [{ kind = \"poisson\", lambda = -1 }]\n",
        "[source]\nkind = \"simulate\"\nsamples_per_class = 0\n",
        "[source]\nkind = \"simulate\"\n[persistence]\ndegrees = [2]\n",
        "[source]\nkind = \"simulate\"\ntypo = 1\n",
        "[source]\nkind = \"elsewhere\"\n",
        "[source]\nkind = \"simulate\"\n[contour]\nfile = \"missing.json\"\n",
        "[source]\nkind = \"simulate\"\n[contour]\nkind = \"shift\"\n",
    ] {
        assert!(PipelineConfig::from_toml_str(bad, base).is_err(), "{bad}");
    }
    let named = "[source]\nkind = \"simulate\"\nprocesses = [\"ifs\"]\n";
    let Source::Simulate { processes, .. } =
        PipelineConfig::from_toml_str(named, base).unwrap().source
    else {
        panic!()
    };
    assert_eq!(processes, vec![ProcessEntry::Name("ifs".into())]);
}

#[test]
fn pipeline_writes_hashed_artifacts_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig::from_toml_str(TINY, dir.path()).unwrap();
    let first = dir.path().join("a");
    let report = pipeline::run(&config, &first, false).unwrap();
    assert_eq!(report.dataset.classes.len(), 3);
    assert!(report.summary.classification_skipped.is_none());
    for key in ["h0", "h1", "combined"] {
        let a = report.summary.accuracy[key];
        assert!((0.0..=1.0).contains(&a), "{key}: {a}");
    }
    let files = read_tree(&first);
    for f in [
        "manifest.json",
        "summary.json",
        "dataset.json",
        "barcodes/poisson.h1.json",
        "stable_ranks/matern.h0.json",
        "means/baddeley-silverman.h1.json",
        "classification/h1.json",
        "classification/combined.confusion.csv",
        "classification/h0.folds.csv",
        "stem_plots/poisson.0.h1.csv",
        "contour_lines.csv",
        "points/poisson/00005.csv",
    ] {
        assert!(files.contains_key(f), "missing {f}");
    }
    assert!(
        String::from_utf8_lossy(&files["stem_plots/poisson.0.h1.csv"])
            .starts_with("s,length,multiplicity_index\n")
    );
    assert!(String::from_utf8_lossy(&files["contour_lines.csv"]).starts_with("t,s,height\n"));

    // the manifest hashes every other file and records seeds
    let manifest: Manifest = serde_json::from_slice(&files[MANIFEST_FILE]).unwrap();
    assert_eq!(manifest.outputs.len(), files.len() - 1);
    assert_eq!(manifest.seeds.simulation["poisson"], (16, 21));
    assert!(pipeline::verify(&first).unwrap().is_empty());

    // rerunning the manifest reproduces every byte
    let second = dir.path().join("b");
    let again = PipelineConfig::load(&first.join(MANIFEST_FILE)).unwrap();
    pipeline::run(&again, &second, false).unwrap();
    assert_eq!(read_tree(&second), files);

    std::fs::write(first.join("means/poisson.h0.json"), "[]").unwrap();
    assert_eq!(
        pipeline::verify(&first).unwrap(),
        vec!["means/poisson.h0.json".to_string()]
    );

    // stored datasets load back and classify from disk
    let loaded = Dataset::load(&second).unwrap();
    assert_eq!(loaded, report.dataset);
    let cv = commands::classify(&second, &Contour::standard(), &config.classification).unwrap();
    let cv: serde_json::Value = serde_json::from_str(&cv).unwrap();
    let stored: serde_json::Value =
        serde_json::from_slice(&files["classification/h1.json"]).unwrap();
    assert_eq!(cv["h1"], stored);
}

#[test]
fn small_classes_skip_classification() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY.replace("train_size = 3", "train_size = 6");
    let config = PipelineConfig::from_toml_str(&text, dir.path()).unwrap();
    let report = pipeline::run(&config, dir.path(), false).unwrap();
    assert!(report
        .summary
        .classification_skipped
        .unwrap()
        .contains("train_size"));
    assert!(report.summary.accuracy.is_empty());
}

#[test]
fn ingests_point_clouds_and_barcode_files() {
    let dir = tempfile::tempdir().unwrap();
    let clouds = dir.path().join("clouds");
    for (label, seed) in [("left", 0), ("right", 100)] {
        std::fs::create_dir_all(clouds.join(label)).unwrap();
        for (i, pc) in simulate_batch(&Process::Poisson { lambda: 25.0 }, 4, seed)
            .unwrap()
            .iter()
            .enumerate()
        {
            std::fs::write(
                clouds.join(label).join(format!("{i}.csv")),
                write_point_cloud_csv(pc),
            )
            .unwrap();
        }
    }
    std::fs::write(clouds.join("left/notes.txt"), "ignored").unwrap();
    let text = "name = \"pts\"\n[source]\nkind = \"points\"\ndir = \"clouds\"\n[classification]\ntrain_size = 2\nfolds = 2\n";
    let config = PipelineConfig::from_toml_str(text, dir.path()).unwrap();
    let report = pipeline::run(&config, &dir.path().join("out"), false).unwrap();
    assert_eq!(
        report
            .dataset
            .index()
            .classes
            .iter()
            .map(|c| c.count)
            .collect::<Vec<_>>(),
        vec![4, 4]
    );

    // the same barcodes through the three file formats
    let bars = dir.path().join("bars");
    let left = &report.dataset.classes[0];
    std::fs::create_dir_all(bars.join("left")).unwrap();
    for i in 0..4 {
        let per_degree: BTreeMap<usize, Barcode> = left
            .barcodes
            .iter()
            .map(|(d, bs)| (*d, bs[i].clone()))
            .collect();
        match i % 3 {
            0 => std::fs::write(
                bars.join(format!("left/s{i}.txt")),
                write_ripser(&per_degree),
            )
            .unwrap(),
            1 => std::fs::write(
                bars.join(format!("left/s{i}.json")),
                serde_json::to_string(&per_degree.values().collect::<Vec<_>>()).unwrap(),
            )
            .unwrap(),
            _ => {
                for (d, b) in &per_degree {
                    std::fs::write(
                        bars.join(format!("left/s{i}.h{d}.csv")),
                        write_barcode_csv(b),
                    )
                    .unwrap();
                }
            }
        }
    }
    let ingested = Dataset::from_barcode_dir("bars", &bars, &[0, 1]).unwrap();
    assert_eq!(ingested.classes[0].barcodes, left.barcodes);

    std::fs::write(bars.join("left/bad.h1.csv"), "birth,death\n0.1,oops\n").unwrap();
    let err = format!(
        "{:#}",
        Dataset::from_barcode_dir("bars", &bars, &[0, 1]).unwrap_err()
    );
    assert!(
        err.contains("bad.h1.csv") && err.contains("line 2"),
        "{err}"
    );
}

#[test]
fn single_shot_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        commands::simulate(&commands::parse_process("ifs").unwrap(), 2, 40, dir.path()).unwrap();
    assert!(out.trim_end().ends_with("ifs"));
    let cloud = dir.path().join("ifs/00041.csv");
    assert!(cloud.is_file());
    assert!(commands::parse_process(r#"{"kind":"thomas","kappa":10,"mu":2,"sigma":0.1}"#).is_ok());
    assert!(commands::parse_process(r#"{"kind":"thomas","kappa":-1,"mu":2,"sigma":0.1}"#).is_err());

    let ripser = commands::persist(&cloud, &[0, 1], None, BarcodeFormat::RipserText).unwrap();
    let parsed = parse_ripser(&ripser).unwrap();
    assert_eq!(parsed[&0].infinite_bar_count(), 1);
    let csv = commands::persist(&cloud, &[1], None, BarcodeFormat::Csv).unwrap();
    assert!(csv.starts_with("birth,death\n"));
    assert!(commands::persist(&cloud, &[0, 1], None, BarcodeFormat::Csv).is_err());
    let json = commands::persist(&cloud, &[0, 1], Some(0.2), BarcodeFormat::Json).unwrap();
    assert_eq!(
        serde_json::from_str::<Vec<Barcode>>(&json).unwrap().len(),
        2
    );

    let bpath = dir.path().join("b.txt");
    std::fs::write(&bpath, &ripser).unwrap();
    let stems = commands::stemplot(&bpath, 1).unwrap();
    assert_eq!(stems.lines().count(), parsed[&1].bars.len() + 1);

    let lines = commands::contourlines(&Contour::standard(), &[0.5], (0.0, 1.0), 3).unwrap();
    assert_eq!(lines, "t,s,height\n0.5,0,0.5\n0.5,0.5,0.5\n0.5,1,0.5\n");
}

#[test]
fn binary_reports_errors_with_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_stablerank");
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8_lossy(&help.stdout);
    for verb in [
        "simulate",
        "persist",
        "stablerank",
        "classify",
        "pipeline",
        "serve",
        "verify",
    ] {
        assert!(text.contains(verb), "{verb}");
    }

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "[source]\nkind = \"simulate\"\nprocesses = [\"nope\"]\n",
    )
    .unwrap();
    let run = Command::new(bin)
        .args([
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--out",
            "x",
        ])
        .output()
        .unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("nope"));

    let contour = dir.path().join("c.json");
    std::fs::write(&contour, r#"{"kind":"standard"}"#).unwrap();
    let barcode = dir.path().join("b.csv");
    std::fs::write(&barcode, "birth,death\n0,2\n1,3\n").unwrap();
    let run = Command::new(bin)
        .args([
            "stablerank",
            "--contour",
            contour.to_str().unwrap(),
            "--barcode",
            barcode.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    assert_eq!(
        String::from_utf8_lossy(&run.stdout),
        commands::stablerank(&contour, &barcode, 1, None).unwrap()
    );
}
