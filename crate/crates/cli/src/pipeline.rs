//! The end-to-end run: acquire barcodes (simulate + persistence, or ingest),
//! compute stable ranks under the configured contour, class means,
//! cross-validated classification and plot data, then write everything to
//! an artifact directory with a manifest of content hashes.
//!
//! Outputs depend only on the configuration, so rerunning a manifest
//! reproduces every file byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stablerank_core::io::{
    write_confusion_csv, write_contour_lines_csv, write_point_cloud_csv, write_stem_plot_csv,
};
use stablerank_core::persistence::max_finite_endpoint;
use stablerank_core::{
    contour_lines, cross_validate, mean_accuracy, pointwise_mean, simulate_batch, stable_rank,
    stable_rank_2d, Contour, CrossValidation, ExtendedReal, Grid2DFunction, LabeledInvariantSet,
    StepFunction,
};

use crate::config::{PipelineConfig, Source};
use crate::dataset::{read_point_cloud_dir, Dataset, LabeledClouds};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    /// Relative path to lowercase hex SHA-256, for every other output.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    /// Inclusive seed range per simulated class.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub simulation: BTreeMap<String, (u64, u64)>,
    pub classification: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub contour: Contour,
    /// Mean accuracy keyed by `h<d>` and `combined`.
    pub accuracy: BTreeMap<String, f64>,
    pub ties: BTreeMap<String, usize>,
    pub all_infinite: BTreeMap<String, usize>,
    /// Set when classification was skipped, with the reason.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification_skipped: Option<String>,
}

/// What a run produced, kept in memory for callers (tests, the CLI).
#[derive(Clone, Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub dataset: Dataset,
    pub summary: Summary,
    pub manifest: Manifest,
}

/// Files accumulated during a run, written at the end.
#[derive(Default)]
struct Outputs(BTreeMap<String, Vec<u8>>);

impl Outputs {
    fn text(&mut self, path: impl Into<String>, text: String) {
        self.0.insert(path.into(), text.into_bytes());
    }

    fn json<T: Serialize>(&mut self, path: impl Into<String>, value: &T) -> Result<()> {
        self.text(path, serde_json::to_string(value)?);
        Ok(())
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.with_context(|| format!("stage {name} failed"))
}

fn log(verbose: bool, msg: impl AsRef<str>) {
    if verbose {
        eprintln!("[stablerank] {}", msg.as_ref());
    }
}

/// `base_seed + k * samples_per_class + i` for sample `i` of class `k`.
pub fn class_seed(base_seed: u64, class_index: usize, samples_per_class: usize) -> u64 {
    base_seed.wrapping_add((class_index * samples_per_class) as u64)
}

/// Simulated point clouds per class, in process order.
pub fn simulate(config: &PipelineConfig) -> Result<(LabeledClouds, Seeds)> {
    let Source::Simulate {
        samples_per_class,
        base_seed,
        processes,
    } = &config.source
    else {
        bail!("source is not a simulation");
    };
    let mut clouds = Vec::new();
    let mut seeds = BTreeMap::new();
    for (k, entry) in processes.iter().enumerate() {
        let process = entry.resolve()?;
        let first = class_seed(*base_seed, k, *samples_per_class);
        let label = process.name().to_string();
        let batch = simulate_batch(&process, *samples_per_class, first)
            .with_context(|| format!("simulating {label}"))?;
        seeds.insert(
            label.clone(),
            (first, first.wrapping_add(*samples_per_class as u64 - 1)),
        );
        clouds.push((label, batch));
    }
    Ok((
        clouds,
        Seeds {
            simulation: seeds,
            classification: config.classification.seed,
        },
    ))
}

/// Stable ranks per class, keyed by degree.
pub fn stable_ranks(contour: &Contour, dataset: &Dataset) -> Vec<LabeledInvariantSet> {
    dataset
        .classes
        .iter()
        .map(|class| LabeledInvariantSet {
            label: class.label.clone(),
            degree_map: class
                .barcodes
                .iter()
                .map(|(d, bs)| (*d, bs.par_iter().map(|b| stable_rank(contour, b)).collect()))
                .collect(),
        })
        .collect()
}

fn restrict(data: &[LabeledInvariantSet], degrees: &[usize]) -> Vec<LabeledInvariantSet> {
    data.iter()
        .map(|s| LabeledInvariantSet {
            label: s.label.clone(),
            degree_map: s
                .degree_map
                .iter()
                .filter(|(d, _)| degrees.contains(d))
                .map(|(d, fs)| (*d, fs.clone()))
                .collect(),
        })
        .collect()
}

/// Cross-validation per degree (`h<d>`) and, when enabled and there are
/// several degrees, over the summed distance (`combined`).
pub fn classify_all(
    config: &PipelineConfig,
    data: &[LabeledInvariantSet],
) -> Result<BTreeMap<String, CrossValidation>> {
    let params = config.classification.params();
    let mut schemes: Vec<(String, Vec<usize>)> = config
        .persistence
        .degrees
        .iter()
        .map(|d| (format!("h{d}"), vec![*d]))
        .collect();
    if config.classification.combined && config.persistence.degrees.len() > 1 {
        schemes.push(("combined".into(), config.persistence.degrees.clone()));
    }
    schemes
        .into_iter()
        .map(|(name, degrees)| {
            let cv = cross_validate(&restrict(data, &degrees), &params)
                .with_context(|| format!("classification {name}"))?;
            Ok((name, cv))
        })
        .collect()
}

fn folds_csv(cv: &CrossValidation) -> String {
    let mut out = String::from("fold,accuracy\n");
    for (i, a) in cv.fold_accuracies.iter().enumerate() {
        out.push_str(&format!("{i},{a}\n"));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs the whole pipeline and writes the artifact directory.
pub fn run(config: &PipelineConfig, output_dir: &Path, verbose: bool) -> Result<RunReport> {
    config.validate()?;
    let contour = config.contour();
    let mut out = Outputs::default();

    log(verbose, "acquiring barcodes");
    let (dataset, seeds) = stage("acquire", acquire(config, &mut out, verbose))?;

    log(verbose, "computing stable ranks");
    let data = stable_ranks(&contour, &dataset);
    for set in &data {
        for (d, fs) in &set.degree_map {
            out.json(format!("stable_ranks/{}.h{d}.json", set.label), fs)?;
            let mean = stage("means", pointwise_mean(fs).map_err(Into::into))?;
            out.json(format!("means/{}.h{d}.json", set.label), &mean)?;
        }
    }

    if let Some(alphas) = &config.alphas {
        log(verbose, "computing 2D means");
        stage("means2d", means_2d(&contour, &dataset, alphas, &mut out))?;
    }

    let mut summary = Summary {
        name: config.name.clone(),
        contour: contour.clone(),
        accuracy: BTreeMap::new(),
        ties: BTreeMap::new(),
        all_infinite: BTreeMap::new(),
        classification_skipped: None,
    };
    let smallest = dataset.classes.iter().map(|c| c.len()).min().unwrap_or(0);
    if dataset.classes.len() < 2 {
        summary.classification_skipped = Some("fewer than two classes".into());
    } else if smallest <= config.classification.train_size {
        summary.classification_skipped = Some(format!(
            "smallest class has {smallest} samples, needs more than train_size = {}",
            config.classification.train_size
        ));
    } else {
        log(verbose, "classifying");
        for (name, cv) in stage("classify", classify_all(config, &data))? {
            summary
                .accuracy
                .insert(name.clone(), mean_accuracy(&cv.confusion));
            summary.ties.insert(name.clone(), cv.ties);
            summary.all_infinite.insert(name.clone(), cv.all_infinite);
            out.text(
                format!("classification/{name}.confusion.csv"),
                write_confusion_csv(&cv.confusion),
            );
            out.text(format!("classification/{name}.folds.csv"), folds_csv(&cv));
            out.json(format!("classification/{name}.json"), &cv)?;
        }
    }
    if let Some(reason) = &summary.classification_skipped {
        log(verbose, format!("classification skipped: {reason}"));
    }

    log(verbose, "plot data");
    stage("plots", plots(config, &contour, &dataset, &mut out))?;
    out.text(SUMMARY_FILE, serde_json::to_string_pretty(&summary)?);

    let outputs: BTreeMap<String, String> = out
        .0
        .iter()
        .map(|(p, b)| (p.clone(), sha256_hex(b)))
        .collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seeds,
        outputs,
    };
    out.text(MANIFEST_FILE, serde_json::to_string_pretty(&manifest)?);

    log(
        verbose,
        format!("writing {} files to {}", out.0.len(), output_dir.display()),
    );
    stage("write", write_all(output_dir, &out))?;
    Ok(RunReport {
        output_dir: output_dir.to_path_buf(),
        dataset,
        summary,
        manifest,
    })
}

fn acquire(config: &PipelineConfig, out: &mut Outputs, verbose: bool) -> Result<(Dataset, Seeds)> {
    let degrees = &config.persistence.degrees;
    let max_filtration = config.persistence.max_filtration;
    let no_sim = || Seeds {
        simulation: BTreeMap::new(),
        classification: config.classification.seed,
    };
    let (dataset, seeds) = match &config.source {
        Source::Simulate { .. } => {
            let (clouds, seeds) = simulate(config)?;
            if config.outputs.write_points {
                for (label, pcs) in &clouds {
                    for (i, pc) in pcs.iter().enumerate() {
                        out.text(
                            format!("points/{label}/{i:05}.csv"),
                            write_point_cloud_csv(pc),
                        );
                    }
                }
            }
            log(verbose, "persistent homology");
            (
                Dataset::from_point_clouds(&config.name, &clouds, degrees, max_filtration)?,
                seeds,
            )
        }
        Source::Points { dir } => {
            let clouds = read_point_cloud_dir(dir)?;
            (
                Dataset::from_point_clouds(&config.name, &clouds, degrees, max_filtration)?,
                no_sim(),
            )
        }
        Source::Barcodes { dir } => (
            Dataset::from_barcode_dir(&config.name, dir, degrees)?,
            no_sim(),
        ),
    };
    for (path, text) in dataset.files()? {
        out.text(path, text);
    }
    Ok((dataset, seeds))
}

/// Per class and degree, the pointwise mean of every sample's slice at each
/// `α`.
fn means_2d(
    contour: &Contour,
    dataset: &Dataset,
    alphas: &[ExtendedReal],
    out: &mut Outputs,
) -> Result<()> {
    for class in &dataset.classes {
        for (d, bs) in &class.barcodes {
            let grids = bs
                .par_iter()
                .map(|b| stable_rank_2d(contour, b, Some(alphas)))
                .collect::<stablerank_core::Result<Vec<_>>>()?;
            let slices = (0..alphas.len())
                .map(|k| pointwise_mean(grids.iter().map(|g| &g.slices()[k])))
                .collect::<stablerank_core::Result<Vec<StepFunction>>>()?;
            out.json(
                format!("means2d/{}.h{d}.json", class.label),
                &Grid2DFunction::new(alphas.to_vec(), slices)?,
            )?;
        }
    }
    Ok(())
}

fn plots(
    config: &PipelineConfig,
    contour: &Contour,
    dataset: &Dataset,
    out: &mut Outputs,
) -> Result<()> {
    let mut top: f64 = 0.0;
    for class in &dataset.classes {
        for (d, bs) in &class.barcodes {
            for (i, b) in bs
                .iter()
                .take(config.outputs.stem_plots_per_class)
                .enumerate()
            {
                out.text(
                    format!("stem_plots/{}.{i}.h{d}.csv", class.label),
                    write_stem_plot_csv(b),
                );
                top = top.max(max_finite_endpoint(b));
            }
        }
    }
    let lines = &config.outputs.contour_lines;
    if lines.ts.is_empty() {
        return Ok(());
    }
    let s_range = lines
        .s_range
        .unwrap_or((0.0, if top > 0.0 { top } else { 1.0 }));
    let computed = contour_lines(contour, &lines.ts, s_range, lines.samples)?;
    out.text("contour_lines.csv", write_contour_lines_csv(&computed));
    Ok(())
}

fn write_all(dir: &Path, out: &Outputs) -> Result<()> {
    for (rel, bytes) in &out.0 {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Recomputes the hashes of a run directory against its manifest; returns
/// the paths whose contents differ or are missing.
pub fn verify(dir: &Path) -> Result<Vec<String>> {
    let manifest: Manifest = serde_json::from_str(
        &std::fs::read_to_string(dir.join(MANIFEST_FILE))
            .with_context(|| format!("reading manifest in {}", dir.display()))?,
    )?;
    Ok(manifest
        .outputs
        .iter()
        .filter(|(rel, hash)| {
            std::fs::read(dir.join(rel))
                .map(|b| sha256_hex(&b))
                .ok()
                .as_ref()
                != Some(*hash)
        })
        .map(|(rel, _)| rel.clone())
        .collect())
}
