//! Subcommand implementations. Each returns the text to print so that the
//! binary, the tests and the server share one serialization.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use stablerank_core::io::{
    parse_barcode_file, parse_point_cloud_csv, write_barcode_csv, write_contour_lines_csv,
    write_point_cloud_csv, write_ripser, write_stem_plot_csv, BarcodeFormat,
};
use stablerank_core::{
    contour_lines, simulate_batch, stable_rank, stable_rank_2d, vr_persistence, Contour,
    CrossValidation, ExtendedReal, Process,
};

use crate::config::{
    load_contour, ClassificationConfig, PersistenceConfig, PipelineConfig, Source,
};
use crate::dataset::Dataset;
use crate::pipeline::{classify_all, stable_ranks};

/// Writes `count` realizations as `out/<name>/<seed>.csv`; returns the
/// directory written.
pub fn simulate(process: &Process, count: usize, seed: u64, out: &Path) -> Result<String> {
    let clouds = simulate_batch(process, count, seed)?;
    let dir = out.join(process.name());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, pc) in clouds.iter().enumerate() {
        let path = dir.join(format!("{:05}.csv", seed + i as u64));
        std::fs::write(&path, write_point_cloud_csv(pc))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(format!("{}\n", dir.display()))
}

/// Parses `--process` as a name or as a JSON spec.
pub fn parse_process(text: &str) -> Result<Process> {
    let p = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).context("parsing process JSON")?
    } else {
        Process::by_name(text)?
    };
    p.validate()?;
    Ok(p)
}

/// Barcodes of a point-cloud CSV in the requested format. CSV output holds a
/// single degree, so exactly one must be requested.
pub fn persist(
    input: &Path,
    degrees: &[usize],
    max_filtration: Option<f64>,
    format: BarcodeFormat,
) -> Result<String> {
    let text =
        std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let pc =
        parse_point_cloud_csv(&text).with_context(|| format!("parsing {}", input.display()))?;
    let bars = vr_persistence(&pc, degrees, max_filtration)?;
    Ok(match format {
        BarcodeFormat::RipserText => write_ripser(&bars),
        BarcodeFormat::Json => {
            serde_json::to_string(&bars.into_values().collect::<Vec<_>>())? + "\n"
        }
        BarcodeFormat::Csv => match degrees {
            [d] => write_barcode_csv(&bars[d]),
            _ => bail!("CSV output needs exactly one degree"),
        },
    })
}

/// The stable rank (or, with `alphas`, the 2D invariant) as one line of
/// JSON.
pub fn stablerank(
    contour: &Path,
    barcode: &Path,
    degree: usize,
    alphas: Option<&[ExtendedReal]>,
) -> Result<String> {
    let c = load_contour(contour)?;
    let b = parse_barcode_file(barcode, BarcodeFormat::from_path(barcode), degree)
        .with_context(|| format!("parsing {}", barcode.display()))?;
    let text = match alphas {
        None => serde_json::to_string(&stable_rank(&c, &b))?,
        Some(a) => serde_json::to_string(&stable_rank_2d(&c, &b, (!a.is_empty()).then_some(a))?)?,
    };
    Ok(text + "\n")
}

pub fn stemplot(barcode: &Path, degree: usize) -> Result<String> {
    let b = parse_barcode_file(barcode, BarcodeFormat::from_path(barcode), degree)
        .with_context(|| format!("parsing {}", barcode.display()))?;
    Ok(write_stem_plot_csv(&b))
}

pub fn contourlines(
    contour: &Contour,
    ts: &[f64],
    s_range: (f64, f64),
    samples: usize,
) -> Result<String> {
    Ok(write_contour_lines_csv(&contour_lines(
        contour, ts, s_range, samples,
    )?))
}

/// Cross-validates a stored dataset (a pipeline output directory) under a
/// contour; returns `{scheme: result}` JSON.
pub fn classify(
    dataset_dir: &Path,
    contour: &Contour,
    params: &ClassificationConfig,
) -> Result<String> {
    let dataset = Dataset::load(dataset_dir)?;
    let config = PipelineConfig {
        name: dataset.name.clone(),
        output_dir: None,
        source: Source::Barcodes {
            dir: dataset_dir.to_path_buf(),
        },
        persistence: PersistenceConfig {
            degrees: dataset.degrees.clone(),
            max_filtration: None,
        },
        contour: crate::config::ContourSource::Inline(contour.clone()),
        alphas: None,
        classification: params.clone(),
        outputs: Default::default(),
    };
    let results: BTreeMap<String, CrossValidation> =
        classify_all(&config, &stable_ranks(contour, &dataset))?;
    Ok(serde_json::to_string_pretty(&results)? + "\n")
}
