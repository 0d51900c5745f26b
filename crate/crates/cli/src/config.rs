//! Pipeline configuration, read from TOML (or from a run manifest, which
//! embeds the resolved configuration as JSON).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stablerank_core::{Contour, CrossValidationParams, ExtendedReal, Process};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Where artifacts go; overridden by `--out`. Not part of the manifest.
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub source: Source,
    #[serde(default)]
    pub persistence: PersistenceConfig,
    #[serde(default)]
    pub contour: ContourSource,
    /// Truncation grid for 2D mean invariants; none by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<ExtendedReal>>,
    #[serde(default)]
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_name() -> String {
    "run".into()
}

/// Where the point clouds or barcodes come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Source {
    /// Simulate every process; class `k` uses seeds
    /// `base_seed + k * samples_per_class + i`.
    Simulate {
        #[serde(default = "default_samples")]
        samples_per_class: usize,
        #[serde(default)]
        base_seed: u64,
        #[serde(default = "default_processes")]
        processes: Vec<ProcessEntry>,
    },
    /// Point-cloud CSV files under `dir/<label>/`.
    Points { dir: PathBuf },
    /// Precomputed barcodes under `dir/<label>/`: Ripser text (`.txt`, all
    /// degrees), JSON (`.json`, a list of barcodes) or CSV (`.h<d>.csv`).
    Barcodes { dir: PathBuf },
}

fn default_samples() -> usize {
    500
}

fn default_processes() -> Vec<ProcessEntry> {
    Process::NAMES
        .iter()
        .map(|n| ProcessEntry::Name(n.to_string()))
        .collect()
}

/// A process by name (published defaults) or with explicit parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProcessEntry {
    Name(String),
    Spec(Process),
}

impl ProcessEntry {
    pub fn resolve(&self) -> Result<Process> {
        let p = match self {
            Self::Name(n) => Process::by_name(n)?,
            Self::Spec(p) => p.clone(),
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistenceConfig {
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_filtration: Option<f64>,
}

fn default_degrees() -> Vec<usize> {
    vec![0, 1]
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        Self {
            degrees: default_degrees(),
            max_filtration: None,
        }
    }
}

/// Inline contour, or `{ file = "contour.json" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ContourSource {
    File { file: PathBuf },
    Inline(Contour),
}

impl Default for ContourSource {
    fn default() -> Self {
        Self::Inline(Contour::standard())
    }
}

impl ContourSource {
    pub fn resolve(&self, base: &Path) -> Result<Contour> {
        match self {
            Self::Inline(c) => Ok(c.clone()),
            Self::File { file } => load_contour(&base.join(file)),
        }
    }
}

pub fn load_contour(path: &Path) -> Result<Contour> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading contour {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing contour {}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    #[serde(default = "default_train_size")]
    pub train_size: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Also classify with the summed distance over all degrees.
    #[serde(default = "default_true")]
    pub combined: bool,
}

fn default_train_size() -> usize {
    200
}
fn default_folds() -> usize {
    20
}
fn default_p() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            train_size: default_train_size(),
            folds: default_folds(),
            seed: 0,
            p: default_p(),
            combined: true,
        }
    }
}

impl ClassificationConfig {
    pub fn params(&self) -> CrossValidationParams {
        CrossValidationParams {
            train_size: self.train_size,
            folds: self.folds,
            seed: self.seed,
            p: self.p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Stem plots for the first few samples of every class and degree.
    #[serde(default = "default_stem_plots")]
    pub stem_plots_per_class: usize,
    #[serde(default)]
    pub contour_lines: ContourLinesConfig,
    /// Write every simulated point cloud as CSV.
    #[serde(default)]
    pub write_points: bool,
}

fn default_stem_plots() -> usize {
    2
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            stem_plots_per_class: default_stem_plots(),
            contour_lines: ContourLinesConfig::default(),
            write_points: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourLinesConfig {
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    /// Defaults to `[0, largest finite endpoint]` over the stem-plotted bars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_range: Option<(f64, f64)>,
    #[serde(default = "default_line_samples")]
    pub samples: usize,
}

fn default_ts() -> Vec<f64> {
    vec![0.01, 0.02, 0.05]
}
fn default_line_samples() -> usize {
    50
}

impl Default for ContourLinesConfig {
    fn default() -> Self {
        Self {
            ts: default_ts(),
            s_range: None,
            samples: default_line_samples(),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML config, or the configuration embedded in a run manifest
    /// (`.json`). Contour files are resolved relative to the config's
    /// directory, so the returned config is self-contained.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Self = if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct ManifestView {
                config: PipelineConfig,
            }
            serde_json::from_str::<ManifestView>(&text)
                .with_context(|| format!("parsing manifest {}", path.display()))?
                .config
        } else {
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base)?;
        Ok(config)
    }

    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut config: Self = toml::from_str(text)?;
        config.resolve_paths(base)?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        self.contour = ContourSource::Inline(self.contour.resolve(base)?);
        match &mut self.source {
            Source::Points { dir } | Source::Barcodes { dir } if dir.is_relative() => {
                *dir = base.join(&*dir)
            }
            _ => {}
        }
        if let Some(out) = &self.output_dir {
            if out.is_relative() {
                self.output_dir = Some(base.join(out));
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.persistence.degrees.is_empty() {
            bail!("persistence.degrees is empty");
        }
        if let Some(d) = self.persistence.degrees.iter().find(|d| **d > 1) {
            bail!("degree {d} is not supported (0 and 1 only)");
        }
        if let Source::Simulate {
            samples_per_class,
            processes,
            ..
        } = &self.source
        {
            if *samples_per_class == 0 || processes.is_empty() {
                bail!("simulation needs at least one process and one sample");
            }
            let mut seen = std::collections::BTreeSet::new();
            for p in processes {
                if !seen.insert(p.resolve()?.name()) {
                    bail!(
                        "process {} is listed twice; class labels must be unique",
                        p.resolve()?.name()
                    );
                }
            }
        }
        Ok(())
    }

    pub fn contour(&self) -> Contour {
        match &self.contour {
            ContourSource::Inline(c) => c.clone(),
            ContourSource::File { .. } => unreachable!("contour files are resolved on load"),
        }
    }
}
