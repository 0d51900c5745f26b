//! Labeled barcode collections and their on-disk layout:
//!
//! ```text
//! dataset.json                 name, degrees, labels and counts
//! barcodes/<label>.h<d>.json   one JSON list of barcodes per class and degree
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stablerank_core::io::{parse_barcode_csv, parse_point_cloud_csv, parse_ripser};
use stablerank_core::{vr_persistence, Barcode, PointCloud};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub degrees: Vec<usize>,
    pub classes: Vec<Class>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Class {
    pub label: String,
    /// Same length for every degree.
    pub barcodes: BTreeMap<usize, Vec<Barcode>>,
}

impl Class {
    pub fn len(&self) -> usize {
        self.barcodes.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub name: String,
    pub degrees: Vec<usize>,
    pub classes: Vec<ClassIndex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassIndex {
    pub label: String,
    pub count: usize,
}

pub const INDEX_FILE: &str = "dataset.json";

pub fn barcode_file(label: &str, degree: usize) -> String {
    format!("barcodes/{label}.h{degree}.json")
}

/// Labels end up in file names, so keep them to a safe alphabet.
pub fn check_label(label: &str) -> Result<()> {
    let ok = !label.is_empty()
        && !label.starts_with('.')
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if !ok {
        bail!("label {label:?} must be non-empty ASCII letters, digits, '-', '_' or '.'");
    }
    Ok(())
}

impl Dataset {
    pub fn index(&self) -> DatasetIndex {
        DatasetIndex {
            name: self.name.clone(),
            degrees: self.degrees.clone(),
            classes: self
                .classes
                .iter()
                .map(|c| ClassIndex {
                    label: c.label.clone(),
                    count: c.len(),
                })
                .collect(),
        }
    }

    pub fn class(&self, label: &str) -> Option<&Class> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Files (relative path, contents) making up the dataset.
    pub fn files(&self) -> Result<Vec<(String, String)>> {
        let mut out = vec![(
            INDEX_FILE.to_string(),
            serde_json::to_string_pretty(&self.index())?,
        )];
        for class in &self.classes {
            for (d, bs) in &class.barcodes {
                out.push((barcode_file(&class.label, *d), serde_json::to_string(bs)?));
            }
        }
        Ok(out)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let index_path = dir.join(INDEX_FILE);
        let index: DatasetIndex = serde_json::from_str(
            &std::fs::read_to_string(&index_path)
                .with_context(|| format!("reading {}", index_path.display()))?,
        )
        .with_context(|| format!("parsing {}", index_path.display()))?;
        let mut classes = Vec::new();
        for c in &index.classes {
            check_label(&c.label)?;
            let mut barcodes = BTreeMap::new();
            for d in &index.degrees {
                let path = dir.join(barcode_file(&c.label, *d));
                let bs: Vec<Barcode> = serde_json::from_str(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )
                .with_context(|| format!("parsing {}", path.display()))?;
                if bs.len() != c.count {
                    bail!(
                        "{} has {} barcodes, index says {}",
                        path.display(),
                        bs.len(),
                        c.count
                    );
                }
                if let Some(b) = bs.iter().find(|b| b.degree != *d) {
                    bail!("{} contains a degree-{} barcode", path.display(), b.degree);
                }
                barcodes.insert(*d, bs);
            }
            classes.push(Class {
                label: c.label.clone(),
                barcodes,
            });
        }
        Ok(Self {
            name: index.name,
            degrees: index.degrees,
            classes,
        })
    }

    /// Persistence of labeled point clouds.
    pub fn from_point_clouds(
        name: &str,
        clouds: &[(String, Vec<PointCloud>)],
        degrees: &[usize],
        max_filtration: Option<f64>,
    ) -> Result<Self> {
        let mut classes = Vec::new();
        for (label, pcs) in clouds {
            check_label(label)?;
            let per_cloud = pcs
                .par_iter()
                .map(|pc| vr_persistence(pc, degrees, max_filtration))
                .collect::<stablerank_core::Result<Vec<_>>>()
                .with_context(|| format!("persistence of class {label}"))?;
            let mut barcodes: BTreeMap<usize, Vec<Barcode>> =
                degrees.iter().map(|d| (*d, Vec::new())).collect();
            for mut bars in per_cloud {
                for d in degrees {
                    barcodes.get_mut(d).unwrap().push(bars.remove(d).unwrap());
                }
            }
            classes.push(Class {
                label: label.clone(),
                barcodes,
            });
        }
        Ok(Self {
            name: name.into(),
            degrees: degrees.to_vec(),
            classes,
        })
    }

    /// Precomputed barcodes under `dir/<label>/`, one sample per file stem.
    /// `.txt` files are Ripser output (all degrees), `.json` files hold a list
    /// of barcodes, `<stem>.h<d>.csv` files hold one degree each. Missing
    /// degrees count as empty barcodes.
    pub fn from_barcode_dir(name: &str, dir: &Path, degrees: &[usize]) -> Result<Self> {
        let mut classes = Vec::new();
        for (label, files) in labeled_files(dir)? {
            let mut samples: BTreeMap<String, BTreeMap<usize, Barcode>> = BTreeMap::new();
            for path in files {
                let file_name = path.file_name().unwrap().to_string_lossy().into_owned();
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let ctx = || format!("parsing {}", path.display());
                if let Some(stem) = file_name.strip_suffix(".txt") {
                    let parsed = parse_ripser(&text).with_context(ctx)?;
                    samples.entry(stem.into()).or_default().extend(parsed);
                } else if let Some(stem) = file_name.strip_suffix(".json") {
                    let parsed: Vec<Barcode> = serde_json::from_str(&text).with_context(ctx)?;
                    let entry = samples.entry(stem.into()).or_default();
                    entry.extend(parsed.into_iter().map(|b| (b.degree, b)));
                } else if let Some(rest) = file_name.strip_suffix(".csv") {
                    let Some((stem, degree)) = rest
                        .rsplit_once(".h")
                        .and_then(|(s, d)| Some((s, d.parse().ok()?)))
                    else {
                        bail!(
                            "{}: CSV barcode files must be named <sample>.h<degree>.csv",
                            path.display()
                        );
                    };
                    let b = parse_barcode_csv(&text, degree).with_context(ctx)?;
                    samples.entry(stem.into()).or_default().insert(degree, b);
                }
            }
            let mut barcodes: BTreeMap<usize, Vec<Barcode>> =
                degrees.iter().map(|d| (*d, Vec::new())).collect();
            for sample in samples.values_mut() {
                for d in degrees {
                    let b = sample.remove(d).unwrap_or_else(|| Barcode::empty(*d));
                    barcodes.get_mut(d).unwrap().push(b);
                }
            }
            classes.push(Class { label, barcodes });
        }
        finish(name, degrees, classes, dir)
    }
}

fn finish(name: &str, degrees: &[usize], classes: Vec<Class>, dir: &Path) -> Result<Dataset> {
    if classes.is_empty() || classes.iter().any(Class::is_empty) {
        bail!(
            "{}: every class directory needs at least one sample",
            dir.display()
        );
    }
    Ok(Dataset {
        name: name.into(),
        degrees: degrees.to_vec(),
        classes,
    })
}

/// `dir/<label>/<file>` pairs, sorted by label then file name.
fn labeled_files(dir: &Path) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let label = entry.file_name().to_string_lossy().into_owned();
        check_label(&label)?;
        let mut files = Vec::new();
        for f in std::fs::read_dir(entry.path())? {
            let f = f?;
            if f.file_type()?.is_file() {
                files.push(f.path());
            }
        }
        files.sort();
        out.push((label, files));
    }
    out.sort();
    Ok(out)
}

/// Point-cloud CSV files under `dir/<label>/*.csv`.
/// Point clouds grouped by class label.
pub type LabeledClouds = Vec<(String, Vec<PointCloud>)>;

pub fn read_point_cloud_dir(dir: &Path) -> Result<LabeledClouds> {
    let mut out = Vec::new();
    for (label, files) in labeled_files(dir)? {
        let mut clouds = Vec::new();
        for path in files
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        {
            let text = std::fs::read_to_string(path)?;
            clouds.push(
                parse_point_cloud_csv(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            );
        }
        if clouds.is_empty() {
            bail!("{}/{label} has no .csv point clouds", dir.display());
        }
        out.push((label, clouds));
    }
    if out.is_empty() {
        bail!("{} has no class directories", dir.display());
    }
    Ok(out)
}
