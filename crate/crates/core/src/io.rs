//! Text formats: barcodes (CSV, Ripser text, JSON), stem plots, point
//! clouds, contour lines and confusion matrices. Infinity is written as
//! `inf` everywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classification::ConfusionMatrix;
use crate::contour::ContourLine;
use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::persistence::PointCloud;
use crate::stable_rank::{Bar, Barcode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarcodeFormat {
    Csv,
    RipserText,
    Json,
}

impl FromStr for BarcodeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "ripser" | "ripser-text" => Ok(Self::RipserText),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown barcode format {other:?}"
            ))),
        }
    }
}

impl BarcodeFormat {
    /// Guesses the format from a file extension (`.csv`, `.json`, anything
    /// else is Ripser text).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::Csv,
            Some("json") => Self::Json,
            _ => Self::RipserText,
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Attaches the line number when the CSV reader knows it.
fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => parse_error(pos.line() as usize, e.to_string()),
        None => Error::Csv(e),
    }
}

fn bar_at(line: usize, birth: &str, death: &str) -> Result<Bar> {
    let birth: f64 = birth
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse birth {:?}", birth.trim())))?;
    if !birth.is_finite() || birth < 0.0 {
        return Err(parse_error(
            line,
            format!("birth {birth} must be finite and non-negative"),
        ));
    }
    let death = death.trim();
    let death = if death.is_empty() {
        ExtendedReal::INFINITY
    } else {
        death
            .parse::<ExtendedReal>()
            .map_err(|_| parse_error(line, format!("cannot parse death {death:?}")))?
    };
    Bar::new(birth, death).map_err(|e| parse_error(line, e.to_string()))
}

/// CSV with header `birth,death`.
pub fn parse_barcode_csv(text: &str, degree: usize) -> Result<Barcode> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 || &headers[0] != "birth" || &headers[1] != "death" {
        return Err(parse_error(1, "expected header birth,death"));
    }
    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_error(
                line,
                format!("expected 2 fields, found {}", record.len()),
            ));
        }
        if record[1].is_empty() {
            return Err(parse_error(line, "missing death"));
        }
        bars.push(bar_at(line, &record[0], &record[1])?);
    }
    Ok(Barcode::new(degree, bars))
}

pub fn write_barcode_csv(b: &Barcode) -> String {
    let mut out = String::from("birth,death\n");
    for bar in &b.bars {
        writeln!(out, "{},{}", bar.birth(), bar.death()).unwrap();
    }
    out
}

const RIPSER_HEADER: &str = "persistence intervals in dim ";
const RIPSER_INFO: [&str; 4] = [
    "value range:",
    "distance matrix",
    "sparse distance matrix",
    "point cloud",
];

/// Ripser's text output: `[b,d)` lines under `persistence intervals in dim k:`
/// headers, `[b, )` for infinite bars.
pub fn parse_ripser(text: &str) -> Result<BTreeMap<usize, Barcode>> {
    let mut out = BTreeMap::new();
    let mut current: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || RIPSER_INFO.iter().any(|p| s.starts_with(p)) {
            continue;
        }
        if let Some(rest) = s.strip_prefix(RIPSER_HEADER) {
            let degree = rest
                .trim_end_matches(':')
                .trim()
                .parse()
                .map_err(|_| parse_error(line, format!("bad dimension header {s:?}")))?;
            out.entry(degree).or_insert_with(|| Barcode::empty(degree));
            current = Some(degree);
            continue;
        }
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| parse_error(line, format!("expected an interval [b,d), found {s:?}")))?;
        let (birth, death) = inner
            .split_once(',')
            .ok_or_else(|| parse_error(line, format!("interval {s:?} has no comma")))?;
        let degree =
            current.ok_or_else(|| parse_error(line, "interval before any dimension header"))?;
        let bar = bar_at(line, birth, death)?;
        out.get_mut(&degree).unwrap().bars.push(bar);
    }
    Ok(out)
}

pub fn write_ripser(barcodes: &BTreeMap<usize, Barcode>) -> String {
    let mut out = String::new();
    for (degree, b) in barcodes {
        writeln!(out, "{RIPSER_HEADER}{degree}:").unwrap();
        for bar in &b.bars {
            match bar.death().as_finite() {
                Some(d) => writeln!(out, " [{},{})", bar.birth(), d).unwrap(),
                None => writeln!(out, " [{}, )", bar.birth()).unwrap(),
            }
        }
    }
    out
}

/// Reads one barcode. For Ripser text `degree` selects the section (missing
/// sections give an empty barcode); for CSV it labels the result; JSON
/// carries its own degree.
pub fn parse_barcode_file(path: &Path, format: BarcodeFormat, degree: usize) -> Result<Barcode> {
    let text = std::fs::read_to_string(path)?;
    parse_barcode_str(&text, format, degree)
}

pub fn parse_barcode_str(text: &str, format: BarcodeFormat, degree: usize) -> Result<Barcode> {
    match format {
        BarcodeFormat::Csv => parse_barcode_csv(text, degree),
        BarcodeFormat::Json => Ok(serde_json::from_str(text)?),
        BarcodeFormat::RipserText => Ok(parse_ripser(text)?
            .remove(&degree)
            .unwrap_or_else(|| Barcode::empty(degree))),
    }
}

/// One stem `(s, e − s)`; `multiplicity_index` counts earlier stems with the
/// same birth.
#[derive(Clone, Debug, PartialEq)]
pub struct Stem {
    pub birth: f64,
    pub length: ExtendedReal,
    pub multiplicity_index: usize,
}

/// Stems sorted by birth, then length.
pub fn stem_plot(b: &Barcode) -> Vec<Stem> {
    let mut bars = b.bars.clone();
    bars.sort_by(|x, y| {
        x.birth()
            .total_cmp(&y.birth())
            .then(x.length().cmp(&y.length()))
    });
    let mut stems: Vec<Stem> = Vec::with_capacity(bars.len());
    for bar in bars {
        let multiplicity_index = match stems.last() {
            Some(prev) if prev.birth == bar.birth() => prev.multiplicity_index + 1,
            _ => 0,
        };
        stems.push(Stem {
            birth: bar.birth(),
            length: bar.length(),
            multiplicity_index,
        });
    }
    stems
}

pub fn write_stem_plot_csv(b: &Barcode) -> String {
    let mut out = String::from("s,length,multiplicity_index\n");
    for stem in stem_plot(b) {
        writeln!(
            out,
            "{},{},{}",
            stem.birth, stem.length, stem.multiplicity_index
        )
        .unwrap();
    }
    out
}

pub fn emit_stem_plot(b: &Barcode, path: &Path) -> Result<()> {
    std::fs::write(path, write_stem_plot_csv(b))?;
    Ok(())
}

/// Reads a stem-plot CSV back into a barcode.
pub fn parse_stem_plot_csv(text: &str, degree: usize) -> Result<Barcode> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(parse_error(line, "expected s,length,multiplicity_index"));
        }
        let s: f64 = record[0].parse().map_err(|_| parse_error(line, "bad s"))?;
        let length: ExtendedReal = record[1]
            .parse()
            .map_err(|_| parse_error(line, "bad length"))?;
        let death = if length.is_infinite() {
            "inf".to_string()
        } else {
            (s + length.value()).to_string()
        };
        bars.push(bar_at(line, &record[0], &death)?);
    }
    Ok(Barcode::new(degree, bars))
}

/// One point per row, comma-separated coordinates, no header.
pub fn parse_point_cloud_csv(text: &str) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let point = record
            .iter()
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| parse_error(line, format!("bad coordinate {x:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(point);
    }
    PointCloud::new(points)
}

pub fn write_point_cloud_csv(pc: &PointCloud) -> String {
    let mut out = String::new();
    for p in pc.points() {
        let row: Vec<String> = p.iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns `t,s,height`.
pub fn write_contour_lines_csv(lines: &[ContourLine]) -> String {
    let mut out = String::from("t,s,height\n");
    for line in lines {
        for (s, h) in &line.samples {
            writeln!(out, "{},{},{}", line.t, s, h).unwrap();
        }
    }
    out
}

/// First row: `true\predicted` followed by the labels; then one row per
/// true class.
pub fn write_confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("true\\predicted");
    for l in &cm.labels {
        write!(out, ",{l}").unwrap();
    }
    out.push('\n');
    for (l, row) in cm.labels.iter().zip(&cm.counts) {
        out.push_str(l);
        for x in row {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}
