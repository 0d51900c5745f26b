//! Vietoris-Rips persistent homology over the two-element field in degrees
//! 0 and 1.
//!
//! Simplices are totally ordered by filtration value, then dimension, then
//! lexicographic vertex tuple. Degree 0 is single linkage via union-find.
//! Degree 1 reduces the coboundary matrix of the edges (processed in reverse
//! filtration order) against the triangles, with edges that kill components
//! cleared up front; the resulting pairs coincide with the pairs of the
//! ordinary boundary-matrix reduction.

use std::collections::{BTreeMap, HashMap};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stable_rank::{Bar, Barcode};

/// A finite set of points in `R^d`, `d ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for PointCloud {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        PointCloud::new(points)
    }
}

impl From<PointCloud> for Vec<Vec<f64>> {
    fn from(pc: PointCloud) -> Self {
        pc.points().map(<[f64]>::to_vec).collect()
    }
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidPointCloud("no points".into()))?;
        if dim == 0 {
            return Err(Error::InvalidPointCloud(
                "points have no coordinates".into(),
            ));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidPointCloud(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPointCloud(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
            coords.extend_from_slice(p);
        }
        Ok(Self { dim, coords })
    }

    /// Planar points; the simulators produce these.
    pub fn from_xy(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, y)| vec![x, y]).collect())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}

/// Symmetric matrix of non-negative distances with zero diagonal. The
/// triangle inequality is not required.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// `entries` is row-major `n × n`.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in 0..i {
                let d = entries[i * n + j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) = {d} is not a distance"
                    )));
                }
                if d != entries[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Largest entry; 0 for fewer than two points.
    pub fn diameter(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// `min_i max_j d(i, j)`; 0 for fewer than two points. From this scale on
    /// the Rips complex is a cone on the minimizing point.
    pub fn enclosing_radius(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|d| d * factor).collect(),
        }
    }
}

/// Euclidean distances; symmetric by construction.
pub fn pairwise_distances(pc: &PointCloud) -> DistanceMatrix {
    let n = pc.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = pc
                .point(i)
                .iter()
                .zip(pc.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    DistanceMatrix { n, entries }
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    length: f64,
    u: u32,
    v: u32,
}

/// Edges `u < v` of length at most `cap`, in filtration order.
fn sorted_edges(dm: &DistanceMatrix, cap: f64) -> Vec<Edge> {
    let n = dm.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let length = dm.get(u, v);
            if length <= cap {
                edges.push(Edge {
                    length,
                    u: u as u32,
                    v: v as u32,
                });
            }
        }
    }
    edges.sort_by(|a, b| {
        a.length
            .total_cmp(&b.length)
            .then((a.u, a.v).cmp(&(b.u, b.v)))
    });
    edges
}

/// Degree-0 bars and, per edge, whether it merges two components.
fn h0_pairs(n: usize, edges: &[Edge]) -> (Barcode, Vec<bool>) {
    let mut components = UnionFind::<u32>::new(n);
    let mut merges = vec![false; edges.len()];
    let mut bars = Vec::with_capacity(n);
    let mut remaining = n;
    for (k, e) in edges.iter().enumerate() {
        if remaining == 1 {
            break;
        }
        if components.union(e.u, e.v) {
            merges[k] = true;
            remaining -= 1;
            if e.length > 0.0 {
                bars.push(Bar::finite(0.0, e.length).expect("positive merge length"));
            }
        }
    }
    bars.extend((0..remaining).map(|_| Bar::infinite(0.0).unwrap()));
    (Barcode::new(0, bars), merges)
}

/// Degree-0 barcode: one bar `(0, ℓ)` per merge at positive length `ℓ` and
/// one infinite bar per connected component. Merges at length 0 (duplicate
/// points) have zero length and are dropped.
pub fn vr_h0(dm: &DistanceMatrix) -> Barcode {
    h0_pairs(dm.len(), &sorted_edges(dm, dm.enclosing_radius())).0
}

/// Degree-1 output. `capped` counts the cycles still alive at the filtration
/// cap; they appear in `barcode` as infinite bars.
#[derive(Clone, Debug, PartialEq)]
pub struct H1Result {
    pub barcode: Barcode,
    pub capped: usize,
}

/// A triangle keyed by its filtration position.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Triangle {
    diameter: f64,
    /// `(i << 42) | (j << 21) | k` for `i < j < k`; integer order is the
    /// lexicographic order of the vertex tuple.
    vertices: u64,
}

impl Triangle {
    fn new(diameter: f64, mut tri: [u32; 3]) -> Self {
        tri.sort_unstable();
        Self {
            diameter,
            vertices: (u64::from(tri[0]) << 42) | (u64::from(tri[1]) << 21) | u64::from(tri[2]),
        }
    }

    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.diameter
            .total_cmp(&other.diameter)
            .then(self.vertices.cmp(&other.vertices))
    }
}

/// Symmetric difference of two sorted columns.
fn add_columns(a: &[Triangle], b: &[Triangle]) -> Vec<Triangle> {
    use std::cmp::Ordering::*;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Less => {
                out.push(a[i]);
                i += 1;
            }
            Greater => {
                out.push(b[j]);
                j += 1;
            }
            Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

const MAX_POINTS: usize = 1 << 21;

/// Cofacets of edge `e` up to the cap, unsorted.
fn coboundary<'a>(
    dm: &'a DistanceMatrix,
    cap: f64,
    e: &'a Edge,
) -> impl Iterator<Item = Triangle> + 'a {
    let (u, v) = (e.u as usize, e.v as usize);
    (0..dm.len()).filter_map(move |w| {
        if w == u || w == v {
            return None;
        }
        let diameter = e.length.max(dm.get(u, w)).max(dm.get(v, w));
        (diameter <= cap).then(|| Triangle::new(diameter, [e.u, e.v, w as u32]))
    })
}

fn sorted_coboundary(dm: &DistanceMatrix, cap: f64, e: &Edge) -> Vec<Triangle> {
    let mut column: Vec<Triangle> = coboundary(dm, cap, e).collect();
    column.sort_unstable_by(Triangle::cmp);
    column
}

/// A reduced column owning a pivot. Columns that needed no additions are
/// the plain coboundary of their edge and are rebuilt on demand.
enum Reduced {
    Coboundary(usize),
    Explicit(Vec<Triangle>),
}

fn h1_pairs(dm: &DistanceMatrix, cap: f64, edges: &[Edge], cleared: &[bool]) -> H1Result {
    let mut pivots: HashMap<u64, usize> = HashMap::new();
    let mut reduced: Vec<Reduced> = Vec::new();
    let mut bars = Vec::new();
    let mut capped = 0;

    for (k, e) in edges.iter().enumerate().rev() {
        if cleared[k] {
            continue;
        }
        let first = coboundary(dm, cap, e).min_by(Triangle::cmp);
        let pivot = match first {
            Some(t) if !pivots.contains_key(&t.vertices) => {
                pivots.insert(t.vertices, reduced.len());
                reduced.push(Reduced::Coboundary(k));
                Some(t)
            }
            None => None,
            Some(_) => {
                let mut column = sorted_coboundary(dm, cap, e);
                while let Some(&other) = column.first().and_then(|p| pivots.get(&p.vertices)) {
                    column = match &reduced[other] {
                        Reduced::Coboundary(j) => {
                            add_columns(&column, &sorted_coboundary(dm, cap, &edges[*j]))
                        }
                        Reduced::Explicit(c) => add_columns(&column, c),
                    };
                }
                let pivot = column.first().copied();
                if let Some(t) = pivot {
                    pivots.insert(t.vertices, reduced.len());
                    reduced.push(Reduced::Explicit(column));
                }
                pivot
            }
        };
        match pivot {
            Some(t) => {
                if t.diameter > e.length {
                    bars.push(Bar::finite(e.length, t.diameter).expect("death after birth"));
                }
            }
            None => {
                capped += 1;
                bars.push(Bar::infinite(e.length).unwrap());
            }
        }
    }
    H1Result {
        barcode: Barcode::new(1, bars),
        capped,
    }
}

/// The filtration is only built up to the enclosing radius: the complex is
/// contractible from there on, so no degree-0 or degree-1 pair is lost.
fn check_cap(max_filtration: Option<f64>, dm: &DistanceMatrix) -> Result<f64> {
    let radius = dm.enclosing_radius();
    match max_filtration {
        None => Ok(radius),
        Some(cap) if cap > 0.0 && !cap.is_nan() => Ok(cap.min(radius)),
        Some(cap) => Err(Error::InvalidArgument(format!(
            "max_filtration must be positive, got {cap}"
        ))),
    }
}

/// Degree-1 barcode of the Rips filtration up to `max_filtration` (default:
/// no cap). Zero-length pairs are dropped.
pub fn vr_h1(dm: &DistanceMatrix, max_filtration: Option<f64>) -> Result<H1Result> {
    let cap = check_cap(max_filtration, dm)?;
    if dm.len() >= MAX_POINTS {
        return Err(Error::InvalidArgument(format!(
            "at most {} points are supported",
            MAX_POINTS - 1
        )));
    }
    let edges = sorted_edges(dm, cap);
    let (_, merges) = h0_pairs(dm.len(), &edges);
    Ok(h1_pairs(dm, cap, &edges, &merges))
}

/// Barcodes of the requested degrees (each 0 or 1).
pub fn vr_persistence_dm(
    dm: &DistanceMatrix,
    degrees: &[usize],
    max_filtration: Option<f64>,
) -> Result<BTreeMap<usize, Barcode>> {
    if let Some(d) = degrees.iter().find(|d| **d > 1) {
        return Err(Error::UnsupportedDegree(*d));
    }
    let mut out = BTreeMap::new();
    if degrees.is_empty() {
        return Ok(out);
    }
    let cap = check_cap(max_filtration, dm)?;
    if dm.len() >= MAX_POINTS {
        return Err(Error::InvalidArgument(format!(
            "at most {} points are supported",
            MAX_POINTS - 1
        )));
    }
    let edges = sorted_edges(dm, cap);
    let (h0, merges) = h0_pairs(dm.len(), &edges);
    if degrees.contains(&1) {
        out.insert(1, h1_pairs(dm, cap, &edges, &merges).barcode);
    }
    if degrees.contains(&0) {
        out.insert(0, h0);
    }
    Ok(out)
}

/// [`pairwise_distances`] followed by [`vr_persistence_dm`].
pub fn vr_persistence(
    pc: &PointCloud,
    degrees: &[usize],
    max_filtration: Option<f64>,
) -> Result<BTreeMap<usize, Barcode>> {
    vr_persistence_dm(&pairwise_distances(pc), degrees, max_filtration)
}

/// Largest finite death (or birth, for infinite bars) in a barcode; handy
/// for choosing plot ranges.
pub fn max_finite_endpoint(b: &Barcode) -> f64 {
    b.bars
        .iter()
        .map(|bar| bar.death().as_finite().unwrap_or(bar.birth()))
        .fold(0.0, f64::max)
}
