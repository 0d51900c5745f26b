//! Point processes on the unit square with deterministic seeding.
//!
//! All randomness comes from a ChaCha8 generator seeded with the spec's
//! seed. Cluster children (Matérn, Thomas) and Normal points are kept even
//! when they fall outside `[0, 1]²`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::PointCloud;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Process {
    /// `N ~ Poisson(λ)` uniform points.
    Poisson { lambda: f64 },
    /// `N ~ Poisson(λ)` points with i.i.d. `N(μ, σ²)` coordinates.
    Normal { lambda: f64, mu: f64, sigma: f64 },
    /// Poisson(κ) parents, Poisson(μ) children per parent, uniform on the
    /// disk of radius `r` around the parent.
    Matern { kappa: f64, mu: f64, radius: f64 },
    /// As Matérn with isotropic normal children of standard deviation `sigma`.
    Thomas { kappa: f64, mu: f64, sigma: f64 },
    /// Per tile of side `tile_side`, 0, 1 or 10 uniform points with
    /// probabilities 1/10, 8/9, 1/90.
    BaddeleySilverman { tile_side: f64 },
    /// An iterated function system orbit of length `1 + N`, `N ~ Poisson(λ)`.
    Ifs { lambda: f64 },
}

impl Process {
    pub const NAMES: [&'static str; 6] = [
        "poisson",
        "normal",
        "matern",
        "thomas",
        "baddeley-silverman",
        "ifs",
    ];

    /// The process with its default parameters, by CLI name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "poisson" => Self::Poisson { lambda: 200.0 },
            "normal" => Self::Normal {
                lambda: 200.0,
                mu: 0.5,
                sigma: 0.2,
            },
            "matern" => Self::Matern {
                kappa: 40.0,
                mu: 5.0,
                radius: 0.1,
            },
            "thomas" => Self::Thomas {
                kappa: 40.0,
                mu: 5.0,
                sigma: 0.1,
            },
            "baddeley-silverman" => Self::BaddeleySilverman {
                tile_side: 1.0 / 14.0,
            },
            "ifs" => Self::Ifs { lambda: 200.0 },
            other => return Err(Error::InvalidProcess(format!("unknown process {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Poisson { .. } => "poisson",
            Self::Normal { .. } => "normal",
            Self::Matern { .. } => "matern",
            Self::Thomas { .. } => "thomas",
            Self::BaddeleySilverman { .. } => "baddeley-silverman",
            Self::Ifs { .. } => "ifs",
        }
    }

    /// All six processes with default parameters.
    pub fn defaults() -> Vec<Self> {
        Self::NAMES
            .iter()
            .map(|n| Self::by_name(n).unwrap())
            .collect()
    }

    /// Expected number of points per sample.
    pub fn expected_points(&self) -> f64 {
        match *self {
            Self::Poisson { lambda } | Self::Normal { lambda, .. } => lambda,
            Self::Matern { kappa, mu, .. } | Self::Thomas { kappa, mu, .. } => kappa * mu,
            Self::BaddeleySilverman { tile_side } => (1.0 / tile_side).round().powi(2),
            Self::Ifs { lambda } => lambda + 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidProcess(format!(
                    "{name} must be positive and finite, got {x}"
                )))
            }
        };
        match *self {
            Self::Poisson { lambda } | Self::Ifs { lambda } => positive("lambda", lambda),
            Self::Normal { lambda, mu, sigma } => {
                positive("lambda", lambda)?;
                positive("sigma", sigma)?;
                if mu.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidProcess("mu must be finite".into()))
                }
            }
            Self::Matern { kappa, mu, radius } => {
                positive("kappa", kappa)?;
                positive("mu", mu)?;
                positive("radius", radius)
            }
            Self::Thomas { kappa, mu, sigma } => {
                positive("kappa", kappa)?;
                positive("mu", mu)?;
                positive("sigma", sigma)
            }
            Self::BaddeleySilverman { tile_side } => tiles_per_side(tile_side).map(|_| ()),
        }
    }
}

/// A process together with the seed of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub process: Process,
    pub seed: u64,
}

fn tiles_per_side(tile_side: f64) -> Result<usize> {
    let count = (1.0 / tile_side).round();
    if !(tile_side > 0.0) || count < 1.0 || ((count * tile_side) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProcess(format!(
            "tile side {tile_side} does not divide the unit square"
        )));
    }
    Ok(count as usize)
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn uniform_square(rng: &mut ChaCha8Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect()
}

fn finish(points: Vec<(f64, f64)>) -> Result<PointCloud> {
    if points.is_empty() {
        return Err(Error::InvalidProcess(
            "the realization has no points".into(),
        ));
    }
    PointCloud::from_xy(&points)
}

pub fn sample_poisson(lambda: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::Poisson { lambda },
        seed,
    })
}

pub fn sample_normal(lambda: f64, mu: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::Normal { lambda, mu, sigma },
        seed,
    })
}

pub fn sample_matern(kappa: f64, mu: f64, radius: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::Matern { kappa, mu, radius },
        seed,
    })
}

pub fn sample_thomas(kappa: f64, mu: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::Thomas { kappa, mu, sigma },
        seed,
    })
}

pub fn sample_baddeley_silverman(tile_side: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::BaddeleySilverman { tile_side },
        seed,
    })
}

pub fn sample_ifs(lambda: f64, seed: u64) -> Result<PointCloud> {
    sample(&ProcessSpec {
        process: Process::Ifs { lambda },
        seed,
    })
}

/// Raw planar points of one realization. Unlike [`sample`] this may be empty.
pub fn sample_points(spec: &ProcessSpec) -> Result<Vec<(f64, f64)>> {
    spec.process.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rng = &mut rng;
    Ok(match spec.process {
        Process::Poisson { lambda } => {
            let n = poisson_count(rng, lambda);
            uniform_square(rng, n)
        }
        Process::Normal { lambda, mu, sigma } => {
            let n = poisson_count(rng, lambda);
            let normal = Normal::new(mu, sigma).expect("positive sigma");
            (0..n)
                .map(|_| (normal.sample(rng), normal.sample(rng)))
                .collect()
        }
        Process::Matern { .. } | Process::Thomas { .. } => clusters(&spec.process, rng)
            .into_iter()
            .flat_map(|c| c.children)
            .collect(),
        Process::BaddeleySilverman { tile_side } => {
            let per_side = tiles_per_side(tile_side)?;
            let side = 1.0 / per_side as f64;
            let counts = [0usize, 1, 10];
            let weights = WeightedIndex::new([1.0 / 10.0, 8.0 / 9.0, 1.0 / 90.0]).unwrap();
            let mut points = Vec::new();
            for row in 0..per_side {
                for col in 0..per_side {
                    let n = counts[weights.sample(rng)];
                    for _ in 0..n {
                        let x = (col as f64 + rng.gen::<f64>()) * side;
                        let y = (row as f64 + rng.gen::<f64>()) * side;
                        points.push((x, y));
                    }
                }
            }
            points
        }
        Process::Ifs { lambda } => {
            let n = poisson_count(rng, lambda);
            let maps = WeightedIndex::new([2.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
            let mut p = (rng.gen::<f64>(), rng.gen::<f64>());
            let mut points = Vec::with_capacity(n + 1);
            points.push(p);
            for _ in 0..n {
                p = ifs_map(maps.sample(rng), p);
                points.push(p);
            }
            points
        }
    })
}

/// A parent of a cluster process with its children. Only the children are
/// part of a realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub parent: (f64, f64),
    pub children: Vec<(f64, f64)>,
}

/// The clusters behind a Matern or Thomas realization; the same draws as
/// [`sample_points`] for the same spec.
pub fn sample_clusters(spec: &ProcessSpec) -> Result<Vec<Cluster>> {
    spec.process.validate()?;
    match spec.process {
        Process::Matern { .. } | Process::Thomas { .. } => Ok(clusters(
            &spec.process,
            &mut ChaCha8Rng::seed_from_u64(spec.seed),
        )),
        _ => Err(Error::InvalidArgument(format!(
            "{} is not a cluster process",
            spec.process.name()
        ))),
    }
}

/// Parents from a Poisson process of rate `kappa` on the unit square, each
/// with `Poisson(mu)` children.
fn clusters(process: &Process, rng: &mut ChaCha8Rng) -> Vec<Cluster> {
    let (kappa, mu) = match *process {
        Process::Matern { kappa, mu, .. } | Process::Thomas { kappa, mu, .. } => (kappa, mu),
        _ => unreachable!("not a cluster process"),
    };
    let parents = poisson_count(rng, kappa);
    let parents = uniform_square(rng, parents);
    let mut out = Vec::with_capacity(parents.len());
    for parent in parents {
        let n = poisson_count(rng, mu);
        let children = (0..n)
            .map(|_| {
                let (dx, dy) = match *process {
                    Process::Matern { radius, .. } => {
                        let r = radius * rng.gen::<f64>().sqrt();
                        let theta = std::f64::consts::TAU * rng.gen::<f64>();
                        (r * theta.cos(), r * theta.sin())
                    }
                    Process::Thomas { sigma, .. } => {
                        let normal = Normal::new(0.0, sigma).expect("positive sigma");
                        (normal.sample(rng), normal.sample(rng))
                    }
                    _ => unreachable!(),
                };
                (parent.0 + dx, parent.1 + dy)
            })
            .collect();
        out.push(Cluster { parent, children });
    }
    out
}

/// The five contractions of the IFS, as maps `(x, y) ↦ (x', y')`.
pub fn ifs_map(index: usize, (x, y): (f64, f64)) -> (f64, f64) {
    match index {
        0 => (x / 2.0, y / 2.0),
        1 => (x / 2.0 + 0.5, y / 2.0),
        2 => (x / 2.0, y / 2.0 + 0.5),
        3 => ((x / 2.0 - 1.0).abs(), y / 2.0),
        4 => (x / 2.0, (y / 2.0 - 1.0).abs()),
        _ => panic!("IFS has five maps, got index {index}"),
    }
}

/// One realization as a point cloud.
pub fn sample(spec: &ProcessSpec) -> Result<PointCloud> {
    sample_points(spec).and_then(finish)
}

/// `count` realizations with seeds `base_seed + i`; identical to running
/// [`sample`] serially.
pub fn simulate_batch(process: &Process, count: usize, base_seed: u64) -> Result<Vec<PointCloud>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    process.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            sample(&ProcessSpec {
                process: process.clone(),
                seed: base_seed.wrapping_add(i as u64),
            })
        })
        .collect()
}
