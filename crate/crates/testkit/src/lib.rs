//! Random inputs and slow, independent reference implementations used to
//! check `stablerank-core`. Nothing here shares code with the routines it
//! checks beyond the basic data types and contour evaluation.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stablerank_core::{Bar, Barcode, Contour, Density, DistanceMatrix, ExtendedReal, StepFunction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ext(x: f64) -> ExtendedReal {
    ExtendedReal::new(x).unwrap()
}

// ---------------------------------------------------------------- generators

/// Piecewise-constant density with up to 4 breakpoints in (0, 5) and values
/// in [0.2, 5].
pub fn random_density(rng: &mut impl Rng) -> Density {
    let k = rng.gen_range(0..=4);
    let mut bps: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..5.0)).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let values = (0..=bps.len()).map(|_| rng.gen_range(0.2..5.0)).collect();
    Density::new(bps, values).unwrap()
}

/// The five contour families: 0 standard, 1 exponential, 2 superlinear,
/// 3 distance, 4 shift.
pub fn random_contour_of_kind(rng: &mut impl Rng, kind: usize) -> Contour {
    match kind {
        0 => Contour::standard(),
        1 => Contour::exponential(rng.gen_range(1.05..4.0)).unwrap(),
        2 => Contour::superlinear(rng.gen_range(1.0..3.0)).unwrap(),
        3 => Contour::distance(random_density(rng)),
        4 => Contour::shift(random_density(rng)),
        _ => panic!("unknown contour kind {kind}"),
    }
}

/// A contour with a regular untruncated family (not exponential).
pub fn random_regular_contour(rng: &mut impl Rng) -> Contour {
    let kind = [0, 2, 3, 4][rng.gen_range(0..4)];
    random_contour_of_kind(rng, kind)
}

/// A regular contour, truncated at a random finite α with probability 1/3.
pub fn random_closed_contour(rng: &mut impl Rng) -> Contour {
    let c = random_regular_contour(rng);
    if rng.gen_bool(1.0 / 3.0) {
        c.truncate(ext(rng.gen_range(0.0..8.0)))
    } else {
        c
    }
}

/// Up to `max_bars` bars with births in [0, 5), lengths in (0, 5], and
/// infinite deaths with probability `p_inf`.
pub fn random_barcode(rng: &mut impl Rng, max_bars: usize, p_inf: f64) -> Barcode {
    let n = rng.gen_range(0..=max_bars);
    let bars = (0..n)
        .map(|_| {
            let s = rng.gen_range(0.0..5.0);
            if rng.gen_bool(p_inf) {
                Bar::infinite(s).unwrap()
            } else {
                Bar::finite(s, s + rng.gen_range(0.01..5.0)).unwrap()
            }
        })
        .collect();
    Barcode::new(1, bars)
}

/// Bars with endpoints on the grid `k/4`, so that coincidences are common.
pub fn random_grid_barcode(rng: &mut impl Rng, max_bars: usize) -> Barcode {
    let n = rng.gen_range(1..=max_bars);
    let bars = (0..n)
        .map(|_| {
            let s = rng.gen_range(0..16) as f64 / 4.0;
            Bar::finite(s, s + rng.gen_range(1..12) as f64 / 4.0).unwrap()
        })
        .collect();
    Barcode::new(1, bars)
}

/// Non-increasing step function with breakpoints on multiples of `grid`
/// below `upper`, integer-ish or fractional values.
pub fn random_step_function(
    rng: &mut impl Rng,
    max_breaks: usize,
    grid: f64,
    upper: f64,
    limit: f64,
) -> StepFunction {
    let slots = (upper / grid) as usize;
    let k = rng.gen_range(0..=max_breaks);
    let mut bps: Vec<f64> = (0..k)
        .map(|_| rng.gen_range(1..slots) as f64 * grid)
        .collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let mut values: Vec<f64> = (0..=bps.len())
        .map(|_| limit + rng.gen_range(0..8) as f64 * 0.5)
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    *values.last_mut().unwrap() = limit;
    StepFunction::new(bps, values).unwrap()
}

/// `n` random points in the unit square, as a distance matrix over
/// coordinates.
pub fn random_planar_points(rng: &mut impl Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect()
}

// ------------------------------------------------------------------- oracles

/// Midpoint Riemann sum of `|f − g|^p` on `[0, upper]` with step `h`, then
/// the `p`-th root.
pub fn riemann_lp(f: &StepFunction, g: &StepFunction, p: f64, upper: f64, h: f64) -> f64 {
    let steps = (upper / h).round() as usize;
    let mut total = 0.0;
    for i in 0..steps {
        let t = (i as f64 + 0.5) * h;
        total += (f.evaluate(t) - g.evaluate(t)).abs().powf(p) * h;
    }
    total.powf(1.0 / p)
}

/// Whether `f(t) ≥ g(t + ε)` and `g(t) ≥ f(t + ε)` for every `t ≥ 0`. Both
/// sides are piecewise constant with jumps at breakpoints `b` and `b − ε`,
/// so checking those left endpoints (and 0) is exhaustive.
pub fn interleaved_at(f: &StepFunction, g: &StepFunction, eps: f64) -> bool {
    let mut ts = vec![0.0];
    for b in f.breakpoints().iter().chain(g.breakpoints()) {
        ts.push(*b);
        if *b - eps >= 0.0 {
            ts.push(*b - eps);
        }
    }
    ts.iter()
        .all(|&t| f.evaluate(t) >= g.evaluate(t + eps) && g.evaluate(t) >= f.evaluate(t + eps))
}

/// The first `ε = k·δ` passing [`interleaved_at`], or infinity if none does
/// up to `max_eps`.
pub fn scan_interleaving(f: &StepFunction, g: &StepFunction, delta: f64, max_eps: f64) -> f64 {
    let steps = (max_eps / delta).ceil() as usize;
    (0..=steps)
        .map(|k| k as f64 * delta)
        .find(|&eps| interleaved_at(f, g, eps))
        .unwrap_or(f64::INFINITY)
}

/// Bisection for `inf{t | C(s, t) ≥ level}` on `[0, hi]`, using only
/// contour evaluation.
pub fn bisect_crossing(
    c: &Contour,
    s: f64,
    level: ExtendedReal,
    hi: f64,
    iterations: usize,
) -> f64 {
    let reaches = |t: f64| c.eval_at(s, t) >= level;
    if reaches(0.0) {
        return 0.0;
    }
    if !reaches(hi) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `#{i | C(s_i, t) < e_i}` counted bar by bar.
pub fn count_alive(c: &Contour, b: &Barcode, t: f64) -> usize {
    b.bars
        .iter()
        .filter(|bar| c.eval_at(bar.birth(), t) < bar.death())
        .count()
}

/// Sorted minimum-spanning-tree edge weights by Prim's algorithm.
pub fn prim_mst_weights(dm: &DistanceMatrix) -> Vec<f64> {
    let n = dm.len();
    if n == 0 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut weights = Vec::with_capacity(n - 1);
    for step in 0..n {
        let u = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[u] = true;
        if step > 0 {
            weights.push(best[u]);
        }
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(dm.get(u, v));
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// Degree-1 Rips barcode by the textbook algorithm: every vertex, edge and
/// triangle of diameter at most `cap`, ordered by (value, dimension,
/// lexicographic vertices), full boundary matrix, left-to-right column
/// reduction over the two-element field. Zero-length pairs are dropped;
/// unpaired cycles give infinite bars.
pub fn naive_h1(dm: &DistanceMatrix, cap: f64) -> Vec<(f64, f64)> {
    let n = dm.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = (0..n).map(|v| (0.0, vec![v])).collect();
    for u in 0..n {
        for v in u + 1..n {
            if dm.get(u, v) <= cap {
                simplices.push((dm.get(u, v), vec![u, v]));
            }
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            for w in v + 1..n {
                let d = dm.get(u, v).max(dm.get(u, w)).max(dm.get(v, w));
                if d <= cap {
                    simplices.push((d, vec![u, v, w]));
                }
            }
        }
    }
    simplices.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.len().cmp(&b.1.len()))
            .then(a.1.cmp(&b.1))
    });
    let index: HashMap<Vec<usize>, usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.1.clone(), i))
        .collect();

    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|(_, verts)| {
            if verts.len() == 1 {
                return Vec::new();
            }
            let mut faces: Vec<usize> = (0..verts.len())
                .map(|skip| {
                    let face: Vec<usize> = verts
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != skip)
                        .map(|(_, v)| *v)
                        .collect();
                    index[&face]
                })
                .collect();
            faces.sort_unstable();
            faces
        })
        .collect();

    let mut low_owner: HashMap<usize, usize> = HashMap::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            let Some(&k) = low_owner.get(&low) else { break };
            let other = columns[k].clone();
            let mut merged: Vec<usize> = columns[j]
                .iter()
                .copied()
                .filter(|x| !other.contains(x))
                .collect();
            merged.extend(other.iter().copied().filter(|x| !columns[j].contains(x)));
            merged.sort_unstable();
            columns[j] = merged;
        }
        if let Some(&low) = columns[j].last() {
            low_owner.insert(low, j);
        }
    }

    let mut bars = Vec::new();
    for (i, (value, verts)) in simplices.iter().enumerate() {
        if verts.len() != 2 || !columns[i].is_empty() {
            continue;
        }
        match low_owner.get(&i) {
            Some(&j) => {
                if simplices[j].0 > *value {
                    bars.push((*value, simplices[j].0));
                }
            }
            None => bars.push((*value, f64::INFINITY)),
        }
    }
    bars.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    bars
}

/// Bars of a barcode as sorted `(birth, death)` pairs.
pub fn sorted_pairs(b: &Barcode) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = b
        .bars
        .iter()
        .map(|bar| (bar.birth(), bar.death().value()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}
