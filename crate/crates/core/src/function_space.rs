//! Step functions `[0, ∞) → [0, ∞)` and their 2D counterparts, with the
//! `L_p` and interleaving metrics evaluated exactly on breakpoint partitions.
//!
//! Every stable rank is non-increasing, right-continuous and piecewise
//! constant with finitely many jumps, so [`StepFunction`] only represents
//! such functions. The representation is canonical: two step functions are
//! equal as functions iff they are structurally equal.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtendedReal;

/// A non-increasing right-continuous step function on `[0, ∞)`.
///
/// `values[0]` holds on `[0, breakpoints[0])`, `values[i]` on
/// `[breakpoints[i-1], breakpoints[i])` and the last value on
/// `[breakpoints[last], ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStepFunction")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawStepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawStepFunction> for StepFunction {
    type Error = Error;

    fn try_from(raw: RawStepFunction) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.values)
    }
}

impl StepFunction {
    /// Validates and canonicalizes. Breakpoints must be strictly increasing,
    /// finite and non-negative; values finite, non-negative and non-increasing.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidStepFunction(msg));
        if values.len() != breakpoints.len() + 1 {
            return invalid(format!(
                "{} values given for {} breakpoints",
                values.len(),
                breakpoints.len()
            ));
        }
        if let Some(b) = breakpoints.iter().find(|b| !b.is_finite() || **b < 0.0) {
            return invalid(format!("breakpoint {b} is not a finite non-negative real"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("breakpoints are not strictly increasing".into());
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return invalid(format!("value {v} is not a finite non-negative real"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return invalid("values are not non-increasing".into());
        }
        Ok(Self::canonical(breakpoints, values))
    }

    /// Assumes the invariants of [`StepFunction::new`] except canonical form.
    fn canonical(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        vals.push(values[0]);
        for (b, v) in breakpoints.into_iter().zip(values.into_iter().skip(1)) {
            if b == 0.0 {
                // the interval [0, 0) is empty
                vals[0] = v;
                continue;
            }
            if v == *vals.last().unwrap() {
                continue;
            }
            bps.push(b + 0.0);
            vals.push(v);
        }
        Self {
            breakpoints: bps,
            values: vals,
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn zero() -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![0.0],
        }
    }

    /// The indicator function of `[0, end)`.
    pub fn indicator(end: f64) -> Result<Self> {
        Self::new(vec![end], vec![1.0, 0.0])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `t`; right-continuous at breakpoints.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|b| *b <= t)]
    }

    /// The eventual constant value.
    pub fn limit_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `(start, end, value)` for every maximal constant piece; the last piece
    /// ends at `f64::INFINITY`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(i, v)| {
            let start = if i == 0 { 0.0 } else { self.breakpoints[i - 1] };
            let end = self.breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
            (start, end, *v)
        })
    }

    /// Smallest `x` with `self(x) <= level`, or infinity when the function
    /// never drops to `level`. The set of such `x` is `[x, ∞)` by right
    /// continuity.
    fn first_at_or_below(&self, level: f64) -> f64 {
        match self.values.partition_point(|v| *v > level) {
            0 => 0.0,
            i if i == self.values.len() => f64::INFINITY,
            i => self.breakpoints[i - 1],
        }
    }
}

/// Pieces of the common refinement of two breakpoint partitions, as
/// `(start, end, f value, g value)`.
fn merged_segments(f: &StepFunction, g: &StepFunction) -> Vec<(f64, f64, f64, f64)> {
    let (fb, gb) = (f.breakpoints(), g.breakpoints());
    let mut out = Vec::with_capacity(fb.len() + gb.len() + 1);
    let (mut i, mut j) = (0, 0);
    let mut start = 0.0;
    loop {
        let fe = fb.get(i).copied().unwrap_or(f64::INFINITY);
        let ge = gb.get(j).copied().unwrap_or(f64::INFINITY);
        let end = fe.min(ge);
        out.push((start, end, f.values[i], g.values[j]));
        if end == f64::INFINITY {
            return out;
        }
        if fe == end {
            i += 1;
        }
        if ge == end {
            j += 1;
        }
        start = end;
    }
}

/// The eventual value of a step function; see [`StepFunction::limit_value`].
pub fn limit_value(f: &StepFunction) -> f64 {
    f.limit_value()
}

/// Exact pointwise arithmetic mean: on each piece of the merged partition
/// the value is the true mean `(f_1(t) + … + f_n(t)) / n` rounded once to the
/// nearest `f64`. In particular averaging copies of `f` returns `f`.
pub fn pointwise_mean<'a, I>(fs: I) -> Result<StepFunction>
where
    I: IntoIterator<Item = &'a StepFunction>,
{
    let fs: Vec<&StepFunction> = fs.into_iter().collect();
    if fs.is_empty() {
        return Err(Error::InvalidArgument(
            "mean of an empty collection of step functions".into(),
        ));
    }
    let n = fs.len() as f64;

    // Integer-valued inputs (every stable rank) admit an exact sweep over
    // sorted jump events.
    const EXACT: f64 = (1u64 << 52) as f64;
    let integral = fs
        .iter()
        .all(|f| f.values.iter().all(|v| v.fract() == 0.0 && *v < EXACT));
    if integral {
        let mut events: Vec<(f64, i64)> = Vec::new();
        let mut total: i64 = 0;
        for f in &fs {
            total += f.values[0] as i64;
            for (k, b) in f.breakpoints.iter().enumerate() {
                events.push((*b, f.values[k + 1] as i64 - f.values[k] as i64));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breakpoints = Vec::new();
        let mut values = vec![total as f64 / n];
        let mut k = 0;
        while k < events.len() {
            let t = events[k].0;
            while k < events.len() && events[k].0 == t {
                total += events[k].1;
                k += 1;
            }
            breakpoints.push(t);
            values.push(total as f64 / n);
        }
        return Ok(StepFunction::canonical(breakpoints, values));
    }

    let mut breakpoints: Vec<f64> = fs
        .iter()
        .flat_map(|f| f.breakpoints.iter().copied())
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let mut cursors = vec![0usize; fs.len()];
    let mut values = Vec::with_capacity(breakpoints.len() + 1);
    for start in std::iter::once(0.0).chain(breakpoints.iter().copied()) {
        let mut sum = BigRational::zero();
        for (f, c) in fs.iter().zip(cursors.iter_mut()) {
            while *c < f.breakpoints.len() && f.breakpoints[*c] <= start {
                *c += 1;
            }
            sum += BigRational::from_float(f.values[*c]).unwrap();
        }
        let mean = sum / BigRational::from_integer(BigInt::from(fs.len()));
        values.push(mean.to_f64().unwrap());
    }
    Ok(StepFunction::canonical(breakpoints, values))
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "L_p requires finite p >= 1, got {p}"
        )));
    }
    Ok(())
}

/// `(∫ |f − g|^p dt)^{1/p}`, integrated exactly over the merged partition.
/// Infinite when the limits differ.
pub fn lp_distance(f: &StepFunction, g: &StepFunction, p: f64) -> Result<ExtendedReal> {
    check_p(p)?;
    if f.limit_value() != g.limit_value() {
        return Ok(ExtendedReal::INFINITY);
    }
    // Merge walk without materializing the partition; class means can have
    // tens of thousands of pieces.
    let (fb, gb) = (f.breakpoints(), g.breakpoints());
    let (mut i, mut j) = (0, 0);
    let mut start = 0.0;
    let mut integral = 0.0;
    while i < fb.len() || j < gb.len() {
        let fe = fb.get(i).copied().unwrap_or(f64::INFINITY);
        let ge = gb.get(j).copied().unwrap_or(f64::INFINITY);
        let end = fe.min(ge);
        let diff = (f.values[i] - g.values[j]).abs();
        if diff != 0.0 {
            integral += (end - start) * if p == 1.0 { diff } else { diff.powf(p) };
        }
        i += usize::from(fe == end);
        j += usize::from(ge == end);
        start = end;
    }
    if p == 1.0 {
        return ExtendedReal::new(integral);
    }
    ExtendedReal::new(integral.powf(1.0 / p))
}

/// A step function with prefix integrals, for `L_1`
/// distances from one long function (a class mean) to many others in
/// `O(k log n)` each, `k` the other function's piece count.
#[derive(Clone, Debug)]
pub struct MonotoneL1<'a> {
    f: &'a StepFunction,
    /// `cum[k] = ∫_0^{breakpoints[k]} f`.
    cum: Vec<f64>,
}

impl<'a> MonotoneL1<'a> {
    pub fn new(f: &'a StepFunction) -> Self {
        let mut cum = Vec::with_capacity(f.breakpoints.len());
        let mut acc = 0.0;
        let mut start = 0.0;
        for (b, v) in f.breakpoints.iter().zip(&f.values) {
            acc += (b - start) * v;
            cum.push(acc);
            start = *b;
        }
        Self { f, cum }
    }

    /// `∫_0^x f` for finite `x`.
    fn integral_to(&self, x: f64) -> f64 {
        let k = self.f.breakpoints.partition_point(|b| *b <= x);
        let (base, start) = if k == 0 {
            (0.0, 0.0)
        } else {
            (self.cum[k - 1], self.f.breakpoints[k - 1])
        };
        base + (x - start) * self.f.values[k]
    }

    /// Same value as `lp_distance(f, g, 1)` up to rounding.
    pub fn distance(&self, g: &StepFunction) -> ExtendedReal {
        if self.f.limit_value() != g.limit_value() {
            return ExtendedReal::INFINITY;
        }
        // Past its last breakpoint f equals its limit, hence g's last value.
        let last = self.f.breakpoints.last().copied().unwrap_or(0.0);
        let mut total = 0.0;
        for (a, b, v) in g.segments() {
            let b = if b.is_finite() { b } else { last.max(a) };
            if b <= a {
                continue;
            }
            // f is non-increasing: f > v before c and f <= v from c on.
            let c = self.f.first_at_or_below(v).clamp(a, b);
            let (ia, ib, ic) = (
                self.integral_to(a),
                self.integral_to(b),
                self.integral_to(c),
            );
            total += (ic - ia - v * (c - a)) + (v * (b - c) - (ib - ic));
        }
        ExtendedReal::new(total.max(0.0)).expect("finite distance")
    }
}

/// Smallest `ε` with `f(t) ≥ g(t + ε)` for all `t`.
fn one_sided_interleaving(f: &StepFunction, g: &StepFunction) -> f64 {
    // On the piece [start, end) of f the binding constraint is at `start`.
    f.segments()
        .map(|(start, _, v)| g.first_at_or_below(v) - start)
        .fold(0.0, f64::max)
}

/// Interleaving distance: the infimum of `ε` such that `f(t) ≥ g(t+ε)` and
/// `g(t) ≥ f(t+ε)` for every `t`, or infinity when no such `ε` exists.
pub fn interleaving_distance(f: &StepFunction, g: &StepFunction) -> ExtendedReal {
    let eps = one_sided_interleaving(f, g).max(one_sided_interleaving(g, f));
    ExtendedReal::new(eps).expect("interleaving is non-negative")
}

/// A function `[0, ∞]×[0, ∞) → [0, ∞)` sampled at finitely many `α`: one
/// step function `t ↦ F(α, t)` per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid2DFunction {
    alphas: Vec<ExtendedReal>,
    slices: Vec<StepFunction>,
}

#[derive(Deserialize)]
struct RawGrid {
    alphas: Vec<ExtendedReal>,
    slices: Vec<StepFunction>,
}

impl TryFrom<RawGrid> for Grid2DFunction {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid2DFunction::new(raw.alphas, raw.slices)
    }
}

impl Grid2DFunction {
    /// Requires strictly increasing `alphas`, one slice per alpha, and slices
    /// pointwise non-decreasing in `α`.
    pub fn new(alphas: Vec<ExtendedReal>, slices: Vec<StepFunction>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != slices.len() {
            return Err(Error::InvalidGrid(format!(
                "{} alphas and {} slices",
                alphas.len(),
                slices.len()
            )));
        }
        if alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "alphas are not strictly increasing".into(),
            ));
        }
        for (k, w) in slices.windows(2).enumerate() {
            if merged_segments(&w[0], &w[1])
                .iter()
                .any(|(_, _, lo, hi)| lo > hi)
            {
                return Err(Error::InvalidGrid(format!(
                    "slice at alpha {} exceeds slice at alpha {}",
                    alphas[k],
                    alphas[k + 1]
                )));
            }
        }
        Ok(Self { alphas, slices })
    }

    pub fn alphas(&self) -> &[ExtendedReal] {
        &self.alphas
    }

    pub fn slices(&self) -> &[StepFunction] {
        &self.slices
    }

    /// The slice belonging to the exact sample `alpha`, if present.
    pub fn slice(&self, alpha: ExtendedReal) -> Option<&StepFunction> {
        self.alphas
            .binary_search(&alpha)
            .ok()
            .map(|i| &self.slices[i])
    }

    fn largest_finite_alpha(&self) -> Option<f64> {
        self.alphas.iter().rev().find_map(|a| a.as_finite())
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.alphas != other.alphas {
            return Err(Error::InvalidGrid(
                "functions are sampled on different alpha grids".into(),
            ));
        }
        Ok(())
    }
}

/// Normalized `L_p` on 2D functions, approximating the outer limit by
/// `(1/a_max) ∫_0^{a_max} L_p(F(α,·), G(α,·)) dα`.
///
/// The `α` integrand is taken piecewise constant: the slice at `α_i` holds on
/// `[α_i, α_{i+1})`, and the first slice also covers `[0, α_0)`. `a_max`
/// defaults to the largest finite sample.
pub fn lp_hat_distance(
    f: &Grid2DFunction,
    g: &Grid2DFunction,
    p: f64,
    a_max: Option<f64>,
) -> Result<ExtendedReal> {
    check_p(p)?;
    f.check_same_grid(g)?;
    let largest = f
        .largest_finite_alpha()
        .filter(|a| *a > 0.0)
        .ok_or_else(|| Error::InvalidGrid("no positive finite alpha sample".into()))?;
    let a_max = a_max.unwrap_or(largest);
    if !(a_max > 0.0) || a_max > largest {
        return Err(Error::InvalidArgument(format!(
            "a_max = {a_max} must lie in (0, {largest}]"
        )));
    }
    let mut total = 0.0;
    for (i, (fs, gs)) in f.slices.iter().zip(&g.slices).enumerate() {
        let lo = if i == 0 { 0.0 } else { f.alphas[i].value() };
        let hi = f
            .alphas
            .get(i + 1)
            .map_or(f64::INFINITY, |a| a.value())
            .min(a_max);
        if hi <= lo {
            continue;
        }
        let d = lp_distance(fs, gs, p)?;
        if d.is_infinite() {
            return Ok(ExtendedReal::INFINITY);
        }
        total += (hi - lo) * d.value();
    }
    ExtendedReal::new(total / a_max)
}

/// Largest per-slice interleaving distance over the shared `α` grid; a lower
/// bound for the interleaving distance with `ε` uniform in `(α, t)`.
pub fn interleaving_2d(f: &Grid2DFunction, g: &Grid2DFunction) -> Result<ExtendedReal> {
    f.check_same_grid(g)?;
    Ok(f.slices
        .iter()
        .zip(&g.slices)
        .map(|(a, b)| interleaving_distance(a, b))
        .fold(ExtendedReal::ZERO, ExtendedReal::max))
}
