//! Contours: two-argument functions `C(a, ε)` that are monotone in both
//! arguments, expanding (`a ≤ C(a, ε)`) and sub-additive in `ε`
//! (`C(C(a, ε), τ) ≤ C(a, ε + τ)`). Each contour induces a pseudometric on
//! barcodes and hence its own stable rank.
//!
//! Supported families:
//!
//! * standard `a + ε`;
//! * exponential `r^ε · a` with `r > 1`;
//! * superlinear additive `a + ε^p` with `p ≥ 1` (`p = 2` is the parabolic contour);
//! * distance type `D_f(a, ε)`: the point where the area under the density
//!   `f` measured from `a` reaches `ε`;
//! * shift type `S_f(a, ε) = F(F⁻¹(a) + ε)` where `F(y) = ∫_0^y f`.
//!
//! Any of these can be truncated at `α ∈ [0, ∞]`: values `≥ α` become `∞`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtendedReal;

/// Default number of bins when a smooth density is approximated by a
/// piecewise-constant one.
pub const DEFAULT_DENSITY_BINS: usize = 256;

/// Tolerance used by [`check_contour_axioms`], relative to `max(1, |rhs|)`.
pub const AXIOM_TOLERANCE: f64 = 1e-9;

/// A strictly positive piecewise-constant function on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct Density {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `F` evaluated at the start of every piece; `cumulative[0] = 0`.
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawDensity> for Density {
    type Error = Error;

    fn try_from(raw: RawDensity) -> Result<Self> {
        Density::new(raw.breakpoints, raw.values)
    }
}

impl From<Density> for RawDensity {
    fn from(d: Density) -> Self {
        RawDensity {
            breakpoints: d.breakpoints,
            values: d.values,
        }
    }
}

impl Density {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidDensity(format!(
                "{} values given for {} breakpoints",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidDensity(
                "breakpoints must be finite and positive".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDensity(
                "breakpoints are not strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "density value {v} is not strictly positive and finite"
            )));
        }
        let mut cumulative = Vec::with_capacity(values.len());
        cumulative.push(0.0);
        let mut start = 0.0;
        for (b, v) in breakpoints.iter().zip(&values) {
            let next = cumulative.last().unwrap() + (b - start) * v;
            cumulative.push(next);
            start = *b;
        }
        Ok(Self {
            breakpoints,
            values,
            cumulative,
        })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    /// Piecewise-constant approximation of `f` on `[0, upper)` with `bins`
    /// equal bins (midpoint values); the last bin's value extends to infinity.
    pub fn binned(f: impl Fn(f64) -> f64, upper: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::InvalidDensity(
                "binning needs bins > 0 and a finite upper > 0".into(),
            ));
        }
        let width = upper / bins as f64;
        let breakpoints = (1..bins).map(|i| i as f64 * width).collect();
        let values = (0..bins).map(|i| f((i as f64 + 0.5) * width)).collect();
        Self::new(breakpoints, values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn piece_start(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.breakpoints[i - 1]
        }
    }

    /// The density value at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.breakpoints.partition_point(|b| *b <= x)]
    }

    /// `F(y) = ∫_0^y f`.
    pub fn integral(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return f64::INFINITY;
        }
        let i = self.breakpoints.partition_point(|b| *b <= y);
        self.cumulative[i] + (y - self.piece_start(i)) * self.values[i]
    }

    /// `F⁻¹(x)`; `F` is a strictly increasing bijection of `[0, ∞]`.
    pub fn inverse_integral(&self, x: f64) -> f64 {
        if x == f64::INFINITY {
            return f64::INFINITY;
        }
        let i = self.cumulative.partition_point(|c| *c <= x).max(1) - 1;
        self.piece_start(i) + (x - self.cumulative[i]) / self.values[i]
    }
}

/// The underlying (untruncated) contour family.
#[derive(Clone, Debug, PartialEq)]
pub enum ContourKind {
    Standard,
    /// `C(a, ε) = base^ε · a`, `base > 1`.
    Exponential {
        base: f64,
    },
    /// `C(a, ε) = a + ε^exponent`, `exponent ≥ 1`.
    Superlinear {
        exponent: f64,
    },
    Distance(Density),
    Shift(Density),
}

/// A contour together with its truncation level (`∞` = untruncated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContourSpec", into = "ContourSpec")]
pub struct Contour {
    kind: ContourKind,
    truncation: ExtendedReal,
}

/// JSON form: `{"kind": ..., "param": ..., "density": {...}, "alpha": ...}`.
#[derive(Serialize, Deserialize)]
struct ContourSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<Density>,
    #[serde(default = "infinite_alpha")]
    alpha: ExtendedReal,
}

fn infinite_alpha() -> ExtendedReal {
    ExtendedReal::INFINITY
}

impl TryFrom<ContourSpec> for Contour {
    type Error = Error;

    fn try_from(spec: ContourSpec) -> Result<Self> {
        let param = |name: &str| {
            spec.param.ok_or_else(|| {
                Error::InvalidContour(format!("{} contour needs \"param\" ({name})", spec.kind))
            })
        };
        let density = || {
            spec.density.clone().ok_or_else(|| {
                Error::InvalidContour(format!("{} contour needs \"density\"", spec.kind))
            })
        };
        let base = match spec.kind.as_str() {
            "standard" => Contour::standard(),
            "exponential" => Contour::exponential(param("base")?)?,
            "superlinear" => Contour::superlinear(param("exponent")?)?,
            "distance" => Contour::distance(density()?),
            "shift" => Contour::shift(density()?),
            other => {
                return Err(Error::InvalidContour(format!(
                    "unknown contour kind {other:?}"
                )))
            }
        };
        Ok(base.truncate(spec.alpha))
    }
}

impl From<Contour> for ContourSpec {
    fn from(c: Contour) -> Self {
        let (kind, param, density) = match c.kind {
            ContourKind::Standard => ("standard", None, None),
            ContourKind::Exponential { base } => ("exponential", Some(base), None),
            ContourKind::Superlinear { exponent } => ("superlinear", Some(exponent), None),
            ContourKind::Distance(d) => ("distance", None, Some(d)),
            ContourKind::Shift(d) => ("shift", None, Some(d)),
        };
        ContourSpec {
            kind: kind.into(),
            param,
            density,
            alpha: c.truncation,
        }
    }
}

impl Contour {
    pub fn standard() -> Self {
        Self::from_kind(ContourKind::Standard)
    }

    pub fn exponential(base: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidContour(format!(
                "exponential base must exceed 1, got {base}"
            )));
        }
        Ok(Self::from_kind(ContourKind::Exponential { base }))
    }

    /// `a + ε^exponent`; the parabolic contour is `exponent = 2`.
    pub fn superlinear(exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidContour(format!(
                "superlinear exponent must be at least 1, got {exponent}"
            )));
        }
        Ok(Self::from_kind(ContourKind::Superlinear { exponent }))
    }

    pub fn distance(density: Density) -> Self {
        Self::from_kind(ContourKind::Distance(density))
    }

    pub fn shift(density: Density) -> Self {
        Self::from_kind(ContourKind::Shift(density))
    }

    fn from_kind(kind: ContourKind) -> Self {
        Self {
            kind,
            truncation: ExtendedReal::INFINITY,
        }
    }

    pub fn kind(&self) -> &ContourKind {
        &self.kind
    }

    pub fn truncation(&self) -> ExtendedReal {
        self.truncation
    }

    /// `C/α`. Truncating an already truncated contour at `β` yields the
    /// truncation at `min(α, β)`.
    pub fn truncate(&self, alpha: ExtendedReal) -> Self {
        Self {
            kind: self.kind.clone(),
            truncation: self.truncation.min(alpha),
        }
    }

    /// The contour with its truncation removed.
    pub fn untruncated(&self) -> Self {
        Self::from_kind(self.kind.clone())
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_finite()
    }

    /// Whether the underlying family admits an `ε`-inverse
    /// (`C(s, −)` is a bijection `[0, ∞) → [s, ∞)`).
    pub fn has_regular_base(&self) -> bool {
        !matches!(self.kind, ContourKind::Exponential { .. })
    }

    pub fn is_regular(&self) -> bool {
        self.has_regular_base() && !self.is_truncated()
    }

    /// `C(a, 0) = a` and `C(C(a, τ), ε) = C(a, τ + ε)`.
    pub fn is_action(&self) -> bool {
        !self.is_truncated()
            && !matches!(self.kind, ContourKind::Superlinear { exponent } if exponent != 1.0)
    }

    fn eval_base(&self, a: f64, eps: f64) -> f64 {
        if a == f64::INFINITY {
            return f64::INFINITY;
        }
        if eps == 0.0 && !matches!(self.kind, ContourKind::Superlinear { .. }) {
            // every other family is an action
            return a;
        }
        match &self.kind {
            ContourKind::Standard => a + eps,
            ContourKind::Exponential { base } => base.powf(eps) * a,
            ContourKind::Superlinear { exponent } => a + eps.powf(*exponent),
            // F and F⁻¹ round independently; the max keeps `a ≤ C(a, ε)` exact
            ContourKind::Distance(d) => d.inverse_integral(d.integral(a) + eps).max(a),
            ContourKind::Shift(d) => d.integral(d.inverse_integral(a) + eps).max(a),
        }
    }

    /// `C(a, ε)`, with the truncation applied last.
    pub fn eval(&self, a: ExtendedReal, eps: f64) -> ExtendedReal {
        debug_assert!(eps >= 0.0 && eps.is_finite());
        let value = ExtendedReal::new(self.eval_base(a.value(), eps))
            .expect("contour values are non-negative");
        if value >= self.truncation {
            ExtendedReal::INFINITY
        } else {
            value
        }
    }

    /// Convenience for finite `a`.
    pub fn eval_at(&self, a: f64, eps: f64) -> ExtendedReal {
        self.eval(ExtendedReal::new(a).expect("a must be non-negative"), eps)
    }

    /// Inverse of the untruncated regular family: the unique `ε` with
    /// `C(s, ε) = b` for `s ≤ b < ∞`; `∞` for `b = ∞`; `0` for `b ≤ s`.
    fn inverse_base(&self, s: f64, b: ExtendedReal) -> Result<ExtendedReal> {
        let Some(b) = b.as_finite() else {
            return Ok(ExtendedReal::INFINITY);
        };
        if b <= s {
            return Ok(ExtendedReal::ZERO);
        }
        let eps = match &self.kind {
            ContourKind::Standard => b - s,
            ContourKind::Superlinear { exponent } => (b - s).powf(1.0 / exponent),
            ContourKind::Distance(d) => d.integral(b) - d.integral(s),
            ContourKind::Shift(d) => d.inverse_integral(b) - d.inverse_integral(s),
            ContourKind::Exponential { .. } => {
                return Err(Error::NotRegular(
                    "exponential contours have no ε-inverse".into(),
                ))
            }
        };
        Ok(ExtendedReal::new(eps.max(0.0)).expect("inverse is finite"))
    }

    /// Smallest `t ≥ 0` with `C(s, t) ≥ level` for the untruncated family;
    /// defined for every supported family, including exponential ones.
    pub(crate) fn crossing_time(&self, s: f64, level: ExtendedReal) -> ExtendedReal {
        match self.kind {
            ContourKind::Exponential { base } => {
                let Some(level) = level.as_finite() else {
                    return ExtendedReal::INFINITY;
                };
                if level <= s {
                    ExtendedReal::ZERO
                } else if s == 0.0 {
                    // C(0, t) = 0 for every t
                    ExtendedReal::INFINITY
                } else {
                    ExtendedReal::new((level / s).ln() / base.ln()).expect("positive log ratio")
                }
            }
            _ => self.inverse_base(s, level).expect("regular family"),
        }
    }
}

/// See [`Contour::eval`].
pub fn eval_contour(c: &Contour, a: ExtendedReal, eps: f64) -> ExtendedReal {
    c.eval(a, eps)
}

/// The `ε`-inverse `C(s, −)⁻¹(b)` of a regular (untruncated, non-exponential)
/// contour.
pub fn contour_inverse(c: &Contour, s: f64, b: ExtendedReal) -> Result<ExtendedReal> {
    if c.is_truncated() {
        return Err(Error::NotRegular(format!(
            "contour truncated at {} is not regular",
            c.truncation
        )));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "s = {s} must be finite and non-negative"
        )));
    }
    c.inverse_base(s, b)
}

/// See [`Contour::truncate`].
pub fn truncate(c: &Contour, alpha: ExtendedReal) -> Contour {
    c.truncate(alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axiom {
    /// `a ≤ b, ε ≤ τ ⇒ C(a, ε) ≤ C(b, τ)`.
    Monotone,
    /// `a ≤ C(a, ε)`.
    Expanding,
    /// `C(C(a, ε), τ) ≤ C(a, ε + τ)`.
    SubAdditive,
    /// `C(a, 0) = a`.
    ActionIdentity,
    /// `C(C(a, τ), ε) = C(a, τ + ε)`.
    ActionComposition,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub a: ExtendedReal,
    pub eps: f64,
    pub tau: f64,
    pub lhs: ExtendedReal,
    pub rhs: ExtendedReal,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn within(lhs: ExtendedReal, rhs: ExtendedReal) -> bool {
    if lhs.is_infinite() || rhs.is_infinite() {
        return lhs <= rhs;
    }
    lhs.value() <= rhs.value() + AXIOM_TOLERANCE * rhs.value().max(1.0)
}

fn close(x: ExtendedReal, y: ExtendedReal) -> bool {
    within(x, y) && within(y, x)
}

/// Randomized check of the contour axioms (and of the action equalities when
/// the contour claims to be an action). Finite `a` is drawn from `[0, 10]`,
/// with `a = ∞` in roughly one sample out of twenty; `ε, τ ∈ [0, 5]`.
pub fn check_contour_axioms(c: &Contour, sample_count: usize, seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AxiomReport {
        samples: sample_count,
        violations: Vec::new(),
    };
    let action = c.is_action();
    for _ in 0..sample_count {
        let a = if rng.gen_bool(0.05) {
            ExtendedReal::INFINITY
        } else {
            ExtendedReal::new(rng.gen_range(0.0..10.0)).unwrap()
        };
        let b = a + ExtendedReal::new(rng.gen_range(0.0..5.0)).unwrap();
        let eps: f64 = rng.gen_range(0.0..5.0);
        let tau: f64 = rng.gen_range(0.0..5.0);
        let mut record = |axiom, lhs, rhs| {
            report.violations.push(AxiomViolation {
                axiom,
                a,
                eps,
                tau,
                lhs,
                rhs,
            });
        };

        let lhs = c.eval(a, eps);
        let rhs = c.eval(b, eps + tau);
        if !within(lhs, rhs) {
            record(Axiom::Monotone, lhs, rhs);
        }
        if !within(a, lhs) {
            record(Axiom::Expanding, a, lhs);
        }
        let composed = c.eval(c.eval(a, eps), tau);
        let direct = c.eval(a, eps + tau);
        if !within(composed, direct) {
            record(Axiom::SubAdditive, composed, direct);
        }
        if action {
            let id = c.eval(a, 0.0);
            if id != a {
                record(Axiom::ActionIdentity, id, a);
            }
            if !close(composed, direct) {
                record(Axiom::ActionComposition, composed, direct);
            }
        }
    }
    report
}

/// One contour line `s ↦ (s, C(s, t) − s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourLine {
    pub t: f64,
    /// `(s, height)` pairs; heights are `∞` where a truncation fires.
    pub samples: Vec<(f64, ExtendedReal)>,
}

/// Samples each contour line on `n_samples` uniformly spaced `s` in
/// `[lo, hi]`.
pub fn contour_lines(
    c: &Contour,
    ts: &[f64],
    s_range: (f64, f64),
    n_samples: usize,
) -> Result<Vec<ContourLine>> {
    let (lo, hi) = s_range;
    if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "invalid s range [{lo}, {hi}]"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} must be finite and non-negative"
        )));
    }
    let step = if n_samples == 1 {
        0.0
    } else {
        (hi - lo) / (n_samples - 1) as f64
    };
    Ok(ts
        .iter()
        .map(|&t| ContourLine {
            t,
            samples: (0..n_samples)
                .map(|i| {
                    let s = if i + 1 == n_samples {
                        hi
                    } else {
                        lo + step * i as f64
                    };
                    let value = c.eval_at(s, t);
                    let height = if value.is_infinite() {
                        ExtendedReal::INFINITY
                    } else {
                        ExtendedReal::new((value.value() - s).max(0.0)).unwrap()
                    };
                    (s, height)
                })
                .collect(),
        })
        .collect())
}
