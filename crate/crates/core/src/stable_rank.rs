//! Bars, barcodes and the invariants computed from them: life spans, the
//! contour shift of a barcode, 1D stable ranks and the 2D invariant along
//! the truncation family `{C/α}`.
//!
//! Everything is computed through bar decompositions: for a closed contour
//! the stable rank at `t` counts the bars `K(s, e)` with `C(s, t) < e`,
//! equivalently the bars whose life span strictly exceeds `t`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::contour::Contour;
use crate::error::{Error, Result};
use crate::ext::ExtendedReal;
use crate::function_space::{Grid2DFunction, StepFunction};

/// The interval module `K(s, e)`, `s < e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, ExtendedReal)", into = "(f64, ExtendedReal)")]
pub struct Bar {
    birth: f64,
    death: ExtendedReal,
}

impl TryFrom<(f64, ExtendedReal)> for Bar {
    type Error = Error;

    fn try_from((birth, death): (f64, ExtendedReal)) -> Result<Self> {
        Bar::new(birth, death)
    }
}

impl From<Bar> for (f64, ExtendedReal) {
    fn from(bar: Bar) -> Self {
        (bar.birth, bar.death)
    }
}

impl Bar {
    pub fn new(birth: f64, death: ExtendedReal) -> Result<Self> {
        if !(birth.is_finite() && birth >= 0.0) {
            return Err(Error::InvalidBar(format!(
                "birth {birth} must be finite and non-negative"
            )));
        }
        if death.value() <= birth {
            return Err(Error::InvalidBar(format!(
                "birth {birth} must precede death {death}"
            )));
        }
        Ok(Self {
            birth: birth + 0.0,
            death,
        })
    }

    pub fn finite(birth: f64, death: f64) -> Result<Self> {
        Self::new(birth, ExtendedReal::new(death)?)
    }

    pub fn infinite(birth: f64) -> Result<Self> {
        Self::new(birth, ExtendedReal::INFINITY)
    }

    pub fn birth(&self) -> f64 {
        self.birth
    }

    pub fn death(&self) -> ExtendedReal {
        self.death
    }

    /// `e − s` (infinite for infinite bars), the life span under the
    /// standard contour.
    pub fn length(&self) -> ExtendedReal {
        ExtendedReal::new(self.death.value() - self.birth).expect("death exceeds birth")
    }
}

/// A bar decomposition in a fixed homology degree. The empty barcode is the
/// zero module.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub degree: usize,
    pub bars: Vec<Bar>,
}

impl Barcode {
    pub fn new(degree: usize, bars: Vec<Bar>) -> Self {
        Self { degree, bars }
    }

    pub fn empty(degree: usize) -> Self {
        Self::new(degree, Vec::new())
    }

    /// Builds a barcode from `(birth, death)` pairs.
    pub fn from_pairs(degree: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        let bars = pairs
            .iter()
            .map(|&(s, e)| Bar::new(s, ExtendedReal::new(e)?))
            .collect::<Result<_>>()?;
        Ok(Self::new(degree, bars))
    }

    /// Number of bars, i.e. the minimal number of generators.
    pub fn rank(&self) -> usize {
        self.bars.len()
    }

    pub fn infinite_bar_count(&self) -> usize {
        self.bars.iter().filter(|b| b.death.is_infinite()).count()
    }

    /// Disjoint union (direct sum).
    pub fn union(&self, other: &Barcode) -> Barcode {
        let mut bars = self.bars.clone();
        bars.extend_from_slice(&other.bars);
        Barcode::new(self.degree, bars)
    }

    /// Bars sorted by `(birth, death)`; equal multisets give equal output.
    pub fn sorted_bars(&self) -> Vec<Bar> {
        let mut bars = self.bars.clone();
        bars.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.cmp(&b.death)));
        bars
    }

    /// Whether both barcodes hold the same multiset of bars (degree ignored).
    pub fn same_bars(&self, other: &Barcode) -> bool {
        self.sorted_bars() == other.sorted_bars()
    }
}

/// See [`Barcode::rank`].
pub fn rank(b: &Barcode) -> usize {
    b.rank()
}

/// Life span of a bar under any supported (closed) contour: the smallest `t`
/// at which the bar stops being counted, `inf{t | C(s, t) ≥ min(α, e)}`.
fn closed_life(c: &Contour, bar: &Bar) -> ExtendedReal {
    let level = bar.death.min(c.truncation());
    c.crossing_time(bar.birth, level)
}

/// `life_C K(s, e)` for a contour whose untruncated family is regular:
///
/// * untruncated: `∞` if `e = ∞`, else `C(s, −)⁻¹(e)`;
/// * truncated at `α`: `0` if `α ≤ s`, `C(s, −)⁻¹(α)` if `s < α ≤ e`,
///   `C(s, −)⁻¹(e)` if `e < α`.
pub fn life_span(c: &Contour, bar: &Bar) -> Result<ExtendedReal> {
    if !c.has_regular_base() {
        return Err(Error::NotRegular(
            "life spans need a contour whose untruncated family is regular".into(),
        ));
    }
    Ok(closed_life(c, bar))
}

/// Step function `t ↦ #{bars with life span > t}`.
fn count_exceeding(lives: impl IntoIterator<Item = ExtendedReal>) -> StepFunction {
    let mut finite = Vec::new();
    let mut infinite = 0usize;
    for l in lives {
        match l.as_finite() {
            Some(v) if v > 0.0 => finite.push(v),
            Some(_) => {}
            None => infinite += 1,
        }
    }
    finite.sort_by(f64::total_cmp);
    let mut breakpoints = Vec::new();
    let mut values = vec![(finite.len() + infinite) as f64];
    let mut i = 0;
    while i < finite.len() {
        let t = finite[i];
        while i < finite.len() && finite[i] == t {
            i += 1;
        }
        breakpoints.push(t);
        values.push((finite.len() - i + infinite) as f64);
    }
    StepFunction::new(breakpoints, values).expect("counts are non-increasing")
}

/// The stable rank `t ↦ |{i | C(s_i, t) < e_i}|` of a barcode.
pub fn stable_rank(c: &Contour, b: &Barcode) -> StepFunction {
    count_exceeding(b.bars.iter().map(|bar| closed_life(c, bar)))
}

/// The `t`-shift: bars with `C(s, t) < e`, re-born at `C(s, t)`.
pub fn shift_barcode(c: &Contour, b: &Barcode, t: f64) -> Barcode {
    let bars = b
        .bars
        .iter()
        .filter_map(|bar| {
            let start = c.eval_at(bar.birth, t);
            (start < bar.death)
                .then(|| Bar::new(start.value(), bar.death).expect("start precedes death"))
        })
        .collect();
    Barcode::new(b.degree, bars)
}

/// Default `α` grid for the 2D invariant of the given barcodes: `0`, every
/// distinct finite endpoint, the midpoints between consecutive endpoints,
/// and `∞`. The truncated life spans are piecewise in `α` with breaks exactly
/// at bar endpoints.
pub fn default_alpha_grid<'a>(
    barcodes: impl IntoIterator<Item = &'a Barcode>,
) -> Vec<ExtendedReal> {
    let endpoints = endpoint_set(barcodes);
    let mut grid: BTreeSet<ExtendedReal> = endpoints.iter().copied().collect();
    for w in endpoints.windows(2) {
        grid.insert(ExtendedReal::new(0.5 * (w[0].value() + w[1].value())).unwrap());
    }
    grid.insert(ExtendedReal::ZERO);
    grid.insert(ExtendedReal::INFINITY);
    grid.into_iter().collect()
}

/// [`default_alpha_grid`] refined with `endpoint ± offset` for every finite
/// endpoint.
pub fn refined_alpha_grid<'a>(
    barcodes: impl IntoIterator<Item = &'a Barcode> + Clone,
    offset: f64,
) -> Vec<ExtendedReal> {
    let mut grid: BTreeSet<ExtendedReal> =
        default_alpha_grid(barcodes.clone()).into_iter().collect();
    for e in endpoint_set(barcodes) {
        for x in [e.value() - offset, e.value() + offset] {
            if x >= 0.0 {
                grid.insert(ExtendedReal::new(x).unwrap());
            }
        }
    }
    grid.into_iter().collect()
}

fn endpoint_set<'a>(barcodes: impl IntoIterator<Item = &'a Barcode>) -> Vec<ExtendedReal> {
    let mut set = BTreeSet::new();
    for b in barcodes {
        for bar in &b.bars {
            set.insert(ExtendedReal::new(bar.birth).unwrap());
            if bar.death.is_finite() {
                set.insert(bar.death);
            }
        }
    }
    set.into_iter().collect()
}

/// One stable-rank slice per truncation `C/α`; `alphas` defaults to
/// [`default_alpha_grid`] of `b`.
pub fn stable_rank_2d(
    c: &Contour,
    b: &Barcode,
    alphas: Option<&[ExtendedReal]>,
) -> Result<Grid2DFunction> {
    let alphas = match alphas {
        Some(a) => a.to_vec(),
        None => default_alpha_grid([b]),
    };
    let slices = alphas
        .iter()
        .map(|alpha| stable_rank(&c.truncate(*alpha), b))
        .collect();
    Grid2DFunction::new(alphas, slices)
}

/// `d_C(0, V)`: the largest life span (`0` for the zero module).
pub fn d_c_to_zero(c: &Contour, b: &Barcode) -> Result<ExtendedReal> {
    b.bars.iter().try_fold(ExtendedReal::ZERO, |acc, bar| {
        Ok(acc.max(life_span(c, bar)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::Density;

    fn ext(x: f64) -> ExtendedReal {
        ExtendedReal::new(x).unwrap()
    }

    fn bars(pairs: &[(f64, f64)]) -> Barcode {
        Barcode::from_pairs(1, pairs).unwrap()
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn bar_invariants() {
        assert!(Bar::finite(1.0, 1.0).is_err());
        assert!(Bar::finite(2.0, 1.0).is_err());
        assert!(Bar::finite(-1.0, 1.0).is_err());
        assert!(Bar::infinite(3.0).is_ok());
        assert!(serde_json::from_str::<Bar>("[2.0, 1.0]").is_err());
    }

    #[test]
    fn life_span_examples() {
        let std = Contour::standard();
        let k13 = Bar::finite(1.0, 3.0).unwrap();
        let k15 = Bar::finite(1.0, 5.0).unwrap();
        assert_eq!(life_span(&std, &k13).unwrap(), ext(2.0));
        assert!(life_span(&std, &Bar::infinite(1.0).unwrap())
            .unwrap()
            .is_infinite());
        let shift = Contour::shift(Density::new(vec![0.5], vec![3.0, 1.0]).unwrap());
        assert!(life_span(&shift, &Bar::infinite(0.2).unwrap())
            .unwrap()
            .is_infinite());
        assert_eq!(life_span(&std.truncate(ext(2.0)), &k15).unwrap(), ext(1.0));
        assert_eq!(
            life_span(&std.truncate(ext(1.0)), &k15).unwrap(),
            ExtendedReal::ZERO
        );
        assert_eq!(life_span(&std.truncate(ext(9.0)), &k15).unwrap(), ext(4.0));
        assert_eq!(life_span(&std.truncate(ext(5.0)), &k15).unwrap(), ext(4.0));
        assert!(life_span(&Contour::exponential(2.0).unwrap(), &k13).is_err());
    }

    #[test]
    fn stable_rank_examples() {
        let std = Contour::standard();
        assert_eq!(stable_rank(&std, &Barcode::empty(0)), StepFunction::zero());
        let b = bars(&[(0.0, 2.0), (1.0, 3.0), (0.0, INF)]);
        let f = stable_rank(&std, &b);
        assert_eq!(f.evaluate(0.0), 3.0);
        assert_eq!(f.evaluate(1.4), 3.0);
        assert_eq!(f.evaluate(2.0), 1.0);
        assert_eq!(f.limit_value(), 1.0);
        assert_eq!(f, StepFunction::new(vec![2.0], vec![3.0, 1.0]).unwrap());
    }

    #[test]
    fn exponential_stable_rank() {
        // life of K(s, e) is log2(e / s); bars born at 0 never die
        let c = Contour::exponential(2.0).unwrap();
        let f = stable_rank(&c, &bars(&[(1.0, 4.0), (0.0, 1.0)]));
        assert_eq!(f, StepFunction::new(vec![2.0], vec![2.0, 1.0]).unwrap());
    }

    #[test]
    fn shift_examples() {
        let std = Contour::standard();
        let b = bars(&[(0.0, 2.0), (1.0, 3.0)]);
        assert_eq!(shift_barcode(&std, &b, 0.0), b);
        assert_eq!(
            shift_barcode(&std, &b, 1.0),
            bars(&[(1.0, 2.0), (2.0, 3.0)])
        );
        assert_eq!(shift_barcode(&std, &bars(&[(0.0, 2.0)]), 2.0), bars(&[]));
    }

    #[test]
    fn two_dimensional_examples() {
        let std = Contour::standard();
        let b = bars(&[(0.0, 2.0), (1.0, 3.0), (0.5, INF)]);
        let grid = stable_rank_2d(&std, &b, None).unwrap();
        assert_eq!(
            grid.slice(ExtendedReal::INFINITY).unwrap(),
            &stable_rank(&std, &b)
        );
        assert_eq!(
            grid.slice(ExtendedReal::ZERO).unwrap(),
            &StepFunction::zero()
        );
        let single = bars(&[(1.0, 3.0)]);
        let grid = stable_rank_2d(
            &std,
            &single,
            Some(&[ExtendedReal::ZERO, ext(2.0), ExtendedReal::INFINITY]),
        )
        .unwrap();
        assert_eq!(
            grid.slice(ext(2.0)).unwrap(),
            &StepFunction::indicator(1.0).unwrap()
        );
        assert_eq!(
            default_alpha_grid([&single]),
            vec![
                ExtendedReal::ZERO,
                ext(1.0),
                ext(2.0),
                ext(3.0),
                ExtendedReal::INFINITY
            ]
        );
    }

    #[test]
    fn distance_to_zero() {
        let std = Contour::standard();
        assert_eq!(
            d_c_to_zero(&std, &Barcode::empty(0)).unwrap(),
            ExtendedReal::ZERO
        );
        assert_eq!(
            d_c_to_zero(&std, &bars(&[(0.0, 2.0), (1.0, 3.0)])).unwrap(),
            ext(2.0)
        );
        assert!(d_c_to_zero(&std, &bars(&[(0.0, 2.0), (1.0, INF)]))
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn rank_is_additive() {
        let a = bars(&[(0.0, 1.0), (0.5, 2.0)]);
        let b = bars(&[(0.0, INF)]);
        assert_eq!(rank(&Barcode::empty(0)), 0);
        assert_eq!(rank(&a.union(&b)), rank(&a) + rank(&b));
        assert_eq!(rank(&bars(&[(0.0, 1.0), (0.0, 1.0), (2.0, 3.0)])), 3);
    }

    #[test]
    fn json_schema() {
        let b = Barcode::from_pairs(1, &[(0.0, 1.5), (2.0, INF)]).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"degree":1,"bars":[[0.0,1.5],[2.0,"inf"]]}"#);
        assert_eq!(serde_json::from_str::<Barcode>(&s).unwrap(), b);
    }
}
