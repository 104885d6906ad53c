//! Bilinear symbols `m(xi, eta)` and the discrete operator
//! `B_m(f, g)^(k) = (1/L) sum_xi m(xi, k - xi) fhat(xi) ghat(k - xi)`.
//!
//! A symbol is either a staircase (finite union of disjoint half-open
//! rectangles with dyadic endpoints) or a table over the half band of a
//! grid. Inputs must be band-limited to the half band so that sums of input
//! frequencies stay on the grid.

mod eval;
mod family;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lacunary::AdmissibleSequences;
use crate::rational::Dyadic;
use crate::signal::{interval_multiplier, DiscreteSignal, Endpoint, FreqInterval, Grid};

pub use eval::{
    apply_bilinear, apply_bilinear_with, evaluator_registry, BilinearEvaluator, DirectEvaluator,
    PreparedBilinear, RectangleEvaluator,
};
pub use family::{family_registry, SymbolFamily};

/// `xi_interval x eta_interval`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub xi: FreqInterval,
    pub eta: FreqInterval,
}

fn interval_empty(i: &FreqInterval) -> bool {
    i.lo >= i.hi
}

fn intervals_meet(a: &FreqInterval, b: &FreqInterval) -> bool {
    a.lo.max(b.lo) < a.hi.min(b.hi)
}

fn dilate_endpoint(e: Endpoint, k: i32) -> Endpoint {
    match e {
        Endpoint::Finite(a) => Endpoint::Finite(a.mul_pow2(k)),
        other => other,
    }
}

fn dilate_interval(i: &FreqInterval, k: i32) -> FreqInterval {
    FreqInterval { lo: dilate_endpoint(i.lo, k), hi: dilate_endpoint(i.hi, k) }
}

impl Rectangle {
    pub fn new(xi: FreqInterval, eta: FreqInterval) -> Self {
        Rectangle { xi, eta }
    }

    pub fn is_empty(&self) -> bool {
        interval_empty(&self.xi) || interval_empty(&self.eta)
    }

    pub fn intersects(&self, other: &Rectangle) -> bool {
        intervals_meet(&self.xi, &other.xi) && intervals_meet(&self.eta, &other.eta)
    }

    /// Exact area of a bounded rectangle.
    pub fn area(&self) -> Option<Dyadic> {
        if self.is_empty() {
            return Some(Dyadic::ZERO);
        }
        Some(self.xi.length()? * self.eta.length()?)
    }

    pub fn contains_bins(&self, xi_bin: i64, eta_bin: i64, grid: &Grid) -> bool {
        self.xi.contains_bin(xi_bin, grid) && self.eta.contains_bin(eta_bin, grid)
    }
}

impl fmt::Display for Rectangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {}", self.xi, self.eta)
    }
}

/// Disjoint union of rectangles; the symbol is its indicator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StaircaseJson")]
pub struct StaircaseSymbol {
    rectangles: Vec<Rectangle>,
}

#[derive(Deserialize)]
struct StaircaseJson {
    rectangles: Vec<Rectangle>,
}

impl TryFrom<StaircaseJson> for StaircaseSymbol {
    type Error = Error;
    fn try_from(j: StaircaseJson) -> Result<Self> {
        StaircaseSymbol::new(j.rectangles)
    }
}

impl StaircaseSymbol {
    /// Fails with [`Error::Overlap`] when two rectangles share a point.
    pub fn new(rectangles: Vec<Rectangle>) -> Result<Self> {
        for i in 0..rectangles.len() {
            for j in i + 1..rectangles.len() {
                if rectangles[i].intersects(&rectangles[j]) {
                    return Err(Error::Overlap(format!(
                        "rectangles {i} ({}) and {j} ({}) intersect",
                        rectangles[i], rectangles[j]
                    )));
                }
            }
        }
        Ok(StaircaseSymbol { rectangles })
    }

    /// The zero symbol.
    pub fn empty() -> Self {
        StaircaseSymbol { rectangles: Vec::new() }
    }

    /// The symbol one, whose operator is the pointwise product.
    pub fn unit() -> Self {
        StaircaseSymbol {
            rectangles: vec![Rectangle::new(FreqInterval::everything(), FreqInterval::everything())],
        }
    }

    pub fn rectangles(&self) -> &[Rectangle] {
        &self.rectangles
    }

    pub fn len(&self) -> usize {
        self.rectangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectangles.iter().all(Rectangle::is_empty)
    }

    /// Exact area, if every nonempty rectangle is bounded.
    pub fn area(&self) -> Option<Dyadic> {
        self.rectangles
            .iter()
            .try_fold(Dyadic::ZERO, |acc, r| Some(acc + r.area()?))
    }

    /// Image under `(xi, eta) -> 2^k (xi, eta)`.
    pub fn dilate(&self, k: i32) -> Self {
        StaircaseSymbol {
            rectangles: self
                .rectangles
                .iter()
                .map(|r| Rectangle::new(dilate_interval(&r.xi, k), dilate_interval(&r.eta, k)))
                .collect(),
        }
    }

    /// Union with a disjoint staircase.
    pub fn union(&self, other: &StaircaseSymbol) -> Result<Self> {
        let mut r = self.rectangles.clone();
        r.extend_from_slice(&other.rectangles);
        StaircaseSymbol::new(r)
    }

    /// Direct membership of a lattice point.
    pub fn value_at(&self, xi_bin: i64, eta_bin: i64, grid: &Grid) -> f64 {
        if self.rectangles.iter().any(|r| r.contains_bins(xi_bin, eta_bin, grid)) {
            1.0
        } else {
            0.0
        }
    }
}

/// Symbol values on the half band of a grid, row-major in `(xi, eta)` with
/// bins ascending from `-N/4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSymbolJson", into = "GridSymbolJson")]
pub struct GridSymbol {
    grid: Grid,
    table: Vec<f64>,
}

/// Run-length form: `runs` is a list of `[value, count]`.
#[derive(Clone, Serialize, Deserialize)]
struct GridSymbolJson {
    n: usize,
    l: f64,
    runs: Vec<(f64, usize)>,
}

impl From<GridSymbol> for GridSymbolJson {
    fn from(s: GridSymbol) -> Self {
        let mut runs: Vec<(f64, usize)> = Vec::new();
        for v in s.table {
            match runs.last_mut() {
                Some((w, c)) if w.to_bits() == v.to_bits() => *c += 1,
                _ => runs.push((v, 1)),
            }
        }
        GridSymbolJson { n: s.grid.n(), l: s.grid.l(), runs }
    }
}

impl TryFrom<GridSymbolJson> for GridSymbol {
    type Error = Error;
    fn try_from(j: GridSymbolJson) -> Result<Self> {
        let grid = Grid::new(j.n, j.l)?;
        let mut table = Vec::new();
        for (v, c) in j.runs {
            table.extend(std::iter::repeat_n(v, c));
        }
        let h = j.n / 2;
        if table.len() != h * h {
            return Err(Error::Format(format!("runs cover {} cells, expected {}", table.len(), h * h)));
        }
        GridSymbol::from_table(grid, table)
    }
}

impl GridSymbol {
    fn side(grid: &Grid) -> usize {
        grid.n() / 2
    }

    pub fn from_table(grid: Grid, table: Vec<f64>) -> Result<Self> {
        let h = Self::side(&grid);
        if table.len() != h * h {
            return Err(Error::GridMismatch(format!("table of {} cells for a {h} x {h} half band", table.len())));
        }
        if let Some(v) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("symbol value {v} outside [0, 1]")));
        }
        Ok(GridSymbol { grid, table })
    }

    /// Tabulate `value(xi_bin, eta_bin)` over the half band.
    pub fn from_fn(grid: Grid, value: impl Fn(i64, i64) -> f64) -> Result<Self> {
        let (lo, hi) = grid.half_band();
        let mut table = Vec::with_capacity(Self::side(&grid).pow(2));
        for a in lo..hi {
            for b in lo..hi {
                table.push(value(a, b));
            }
        }
        Self::from_table(grid, table)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Value at a pair of bins; zero outside the half band.
    pub fn value(&self, xi_bin: i64, eta_bin: i64) -> f64 {
        if !(self.grid.in_half_band(xi_bin) && self.grid.in_half_band(eta_bin)) {
            return 0.0;
        }
        let lo = self.grid.half_band().0;
        let h = Self::side(&self.grid);
        self.table[(xi_bin - lo) as usize * h + (eta_bin - lo) as usize]
    }

    /// Row of a `xi` bin inside the half band, indexed by `eta - lo`.
    pub(crate) fn row(&self, xi_bin: i64) -> &[f64] {
        let lo = self.grid.half_band().0;
        let h = Self::side(&self.grid);
        let start = (xi_bin - lo) as usize * h;
        &self.table[start..start + h]
    }

    pub fn count_nonzero(&self) -> usize {
        self.table.iter().filter(|v| **v != 0.0).count()
    }
}

/// A symbol in either representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    Staircase(StaircaseSymbol),
    Grid(GridSymbol),
}

impl From<StaircaseSymbol> for Symbol {
    fn from(s: StaircaseSymbol) -> Self {
        Symbol::Staircase(s)
    }
}

impl From<GridSymbol> for Symbol {
    fn from(s: GridSymbol) -> Self {
        Symbol::Grid(s)
    }
}

impl Symbol {
    pub fn unit() -> Self {
        StaircaseSymbol::unit().into()
    }

    pub fn zero() -> Self {
        StaircaseSymbol::empty().into()
    }

    /// Direct evaluation at a pair of bins of `grid`.
    pub fn value_at(&self, xi_bin: i64, eta_bin: i64, grid: &Grid) -> Result<f64> {
        match self {
            Symbol::Staircase(s) => Ok(s.value_at(xi_bin, eta_bin, grid)),
            Symbol::Grid(t) => {
                t.grid.same_as(grid)?;
                Ok(t.value(xi_bin, eta_bin))
            }
        }
    }

    /// Table over the half band of `grid`, by direct membership.
    pub fn table(&self, grid: &Grid) -> Result<GridSymbol> {
        match self {
            Symbol::Staircase(s) => GridSymbol::from_fn(*grid, |a, b| s.value_at(a, b, grid)),
            Symbol::Grid(t) => {
                t.grid.same_as(grid)?;
                Ok(t.clone())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Symbol::Staircase(s) => format!("staircase with {} rectangles", s.len()),
            Symbol::Grid(t) => format!("grid symbol, N = {}, L = {}", t.grid.n(), t.grid.l()),
        }
    }
}

/// `sum_{j<J} 1_[-(j+1), -j)(xi) 1_[2^-j, 1)(eta)`; the `j = 0` rectangle is
/// empty.
pub fn exp_staircase(j_len: usize) -> Result<StaircaseSymbol> {
    if j_len == 0 {
        return Err(Error::InvalidParameter("staircase needs J >= 1".into()));
    }
    let rects = (0..j_len as i64)
        .map(|j| {
            Rectangle::new(
                FreqInterval::new(Dyadic::from(-(j + 1)), Dyadic::from(-j)),
                FreqInterval::new(Dyadic::pow2(-(j as i32)), Dyadic::ONE),
            )
        })
        .collect();
    StaircaseSymbol::new(rects)
}

/// Membership in `{-J <= xi <= 0, 2^xi <= eta < 1}`, exact when `xi` is an
/// integer. Otherwise `2^xi` is irrational and is compared in floating
/// point, with ties counted as members.
pub fn in_exp_convex(xi: Dyadic, eta: Dyadic, j_len: usize) -> bool {
    if xi > Dyadic::ZERO || xi < Dyadic::from(-(j_len as i64)) || eta >= Dyadic::ONE {
        return false;
    }
    if xi.is_multiple_of_pow2(0) {
        eta >= Dyadic::pow2(xi.floor_div_pow2(0) as i32)
    } else {
        eta.to_f64() >= xi.to_f64().exp2()
    }
}

/// Indicator of the convex set under the exponential curve, truncated to
/// `-J <= xi`, tabulated at lattice points.
pub fn exp_convex(j_len: usize, grid: &Grid) -> Result<GridSymbol> {
    if j_len == 0 {
        return Err(Error::InvalidParameter("convex symbol needs J >= 1".into()));
    }
    let (lo, _) = grid.half_band();
    if (lo as f64) / grid.l() > -(j_len as f64) {
        log::warn!("grid band does not reach xi = -{j_len}; the symbol is cut at the band edge");
    }
    match grid.l_exact() {
        Some(l) => {
            // bins / L in exact arithmetic
            let inv = |b: i64| -> Option<Dyadic> { exact_ratio(b, l) };
            GridSymbol::from_fn(*grid, |a, b| match (inv(a), inv(b)) {
                (Some(x), Some(y)) => in_exp_convex(x, y, j_len) as u8 as f64,
                _ => in_exp_convex_f64(a as f64 / grid.l(), b as f64 / grid.l(), j_len) as u8 as f64,
            })
        }
        None => GridSymbol::from_fn(*grid, |a, b| {
            in_exp_convex_f64(a as f64 / grid.l(), b as f64 / grid.l(), j_len) as u8 as f64
        }),
    }
}

/// `b / l` when it is dyadic.
fn exact_ratio(b: i64, l: Dyadic) -> Option<Dyadic> {
    // l = num / 2^e with num odd or l an integer power of two
    let num = l.numerator();
    if num.count_ones() != 1 || num < 0 {
        return None;
    }
    let log_l = num.trailing_zeros() as i32 - l.denominator_exp() as i32;
    Some(Dyadic::from(b).mul_pow2(-log_l))
}

fn in_exp_convex_f64(xi: f64, eta: f64, j_len: usize) -> bool {
    xi <= 0.0 && xi >= -(j_len as f64) && eta < 1.0 && eta >= xi.exp2()
}

/// Rectangles `[0, xi_j) x [eta_j, zeta_j)`.
pub fn multilac_staircase(seqs: &AdmissibleSequences) -> Result<StaircaseSymbol> {
    let n = seqs.xi.len();
    if seqs.eta.len() != n || seqs.zeta.len() != n {
        return Err(Error::InvalidParameter("sequence lengths differ".into()));
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| seqs.eta[j] < seqs.zeta[j]).collect();
    order.sort_by_key(|&j| seqs.eta[j]);
    // reach: the largest right end seen so far, and its owner
    let mut reach: Option<(Dyadic, usize)> = None;
    for &b in &order {
        if let Some((z, a)) = reach {
            if seqs.eta[b] < z {
                return Err(Error::Overlap(format!(
                    "eta intervals {a} [{}, {}) and {b} [{}, {}) overlap",
                    seqs.eta[a], seqs.zeta[a], seqs.eta[b], seqs.zeta[b]
                )));
            }
        }
        if reach.is_none_or(|(z, _)| seqs.zeta[b] > z) {
            reach = Some((seqs.zeta[b], b));
        }
    }
    let rects = (0..n)
        .map(|j| {
            Rectangle::new(
                FreqInterval::new(Dyadic::ZERO, seqs.xi[j]),
                FreqInterval::new(seqs.eta[j], seqs.zeta[j]),
            )
        })
        .collect();
    StaircaseSymbol::new(rects)
}

/// Which closed side of the line `eta = slope xi + offset`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `eta >= slope xi + offset`
    #[default]
    Above,
    /// `eta <= slope xi + offset`
    Below,
}

/// Indicator of a closed half-plane bounded by `eta = slope xi + offset`.
pub fn half_plane(slope: Dyadic, offset: Dyadic, side: Side, grid: &Grid) -> Result<GridSymbol> {
    let exact = grid.l_exact();
    GridSymbol::from_fn(*grid, |a, b| {
        // compare L eta with slope L xi + L offset, all in units of bins
        let inside = match exact.and_then(|l| offset.checked_mul(l)) {
            Some(lo) => {
                let lhs = Dyadic::from(b);
                let rhs = slope.checked_mul(Dyadic::from(a)).map(|s| s + lo);
                match (side, rhs) {
                    (Side::Above, Some(r)) => lhs >= r,
                    (Side::Below, Some(r)) => lhs <= r,
                    (s, None) => float_side(s, a, b, slope, offset, grid),
                }
            }
            None => float_side(side, a, b, slope, offset, grid),
        };
        inside as u8 as f64
    })
}

fn float_side(side: Side, a: i64, b: i64, slope: Dyadic, offset: Dyadic, grid: &Grid) -> bool {
    let eta = b as f64 / grid.l();
    let line = slope.to_f64() * a as f64 / grid.l() + offset.to_f64();
    match side {
        Side::Above => eta >= line,
        Side::Below => eta <= line,
    }
}

/// `|| B_m(f, g) - sum_{j <= J-2} (M_[-J, -j-1) f)(M_[2^(-j-1), 2^-j) g) ||_2`
/// for the truncated exponential staircase.
pub fn regrouping_check(j_len: usize, f: &DiscreteSignal, g: &DiscreteSignal) -> Result<f64> {
    let m: Symbol = exp_staircase(j_len)?.into();
    let lhs = apply_bilinear(&m, f, g)?;
    let mut rhs = DiscreteSignal::zeros(*f.grid());
    let left = Dyadic::from(-(j_len as i64));
    for j in 0..j_len.saturating_sub(1) as i64 {
        let a = interval_multiplier(f, &FreqInterval::new(left, Dyadic::from(-j - 1)));
        let b = interval_multiplier(
            g,
            &FreqInterval::new(Dyadic::pow2(-(j as i32) - 1), Dyadic::pow2(-(j as i32))),
        );
        rhs = rhs.add(&a.mul(&b)?)?;
    }
    Ok(lhs.sub(&rhs)?.l2_norm())
}
