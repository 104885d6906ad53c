//! Periodic discrete signals on `Z_N` with physical period `L`.
//!
//! Conventions:
//!
//! * sample `n` sits at `x_n = n L / N`;
//! * spectrum bin `nu` in `[-N/2, N/2)` is the physical frequency `nu / L`;
//! * `fhat(nu) = (L/N) sum_n f_n e^{-2 pi i nu n / N}` and
//!   `f_n = (1/L) sum_nu fhat(nu) e^{2 pi i nu n / N}`;
//! * Parseval reads `(L/N) sum |f|^2 = (1/L) sum |fhat|^2`.
//!
//! With these weights the discrete bilinear operator with symbol one is the
//! pointwise product, with no stray factors.

mod generators;
mod io;

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Dyadic;

pub use generators::{
    gaussian, generator_registry, modulated_bump, random_partition, random_trig, spike, Gaussian, ModulatedBump,
    RandomTrig, SignalGenerator, Spike,
};
pub use io::{read_binary, read_csv, write_binary, write_csv};

/// Relative spectral energy outside the half band tolerated before an input
/// counts as aliasing.
pub const BAND_TOLERANCE: f64 = 1e-20;

/// Sample count and physical period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    l: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size {n} is not a power of two >= 4")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParameter(format!("period {l} must be positive")));
        }
        Ok(Grid { n, l })
    }

    pub fn unit(n: usize) -> Result<Self> {
        Grid::new(n, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Sample spacing `L/N`.
    pub fn dx(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Lowest bin `-N/2`.
    pub fn min_bin(&self) -> i64 {
        -(self.n as i64 / 2)
    }

    /// One past the highest bin, `N/2`.
    pub fn end_bin(&self) -> i64 {
        self.n as i64 / 2
    }

    /// Bins admissible as bilinear inputs: `[-N/4, N/4)`.
    pub fn half_band(&self) -> (i64, i64) {
        (-(self.n as i64 / 4), self.n as i64 / 4)
    }

    pub fn in_half_band(&self, bin: i64) -> bool {
        let (a, b) = self.half_band();
        a <= bin && bin < b
    }

    /// Storage index of a bin (FFT order).
    pub fn index(&self, bin: i64) -> usize {
        bin.rem_euclid(self.n as i64) as usize
    }

    /// Bin stored at an index.
    pub fn bin(&self, index: usize) -> i64 {
        let i = index as i64;
        if i >= self.n as i64 / 2 {
            i - self.n as i64
        } else {
            i
        }
    }

    pub fn freq(&self, bin: i64) -> f64 {
        bin as f64 / self.l
    }

    /// The period as an exact dyadic rational (every finite double is one).
    pub fn l_exact(&self) -> Option<Dyadic> {
        Dyadic::from_f64(self.l)
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "N = {}, L = {} against N = {}, L = {}",
                self.n, self.l, other.n, other.l
            )))
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let plan = {
            let mut p = p.borrow_mut();
            if inverse {
                p.plan_fft_inverse(buf.len())
            } else {
                p.plan_fft_forward(buf.len())
            }
        };
        plan.process(buf);
    });
}

/// Forward transform with the `L/N` weight; output in FFT order.
pub fn forward(grid: &Grid, samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    fft(&mut buf, false);
    let w = grid.dx();
    buf.iter_mut().for_each(|c| *c *= w);
    buf
}

/// Inverse transform with the `1/L` weight; input in FFT order.
pub fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    fft(&mut buf, true);
    let w = 1.0 / grid.l();
    buf.iter_mut().for_each(|c| *c *= w);
    buf
}

/// A complex signal on a grid, with its spectrum computed on demand.
#[derive(Clone, Debug)]
pub struct DiscreteSignal {
    grid: Grid,
    samples: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl PartialEq for DiscreteSignal {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.samples == other.samples
    }
}

impl DiscreteSignal {
    pub fn from_samples(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a grid of size {}",
                samples.len(),
                grid.n()
            )));
        }
        Ok(DiscreteSignal { grid, samples, spectrum: OnceLock::new() })
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::from_samples(grid, values.iter().map(|v| Complex64::new(*v, 0.0)).collect())
    }

    /// Signal with the given spectrum (FFT order).
    pub fn from_spectrum(grid: Grid, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.n() {
            return Err(Error::GridMismatch("spectrum length differs from grid size".into()));
        }
        let samples = inverse(&grid, &spectrum);
        let cell = OnceLock::new();
        let _ = cell.set(spectrum);
        Ok(DiscreteSignal { grid, samples, spectrum: cell })
    }

    /// Signal from a function of the bin.
    pub fn from_bins(grid: Grid, coeff: impl Fn(i64) -> Complex64) -> Self {
        let spec = (0..grid.n()).map(|i| coeff(grid.bin(i))).collect();
        Self::from_spectrum(grid, spec).expect("length matches")
    }

    pub fn zeros(grid: Grid) -> Self {
        DiscreteSignal::from_samples(grid, vec![Complex64::new(0.0, 0.0); grid.n()]).expect("length")
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        DiscreteSignal::from_samples(grid, vec![c; grid.n()]).expect("length")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Spectrum in FFT order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| forward(&self.grid, &self.samples))
    }

    pub fn coefficient(&self, bin: i64) -> Complex64 {
        self.spectrum()[self.grid.index(bin)]
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        DiscreteSignal::from_samples(self.grid, self.samples.iter().map(|c| f(*c)).collect())
            .expect("length")
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        DiscreteSignal::from_samples(
            self.grid,
            self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    /// `sum u conj(v) L/N`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.grid.same_as(&other.grid)?;
        let s: Complex64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.dx())
    }

    pub fn l2_norm(&self) -> f64 {
        lp_norm(self, 2.0).expect("p = 2 is valid")
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Fraction of the spectral energy outside the half band.
    pub fn out_of_band_energy(&self) -> f64 {
        let spec = self.spectrum();
        let mut inside = 0.0;
        let mut outside = 0.0;
        for (i, c) in spec.iter().enumerate() {
            if self.grid.in_half_band(self.grid.bin(i)) {
                inside += c.norm_sqr();
            } else {
                outside += c.norm_sqr();
            }
        }
        let total = inside + outside;
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// Fail unless the spectrum lies in the half band up to round-off.
    pub fn require_half_band(&self, what: &str) -> Result<()> {
        let e = self.out_of_band_energy();
        if e > BAND_TOLERANCE {
            return Err(Error::Aliasing(format!(
                "{what} has relative energy {e:.3e} outside bins [{}, {})",
                self.grid.half_band().0,
                self.grid.half_band().1
            )));
        }
        Ok(())
    }

    /// Zero every coefficient outside the half band.
    pub fn project_half_band(&self) -> Self {
        let spec = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| if self.grid.in_half_band(self.grid.bin(i)) { *c } else { Complex64::new(0.0, 0.0) })
            .collect();
        DiscreteSignal::from_spectrum(self.grid, spec).expect("length")
    }

    /// Bins carrying a coefficient above `tol` times the largest.
    pub fn support_bins(&self, tol: f64) -> Vec<i64> {
        let spec = self.spectrum();
        let top = spec.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut bins: Vec<i64> = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > tol * top && top > 0.0)
            .map(|(i, _)| self.grid.bin(i))
            .collect();
        bins.sort();
        bins
    }
}

/// `(sum |f_n|^p L/N)^(1/p)`, or the maximum for `p = inf`.
pub fn lp_norm(f: &DiscreteSignal, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    lp_norm_values(f.samples().iter().map(|c| c.norm()), f.grid().dx(), p)
}

/// `L^p` norm of non-negative sample magnitudes with weight `dx`.
pub fn lp_norm_values(values: impl Iterator<Item = f64>, dx: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.fold(0.0, f64::max));
    }
    // scale by the maximum to keep large exponents finite
    let v: Vec<f64> = values.collect();
    let top = v.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = v.iter().map(|x| (x / top).powf(p)).sum();
    Ok(top * (s * dx).powf(1.0 / p))
}

/// A frequency endpoint: finite dyadic or infinite. Ordered along the line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    NegInf,
    Finite(Dyadic),
    PosInf,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::NegInf => write!(f, "-inf"),
            Endpoint::PosInf => write!(f, "inf"),
            Endpoint::Finite(d) => write!(f, "{d}"),
        }
    }
}

impl FromStr for Endpoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" => Ok(Endpoint::NegInf),
            "inf" | "+inf" => Ok(Endpoint::PosInf),
            t => Ok(Endpoint::Finite(t.parse()?)),
        }
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open frequency interval `[lo, hi)` in physical units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FreqInterval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

/// `ceil(a L)` clamped to the grid's bin range.
fn ceil_scaled(a: Dyadic, grid: &Grid) -> i64 {
    let lo = grid.min_bin() as i128;
    let hi = grid.end_bin() as i128;
    let exact = grid.l_exact().and_then(|l| a.checked_mul(l));
    let c = match exact {
        Some(p) => p.ceil(),
        None => {
            let v = (a.to_f64() * grid.l()).ceil();
            if v < lo as f64 {
                lo
            } else if v > hi as f64 {
                hi
            } else {
                v as i128
            }
        }
    };
    c.clamp(lo, hi) as i64
}

impl FreqInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        FreqInterval { lo: Endpoint::Finite(lo), hi: Endpoint::Finite(hi) }
    }

    /// `(-inf, c)`.
    pub fn below(c: Dyadic) -> Self {
        FreqInterval { lo: Endpoint::NegInf, hi: Endpoint::Finite(c) }
    }

    /// `[c, inf)`.
    pub fn at_least(c: Dyadic) -> Self {
        FreqInterval { lo: Endpoint::Finite(c), hi: Endpoint::PosInf }
    }

    pub fn everything() -> Self {
        FreqInterval { lo: Endpoint::NegInf, hi: Endpoint::PosInf }
    }

    fn bound(e: Endpoint, grid: &Grid) -> i64 {
        match e {
            Endpoint::NegInf => grid.min_bin(),
            Endpoint::PosInf => grid.end_bin(),
            Endpoint::Finite(a) => ceil_scaled(a, grid),
        }
    }

    /// Bins `nu` of the grid with `lo <= nu/L < hi`, as a half-open range.
    pub fn bin_range(&self, grid: &Grid) -> std::ops::Range<i64> {
        let a = Self::bound(self.lo, grid);
        let b = Self::bound(self.hi, grid);
        a..b.max(a)
    }

    /// Direct membership test of one bin, without forming the range.
    pub fn contains_bin(&self, bin: i64, grid: &Grid) -> bool {
        let above = |e: Endpoint| match e {
            Endpoint::NegInf => true,
            Endpoint::PosInf => false,
            Endpoint::Finite(a) => match grid.l_exact().and_then(|l| a.checked_mul(l)) {
                Some(p) => Dyadic::from(bin) >= p,
                None => bin as f64 >= a.to_f64() * grid.l(),
            },
        };
        above(self.lo) && !above(self.hi)
    }

    pub fn is_empty_on(&self, grid: &Grid) -> bool {
        self.bin_range(grid).is_empty()
    }

    /// Exact length for finite intervals.
    pub fn length(&self) -> Option<Dyadic> {
        match (self.lo, self.hi) {
            (Endpoint::Finite(a), Endpoint::Finite(b)) => Some(if b > a { b - a } else { Dyadic::ZERO }),
            _ => None,
        }
    }
}

/// `lo:hi` with either side optionally empty for an infinite endpoint.
impl FromStr for FreqInterval {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("interval `{s}` is not of the form lo:hi")))?;
        let lo = if a.trim().is_empty() { Endpoint::NegInf } else { a.parse()? };
        let hi = if b.trim().is_empty() { Endpoint::PosInf } else { b.parse()? };
        Ok(FreqInterval { lo, hi })
    }
}

impl fmt::Display for FreqInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

/// `M_n f`: multiply the spectrum by `n(nu)` and transform back.
pub fn linear_multiplier(f: &DiscreteSignal, n: impl Fn(i64) -> Complex64) -> DiscreteSignal {
    let grid = *f.grid();
    let spec = f
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| c * n(grid.bin(i)))
        .collect();
    DiscreteSignal::from_spectrum(grid, spec).expect("length")
}

/// `M_I f` for a frequency interval.
pub fn interval_multiplier(f: &DiscreteSignal, iv: &FreqInterval) -> DiscreteSignal {
    let r = iv.bin_range(f.grid());
    linear_multiplier(f, |b| if r.contains(&b) { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

/// `M_S f` for an arbitrary bin set given as a mask in FFT order.
pub fn mask_multiplier(f: &DiscreteSignal, mask: &[bool]) -> DiscreteSignal {
    let spec = f
        .spectrum()
        .iter()
        .zip(mask)
        .map(|(c, keep)| if *keep { *c } else { Complex64::new(0.0, 0.0) })
        .collect();
    DiscreteSignal::from_spectrum(*f.grid(), spec).expect("length")
}

/// Radii of the centered maximal function: `0`, the powers of two below
/// `N/2`, and the widest window that does not wrap onto itself.
pub fn maximal_radii(n: usize) -> Vec<usize> {
    let mut r = vec![0usize];
    let mut k = 1usize;
    while k < n / 2 {
        r.push(k);
        k *= 2;
    }
    if *r.last().unwrap() != n / 2 - 1 {
        r.push(n / 2 - 1);
    }
    r
}

/// Centered maximal function over the windows of [`maximal_radii`],
/// periodic. Returned as a real signal on the same grid.
pub fn maximal_function(f: &DiscreteSignal) -> DiscreteSignal {
    let n = f.len();
    let abs: Vec<f64> = f.samples().iter().map(|c| c.norm()).collect();
    // prefix sums over three periods
    let mut prefix = Vec::with_capacity(3 * n + 1);
    prefix.push(0.0);
    for k in 0..3 * n {
        let last = *prefix.last().unwrap();
        prefix.push(last + abs[k % n]);
    }
    let radii = maximal_radii(n);
    let out: Vec<f64> = (0..n)
        .map(|x| {
            radii
                .iter()
                .map(|&r| {
                    let a = n + x - r;
                    let b = n + x + r + 1;
                    (prefix[b] - prefix[a]) / (2 * r + 1) as f64
                })
                .fold(0.0, f64::max)
        })
        .collect();
    DiscreteSignal::from_real(*f.grid(), &out).expect("length")
}

/// First pair of intervals sharing a grid bin.
pub fn first_bin_overlap(intervals: &[FreqInterval], grid: &Grid) -> Option<(usize, usize)> {
    let mut ranges: Vec<(std::ops::Range<i64>, usize)> = intervals
        .iter()
        .enumerate()
        .map(|(i, iv)| (iv.bin_range(grid), i))
        .filter(|(r, _)| !r.is_empty())
        .collect();
    ranges.sort_by_key(|(r, _)| r.start);
    ranges
        .windows(2)
        .find(|w| w[1].0.start < w[0].0.end)
        .map(|w| (w[0].1, w[1].1))
}

/// `||(sum_I |M_I f|^2)^(1/2)||_p / ||f||_p` for intervals disjoint on the grid.
pub fn square_function_ratio(f: &DiscreteSignal, intervals: &[FreqInterval], p: f64) -> Result<f64> {
    if let Some((a, b)) = first_bin_overlap(intervals, f.grid()) {
        return Err(Error::Overlap(format!(
            "{} and {} share grid frequencies",
            intervals[a], intervals[b]
        )));
    }
    let denom = lp_norm(f, p)?;
    if denom == 0.0 {
        return Err(Error::ZeroNorm("square function input"));
    }
    let mut acc = vec![0.0f64; f.len()];
    for iv in intervals {
        let part = interval_multiplier(f, iv);
        for (a, c) in acc.iter_mut().zip(part.samples()) {
            *a += c.norm_sqr();
        }
    }
    let num = lp_norm_values(acc.iter().map(|v| v.sqrt()), f.grid().dx(), p)?;
    Ok(num / denom)
}

/// Fefferman-Stein type ratio
/// `||(sum_k (M f_k)^2)^(1/2)||_p / ||(sum_k |f_k|^2)^(1/2)||_p`.
pub fn vector_maximal_ratio(family: &[DiscreteSignal], p: f64) -> Result<f64> {
    let first = family.first().ok_or(Error::ZeroNorm("empty family"))?;
    let n = first.len();
    let mut num = vec![0.0f64; n];
    let mut den = vec![0.0f64; n];
    for f in family {
        f.grid().same_as(first.grid())?;
        let m = maximal_function(f);
        for i in 0..n {
            num[i] += m.samples()[i].re.powi(2);
            den[i] += f.samples()[i].norm_sqr();
        }
    }
    let dx = first.grid().dx();
    let d = lp_norm_values(den.iter().map(|v| v.sqrt()), dx, p)?;
    if d == 0.0 {
        return Err(Error::ZeroNorm("maximal family"));
    }
    Ok(lp_norm_values(num.iter().map(|v| v.sqrt()), dx, p)? / d)
}
