//! Test functions on the periodic grid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DiscreteSignal, FreqInterval, Grid};
use crate::rational::Dyadic;
use crate::error::{Error, Result};
use crate::registry::{params, Registry};

/// Decay required at distance `L/2` from the center of a localized bump.
const BOUNDARY_DECAY: f64 = 1e-10;

/// Produces a test signal on a grid; deterministic given the seed.
pub trait SignalGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate(&self, grid: &Grid, seed: u64) -> Result<DiscreteSignal>;
}

/// Periodic distance from `x` to `c`.
fn wrapped(x: f64, c: f64, l: f64) -> f64 {
    let d = (x - c).rem_euclid(l);
    d.min(l - d)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

impl SignalGenerator for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn generate(&self, grid: &Grid, _seed: u64) -> Result<DiscreteSignal> {
        gaussian(grid, self.center, self.width)
    }
}

/// `exp(-d^2 / (2 w^2))` with `d` the periodic distance to `center`.
pub fn gaussian(grid: &Grid, center: f64, width: f64) -> Result<DiscreteSignal> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("gaussian width {width} must be positive")));
    }
    let edge = (-(grid.l() / 2.0).powi(2) / (2.0 * width * width)).exp();
    if edge > BOUNDARY_DECAY {
        log::warn!("gaussian of width {width} decays only to {edge:.2e} at the period boundary");
    }
    let v: Vec<f64> = (0..grid.n())
        .map(|i| {
            let d = wrapped(grid.x(i), center, grid.l());
            (-d * d / (2.0 * width * width)).exp()
        })
        .collect();
    DiscreteSignal::from_real(*grid, &v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatedBump {
    #[serde(default)]
    pub center: f64,
    /// Half-width of the support.
    pub width: f64,
    /// Modulation frequency as a bin index.
    #[serde(default)]
    pub freq_bin: i64,
}

impl SignalGenerator for ModulatedBump {
    fn name(&self) -> &'static str {
        "modulated_bump"
    }

    fn generate(&self, grid: &Grid, _seed: u64) -> Result<DiscreteSignal> {
        modulated_bump(grid, self.center, self.width, self.freq_bin)
    }
}

/// `exp(-1/(1-t^2))` with `t = d / width`, modulated by `e^{2 pi i nu x / L}`.
pub fn modulated_bump(grid: &Grid, center: f64, width: f64, freq_bin: i64) -> Result<DiscreteSignal> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!("bump width {width} must be positive")));
    }
    if freq_bin < grid.min_bin() || freq_bin >= grid.end_bin() {
        return Err(Error::InvalidParameter(format!("modulation bin {freq_bin} outside the grid")));
    }
    if width > grid.l() / 2.0 {
        log::warn!("bump half-width {width} exceeds half the period; the support wraps");
    }
    let l = grid.l();
    let s: Vec<Complex64> = (0..grid.n())
        .map(|i| {
            let x = grid.x(i);
            let t = wrapped(x, center, l) / width;
            let amp = if t < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
            let phase = 2.0 * std::f64::consts::PI * freq_bin as f64 * (x - center) / l;
            Complex64::from_polar(amp, phase)
        })
        .collect();
    DiscreteSignal::from_samples(*grid, s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTrig {
    /// First bin of the band; defaults to the start of the half band.
    pub lo_bin: Option<i64>,
    /// One past the last bin; defaults to the end of the half band.
    pub hi_bin: Option<i64>,
}

impl SignalGenerator for RandomTrig {
    fn name(&self) -> &'static str {
        "random_trig"
    }

    fn generate(&self, grid: &Grid, seed: u64) -> Result<DiscreteSignal> {
        let (a, b) = grid.half_band();
        random_trig(grid, self.lo_bin.unwrap_or(a), self.hi_bin.unwrap_or(b), seed)
    }
}

/// Trigonometric polynomial with i.i.d. standard complex Gaussian
/// coefficients on bins `[lo, hi)` and exact zeros elsewhere.
pub fn random_trig(grid: &Grid, lo: i64, hi: i64, seed: u64) -> Result<DiscreteSignal> {
    if lo >= hi || lo < grid.min_bin() || hi > grid.end_bin() {
        return Err(Error::InvalidParameter(format!(
            "band [{lo}, {hi}) is empty or outside the grid bins [{}, {})",
            grid.min_bin(),
            grid.end_bin()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.n()];
    for bin in lo..hi {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        spec[grid.index(bin)] = Complex64::new(re, im);
    }
    DiscreteSignal::from_spectrum(*grid, spec)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spike {
    #[serde(default)]
    pub index: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl SignalGenerator for Spike {
    fn name(&self) -> &'static str {
        "spike"
    }

    fn generate(&self, grid: &Grid, _seed: u64) -> Result<DiscreteSignal> {
        spike(grid, self.index, self.amplitude)
    }
}

/// `amplitude` at one sample, zero elsewhere.
pub fn spike(grid: &Grid, index: usize, amplitude: f64) -> Result<DiscreteSignal> {
    if index >= grid.n() {
        return Err(Error::InvalidParameter(format!("spike index {index} outside the grid")));
    }
    let mut v = vec![0.0; grid.n()];
    v[index] = amplitude;
    DiscreteSignal::from_real(*grid, &v)
}

/// Up to `k` pairwise disjoint intervals covering every bin of the grid,
/// cut at uniformly drawn bin boundaries. The outer two are unbounded.
pub fn random_partition(grid: &Grid, k: usize, seed: u64) -> Result<Vec<FreqInterval>> {
    let (lo, hi) = (grid.min_bin(), grid.end_bin());
    if k == 0 || k as i64 > hi - lo {
        return Err(Error::InvalidParameter(format!("cannot cut {} bins into {k} intervals", hi - lo)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<i64> = (1..k).map(|_| rng.random_range(lo + 1..hi)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let l = grid
        .l_exact()
        .ok_or_else(|| Error::InvalidParameter("random partition needs a dyadic period".into()))?;
    let at = |bin: i64| -> Result<Dyadic> {
        // bin / L is exact only when L is a power of two
        let e = l.floor_log2();
        if l != Dyadic::pow2(e) {
            return Err(Error::InvalidParameter(format!("period {l} is not a power of two")));
        }
        Ok(Dyadic::from(bin).mul_pow2(-e))
    };
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev: Option<Dyadic> = None;
    for c in cuts {
        let x = at(c)?;
        out.push(match prev {
            None => FreqInterval::below(x),
            Some(p) => FreqInterval::new(p, x),
        });
        prev = Some(x);
    }
    out.push(match prev {
        None => FreqInterval::everything(),
        Some(p) => FreqInterval::at_least(p),
    });
    Ok(out)
}

/// Generators by name: `gaussian`, `modulated_bump`, `random_trig`, `spike`.
pub fn generator_registry() -> Registry<dyn SignalGenerator> {
    let mut r: Registry<dyn SignalGenerator> = Registry::new("signal generator");
    r.register("gaussian", |v| Ok(Box::new(params::<Gaussian>(v)?)));
    r.register("modulated_bump", |v| Ok(Box::new(params::<ModulatedBump>(v)?)));
    r.register("random_trig", |v| Ok(Box::new(params::<RandomTrig>(v)?)));
    r.register("spike", |v| Ok(Box::new(params::<Spike>(v)?)));
    r
}
