//! `r`-variation norms of finite sequences and the dyadic averaging
//! operators `A g(x)(j) = sum_nu ghat(nu) phi(2^j nu / L) e^{2 pi i nu x / L} / L`.
//!
//! `V^r(h) = sup|h| + sup over chains n_0 < ... < n_K of
//! (sum |h(n_k) - h(n_(k-1))|^r)^(1/r)`. On a finite index set the supremum
//! is a maximum, found by dynamic programming in the `r`-th power domain.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::{params, Registry};
use crate::signal::{linear_multiplier, lp_norm, lp_norm_values, DiscreteSignal, Grid};

/// Default `epsilon` in `V^(2+epsilon)`.
pub const DEFAULT_EPSILON: f64 = 0.5;

/// Longest sequence accepted by [`v_norm_oracle`].
pub const ORACLE_MAX_LEN: usize = 16;

/// Complex samples with optional abscissae.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSequence {
    pub values: Vec<Complex64>,
    pub labels: Option<Vec<f64>>,
}

impl FiniteSequence {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sequence must be nonempty".into()));
        }
        Ok(FiniteSequence { values, labels: None })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|v| Complex64::new(*v, 0.0)).collect())
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::InvalidParameter("label count differs from value count".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn v_norm(&self, r: f64) -> Result<f64> {
        v_norm(&self.values, r)
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("variation exponent r = {r} must be finite and >= 1")));
    }
    Ok(())
}

fn sup(h: &[Complex64]) -> f64 {
    h.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `V^r` norm by dynamic programming, `O(n^2)`.
pub fn v_norm(h: &[Complex64], r: f64) -> Result<f64> {
    check_r(r)?;
    if h.is_empty() {
        return Err(Error::InvalidParameter("sequence must be nonempty".into()));
    }
    let mut best = vec![0.0f64; h.len()];
    let mut top = 0.0f64;
    for n in 1..h.len() {
        let mut b = 0.0f64;
        for m in 0..n {
            b = b.max(best[m] + (h[n] - h[m]).norm().powf(r));
        }
        best[n] = b;
        top = top.max(b);
    }
    Ok(sup(h) + top.powf(1.0 / r))
}

/// `V^r` norm by enumerating every increasing chain. Exponential; for
/// cross-checking only.
pub fn v_norm_oracle(h: &[Complex64], r: f64) -> Result<f64> {
    check_r(r)?;
    if h.is_empty() {
        return Err(Error::InvalidParameter("sequence must be nonempty".into()));
    }
    if h.len() > ORACLE_MAX_LEN {
        return Err(Error::InvalidParameter(format!(
            "oracle limited to {ORACLE_MAX_LEN} terms, got {}",
            h.len()
        )));
    }
    let mut top = 0.0f64;
    for mask in 1u32..(1u32 << h.len()) {
        let mut prev: Option<Complex64> = None;
        let mut s = 0.0;
        for (i, v) in h.iter().enumerate() {
            if mask >> i & 1 == 1 {
                if let Some(p) = prev {
                    s += (v - p).norm().powf(r);
                }
                prev = Some(*v);
            }
        }
        top = top.max(s);
    }
    Ok(sup(h) + top.powf(1.0 / r))
}

/// A frequency window `phi`, supported in `[-2, 2]`.
pub trait Window: Send + Sync {
    fn name(&self) -> &'static str;
    fn value(&self, t: f64) -> f64;
}

/// `exp(1 - 1/(1 - (t/2)^2))` on `(-2, 2)`, with value one at the origin.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SmoothBump;

impl Window for SmoothBump {
    fn name(&self) -> &'static str {
        "bump"
    }

    fn value(&self, t: f64) -> f64 {
        let s = t / 2.0;
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }
}

/// One on `[-1, 1]`, smooth monotone taper to zero at `+-2`.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Plateau;

fn smooth_step(u: f64) -> f64 {
    // zero for u <= 0, one for u >= 1, C-infinity in between
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    f(u) / (f(u) + f(1.0 - u))
}

impl Window for Plateau {
    fn name(&self) -> &'static str {
        "plateau"
    }

    fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 {
            1.0
        } else if a >= 2.0 {
            0.0
        } else {
            smooth_step(2.0 - a)
        }
    }
}

/// Piecewise-linear interpolation of sampled `(t, phi(t))` pairs inside
/// `[-2, 2]`, zero outside the sampled range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledWindow {
    pub points: Vec<(f64, f64)>,
}

impl SampledWindow {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("sampled window needs two points".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.iter().any(|(t, _)| t.abs() > 2.0 || !t.is_finite()) {
            return Err(Error::InvalidParameter("window samples must lie in [-2, 2]".into()));
        }
        Ok(SampledWindow { points })
    }
}

impl Window for SampledWindow {
    fn name(&self) -> &'static str {
        "sampled"
    }

    fn value(&self, t: f64) -> f64 {
        let p = &self.points;
        if t < p[0].0 || t > p[p.len() - 1].0 {
            return 0.0;
        }
        let i = p.partition_point(|q| q.0 <= t).clamp(1, p.len() - 1);
        let (t0, v0) = p[i - 1];
        let (t1, v1) = p[i];
        if t1 == t0 {
            v1
        } else {
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        }
    }
}

/// Windows by name: `bump`, `plateau`, `sampled` (with `{"points": [[t, v], ...]}`).
pub fn window_registry() -> Registry<dyn Window> {
    let mut r: Registry<dyn Window> = Registry::new("window");
    r.register("bump", |_| Ok(Box::new(SmoothBump)));
    r.register("plateau", |_| Ok(Box::new(Plateau)));
    r.register("sampled", |v| {
        let w: SampledWindow = params(v)?;
        Ok(Box::new(SampledWindow::new(w.points)?))
    });
    r
}

fn check_scale(grid: &Grid, j: i32) -> Result<()> {
    // 2^-j must be at least the frequency spacing 1/L
    if (-(j as f64)).exp2() < 1.0 / grid.l() {
        return Err(Error::Undersampled { j, spacing: 1.0 / grid.l() });
    }
    Ok(())
}

/// Scales from the one whose plateau covers every grid frequency up to the
/// coarsest one still resolved by the grid.
pub fn default_scales(grid: &Grid) -> std::ops::RangeInclusive<i32> {
    let hi = grid.l().log2().floor() as i32;
    let lo = (2.0 * grid.l() / grid.n() as f64).log2().floor() as i32;
    lo..=hi
}

/// `A g(x)(j)` for `j` in `scales` at a single real shift `x`, by direct
/// left-endpoint quadrature over the frequency grid.
pub fn averages(
    g: &DiscreteSignal,
    phi: &dyn Window,
    x: f64,
    scales: std::ops::RangeInclusive<i32>,
) -> Result<FiniteSequence> {
    let grid = *g.grid();
    let mut out = Vec::new();
    let mut labels = Vec::new();
    for j in scales {
        check_scale(&grid, j)?;
        let dil = (j as f64).exp2();
        let mut s = Complex64::new(0.0, 0.0);
        for (i, c) in g.spectrum().iter().enumerate() {
            let nu = grid.bin(i) as f64;
            let w = phi.value(dil * nu / grid.l());
            if w != 0.0 {
                s += c * w * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * nu * x / grid.l());
            }
        }
        out.push(s / grid.l());
        labels.push(j as f64);
    }
    FiniteSequence::new(out)?.with_labels(labels)
}

/// `M_{phi(2^j .)} g` on the whole grid for every scale, via FFT.
pub fn averages_on_grid(
    g: &DiscreteSignal,
    phi: &dyn Window,
    scales: std::ops::RangeInclusive<i32>,
) -> Result<Vec<DiscreteSignal>> {
    let grid = *g.grid();
    scales
        .map(|j| {
            check_scale(&grid, j)?;
            let dil = (j as f64).exp2();
            Ok(linear_multiplier(g, |bin| Complex64::new(phi.value(dil * bin as f64 / grid.l()), 0.0)))
        })
        .collect()
}

/// `|| x -> V^r(A g(x)(.)) ||_p / ||g||_p` over the given scales.
pub fn lepingle_ratio_with(
    g: &DiscreteSignal,
    p: f64,
    r: f64,
    phi: &dyn Window,
    scales: std::ops::RangeInclusive<i32>,
) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 1 < p < inf, got {p}")));
    }
    if !(r > 2.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 2 < r < inf, got {r}")));
    }
    let denom = lp_norm(g, p)?;
    if denom == 0.0 {
        return Err(Error::ZeroNorm("averaging input"));
    }
    let layers = averages_on_grid(g, phi, scales)?;
    let n = g.len();
    let v: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|x| {
            let seq: Vec<Complex64> = layers.iter().map(|a| a.samples()[x]).collect();
            v_norm(&seq, r).expect("validated exponent")
        })
        .collect();
    Ok(lp_norm_values(v.into_iter(), g.grid().dx(), p)? / denom)
}

/// [`lepingle_ratio_with`] over [`default_scales`].
pub fn lepingle_ratio(g: &DiscreteSignal, p: f64, r: f64, phi: &dyn Window) -> Result<f64> {
    lepingle_ratio_with(g, p, r, phi, default_scales(g.grid()))
}

/// Check `|1/2 - 1/p1| < 1/(2 + epsilon)`.
pub fn check_epsilon(p1: f64, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || (0.5 - 1.0 / p1).abs() >= 1.0 / (2.0 + epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {epsilon} too large for p1 = {p1}: need |1/2 - 1/p1| < 1/(2 + epsilon)"
        )));
    }
    Ok(())
}
