//! Lower bounds for the best constant `C` in
//! `|<B_m(f, g), h>| <= C ||f||_p1 ||g||_p2 ||h||_p3`, by alternating ascent
//! over test-function triples.
//!
//! Each block update starts from the exact dual element of the block's
//! kernel `Phi` (for `f`: `phase(Phi) |Phi|^(p'-1)`), projected back to the
//! half band. Projection can lose ground, so candidates are accepted only
//! when they raise the ratio, and a few gradient steps on `log ratio`
//! restricted to the band follow. The `h` block has no band constraint and
//! its dual element is exact.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{lp_norm, random_trig, DiscreteSignal, Grid};
use crate::stats::{dispersion, log_log_slope};
use crate::symbols::{evaluator_registry, PreparedBilinear, Symbol, SymbolFamily};

/// Slack on `1/p1 + 1/p2 + 1/p3 = 1`.
pub const RECIPROCAL_TOLERANCE: f64 = 1e-12;

/// Gradient steps after each dual update.
const POLISH_STEPS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTriple {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

impl ExponentTriple {
    /// A triple in the local `L^2` range: each `p` in `(2, inf)`, reciprocals
    /// summing to one.
    pub fn new(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let e = Self::exploratory(p1, p2, p3)?;
        if ![p1, p2, p3].iter().all(|p| *p > 2.0) {
            return Err(Error::Exponents { p1, p2, p3 });
        }
        Ok(e)
    }

    /// Any Hölder triple with each `p` in `(1, inf)`; outside the local `L^2`
    /// range the theory gives no bound.
    pub fn exploratory(p1: f64, p2: f64, p3: f64) -> Result<Self> {
        let ok = [p1, p2, p3].iter().all(|p| p.is_finite() && *p > 1.0)
            && (1.0 / p1 + 1.0 / p2 + 1.0 / p3 - 1.0).abs() <= RECIPROCAL_TOLERANCE;
        if !ok {
            return Err(Error::Exponents { p1, p2, p3 });
        }
        Ok(ExponentTriple { p1, p2, p3 })
    }

    pub fn is_local_l2(&self) -> bool {
        [self.p1, self.p2, self.p3].iter().all(|p| *p > 2.0)
    }
}

impl Default for ExponentTriple {
    fn default() -> Self {
        ExponentTriple { p1: 3.0, p2: 3.0, p3: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub restarts: usize,
    pub iterations: usize,
    /// Relative gain per iteration below which a restart counts as converged.
    pub tolerance: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { restarts: 32, iterations: 200, tolerance: 1e-7 }
    }
}

#[derive(Clone, Debug)]
pub struct TrilinearProbe {
    pub symbol: Symbol,
    pub exponents: ExponentTriple,
    pub grid: Grid,
    pub budget: Budget,
    /// Name in [`evaluator_registry`].
    pub evaluator: String,
}

impl TrilinearProbe {
    pub fn new(symbol: Symbol, exponents: ExponentTriple, grid: Grid) -> Self {
        TrilinearProbe { symbol, exponents, grid, budget: Budget::default(), evaluator: "rectangle".into() }
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn prepare(&self) -> Result<Box<dyn PreparedBilinear>> {
        evaluator_registry()
            .create(&self.evaluator, &serde_json::Value::Null)?
            .prepare(&self.symbol, &self.grid)
    }
}

/// `Re sum u conj(v) L/N`.
pub fn pairing(u: &DiscreteSignal, v: &DiscreteSignal) -> Result<f64> {
    Ok(u.inner(v)?.re)
}

fn norm(x: &DiscreteSignal, p: f64) -> f64 {
    lp_norm(x, p).expect("exponent validated")
}

fn nonzero_norm(x: &DiscreteSignal, p: f64, what: &'static str) -> Result<f64> {
    let n = lp_norm(x, p)?;
    if n == 0.0 {
        return Err(Error::ZeroNorm(what));
    }
    Ok(n)
}

/// `|<B, h>| / (||f||_p1 ||g||_p2 ||h||_p3)` with `B` already computed.
pub fn ratio_from(
    b: &DiscreteSignal,
    f: &DiscreteSignal,
    g: &DiscreteSignal,
    h: &DiscreteSignal,
    e: &ExponentTriple,
) -> Result<f64> {
    let d = nonzero_norm(f, e.p1, "f")? * nonzero_norm(g, e.p2, "g")? * nonzero_norm(h, e.p3, "h")?;
    Ok(pairing(b, h)?.abs() / d)
}

/// The Hölder ratio of a triple under `m`.
pub fn ratio(
    m: &Symbol,
    f: &DiscreteSignal,
    g: &DiscreteSignal,
    h: &DiscreteSignal,
    e: &ExponentTriple,
) -> Result<f64> {
    let b = crate::symbols::apply_bilinear(m, f, g)?;
    ratio_from(&b, f, g, h, e)
}

/// The unit `L^p` element `u` with `<b, u> = ||b||_p'`: `b |b|^(p'-2)`,
/// normalized, zero where `b` vanishes.
pub fn dual_element(b: &DiscreteSignal, p: f64) -> Result<DiscreteSignal> {
    let q = p / (p - 1.0);
    let u = b.map(|c| {
        let r = c.norm();
        if r == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            c * r.powf(q - 2.0)
        }
    });
    let n = nonzero_norm(&u, p, "dual kernel")?;
    Ok(u.scale(Complex64::new(1.0 / n, 0.0)))
}

fn normalized(x: &DiscreteSignal, p: f64) -> DiscreteSignal {
    let n = norm(x, p);
    x.scale(Complex64::new(1.0 / n, 0.0))
}

fn combine(a: &DiscreteSignal, s: f64, b: &DiscreteSignal, t: f64) -> DiscreteSignal {
    DiscreteSignal::from_samples(
        *a.grid(),
        a.samples().iter().zip(b.samples()).map(|(x, y)| x * s + y * t).collect(),
    )
    .expect("same grid")
}

/// Raise `|<x, phi>| / ||x||_p` over band-limited `x`; returns the new
/// normalized `x` and its value. Never returns a worse point.
fn block_update(x: &DiscreteSignal, phi: &DiscreteSignal, p: f64, step: &mut f64) -> (DiscreteSignal, f64) {
    let value = |c: &DiscreteSignal| {
        let n = norm(c, p);
        if n == 0.0 {
            0.0
        } else {
            pairing(c, phi).expect("same grid").abs() / n
        }
    };
    let mut best = x.clone();
    let mut v = value(x);
    let sign = if pairing(x, phi).expect("same grid") < 0.0 { -1.0 } else { 1.0 };

    if let Ok(d) = dual_element(phi, p) {
        let d = d.project_half_band();
        for t in [1.0, 0.5, 0.25, 0.125] {
            let c = combine(&best, 1.0 - t, &d, t * sign);
            let vc = value(&c);
            if vc > v {
                best = c;
                v = vc;
                break;
            }
        }
    }

    for _ in 0..POLISH_STEPS {
        let pr = pairing(&best, phi).expect("same grid");
        if pr == 0.0 {
            break;
        }
        let np = norm(&best, p).powf(p);
        let raw = DiscreteSignal::from_samples(
            *best.grid(),
            best.samples()
                .iter()
                .zip(phi.samples())
                .map(|(xv, fv)| fv / pr - xv * xv.norm().powf(p - 2.0) / np)
                .collect(),
        )
        .expect("same grid");
        let grad = raw.project_half_band();
        let (gn, xn) = (grad.l2_norm(), best.l2_norm());
        if gn == 0.0 || xn == 0.0 {
            break;
        }
        let mut moved = false;
        for _ in 0..8 {
            let c = combine(&best, 1.0, &grad, *step * xn / gn);
            let vc = value(&c);
            if vc > v {
                best = c;
                v = vc;
                *step = (*step * 2.0).min(1.0);
                moved = true;
                break;
            }
            *step *= 0.5;
        }
        if !moved {
            *step = step.max(1e-12);
            break;
        }
    }
    (normalized(&best, p), v)
}

/// The final triple of a restart.
#[derive(Clone, Debug)]
pub struct Iterate {
    pub f: DiscreteSignal,
    pub g: DiscreteSignal,
    pub h: DiscreteSignal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub seed: u64,
    /// Ratio after initialization and after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub struct RestartOutcome {
    pub trace: RestartTrace,
    pub iterate: Option<Iterate>,
}

/// Seed of restart `r` under a base seed.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64)
}

/// Random band-limited start of unit norm.
fn start(grid: &Grid, p: f64, seed: u64) -> DiscreteSignal {
    let (lo, hi) = grid.half_band();
    normalized(&random_trig(grid, lo, hi, seed).expect("half band is valid"), p)
}

/// One restart of the ascent from the random start of `seed`.
pub fn run_restart(plan: &dyn PreparedBilinear, e: &ExponentTriple, budget: &Budget, seed: u64) -> RestartOutcome {
    let grid = *plan.grid();
    let f = start(&grid, e.p1, seed.wrapping_mul(2));
    let g = start(&grid, e.p2, seed.wrapping_mul(2).wrapping_add(1));
    run_from(plan, e, budget, seed, f, g)
}

/// One restart from the diagonal `g = f`, with `f` the random start of
/// `seed`. For symmetric configurations such as `m = 1` at `p1 = p2` this
/// start already attains the Hölder bound.
pub fn run_diagonal(plan: &dyn PreparedBilinear, e: &ExponentTriple, budget: &Budget, seed: u64) -> RestartOutcome {
    let f = start(plan.grid(), e.p1, seed.wrapping_mul(2));
    run_from(plan, e, budget, seed, f.clone(), f)
}

/// Ascent from a given band-limited pair.
pub fn run_from(
    plan: &dyn PreparedBilinear,
    e: &ExponentTriple,
    budget: &Budget,
    seed: u64,
    f: DiscreteSignal,
    g: DiscreteSignal,
) -> RestartOutcome {
    let mut trace = RestartTrace {
        seed,
        trace: Vec::new(),
        iterations: 0,
        converged: false,
        final_ratio: 0.0,
        note: None,
    };
    let fail = |mut t: RestartTrace, msg: String| {
        t.note = Some(msg);
        RestartOutcome { trace: t, iterate: None }
    };
    let (mut f, mut g) = (normalized(&f, e.p1), normalized(&g, e.p2));
    let b = match plan.apply(&f, &g) {
        Ok(b) => b,
        Err(err) => return fail(trace, err.to_string()),
    };
    let mut h = match dual_element(&b, e.p3) {
        Ok(h) => h,
        Err(_) => {
            // B_m(f, g) = 0 on this start
            trace.trace.push(0.0);
            return fail(trace, "bilinear output vanished at the start".into());
        }
    };
    let mut r = pairing(&b, &h).expect("same grid");
    trace.trace.push(r);
    let (mut sf, mut sg) = (0.1, 0.1);
    for it in 0..budget.iterations {
        let step = (|| -> Result<f64> {
            let phi = plan.adjoint_f(&g, &h)?;
            f = block_update(&f, &phi, e.p1, &mut sf).0;
            let psi = plan.adjoint_g(&f, &h)?;
            g = block_update(&g, &psi, e.p2, &mut sg).0;
            let b = plan.apply(&f, &g)?;
            h = dual_element(&b, e.p3)?;
            pairing(&b, &h)
        })();
        let r_new = match step {
            Ok(v) => v,
            Err(err) => return fail(trace, format!("iteration {it}: {err}")),
        };
        trace.trace.push(r_new);
        trace.iterations = it + 1;
        let gain = r_new - r;
        r = r_new;
        if gain <= budget.tolerance * r.abs() {
            trace.converged = true;
            break;
        }
    }
    trace.final_ratio = r;
    RestartOutcome { trace, iterate: Some(Iterate { f, g, h }) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeEcho {
    pub symbol: String,
    pub exponents: ExponentTriple,
    pub n: usize,
    pub l: f64,
    pub budget: Budget,
    pub evaluator: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimateReport {
    pub best_ratio: f64,
    /// Restart seeds attaining `best_ratio`.
    pub witness_seeds: Vec<u64>,
    /// Iterations and convergence of the first witness.
    pub iterations: usize,
    pub converged: bool,
    pub restarts: Vec<RestartTrace>,
    pub parameters: ProbeEcho,
}

/// Run every restart of the probe and keep the best.
pub fn ascend(probe: &TrilinearProbe, seed: u64) -> Result<NormEstimateReport> {
    if probe.budget.restarts == 0 {
        return Err(Error::InvalidParameter("budget needs at least one restart".into()));
    }
    let plan = probe.prepare()?;
    let restarts: Vec<RestartTrace> = (0..probe.budget.restarts)
        .into_par_iter()
        .map(|r| {
            let s = restart_seed(seed, r);
            // odd restarts start on the diagonal
            let run = if r % 2 == 1 { run_diagonal } else { run_restart };
            run(plan.as_ref(), &probe.exponents, &probe.budget, s).trace
        })
        .collect();
    let best = restarts
        .iter()
        .map(|t| t.final_ratio)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let winners: Vec<&RestartTrace> = restarts.iter().filter(|t| t.final_ratio == best).collect();
    Ok(NormEstimateReport {
        best_ratio: best,
        witness_seeds: winners.iter().map(|t| t.seed).collect(),
        iterations: winners.first().map_or(0, |t| t.iterations),
        converged: winners.first().is_some_and(|t| t.converged),
        parameters: ProbeEcho {
            symbol: probe.symbol.describe(),
            exponents: probe.exponents,
            n: probe.grid.n(),
            l: probe.grid.l(),
            budget: probe.budget,
            evaluator: probe.evaluator.clone(),
            seed,
        },
        restarts,
    })
}

/// A sweep over a family: one ascent per `(param, seed)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n: usize,
    pub params: Vec<usize>,
    /// Symbol seeds; ignored by families without randomness.
    pub seeds: Vec<u64>,
    pub exponents: ExponentTriple,
    pub budget: Budget,
    pub evaluator: String,
    /// Seed of the ascent restarts.
    pub ascend_seed: u64,
    /// Grid period; the family's default when `None`.
    pub period: Option<f64>,
}

impl SweepSpec {
    pub fn new(n: usize, params: Vec<usize>) -> Self {
        SweepSpec {
            n,
            params,
            seeds: vec![0],
            exponents: ExponentTriple::default(),
            budget: Budget::default(),
            evaluator: "rectangle".into(),
            ascend_seed: 0,
            period: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: String,
    pub param: usize,
    pub seed: u64,
    pub best_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log best_ratio` against `log param`.
    pub slope: Option<f64>,
    /// `max / min` of `best_ratio`.
    pub dispersion: Option<f64>,
    pub period: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub reports: Vec<NormEstimateReport>,
}

pub fn sweep(family: &dyn SymbolFamily, spec: &SweepSpec) -> Result<SweepTable> {
    if spec.params.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one parameter".into()));
    }
    let max_param = spec.params.iter().copied().max().unwrap_or(1);
    let period = spec.period.unwrap_or_else(|| family.sweep_period(spec.n, max_param));
    let grid = Grid::new(spec.n, period)?;
    let seeds: &[u64] = if family.seeded() { &spec.seeds } else { &[0] };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &param in &spec.params {
        for &seed in seeds {
            let outcome = family.build(param, seed, &grid).and_then(|m| {
                let probe = TrilinearProbe {
                    symbol: m,
                    exponents: spec.exponents,
                    grid,
                    budget: spec.budget,
                    evaluator: spec.evaluator.clone(),
                };
                ascend(&probe, spec.ascend_seed)
            });
            let row = match outcome {
                Ok(rep) => {
                    let row = SweepRow {
                        family: family.name().into(),
                        param,
                        seed,
                        best_ratio: rep.best_ratio,
                        iterations: rep.iterations,
                        converged: rep.converged,
                        error: None,
                    };
                    reports.push(rep);
                    row
                }
                Err(err) => SweepRow {
                    family: family.name().into(),
                    param,
                    seed,
                    best_ratio: f64::NAN,
                    iterations: 0,
                    converged: false,
                    error: Some(err.to_string()),
                },
            };
            log::info!("{} J = {} seed = {}: {}", row.family, param, seed, row.best_ratio);
            rows.push(row);
        }
    }
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let x: Vec<f64> = ok.iter().map(|r| r.param as f64).collect();
    let y: Vec<f64> = ok.iter().map(|r| r.best_ratio).collect();
    Ok(SweepTable { slope: log_log_slope(&x, &y), dispersion: dispersion(&y), period, rows, reports })
}

impl SweepTable {
    /// CSV with one row per ascent and trailing summary rows whose `family`
    /// field is `summary:slope` or `summary:dispersion`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["family", "param", "seed", "best_ratio", "iterations", "converged", "error"])?;
        for r in &self.rows {
            wr.write_record([
                r.family.clone(),
                r.param.to_string(),
                r.seed.to_string(),
                format!("{:.12}", r.best_ratio),
                r.iterations.to_string(),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        for (name, v) in [("summary:slope", self.slope), ("summary:dispersion", self.dispersion)] {
            let v = v.map_or_else(|| "nan".to_string(), |v| format!("{v:.12}"));
            wr.write_record([name, "", "", &v, "", "", ""])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;
