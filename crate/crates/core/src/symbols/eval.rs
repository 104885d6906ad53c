//! Evaluation of `B_m` and of its two partial adjoints.
//!
//! The adjoints are the kernels of the trilinear form
//! `<B_m(f, g), h> = Re sum B_m(f, g) conj(h) L/N` in its first two slots:
//! `<B_m(f, g), h> = <f, Phi_f(g, h)> = <g, Phi_g(f, h)>` for band-limited
//! `f`, `g`. The kernels are returned projected to the half band.

use std::collections::BTreeMap;
use std::ops::Range;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{GridSymbol, Symbol};
use crate::error::Result;
use crate::registry::Registry;
use crate::signal::{forward, inverse, DiscreteSignal, Grid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A symbol compiled for one grid.
pub trait PreparedBilinear: Send + Sync {
    fn grid(&self) -> &Grid;
    fn apply(&self, f: &DiscreteSignal, g: &DiscreteSignal) -> Result<DiscreteSignal>;
    /// `Phi_f(g, h)`.
    fn adjoint_f(&self, g: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal>;
    /// `Phi_g(f, h)`.
    fn adjoint_g(&self, f: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal>;
}

pub trait BilinearEvaluator: Send + Sync {
    fn name(&self) -> &'static str;
    fn prepare(&self, m: &Symbol, grid: &Grid) -> Result<Box<dyn PreparedBilinear>>;
}

fn check_input(grid: &Grid, f: &DiscreteSignal, what: &str) -> Result<()> {
    grid.same_as(f.grid())?;
    f.require_half_band(what)
}

fn clip(r: Range<i64>, grid: &Grid) -> Range<i64> {
    let (lo, hi) = grid.half_band();
    r.start.max(lo)..r.end.min(hi).max(r.start.max(lo))
}

/// `B_m = sum_t (M_(w_t) f)(M_(E_t) g)` with `w_t` a weight on `xi` bins
/// and `E_t` a bin range in `eta`.
pub struct RectanglePlan {
    grid: Grid,
    terms: Vec<(Vec<f64>, Range<i64>)>,
}

impl RectanglePlan {
    pub fn new(m: &Symbol, grid: &Grid) -> Result<Self> {
        let n = grid.n();
        let mut groups: BTreeMap<(i64, i64), Vec<f64>> = BTreeMap::new();
        match m {
            Symbol::Staircase(s) => {
                for r in s.rectangles() {
                    let xr = clip(r.xi.bin_range(grid), grid);
                    let er = clip(r.eta.bin_range(grid), grid);
                    if xr.is_empty() || er.is_empty() {
                        continue;
                    }
                    let w = groups.entry((er.start, er.end)).or_insert_with(|| vec![0.0; n]);
                    for b in xr {
                        w[grid.index(b)] += 1.0;
                    }
                }
            }
            Symbol::Grid(t) => {
                t.grid().same_as(grid)?;
                let (lo, hi) = grid.half_band();
                for xi in lo..hi {
                    let row = t.row(xi);
                    let mut i = 0;
                    while i < row.len() {
                        let v = row[i];
                        let mut j = i + 1;
                        while j < row.len() && row[j].to_bits() == v.to_bits() {
                            j += 1;
                        }
                        if v != 0.0 {
                            let key = (lo + i as i64, lo + j as i64);
                            groups.entry(key).or_insert_with(|| vec![0.0; n])[grid.index(xi)] += v;
                        }
                        i = j;
                    }
                }
            }
        }
        Ok(RectanglePlan { grid: *grid, terms: groups.into_iter().map(|((a, b), w)| (w, a..b)).collect() })
    }

    fn weighted(&self, spec: &[Complex64], w: &[f64]) -> Vec<Complex64> {
        inverse(&self.grid, &spec.iter().zip(w).map(|(c, w)| c * w).collect::<Vec<_>>())
    }

    fn banded(&self, spec: &[Complex64], r: &Range<i64>) -> Vec<Complex64> {
        let mut s = vec![ZERO; spec.len()];
        for b in r.clone() {
            let i = self.grid.index(b);
            s[i] = spec[i];
        }
        inverse(&self.grid, &s)
    }
}

impl PreparedBilinear for RectanglePlan {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn apply(&self, f: &DiscreteSignal, g: &DiscreteSignal) -> Result<DiscreteSignal> {
        check_input(&self.grid, f, "f")?;
        check_input(&self.grid, g, "g")?;
        let (fs, gs) = (f.spectrum(), g.spectrum());
        let mut acc = vec![ZERO; self.grid.n()];
        for (w, r) in &self.terms {
            let a = self.weighted(fs, w);
            let b = self.banded(gs, r);
            acc.iter_mut().zip(a.iter().zip(&b)).for_each(|(o, (x, y))| *o += x * y);
        }
        DiscreteSignal::from_samples(self.grid, acc)
    }

    fn adjoint_f(&self, g: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal> {
        check_input(&self.grid, g, "g")?;
        self.grid.same_as(h.grid())?;
        let gs = g.spectrum();
        let mut acc = vec![ZERO; self.grid.n()];
        for (w, r) in &self.terms {
            let b = self.banded(gs, r);
            let prod: Vec<Complex64> = b.iter().zip(h.samples()).map(|(x, y)| x.conj() * y).collect();
            let ps = forward(&self.grid, &prod);
            acc.iter_mut().zip(ps.iter().zip(w)).for_each(|(o, (c, w))| *o += c * w);
        }
        DiscreteSignal::from_spectrum(self.grid, acc)
    }

    fn adjoint_g(&self, f: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal> {
        check_input(&self.grid, f, "f")?;
        self.grid.same_as(h.grid())?;
        let fs = f.spectrum();
        let mut acc = vec![ZERO; self.grid.n()];
        for (w, r) in &self.terms {
            let a = self.weighted(fs, w);
            let prod: Vec<Complex64> = a.iter().zip(h.samples()).map(|(x, y)| x.conj() * y).collect();
            let ps = forward(&self.grid, &prod);
            for b in r.clone() {
                let i = self.grid.index(b);
                acc[i] += ps[i];
            }
        }
        DiscreteSignal::from_spectrum(self.grid, acc)
    }
}

/// Explicit sums over a symbol table, `O(N^2)`.
pub struct DirectPlan {
    table: GridSymbol,
}

impl DirectPlan {
    pub fn new(m: &Symbol, grid: &Grid) -> Result<Self> {
        Ok(DirectPlan { table: m.table(grid)? })
    }

    fn half(&self, s: &DiscreteSignal) -> Vec<Complex64> {
        let (lo, hi) = self.table.grid().half_band();
        (lo..hi).map(|b| s.coefficient(b)).collect()
    }
}

impl PreparedBilinear for DirectPlan {
    fn grid(&self) -> &Grid {
        self.table.grid()
    }

    fn apply(&self, f: &DiscreteSignal, g: &DiscreteSignal) -> Result<DiscreteSignal> {
        let grid = *self.grid();
        check_input(&grid, f, "f")?;
        check_input(&grid, g, "g")?;
        let (lo, hi) = grid.half_band();
        let (fh, gh) = (self.half(f), self.half(g));
        let inv_l = 1.0 / grid.l();
        let out: Vec<(i64, Complex64)> = (grid.min_bin()..grid.end_bin())
            .into_par_iter()
            .map(|k| {
                let a = lo.max(k - (hi - 1));
                let b = (hi - 1).min(k - lo);
                let mut s = ZERO;
                for xi in a..=b {
                    let eta = k - xi;
                    let m = self.table.value(xi, eta);
                    if m != 0.0 {
                        s += fh[(xi - lo) as usize] * gh[(eta - lo) as usize] * m;
                    }
                }
                (k, s * inv_l)
            })
            .collect();
        let mut spec = vec![ZERO; grid.n()];
        for (k, c) in out {
            spec[grid.index(k)] = c;
        }
        DiscreteSignal::from_spectrum(grid, spec)
    }

    fn adjoint_f(&self, g: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal> {
        let grid = *self.grid();
        check_input(&grid, g, "g")?;
        grid.same_as(h.grid())?;
        let (lo, hi) = grid.half_band();
        let gh = self.half(g);
        let inv_l = 1.0 / grid.l();
        let out: Vec<Complex64> = (lo..hi)
            .into_par_iter()
            .map(|xi| {
                let row = self.table.row(xi);
                let mut s = ZERO;
                for (i, m) in row.iter().enumerate() {
                    if *m != 0.0 {
                        s += gh[i].conj() * h.coefficient(xi + lo + i as i64) * m;
                    }
                }
                s * inv_l
            })
            .collect();
        let mut spec = vec![ZERO; grid.n()];
        for (i, c) in out.into_iter().enumerate() {
            spec[grid.index(lo + i as i64)] = c;
        }
        DiscreteSignal::from_spectrum(grid, spec)
    }

    fn adjoint_g(&self, f: &DiscreteSignal, h: &DiscreteSignal) -> Result<DiscreteSignal> {
        let grid = *self.grid();
        check_input(&grid, f, "f")?;
        grid.same_as(h.grid())?;
        let (lo, hi) = grid.half_band();
        let fh = self.half(f);
        let inv_l = 1.0 / grid.l();
        let out: Vec<Complex64> = (lo..hi)
            .into_par_iter()
            .map(|eta| {
                let mut s = ZERO;
                for xi in lo..hi {
                    let m = self.table.value(xi, eta);
                    if m != 0.0 {
                        s += fh[(xi - lo) as usize].conj() * h.coefficient(xi + eta) * m;
                    }
                }
                s * inv_l
            })
            .collect();
        let mut spec = vec![ZERO; grid.n()];
        for (i, c) in out.into_iter().enumerate() {
            spec[grid.index(lo + i as i64)] = c;
        }
        DiscreteSignal::from_spectrum(grid, spec)
    }
}

/// Sum of rectangle products, `O(R N log N)`.
pub struct RectangleEvaluator;

impl BilinearEvaluator for RectangleEvaluator {
    fn name(&self) -> &'static str {
        "rectangle"
    }

    fn prepare(&self, m: &Symbol, grid: &Grid) -> Result<Box<dyn PreparedBilinear>> {
        Ok(Box::new(RectanglePlan::new(m, grid)?))
    }
}

/// Frequency-domain double sum over the symbol table, `O(N^2)`.
pub struct DirectEvaluator;

impl BilinearEvaluator for DirectEvaluator {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn prepare(&self, m: &Symbol, grid: &Grid) -> Result<Box<dyn PreparedBilinear>> {
        Ok(Box::new(DirectPlan::new(m, grid)?))
    }
}

/// Evaluators by name: `rectangle`, `direct`.
pub fn evaluator_registry() -> Registry<dyn BilinearEvaluator> {
    let mut r: Registry<dyn BilinearEvaluator> = Registry::new("evaluator");
    r.register("rectangle", |_| Ok(Box::new(RectangleEvaluator)));
    r.register("direct", |_| Ok(Box::new(DirectEvaluator)));
    r
}

/// `B_m(f, g)` by the rectangle path.
pub fn apply_bilinear(m: &Symbol, f: &DiscreteSignal, g: &DiscreteSignal) -> Result<DiscreteSignal> {
    apply_bilinear_with(&RectangleEvaluator, m, f, g)
}

pub fn apply_bilinear_with(
    ev: &dyn BilinearEvaluator,
    m: &Symbol,
    f: &DiscreteSignal,
    g: &DiscreteSignal,
) -> Result<DiscreteSignal> {
    f.grid().same_as(g.grid())?;
    ev.prepare(m, f.grid())?.apply(f, g)
}
