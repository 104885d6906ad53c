//! Ratio tables across grid sizes for the square function and the
//! Lépingle variation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use paralab::signal::{
    generator_registry, random_partition, square_function_ratio, DiscreteSignal, FreqInterval, Grid,
};
use paralab::stats::log_log_slope;
use paralab::variation::{default_scales, lepingle_ratio_with, window_registry};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{output, resolve, Provenance};
use crate::svg::{Plot, Series};
use crate::{GlobalArgs, Status};

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

/// Options shared by both tables.
#[derive(Args, Serialize)]
pub struct SweepArgs {
    /// Grid sizes [default: 256,1024,4096].
    #[arg(long, value_delimiter = ',')]
    ns: Vec<usize>,
    /// Period [default: 1].
    #[arg(long)]
    l: Option<f64>,
    /// Random inputs per grid size [default: 8].
    #[arg(long)]
    trials: Option<u64>,
    /// Input generator: gaussian, modulated_bump, random_trig, spike.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long, value_parser = parse_json)]
    generator_params: Option<Value>,
    /// Exit 1 when the slope of the per-N maxima reaches this value.
    #[arg(long, allow_hyphen_values = true)]
    max_slope: Option<f64>,
    /// CSV output path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of the per-N maxima.
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn default_ns() -> Vec<usize> {
    vec![256, 1024, 4096]
}

fn unit() -> f64 {
    1.0
}

fn eight() -> u64 {
    8
}

fn random_trig() -> String {
    "random_trig".into()
}

fn empty() -> Value {
    json!({})
}

#[derive(Serialize, Deserialize)]
struct SweepParams {
    #[serde(default = "default_ns")]
    ns: Vec<usize>,
    #[serde(default = "unit")]
    l: f64,
    #[serde(default = "eight")]
    trials: u64,
    #[serde(default = "random_trig")]
    generator: String,
    #[serde(default = "empty")]
    generator_params: Value,
    #[serde(default)]
    max_slope: Option<f64>,
    #[serde(default, skip_serializing)]
    out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    svg: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

#[derive(Args, Serialize)]
pub struct SqfnArgs {
    /// Exponent, 2 < p < inf [default: 4].
    #[arg(long)]
    p: Option<f64>,
    /// Fixed intervals `lo:hi` (either side may be empty), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    intervals: Vec<String>,
    /// Size of the random partition when no intervals are given [default: N/8].
    #[arg(long)]
    pieces: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    sweep: SweepArgs,
}

fn four() -> f64 {
    4.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SqfnParams {
    #[serde(default = "four")]
    p: f64,
    #[serde(default)]
    intervals: Vec<String>,
    #[serde(default)]
    pieces: Option<usize>,
    #[serde(flatten)]
    sweep: SweepParams,
}

#[derive(Args, Serialize)]
pub struct LepingleArgs {
    /// Exponent, 1 < p < inf [default: 4].
    #[arg(long)]
    p: Option<f64>,
    /// Variation exponent, 2 < r < inf [default: 2.5].
    #[arg(long)]
    r: Option<f64>,
    /// Averaging window: bump, plateau, sampled.
    #[arg(long)]
    window: Option<String>,
    #[arg(long, value_parser = parse_json)]
    window_params: Option<Value>,
    /// Scale range `lo,hi` of `j`; the grid default otherwise.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    scales: Vec<i32>,
    #[command(flatten)]
    #[serde(flatten)]
    sweep: SweepArgs,
}

fn two_and_a_half() -> f64 {
    2.5
}

fn plateau() -> String {
    "plateau".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LepingleParams {
    #[serde(default = "four")]
    p: f64,
    #[serde(default = "two_and_a_half")]
    r: f64,
    #[serde(default = "plateau")]
    window: String,
    #[serde(default = "empty")]
    window_params: Value,
    #[serde(default)]
    scales: Vec<i32>,
    #[serde(flatten)]
    sweep: SweepParams,
}

/// Run `ratio` on every `(N, trial)` input, write the table and decide.
fn table(
    prov: &Provenance,
    s: &SweepParams,
    what: &str,
    ratio: impl Fn(&DiscreteSignal, u64) -> Result<f64>,
) -> Result<Status> {
    if s.ns.is_empty() || s.trials == 0 {
        bail!("need at least one grid size and one trial");
    }
    let generator = generator_registry().create(&s.generator, &s.generator_params)?;
    let mut rows = Vec::new();
    let mut maxima: BTreeMap<usize, f64> = BTreeMap::new();
    for &n in &s.ns {
        let grid = Grid::new(n, s.l)?;
        for t in 0..s.trials {
            let seed = s.seed.wrapping_add(t);
            let f = generator.generate(&grid, seed)?;
            let r = ratio(&f, seed).with_context(|| format!("N = {n}, seed {seed}"))?;
            log::info!("{what} N = {n} seed = {seed}: {r}");
            let m = maxima.entry(n).or_insert(f64::NEG_INFINITY);
            *m = m.max(r);
            rows.push((n, seed, r));
        }
    }
    let x: Vec<f64> = maxima.keys().map(|n| *n as f64).collect();
    let y: Vec<f64> = maxima.values().copied().collect();
    let slope = log_log_slope(&x, &y);

    let mut out = output(s.out.as_deref())?;
    out.write_all(prov.csv_comment().as_bytes())?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["kind", "n", "seed", "ratio"])?;
    for (n, seed, r) in &rows {
        w.write_record(["trial", &n.to_string(), &seed.to_string(), &format!("{r:.12}")])?;
    }
    for (n, m) in &maxima {
        w.write_record(["max", &n.to_string(), "", &format!("{m:.12}")])?;
    }
    let slope_text = slope.map_or_else(|| "nan".to_string(), |v| format!("{v:.12}"));
    w.write_record(["summary:slope", "", "", &slope_text])?;
    w.flush()?;
    drop(w);
    out.flush()?;

    if let Some(path) = &s.svg {
        let plot = Plot {
            title: format!("{what}, config {}", &prov.config_hash[..12]),
            x_label: "N".into(),
            y_label: "ratio".into(),
            log_x: true,
            series: vec![Series { name: "max over trials".into(), points: x.iter().copied().zip(y).collect() }],
        };
        std::fs::write(path, plot.render()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(match (s.max_slope, slope) {
        (Some(limit), Some(v)) if v >= limit => Status::Negative,
        (Some(_), None) => Status::Negative,
        _ => Status::Pass,
    })
}

pub fn run_sqfn(g: &GlobalArgs, args: SqfnArgs) -> Result<Status> {
    let (p, prov) = resolve::<SqfnParams>("sqfn", g, &args)?;
    if !(p.p > 2.0 && p.p.is_finite()) {
        bail!("square function exponent must satisfy 2 < p < inf, got {}", p.p);
    }
    let fixed = p.intervals.iter().map(|s| s.parse::<FreqInterval>()).collect::<paralab::Result<Vec<_>>>()?;
    table(&prov, &p.sweep, "square function", |f, seed| {
        let intervals = if fixed.is_empty() {
            let n = f.grid().n();
            random_partition(f.grid(), p.pieces.unwrap_or(n / 8).clamp(1, n), seed)?
        } else {
            fixed.clone()
        };
        Ok(square_function_ratio(f, &intervals, p.p)?)
    })
}

pub fn run_lepingle(g: &GlobalArgs, args: LepingleArgs) -> Result<Status> {
    let (p, prov) = resolve::<LepingleParams>("lepingle", g, &args)?;
    let window = window_registry().create(&p.window, &p.window_params)?;
    let scales = match p.scales[..] {
        [] => None,
        [lo, hi] => Some(lo..=hi),
        _ => bail!("scales takes two values lo,hi"),
    };
    table(&prov, &p.sweep, "lepingle", |f, _| {
        let scales = scales.clone().unwrap_or_else(|| default_scales(f.grid()));
        Ok(lepingle_ratio_with(f, p.p, p.r, window.as_ref(), scales)?)
    })
}
