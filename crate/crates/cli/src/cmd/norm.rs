use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use paralab::normest::{sweep, Budget, ExponentTriple, SweepSpec};
use paralab::symbols::{family_registry, Symbol};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{output, resolve, write_json};
use crate::svg::{Plot, Series};
use crate::{GlobalArgs, Status};

#[derive(Args, Serialize)]
pub struct NormArgs {
    /// Symbol family: unit, exp_staircase, exp_convex, multilac, half_plane, custom.
    #[arg(long)]
    family: Option<String>,
    /// Family parameters as a JSON object.
    #[arg(long, value_parser = parse_json)]
    family_params: Option<Value>,
    /// JSON symbol file; implies the custom family.
    #[arg(long)]
    symbol: Option<PathBuf>,
    /// Grid size [default: 1024].
    #[arg(long)]
    n: Option<usize>,
    /// Family parameters to sweep, e.g. J values [default: 4,8,16,32,64].
    #[arg(long, value_delimiter = ',')]
    params: Vec<usize>,
    /// Number of symbol seeds for randomized families [default: 1].
    #[arg(long)]
    symbol_seeds: Option<u64>,
    /// Exponent triple p1,p2,p3 [default: 3,3,3].
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    /// Accept any Hölder triple, not only the local L2 range.
    #[arg(long)]
    unsafe_exponents: bool,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Bilinear evaluator: rectangle or direct.
    #[arg(long)]
    evaluator: Option<String>,
    /// Grid period; the family default otherwise.
    #[arg(long)]
    period: Option<f64>,
    /// CSV output path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of best ratio against the parameter.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// JSON report with every restart trace.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

fn default_family() -> String {
    "exp_staircase".into()
}

fn default_n() -> usize {
    1024
}

fn default_params() -> Vec<usize> {
    vec![4, 8, 16, 32, 64]
}

fn one() -> u64 {
    1
}

fn default_p() -> Vec<f64> {
    vec![3.0, 3.0, 3.0]
}

fn rectangle() -> String {
    "rectangle".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default = "default_family")]
    family: String,
    #[serde(default)]
    family_params: Option<Value>,
    #[serde(default)]
    symbol: Option<PathBuf>,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_params")]
    params: Vec<usize>,
    #[serde(default = "one")]
    symbol_seeds: u64,
    #[serde(default = "default_p")]
    p: Vec<f64>,
    #[serde(default)]
    unsafe_exponents: bool,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    iterations: Option<usize>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default = "rectangle")]
    evaluator: String,
    #[serde(default)]
    period: Option<f64>,
    #[serde(default, skip_serializing)]
    out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    svg: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    report: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

pub fn run(g: &GlobalArgs, args: NormArgs) -> Result<Status> {
    let (mut p, mut prov) = resolve::<Params>("norm", g, &args)?;
    let [p1, p2, p3] = p.p[..] else {
        bail!("exponent triple needs three values, got {}", p.p.len());
    };
    let exponents = if p.unsafe_exponents {
        ExponentTriple::exploratory(p1, p2, p3)?
    } else {
        ExponentTriple::new(p1, p2, p3).context("use --unsafe-exponents to probe outside the local L2 range")?
    };
    let mut family_params = p.family_params.clone().unwrap_or_else(|| json!({}));
    if let Some(path) = &p.symbol {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let symbol: Symbol = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        p.family = "custom".into();
        family_params["symbol"] = serde_json::to_value(symbol)?;
        // the hash must see the symbol, not its file name
        p.family_params = Some(family_params.clone());
        p.symbol = None;
        prov = crate::config::rehash(&prov, &p)?;
    }
    let family = family_registry().create(&p.family, &family_params)?;
    let defaults = Budget::default();
    let spec = SweepSpec {
        n: p.n,
        params: p.params.clone(),
        seeds: (p.seed..p.seed + p.symbol_seeds).collect(),
        exponents,
        budget: Budget {
            restarts: p.restarts.unwrap_or(defaults.restarts),
            iterations: p.iterations.unwrap_or(defaults.iterations),
            tolerance: p.tolerance.unwrap_or(defaults.tolerance),
        },
        evaluator: p.evaluator.clone(),
        ascend_seed: p.seed,
        period: p.period,
    };
    let table = sweep(family.as_ref(), &spec)?;

    let mut out = output(p.out.as_deref())?;
    out.write_all(prov.csv_comment().as_bytes())?;
    table.write_csv(&mut out)?;
    out.flush()?;

    if let Some(path) = &p.svg {
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        for r in table.rows.iter().filter(|r| r.error.is_none()) {
            let e = best.entry(r.param).or_insert(f64::NEG_INFINITY);
            *e = e.max(r.best_ratio);
        }
        let plot = Plot {
            title: format!("{} sweep, N = {}, config {}", family.name(), p.n, &prov.config_hash[..12]),
            x_label: "parameter".into(),
            y_label: "best ratio".into(),
            log_x: true,
            series: vec![Series { name: "max over seeds".into(), points: best.into_iter().map(|(k, v)| (k as f64, v)).collect() }],
        };
        std::fs::write(path, plot.render()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &p.report {
        let mut w = output(Some(path))?;
        write_json(&mut *w, &prov, &p, serde_json::to_value(&table)?)?;
    }
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} sweep rows failed");
        return Ok(Status::Negative);
    }
    Ok(Status::Pass)
}
