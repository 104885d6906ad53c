//! Signal files. CSV output carries a `#` provenance line; binary dumps
//! get a `.json` sidecar with the stamp instead.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use paralab::signal::{generator_registry, read_binary, read_csv, write_binary, write_csv, DiscreteSignal, Grid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{output, resolve, write_json, Provenance};
use crate::{GlobalArgs, Status};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Binary,
}

#[derive(Subcommand)]
pub enum SignalIoCommand {
    /// Sample a registered generator on a grid.
    Generate(GenerateArgs),
    /// Rewrite a signal in another format.
    Convert(ConvertArgs),
    /// Print norms and band statistics as JSON.
    Inspect(InspectArgs),
}

fn parse_json(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args, Serialize)]
pub struct GenerateArgs {
    /// gaussian, modulated_bump, random_trig or spike [default: random_trig].
    #[arg(long)]
    generator: Option<String>,
    #[arg(long, value_parser = parse_json)]
    params: Option<Value>,
    /// Grid size [default: 256].
    #[arg(long)]
    n: Option<usize>,
    /// Period [default: 1].
    #[arg(long)]
    l: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    from: Option<Format>,
    #[arg(long, value_enum)]
    to: Option<Format>,
    /// Period of a CSV input [default: 1].
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Period of a CSV input [default: 1].
    #[arg(long)]
    l: Option<f64>,
}

fn random_trig() -> String {
    "random_trig".into()
}

fn empty() -> Value {
    json!({})
}

fn n256() -> usize {
    256
}

fn unit() -> f64 {
    1.0
}

fn binary() -> Format {
    Format::Binary
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateParams {
    #[serde(default = "random_trig")]
    generator: String,
    #[serde(default = "empty")]
    params: Value,
    #[serde(default = "n256")]
    n: usize,
    #[serde(default = "unit")]
    l: f64,
    #[serde(default)]
    format: Format,
    #[serde(skip_serializing)]
    out: PathBuf,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvertParams {
    input: PathBuf,
    #[serde(default)]
    from: Format,
    #[serde(default = "binary")]
    to: Format,
    #[serde(default = "unit")]
    l: f64,
    #[serde(skip_serializing)]
    out: PathBuf,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InspectParams {
    input: PathBuf,
    #[serde(default)]
    format: Format,
    #[serde(default = "unit")]
    l: f64,
    #[serde(default)]
    seed: u64,
}

pub fn run(g: &GlobalArgs, c: SignalIoCommand) -> Result<Status> {
    match c {
        SignalIoCommand::Generate(a) => {
            let (p, prov) = resolve::<GenerateParams>("signal-io generate", g, &a)?;
            let grid = Grid::new(p.n, p.l)?;
            let f = generator_registry().create(&p.generator, &p.params)?.generate(&grid, p.seed)?;
            save(&f, p.format, &p.out, &prov, &p)?;
        }
        SignalIoCommand::Convert(a) => {
            let (p, prov) = resolve::<ConvertParams>("signal-io convert", g, &a)?;
            let f = load(&p.input, p.from, p.l)?;
            save(&f, p.to, &p.out, &prov, &p)?;
        }
        SignalIoCommand::Inspect(a) => {
            let (p, prov) = resolve::<InspectParams>("signal-io inspect", g, &a)?;
            let f = load(&p.input, p.format, p.l)?;
            let body = json!({
                "n": f.len(),
                "l": f.grid().l(),
                "l2_norm": f.l2_norm(),
                "max_abs": f.max_abs(),
                "out_of_band_energy": f.out_of_band_energy(),
                "support_bins": f.support_bins(1e-12).len(),
            });
            write_json(&mut *output(None)?, &prov, &p, body)?;
        }
    }
    Ok(Status::Pass)
}

fn load(path: &Path, format: Format, l: f64) -> Result<DiscreteSignal> {
    let file = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    Ok(match format {
        Format::Csv => read_csv(file, l)?,
        Format::Binary => read_binary(file)?,
    })
}

fn save(f: &DiscreteSignal, format: Format, path: &Path, prov: &Provenance, params: &impl Serialize) -> Result<()> {
    let mut out = output(Some(path))?;
    match format {
        Format::Csv => {
            out.write_all(prov.csv_comment().as_bytes())?;
            write_csv(f, &mut out)?;
        }
        Format::Binary => {
            write_binary(f, &mut out)?;
            let mut side = path.as_os_str().to_owned();
            side.push(".json");
            write_json(&mut *output(Some(Path::new(&side)))?, prov, params, json!({ "n": f.len(), "l": f.grid().l() }))?;
        }
    }
    out.flush()?;
    if f.is_empty() {
        bail!("empty signal");
    }
    Ok(())
}
