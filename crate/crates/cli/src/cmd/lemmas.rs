use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use paralab::lacunary::{generate_admissible, is_lacunary, GeneratorOptions, SearchOptions, TreeShape};
use paralab::lemmas::{sequences_from_xi, verify_batch, verify_sequences, LemmaReport, DEFAULT_EXTRA_DEPTH};
use paralab::Dyadic;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{output, resolve, write_json};
use crate::{GlobalArgs, Status};

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    #[default]
    Random,
    Geometric,
}

#[derive(Args, Serialize)]
pub struct LemmaArgs {
    /// Number of consecutive seeds, starting at --seed [default: 100].
    #[arg(long)]
    seeds: Option<u64>,
    /// (d,b) pairs as `d:b`, comma separated [default: 2:2].
    #[arg(long, value_delimiter = ',')]
    cases: Vec<String>,
    /// Sequence length J [default: 20].
    #[arg(long)]
    j: Option<usize>,
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    /// Fixed shell class 0..=2; random per sequence otherwise.
    #[arg(long)]
    beta: Option<u8>,
    /// Verify this explicit decreasing xi sequence instead of generated ones.
    #[arg(long, value_delimiter = ',')]
    xi: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn hundred() -> u64 {
    100
}

fn twenty() -> usize {
    20
}

fn default_cases() -> Vec<String> {
    vec!["2:2".into()]
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default = "hundred")]
    seeds: u64,
    #[serde(default = "default_cases")]
    cases: Vec<String>,
    #[serde(default = "twenty")]
    j: usize,
    #[serde(default)]
    shape: Shape,
    #[serde(default)]
    beta: Option<u8>,
    #[serde(default)]
    xi: Vec<Dyadic>,
    #[serde(default, skip_serializing)]
    out: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

fn parse_case(s: &str) -> Result<(usize, u32)> {
    let (d, b) = s.split_once(':').ok_or_else(|| anyhow!("case `{s}` is not of the form d:b"))?;
    Ok((d.trim().parse().context("depth d")?, b.trim().parse().context("separation b")?))
}

fn counts(r: &LemmaReport) -> Value {
    json!({
        "partition_checks": r.partition_checks,
        "overlap_checks": r.overlap_checks,
        "neighbour_checks": r.neighbour_checks,
        "uniqueness_checks": r.uniqueness_checks,
        "violations": r.violations.len(),
    })
}

pub fn run(g: &GlobalArgs, args: LemmaArgs) -> Result<Status> {
    let (p, prov) = resolve::<Params>("verify-lemmas", g, &args)?;
    let cases = p.cases.iter().map(|c| parse_case(c)).collect::<Result<Vec<_>>>()?;
    let opts = GeneratorOptions {
        shape: match p.shape {
            Shape::Random => TreeShape::Random,
            Shape::Geometric => TreeShape::Geometric,
        },
        beta: p.beta,
        ..GeneratorOptions::default()
    };
    let mut out = output(p.out.as_deref())?;

    if !p.xi.is_empty() {
        let [(d, b)] = cases[..] else {
            bail!("an explicit xi sequence needs exactly one d:b case");
        };
        let cert = is_lacunary(&p.xi, d, b, &SearchOptions::default())?
            .certificate()
            .cloned()
            .ok_or_else(|| anyhow!("xi is not certified ({d},{b})-lacunary"))?;
        let seqs = sequences_from_xi(p.xi.clone(), cert, p.beta.unwrap_or(0))?;
        let report = verify_sequences(&seqs, DEFAULT_EXTRA_DEPTH)?;
        let status = if report.passed() { Status::Pass } else { Status::Negative };
        let body = json!({ "cases": [counts(&report)], "violations": report.violations.len(),
                           "counterexample": (!report.passed()).then(|| json!({ "sequences": seqs, "violations": report.violations })) });
        write_json(&mut *out, &prov, &p, body)?;
        return Ok(status);
    }

    let seeds = p.seed..p.seed + p.seeds;
    let mut summaries = Vec::new();
    let mut total = 0;
    let mut counterexample = None;
    for &(d, b) in &cases {
        let mut merged = LemmaReport::default();
        let mut failing = None;
        for (seed, r) in verify_batch(p.j, d, b, seeds.clone(), &opts) {
            let r = r.with_context(|| format!("generating (d,b) = ({d},{b}), J = {}, seed {seed}", p.j))?;
            if !r.passed() && failing.is_none() {
                failing = Some(seed);
            }
            merged.merge(r);
        }
        log::info!("({d},{b}): {} violations", merged.violations.len());
        total += merged.violations.len();
        let mut s = counts(&merged);
        s["d"] = json!(d);
        s["b"] = json!(b);
        s["j"] = json!(p.j);
        s["seeds"] = json!([seeds.start, seeds.end]);
        summaries.push(s);
        if let (Some(seed), None) = (failing, &counterexample) {
            counterexample = Some(shrink(d, b, p.j, seed, &opts)?);
        }
    }
    let status = if total == 0 { Status::Pass } else { Status::Negative };
    write_json(&mut *out, &prov, &p, json!({ "cases": summaries, "violations": total, "counterexample": counterexample }))?;
    Ok(status)
}

/// The shortest length at which `seed` still fails, with its sequences.
fn shrink(d: usize, b: u32, j: usize, seed: u64, opts: &GeneratorOptions) -> Result<Value> {
    for len in 1..=j {
        let seqs = generate_admissible(len, d, b, seed, opts)?;
        let r = verify_sequences(&seqs, DEFAULT_EXTRA_DEPTH)?;
        if !r.passed() {
            return Ok(json!({ "d": d, "b": b, "j": len, "seed": seed, "sequences": seqs, "violations": r.violations }));
        }
    }
    unreachable!("seed {seed} fails at length {j}")
}
