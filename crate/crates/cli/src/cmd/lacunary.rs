use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use paralab::lacunary::{is_lacunary, PairRule, SearchMode, SearchOptions, SearchOutcome};
use paralab::rational::parse_list;
use paralab::Dyadic;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{output, resolve, write_json};
use crate::{GlobalArgs, Status};

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    Symmetric,
    OneSided,
}

#[derive(Args, Serialize)]
pub struct LacunaryArgs {
    /// Points as `p/2^m` or `p/q` literals, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    points: Vec<String>,
    /// File of points separated by commas or whitespace.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Depth [default: 1].
    #[arg(long)]
    d: Option<usize>,
    /// Separation exponent [default: 0].
    #[arg(long)]
    b: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    rule: Option<Rule>,
    /// Largest set the exhaustive search accepts.
    #[arg(long)]
    max_points: Option<usize>,
    /// Subproblems visited before the search gives up.
    #[arg(long)]
    work_budget: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Params {
    #[serde(default)]
    points: Vec<Dyadic>,
    #[serde(default)]
    input: Option<PathBuf>,
    #[serde(default = "one")]
    d: usize,
    #[serde(default)]
    b: u32,
    #[serde(default)]
    mode: Mode,
    #[serde(default)]
    rule: Rule,
    #[serde(default)]
    max_points: Option<usize>,
    #[serde(default)]
    work_budget: Option<u64>,
    #[serde(default, skip_serializing)]
    out: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

pub fn run(g: &GlobalArgs, args: LacunaryArgs) -> Result<Status> {
    let (p, prov) = resolve::<Params>("lacunary", g, &args)?;
    let mut points = p.points.clone();
    if let Some(path) = &p.input {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        points.extend(parse_list(&text)?);
    }
    if points.is_empty() {
        bail!("no points given; use --points or --input");
    }
    let defaults = SearchOptions::default();
    let opts = SearchOptions {
        mode: match p.mode {
            Mode::Exhaustive => SearchMode::Exhaustive,
            Mode::Greedy => SearchMode::Greedy,
        },
        rule: match p.rule {
            Rule::Symmetric => PairRule::Symmetric,
            Rule::OneSided => PairRule::OneSided,
        },
        max_points: p.max_points.unwrap_or(defaults.max_points),
        work_budget: p.work_budget.unwrap_or(defaults.work_budget),
    };
    let outcome = is_lacunary(&points, p.d, p.b, &opts)?;
    let (status, body) = match &outcome {
        SearchOutcome::Found { certificate, heuristic } => {
            (Status::Pass, json!({ "decision": "lacunary", "heuristic": heuristic, "certificate": certificate }))
        }
        SearchOutcome::NotLacunary => (Status::Negative, json!({ "decision": "not lacunary" })),
        SearchOutcome::Undecided { reason } => {
            (Status::Undecided, json!({ "decision": "undecided (budget)", "reason": reason }))
        }
    };
    write_json(&mut *output(p.out.as_deref())?, &prov, &p, body)?;
    Ok(status)
}
