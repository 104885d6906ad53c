//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Numeric arguments select criteria, e.g.
//! `cargo test -p paralab-cli --test acceptance -- 1 3`.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use paralab::lacunary::{is_lacunary, is_lacunary_brute, PairRule, SearchOptions, SearchOutcome};
use paralab::normest::{ascend, sweep, Budget, ExponentTriple, SweepSpec, TrilinearProbe};
use paralab::signal::{random_trig, DiscreteSignal, Grid};
use paralab::symbols::{
    apply_bilinear, apply_bilinear_with, family_registry, regrouping_check, DirectEvaluator,
    RectangleEvaluator, Symbol,
};
use paralab::variation::{v_norm, v_norm_oracle};
use paralab::Dyadic;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn band_pair(grid: &Grid, seed: u64) -> (DiscreteSignal, DiscreteSignal) {
    let (lo, hi) = grid.half_band();
    (random_trig(grid, lo, hi, 2 * seed).unwrap(), random_trig(grid, lo, hi, 2 * seed + 1).unwrap())
}

fn rel_err(a: &DiscreteSignal, b: &DiscreteSignal) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn within(limit: Duration, t: Duration) -> bool {
    t < limit
}

fn pointwise_product() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [256usize, 1024] {
        let grid = Grid::unit(n).unwrap();
        for s in 0..50 {
            let (f, g) = band_pair(&grid, s);
            worst = worst.max(rel_err(&apply_bilinear(&Symbol::unit(), &f, &g).unwrap(), &f.mul(&g).unwrap()));
        }
    }
    let t = start.elapsed();
    outcome(worst <= 1e-10 && within(Duration::from_secs(10), t), format!("max rel err {worst:.2e}, {t:.1?}"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let n = 512;
    let families = family_registry();
    let cases = [("exp_staircase", json!({})), ("multilac", json!({ "d": 2, "b": 2 }))];
    let mut worst: f64 = 0.0;
    for (name, params) in cases {
        let fam = families.create(name, &params).unwrap();
        let grid = Grid::new(n, fam.sweep_period(n, 8)).unwrap();
        let m = fam.build(8, 0, &grid).unwrap();
        for s in 0..20 {
            let (f, g) = band_pair(&grid, s);
            let fast = apply_bilinear_with(&RectangleEvaluator, &m, &f, &g).unwrap();
            let slow = apply_bilinear_with(&DirectEvaluator, &m, &f, &g).unwrap();
            worst = worst.max(rel_err(&fast, &slow));
        }
    }
    let t = start.elapsed();
    outcome(worst <= 1e-10 && within(Duration::from_secs(60), t), format!("max rel err {worst:.2e}, {t:.1?}"))
}

fn regrouping() -> Outcome {
    // band [-16, 16) with spacing 1/64
    let grid = Grid::new(4096, 64.0).unwrap();
    let mut worst: f64 = 0.0;
    for j in [4usize, 8, 16] {
        for s in 0..20 {
            let (f, g) = band_pair(&grid, s);
            worst = worst.max(regrouping_check(j, &f, &g).unwrap() / (f.l2_norm() * g.l2_norm()));
        }
    }
    outcome(worst <= 1e-9, format!("max residual / (|f| |g|) = {worst:.2e}"))
}

fn combinatorial_lemmas() -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_paralab"))
        .args(["verify-lemmas", "--cases", "2:2,2:4,3:3", "--j", "20", "--seeds", "100"])
        .output()
        .unwrap();
    let t = start.elapsed();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
    let violations = report["violations"].as_u64();
    let checks: u64 = report["cases"]
        .as_array()
        .map(|cs| cs.iter().map(|c| c["partition_checks"].as_u64().unwrap_or(0)).sum())
        .unwrap_or(0);
    outcome(
        out.status.code() == Some(0) && violations == Some(0) && within(Duration::from_secs(120), t),
        format!("exit {:?}, violations {violations:?}, {checks} partition checks, {t:.1?}", out.status.code()),
    )
}

fn random_set(rng: &mut ChaCha8Rng) -> Vec<Dyadic> {
    let n = rng.random_range(1..=10usize);
    let mut pts: Vec<Dyadic> = Vec::new();
    while pts.len() < n {
        let x = if rng.random_bool(0.5) {
            Dyadic::new(rng.random_range(-256..256), rng.random_range(0..4))
        } else {
            // sums of few powers of two give lacunary structure
            let terms = rng.random_range(1..=3);
            (0..terms).fold(Dyadic::ZERO, |acc, _| {
                let sign = if rng.random_bool(0.5) { 1 } else { -1 };
                acc + Dyadic::scaled(sign, rng.random_range(-4..8))
            })
        };
        if !pts.contains(&x) {
            pts.push(x);
        }
    }
    pts
}

fn lacunarity_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut yes, mut no, mut disagree, mut undecided) = (0, 0, 0, 0);
    for i in 0..2000 {
        let pts = random_set(&mut rng);
        let d = rng.random_range(0..=3usize);
        let b = rng.random_range(0..=4u32);
        let rule = if i % 2 == 0 { PairRule::Symmetric } else { PairRule::OneSided };
        let fast = is_lacunary(&pts, d, b, &SearchOptions { rule, ..SearchOptions::default() }).unwrap();
        let brute = is_lacunary_brute(&pts, d, b, rule);
        match fast {
            SearchOutcome::Undecided { .. } => undecided += 1,
            ref o if o.certificate().is_some() != brute => disagree += 1,
            _ if brute => yes += 1,
            _ => no += 1,
        }
    }
    let t = start.elapsed();
    outcome(
        disagree == 0 && undecided == 0 && within(Duration::from_secs(120), t),
        format!("{yes} lacunary, {no} not, {disagree} disagreements, {undecided} undecided, {t:.1?}"),
    )
}

fn variation_dp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let len = rng.random_range(1..=12usize);
        let h: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
            .collect();
        for r in [1.0, 2.0, 2.5, 3.0] {
            let (a, b) = (v_norm(&h, r).unwrap(), v_norm_oracle(&h, r).unwrap());
            worst = worst.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
        }
    }
    outcome(worst <= 1e-12, format!("max rel err {worst:.2e}"))
}

fn staircase_uniformity() -> Outcome {
    let start = Instant::now();
    let fam = family_registry().create("exp_staircase", &json!({})).unwrap();
    let spec = SweepSpec::new(1024, vec![4, 8, 16, 32, 64]);
    let table = sweep(fam.as_ref(), &spec).unwrap();
    let t = start.elapsed();
    let ratios: Vec<String> = table.rows.iter().map(|r| format!("{:.4}", r.best_ratio)).collect();
    let (slope, disp) = (table.slope.unwrap_or(f64::NAN), table.dispersion.unwrap_or(f64::NAN));
    outcome(
        slope.abs() < 0.05 && disp < 1.5 && within(Duration::from_secs(15 * 60), t),
        format!("ratios [{}], slope {slope:.4}, max/min {disp:.4}, {t:.1?}", ratios.join(", ")),
    )
}

fn multilac_uniformity() -> Outcome {
    let start = Instant::now();
    let fam = family_registry().create("multilac", &json!({ "d": 2, "b": 2 })).unwrap();
    let mut spec = SweepSpec::new(1024, vec![8, 16, 32]);
    spec.seeds = (0..20).collect();
    let table = sweep(fam.as_ref(), &spec).unwrap();
    let t = start.elapsed();
    let errors = table.rows.iter().filter(|r| r.error.is_some()).count();
    let (slope, disp) = (table.slope.unwrap_or(f64::NAN), table.dispersion.unwrap_or(f64::NAN));
    outcome(
        errors == 0 && slope < 0.05 && disp < 2.0 && within(Duration::from_secs(30 * 60), t),
        format!("{} rows, {errors} errors, slope {slope:.4}, max/min {disp:.4}, {t:.1?}", table.rows.len()),
    )
}

fn slope_from_csv(stdout: &[u8]) -> Option<f64> {
    let text = String::from_utf8_lossy(stdout);
    text.lines().find_map(|l| l.strip_prefix("summary:slope,,,")).and_then(|v| v.trim().parse().ok())
}

fn harmonic_stability() -> Outcome {
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_paralab")).args(args).output().unwrap();
        (out.status.code(), slope_from_csv(&out.stdout))
    };
    let (sq_code, sq) = run(&["sqfn", "--p", "4", "--max-slope", "0.05"]);
    let (lep_code, lep) = run(&["lepingle", "--p", "4", "--r", "2.5", "--max-slope", "0.05"]);
    let ok = |s: Option<f64>| s.is_some_and(|v| v < 0.05);
    outcome(
        sq_code == Some(0) && lep_code == Some(0) && ok(sq) && ok(lep),
        format!("square function slope {sq:?}, lepingle slope {lep:?}, N in 256..4096"),
    )
}

fn holder_saturation() -> Outcome {
    let grid = Grid::unit(256).unwrap();
    let probe = TrilinearProbe::new(Symbol::unit(), ExponentTriple::new(3.0, 3.0, 3.0).unwrap(), grid)
        .with_budget(Budget { restarts: 10, ..Budget::default() });
    let rep = ascend(&probe, 0).unwrap();
    outcome(rep.best_ratio >= 0.999, format!("best ratio {:.12}", rep.best_ratio))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("pointwise-product fidelity", pointwise_product),
        ("rectangle vs direct evaluation", oracle_equivalence),
        ("regrouping identity", regrouping),
        ("combinatorial lemmas", combinatorial_lemmas),
        ("lacunarity oracle agreement", lacunarity_oracle),
        ("variation DP vs chain oracle", variation_dp),
        ("exp_staircase uniformity", staircase_uniformity),
        ("multilac uniformity", multilac_uniformity),
        ("square function and Lepingle stability", harmonic_stability),
        ("Holder saturation", holder_saturation),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let o = run();
        println!("criterion {k:>2} {:<40} {}  {}", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
