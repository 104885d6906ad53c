//! Exact verification of the combinatorial facts behind the multi-lacunary
//! estimate, run on concrete admissible sequences:
//!
//! * `Y_j ∪ Z_j` partitions `[0, xi'_j)` and every member has length at
//!   least `2^(4-j)`;
//! * the right extensions `I + [0, |I|/4)` over `Z` and over each `W^(i)`
//!   overlap at most twice, and right neighbours inside `W^(i)` are at least
//!   a quarter as long;
//! * each member of `V^(i)` holds exactly one point of `O^(i)` in its
//!   seven-fold dilate.
//!
//! The sequence `xi` is first rounded down to multiples of `2^(4-j)`; the
//! rounded image is certified with parameter `b + 2`.

use serde::Serialize;

use crate::dyadic::{
    collect_wi_vi, collect_y, collect_yj_zj, collect_z, first_overlap, overlap_count,
    yj_scale, DyadicInterval, ExactInterval, IntervalCollection, PointSet, ScaleRange,
};
use crate::error::{Error, Result};
use crate::lacunary::{
    check_xi_spacing_with, generate_admissible, round_xi, transport_certificate,
    validate_admissible, AdmissibleSequences, GeneratorOptions, LacunarityCertificate,
};
use crate::rational::Dyadic;

/// How far below `2^(4-j)` the family `Z` is searched when checking the
/// minimum-length claim.
pub const DEFAULT_EXTRA_DEPTH: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LemmaViolation {
    RoundedSpacing { detail: String },
    RoundedCertificate { detail: String },
    ShortMember { j: usize, interval: DyadicInterval },
    NotDisjoint { j: usize, first: DyadicInterval, second: DyadicInterval },
    NotCovering { j: usize, covered: Dyadic, expected: Dyadic },
    ZOverlap { count: usize },
    RightNeighbour { level: usize, left: DyadicInterval, neighbour: DyadicInterval },
    WOverlap { level: usize, count: usize },
    Uniqueness { level: usize, interval: DyadicInterval, points: usize },
}

/// Counts of checks performed and every violation found.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub partition_checks: usize,
    pub overlap_checks: usize,
    pub neighbour_checks: usize,
    pub uniqueness_checks: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: LemmaReport) {
        self.partition_checks += other.partition_checks;
        self.overlap_checks += other.overlap_checks;
        self.neighbour_checks += other.neighbour_checks;
        self.uniqueness_checks += other.uniqueness_checks;
        self.violations.extend(other.violations);
    }
}

/// All collections built for one sequence, kept for inspection and export.
#[derive(Clone, Debug)]
pub struct Collections {
    pub rounded: Vec<Dyadic>,
    pub certificate: LacunarityCertificate,
    /// `Y` truncated to the universe root and the finest `Y_j` scale.
    pub y: Vec<DyadicInterval>,
    pub yj: Vec<IntervalCollection>,
    pub zj: Vec<IntervalCollection>,
    pub z: IntervalCollection,
    pub w: Vec<IntervalCollection>,
    pub v: Vec<IntervalCollection>,
}

/// Root of the truncated universe: `[0, 2^M)` with `2^M >= xi'_0` minimal.
fn universe_root(rounded: &[Dyadic]) -> DyadicInterval {
    let top = rounded[0];
    let m = if top > Dyadic::ZERO { top.ceil_log2().max(yj_scale(0)) } else { yj_scale(0) };
    DyadicInterval::new(0, m)
}

/// Build every collection for validated sequences.
pub fn build_collections(seqs: &AdmissibleSequences, extra_depth: u32) -> Result<(Collections, LemmaReport)> {
    validate_admissible(seqs)?;
    let mut report = LemmaReport::default();
    let rounded = round_xi(&seqs.xi);
    if let Err(e) = check_xi_spacing_with(&rounded, 5) {
        report.violations.push(LemmaViolation::RoundedSpacing { detail: e.to_string() });
    }
    let certificate =
        transport_certificate(&seqs.certificate, &seqs.xi, &rounded, seqs.certificate.b + 2);
    if let Err(v) = certificate.verify() {
        report.violations.push(LemmaViolation::RoundedCertificate { detail: v.to_string() });
    }
    let points = PointSet::new(rounded.clone());
    let levels: Vec<PointSet> = certificate
        .levels
        .iter()
        .map(|lv| PointSet::new(lv.clone()))
        .collect();

    let mut yj = Vec::with_capacity(rounded.len());
    let mut zj = Vec::with_capacity(rounded.len());
    for j in 0..rounded.len() {
        let (y, z) = collect_yj_zj(&points, &rounded, j, extra_depth)?;
        yj.push(y);
        zj.push(z);
    }

    let root = universe_root(&rounded);
    let finest = yj_scale(rounded.len() - 1);
    let z = collect_z(&points, ScaleRange::finest(finest), &root.exact())?;
    let y = collect_y(&points, root, finest);
    let mut w = Vec::with_capacity(levels.len());
    let mut v = Vec::with_capacity(levels.len());
    for i in 0..levels.len() {
        let (wi, vi) = collect_wi_vi(&y, &yj, &levels, i, certificate.b)?;
        w.push(wi);
        v.push(vi);
    }
    Ok((Collections { rounded, certificate, y, yj, zj, z, w, v }, report))
}

/// Check the three lemma properties on validated sequences.
pub fn verify_sequences(seqs: &AdmissibleSequences, extra_depth: u32) -> Result<LemmaReport> {
    let (c, mut report) = build_collections(seqs, extra_depth)?;

    for j in 0..c.rounded.len() {
        report.partition_checks += 1;
        let min_len = Dyadic::pow2(yj_scale(j));
        let mut all = c.yj[j].intervals.clone();
        all.extend(c.zj[j].intervals.iter().copied());
        for iv in &all {
            if iv.length() < min_len {
                report.violations.push(LemmaViolation::ShortMember { j, interval: *iv });
            }
        }
        if let Some((first, second)) = first_overlap(&all) {
            report.violations.push(LemmaViolation::NotDisjoint { j, first, second });
        }
        let covered = all.iter().fold(Dyadic::ZERO, |acc, iv| acc + iv.length());
        let expected = c.rounded[j].max(Dyadic::ZERO);
        let inside = all
            .iter()
            .all(|iv| iv.left() >= Dyadic::ZERO && iv.right() <= expected);
        if covered != expected || !inside {
            report.violations.push(LemmaViolation::NotCovering { j, covered, expected });
        }
    }

    report.overlap_checks += 1;
    let ext: Vec<ExactInterval> = c.z.intervals.iter().map(|i| i.right_extension()).collect();
    let count = overlap_count(&ext);
    if count > 2 {
        report.violations.push(LemmaViolation::ZOverlap { count });
    }

    for (i, wi) in c.w.iter().enumerate() {
        for a in &wi.intervals {
            let ext = a.right_extension();
            for nb in &wi.intervals {
                if nb == a || !nb.exact().intersects(&ext) {
                    continue;
                }
                report.neighbour_checks += 1;
                if nb.length().mul_pow2(2) < a.length() {
                    report.violations.push(LemmaViolation::RightNeighbour {
                        level: i,
                        left: *a,
                        neighbour: *nb,
                    });
                }
            }
        }
        report.overlap_checks += 1;
        let ext: Vec<ExactInterval> = wi.intervals.iter().map(|iv| iv.right_extension()).collect();
        let count = overlap_count(&ext);
        if count > 2 {
            report.violations.push(LemmaViolation::WOverlap { level: i, count });
        }
    }

    for (i, vi) in c.v.iter().enumerate() {
        let oi = PointSet::new(c.certificate.levels[i].clone());
        for iv in &vi.intervals {
            report.uniqueness_checks += 1;
            let n = oi.count_in(&iv.dilate(7));
            if n != 1 {
                report.violations.push(LemmaViolation::Uniqueness { level: i, interval: *iv, points: n });
            }
        }
    }
    Ok(report)
}

/// Generate sequences for `seed` and verify them.
pub fn verify_seed(
    j_len: usize,
    d: usize,
    b: u32,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<LemmaReport> {
    let seqs = generate_admissible(j_len, d, b, seed, opts)?;
    verify_sequences(&seqs, DEFAULT_EXTRA_DEPTH)
}

/// [`verify_seed`] over a range of seeds, in parallel, in seed order.
pub fn verify_batch(
    j_len: usize,
    d: usize,
    b: u32,
    seeds: std::ops::Range<u64>,
    opts: &GeneratorOptions,
) -> Vec<(u64, Result<LemmaReport>)> {
    use rayon::prelude::*;
    seeds.into_par_iter().map(|s| (s, verify_seed(j_len, d, b, s, opts))).collect()
}

/// Sequences from explicit `xi`, with a certificate found for the image.
pub fn sequences_from_xi(
    xi: Vec<Dyadic>,
    certificate: LacunarityCertificate,
    beta: u8,
) -> Result<AdmissibleSequences> {
    if beta > 2 {
        return Err(Error::InvalidParameter(format!("shell class {beta} is empty")));
    }
    let mut eta = Vec::with_capacity(xi.len());
    let mut zeta = Vec::with_capacity(xi.len());
    for j in 0..xi.len() {
        let (lo, hi) = crate::lacunary::beta_class(j, beta);
        eta.push(lo);
        zeta.push(hi - Dyadic::pow2(-(j as i32) - 4));
    }
    let seqs = AdmissibleSequences { xi, eta, zeta, beta, certificate };
    validate_admissible(&seqs)?;
    Ok(seqs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_battery_passes() {
        let o = GeneratorOptions::default();
        for (d, b) in [(2usize, 2u32), (3, 3)] {
            for seed in 0..10 {
                let r = verify_seed(12, d, b, seed, &o).unwrap();
                assert!(r.passed(), "d={d} b={b} seed={seed}: {:?}", r.violations);
                assert_eq!(r.partition_checks, 12);
                assert!(r.uniqueness_checks > 0);
            }
        }
    }

    #[test]
    fn single_level_covers_y() {
        let xi = vec![Dyadic::from(48)];
        let cert = LacunarityCertificate { b: 2, d: 0, levels: vec![vec![Dyadic::from(48)]] };
        let seqs = sequences_from_xi(xi, cert, 0).unwrap();
        let (c, _) = build_collections(&seqs, DEFAULT_EXTRA_DEPTH).unwrap();
        assert!(!c.y.is_empty());
        for iv in &c.y {
            assert!(c.w[0].intervals.iter().any(|w| iv.is_subset_of(w)));
        }
    }

    #[test]
    fn broken_spacing_is_rejected() {
        let mut seqs = generate_admissible(8, 2, 2, 0, &GeneratorOptions::default()).unwrap();
        seqs.xi[3] = seqs.xi[2];
        assert!(matches!(verify_sequences(&seqs, 3), Err(Error::Spacing { index: 3, .. })));
    }

    #[test]
    fn explicit_sequence_round_trip() {
        let xi: Vec<Dyadic> = vec![Dyadic::from(256), Dyadic::from(128), Dyadic::from(64)];
        let cert = LacunarityCertificate {
            b: 2,
            d: 2,
            levels: vec![vec![Dyadic::from(64)], vec![Dyadic::from(128), Dyadic::from(256)], vec![]],
        };
        let seqs = sequences_from_xi(xi, cert, 1).unwrap();
        let r = verify_sequences(&seqs, 3).unwrap();
        assert!(r.passed(), "{:?}", r.violations);
    }
}
