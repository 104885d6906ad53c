//! Dyadic intervals and the interval collections built around a finite
//! point set: the Whitney-type family `Z`, the fixed-scale families `Y_j`,
//! their complements `Z_j`, and the per-level maximal families `W^(i)` with
//! their refinements `V^(i)`.
//!
//! Everything here is exact. No floating point is used.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Dyadic;

/// The half-open interval `[k 2^m, (k+1) 2^m)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub k: i64,
    pub m: i32,
}

/// A half-open interval `[lo, hi)` with dyadic endpoints.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ExactInterval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

/// How two dyadic intervals sit relative to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nesting {
    Disjoint,
    Equal,
    /// The first interval is strictly inside the second.
    Inside,
    /// The first interval strictly contains the second.
    Contains,
}

impl ExactInterval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        ExactInterval { lo, hi }
    }

    pub fn len(&self) -> Dyadic {
        if self.hi > self.lo {
            self.hi - self.lo
        } else {
            Dyadic::ZERO
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn contains(&self, x: Dyadic) -> bool {
        self.lo <= x && x < self.hi
    }

    pub fn intersects(&self, other: &ExactInterval) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo < other.hi && other.lo < self.hi
    }

    pub fn is_subset_of(&self, other: &ExactInterval) -> bool {
        self.is_empty() || (other.lo <= self.lo && self.hi <= other.hi)
    }
}

impl fmt::Display for ExactInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.lo, self.hi)
    }
}

impl DyadicInterval {
    pub fn new(k: i64, m: i32) -> Self {
        DyadicInterval { k, m }
    }

    /// The interval of length `2^m` containing `x`.
    pub fn containing(x: Dyadic, m: i32) -> Self {
        DyadicInterval::new(x.floor_div_pow2(m) as i64, m)
    }

    pub fn left(&self) -> Dyadic {
        Dyadic::scaled(self.k as i128, self.m)
    }

    pub fn right(&self) -> Dyadic {
        Dyadic::scaled(self.k as i128 + 1, self.m)
    }

    pub fn length(&self) -> Dyadic {
        Dyadic::pow2(self.m)
    }

    pub fn exact(&self) -> ExactInterval {
        ExactInterval::new(self.left(), self.right())
    }

    pub fn parent(&self) -> Self {
        DyadicInterval::new(self.k.div_euclid(2), self.m + 1)
    }

    pub fn children(&self) -> [Self; 2] {
        [
            DyadicInterval::new(2 * self.k, self.m - 1),
            DyadicInterval::new(2 * self.k + 1, self.m - 1),
        ]
    }

    /// The ancestor (or self) at scale `m`; `m` must be at least `self.m`.
    pub fn ancestor(&self, m: i32) -> Self {
        assert!(m >= self.m, "ancestor scale below interval scale");
        let shift = (m - self.m) as u32;
        DyadicInterval::new(self.k >> shift.min(63), m)
    }

    /// Concentric interval of `factor` times the length. `factor` is odd.
    pub fn dilate(&self, factor: u32) -> ExactInterval {
        assert!(factor % 2 == 1, "dilation factor must be odd");
        let pad = Dyadic::scaled(((factor - 1) / 2) as i128, self.m);
        ExactInterval::new(self.left() - pad, self.right() + pad)
    }

    /// `3I`: same center, three times the length.
    pub fn triple(&self) -> ExactInterval {
        self.dilate(3)
    }

    /// `I + [0, 2^-2 |I|)`.
    pub fn right_extension(&self) -> ExactInterval {
        ExactInterval::new(self.left(), self.right() + Dyadic::pow2(self.m - 2))
    }

    pub fn contains_point(&self, x: Dyadic) -> bool {
        x.floor_div_pow2(self.m) == self.k as i128
    }

    pub fn is_subset_of(&self, other: &DyadicInterval) -> bool {
        self.m <= other.m && self.ancestor(other.m) == *other
    }

    pub fn nesting(&self, other: &DyadicInterval) -> Nesting {
        if self == other {
            Nesting::Equal
        } else if self.is_subset_of(other) {
            Nesting::Inside
        } else if other.is_subset_of(self) {
            Nesting::Contains
        } else {
            Nesting::Disjoint
        }
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.left(), self.right())
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I(k={}, m={})", self.k, self.m)
    }
}

/// A finite, sorted, duplicate-free set of dyadic points.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PointSet(Vec<Dyadic>);

impl PointSet {
    pub fn new(mut points: Vec<Dyadic>) -> Self {
        points.sort();
        points.dedup();
        PointSet(points)
    }

    pub fn points(&self) -> &[Dyadic] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of points inside `iv`.
    pub fn count_in(&self, iv: &ExactInterval) -> usize {
        if iv.is_empty() {
            return 0;
        }
        let a = self.0.partition_point(|x| *x < iv.lo);
        let b = self.0.partition_point(|x| *x < iv.hi);
        b - a
    }

    pub fn hits(&self, iv: &ExactInterval) -> bool {
        self.count_in(iv) > 0
    }

    /// `3I` contains no point of the set.
    pub fn triple_misses(&self, iv: &DyadicInterval) -> bool {
        !self.hits(&iv.triple())
    }
}

impl FromIterator<Dyadic> for PointSet {
    fn from_iter<T: IntoIterator<Item = Dyadic>>(iter: T) -> Self {
        PointSet::new(iter.into_iter().collect())
    }
}

/// Which family a collection represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Y,
    Z,
    Yj(i32),
    Zj(i32),
    Wi(usize),
    Vi(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Y => write!(f, "Y"),
            Label::Z => write!(f, "Z"),
            Label::Yj(j) => write!(f, "Y_{j}"),
            Label::Zj(j) => write!(f, "Z_{j}"),
            Label::Wi(i) => write!(f, "W_{i}"),
            Label::Vi(i) => write!(f, "V_{i}"),
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("unknown collection label `{s}`"));
        match s {
            "Y" => return Ok(Label::Y),
            "Z" => return Ok(Label::Z),
            _ => {}
        }
        let (head, idx) = s.split_once('_').ok_or_else(bad)?;
        match head {
            "Y" => Ok(Label::Yj(idx.parse().map_err(|_| bad())?)),
            "Z" => Ok(Label::Zj(idx.parse().map_err(|_| bad())?)),
            "W" => Ok(Label::Wi(idx.parse().map_err(|_| bad())?)),
            "V" => Ok(Label::Vi(idx.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A labelled family of dyadic intervals, sorted by left endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCollection {
    pub label: Label,
    pub intervals: Vec<DyadicInterval>,
}

impl IntervalCollection {
    pub fn new(label: Label, mut intervals: Vec<DyadicInterval>) -> Self {
        intervals.sort_by(|a, b| a.left().cmp(&b.left()).then(b.m.cmp(&a.m)));
        intervals.dedup();
        IntervalCollection { label, intervals }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn total_length(&self) -> Dyadic {
        self.intervals
            .iter()
            .fold(Dyadic::ZERO, |acc, iv| acc + iv.length())
    }

    /// First pair of overlapping members, if any.
    pub fn first_overlap(&self) -> Option<(DyadicInterval, DyadicInterval)> {
        first_overlap(&self.intervals)
    }

    pub fn is_pairwise_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }
}

/// First pair of overlapping intervals in a family (sorted or not).
pub fn first_overlap(intervals: &[DyadicInterval]) -> Option<(DyadicInterval, DyadicInterval)> {
    let mut sorted: Vec<_> = intervals.to_vec();
    sorted.sort_by(|a, b| a.left().cmp(&b.left()));
    let mut reach: Option<DyadicInterval> = None;
    for iv in sorted {
        if let Some(prev) = reach {
            if iv.left() < prev.right() {
                return Some((prev, iv));
            }
            if iv.right() > prev.right() {
                reach = Some(iv);
            }
        } else {
            reach = Some(iv);
        }
    }
    None
}

/// Bounds on the dyadic scales searched. `finest` is required because the
/// Whitney family accumulates at every point of the set; `coarsest = None`
/// means maximality is judged globally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub finest: i32,
    pub coarsest: Option<i32>,
}

impl ScaleRange {
    pub fn finest(finest: i32) -> Self {
        ScaleRange { finest, coarsest: None }
    }
}

/// Dyadic intervals at scale `m` that meet `domain`.
fn covering_at_scale(domain: &ExactInterval, m: i32) -> Vec<DyadicInterval> {
    if domain.is_empty() {
        return Vec::new();
    }
    let first = domain.lo.floor_div_pow2(m) as i64;
    let mut last = domain.hi.floor_div_pow2(m) as i64;
    if domain.hi.is_multiple_of_pow2(m) {
        last -= 1;
    }
    (first..=last)
        .map(|k| DyadicInterval::new(k, m))
        .filter(|iv| iv.exact().intersects(domain))
        .collect()
}

/// Maximal dyadic intervals inside `domain` whose triples miss `points`.
///
/// An interval qualifies when its triple misses the set, its scale lies in
/// `scales`, it is contained in `domain`, and either its parent's triple hits
/// the set or it sits at the capped coarsest scale.
pub fn collect_z(
    points: &PointSet,
    scales: ScaleRange,
    domain: &ExactInterval,
) -> Result<IntervalCollection> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if domain.is_empty() {
        return Ok(IntervalCollection::new(Label::Z, Vec::new()));
    }
    let mut top = domain.len().ceil_log2();
    if let Some(c) = scales.coarsest {
        top = top.min(c);
    }
    let mut out = Vec::new();
    if top < scales.finest {
        return Ok(IntervalCollection::new(Label::Z, out));
    }
    let mut stack = covering_at_scale(domain, top);
    while let Some(iv) = stack.pop() {
        if iv.m < scales.finest {
            continue;
        }
        if !points.triple_misses(&iv) {
            stack.extend(iv.children());
            continue;
        }
        // Triple misses. Below this interval nothing can be maximal.
        let inside = iv.exact().is_subset_of(domain);
        let capped = scales.coarsest == Some(iv.m);
        if inside && (capped || !points.triple_misses(&iv.parent())) {
            out.push(iv);
        }
    }
    Ok(IntervalCollection::new(Label::Z, out))
}

/// Every interval of scale at least `finest` inside `root` whose triple hits
/// `points`. The family is closed under taking parents up to `root`.
pub fn collect_y(points: &PointSet, root: DyadicInterval, finest: i32) -> Vec<DyadicInterval> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(iv) = stack.pop() {
        if iv.m < finest || points.triple_misses(&iv) {
            continue;
        }
        out.push(iv);
        stack.extend(iv.children());
    }
    out.sort();
    out
}

/// Scale exponent `4 - j` of the fixed-length family at index `j`.
pub fn yj_scale(j: usize) -> i32 {
    4 - j as i32
}

/// `Y_j` and `Z_j` for the sequence `xi` at index `j`.
///
/// `Y_j`: intervals of length `2^(4-j)` inside `[0, xi_j)` whose triple hits
/// the set. `Z_j`: members of `Z` inside `[0, xi_j)` not contained in any
/// member of `Y_j`. `Z` is searched `extra_depth` scales below `2^(4-j)` so
/// that undersized members would be seen rather than assumed away.
pub fn collect_yj_zj(
    points: &PointSet,
    xi: &[Dyadic],
    j: usize,
    extra_depth: u32,
) -> Result<(IntervalCollection, IntervalCollection)> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let xj = *xi
        .get(j)
        .ok_or_else(|| Error::InvalidParameter(format!("index {j} beyond sequence")))?;
    let m = yj_scale(j);
    if !xj.is_multiple_of_pow2(m) {
        return Err(Error::NotAligned { value: xj.to_string(), exponent: m });
    }
    let jl = j as i32;
    if xj <= Dyadic::ZERO {
        return Ok((
            IntervalCollection::new(Label::Yj(jl), Vec::new()),
            IntervalCollection::new(Label::Zj(jl), Vec::new()),
        ));
    }
    let cells = xj.floor_div_pow2(m) as i64;
    let mut yj = BTreeSet::new();
    for &x in points.points() {
        let fl = x.floor_div_pow2(m) as i64;
        for k in fl - 1..=fl + 1 {
            if (0..cells).contains(&k) {
                yj.insert(DyadicInterval::new(k, m));
            }
        }
    }
    let yj: Vec<_> = yj.into_iter().collect();
    let domain = ExactInterval::new(Dyadic::ZERO, xj);
    let z = collect_z(points, ScaleRange::finest(m - extra_depth as i32), &domain)?;
    let yset: BTreeSet<_> = yj.iter().copied().collect();
    let zj: Vec<_> = z
        .intervals
        .into_iter()
        .filter(|iv| iv.m > m || !yset.contains(&iv.ancestor(m)))
        .collect();
    Ok((
        IntervalCollection::new(Label::Yj(jl), yj),
        IntervalCollection::new(Label::Zj(jl), zj),
    ))
}

/// Smallest level `i` such that `3I` contains a point of `O^(i)`.
pub fn level_of(iv: &DyadicInterval, levels: &[PointSet]) -> Option<usize> {
    let t = iv.triple();
    levels.iter().position(|o| o.hits(&t))
}

/// `W^(i)` and `V^(i)`.
///
/// `y` is the (scale-truncated) family `Y`, `y_per_j` the families `Y_j`,
/// `levels` the partition `O_0, ..., O_d`. `W^(i)` collects the maximal
/// members of `Y^(i)` (triple meets `O^(i)` and no lower level). `V^(i)`
/// collects the dyadic `I` with `I` inside some `J` of `W^(i)`,
/// `2^(b+4)|I| = |J|`, and some member of a `Y_j` in `Y^(i)` inside `I`.
pub fn collect_wi_vi(
    y: &[DyadicInterval],
    y_per_j: &[IntervalCollection],
    levels: &[PointSet],
    i: usize,
    b: u32,
) -> Result<(IntervalCollection, IntervalCollection)> {
    if i >= levels.len() {
        return Err(Error::LevelOutOfRange { index: i, levels: levels.len() });
    }
    let level: BTreeMap<DyadicInterval, Option<usize>> =
        y.iter().map(|iv| (*iv, level_of(iv, levels))).collect();
    let w: Vec<DyadicInterval> = level
        .iter()
        .filter(|(_, l)| **l == Some(i))
        .map(|(iv, _)| *iv)
        .filter(|iv| level.get(&iv.parent()).copied().flatten() != Some(i))
        .collect();
    let step = b as i32 + 4;
    let mut v = BTreeSet::new();
    for yj in y_per_j {
        for small in &yj.intervals {
            if level_of(small, levels) != Some(i) {
                continue;
            }
            for big in &w {
                let mv = big.m - step;
                if small.m <= mv && small.is_subset_of(big) {
                    v.insert(small.ancestor(mv));
                }
            }
        }
    }
    Ok((
        IntervalCollection::new(Label::Wi(i), w),
        IntervalCollection::new(Label::Vi(i), v.into_iter().collect()),
    ))
}

/// Maximum number of intervals covering a single point.
pub fn overlap_count(intervals: &[ExactInterval]) -> usize {
    let mut events: Vec<(Dyadic, i32)> = Vec::with_capacity(2 * intervals.len());
    for iv in intervals.iter().filter(|iv| !iv.is_empty()) {
        events.push((iv.lo, 1));
        events.push((iv.hi, -1));
    }
    // closing events sort first at equal coordinates: half-open intervals
    events.sort();
    let mut cur = 0i32;
    let mut best = 0i32;
    for (_, delta) in events {
        cur += delta;
        best = best.max(cur);
    }
    best as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn iv(lo: &str, hi: &str) -> ExactInterval {
        ExactInterval::new(d(lo), d(hi))
    }

    #[test]
    fn triple_examples() {
        let unit = DyadicInterval::new(0, 0);
        assert_eq!(unit.triple(), iv("-1", "2"));
        let two = DyadicInterval::new(1, 1);
        assert_eq!(two.exact(), iv("2", "4"));
        assert_eq!(two.triple(), iv("0", "6"));
        assert_eq!(DyadicInterval::new(-1, 0).triple(), iv("-2", "1"));
    }

    #[test]
    fn length_is_exact_power() {
        for m in -20..20 {
            let i = DyadicInterval::new(-7, m);
            assert_eq!(i.length(), Dyadic::pow2(m));
            assert_eq!(i.right() - i.left(), Dyadic::pow2(m));
        }
    }

    #[test]
    fn parent_and_children() {
        let i = DyadicInterval::new(-3, -2);
        assert_eq!(i.parent(), DyadicInterval::new(-2, -1));
        for c in i.children() {
            assert_eq!(c.parent(), i);
            assert!(c.is_subset_of(&i));
        }
        assert!(i.contains_point(d("-3/4")));
        assert!(!i.contains_point(d("-1/2")));
    }

    /// Brute-force Z: every dyadic interval inside the domain at scales
    /// `finest..=top`, keep the maximal ones whose triple misses the set.
    fn brute_z(points: &[Dyadic], finest: i32, domain: ExactInterval) -> BTreeSet<DyadicInterval> {
        let miss = |i: &DyadicInterval| {
            let t = i.triple();
            !points.iter().any(|&x| t.contains(x))
        };
        let top = domain.len().ceil_log2();
        let mut out = BTreeSet::new();
        for m in finest..=top {
            let lo = domain.lo.floor_div_pow2(m) as i64 - 1;
            let hi = domain.hi.floor_div_pow2(m) as i64 + 1;
            for k in lo..=hi {
                let i = DyadicInterval::new(k, m);
                let inside = domain.lo <= i.left() && i.right() <= domain.hi;
                if inside && miss(&i) && !miss(&i.parent()) {
                    out.insert(i);
                }
            }
        }
        out
    }

    #[test]
    fn collect_z_single_point_matches_enumeration() {
        let x = PointSet::new(vec![Dyadic::ZERO]);
        let got = collect_z(&x, ScaleRange::finest(-3), &iv("0", "1")).unwrap();
        // frozen from the brute-force oracle: [1/4,3/8), [3/8,1/2), [1/2,3/4), [3/4,1)
        let frozen: BTreeSet<_> = [
            DyadicInterval::new(2, -3),
            DyadicInterval::new(3, -3),
            DyadicInterval::new(2, -2),
            DyadicInterval::new(3, -2),
        ]
        .into_iter()
        .collect();
        assert_eq!(brute_z(&[Dyadic::ZERO], -3, iv("0", "1")), frozen);
        let got: BTreeSet<_> = got.intervals.into_iter().collect();
        assert_eq!(got, frozen);
    }

    #[test]
    fn collect_z_matches_brute_force_on_random_sets() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..6);
            let pts: Vec<Dyadic> = (0..n)
                .map(|_| Dyadic::new(rng.random_range(-64..320), 5))
                .collect();
            let domain = ExactInterval::new(
                Dyadic::new(rng.random_range(0..16), 2),
                Dyadic::new(rng.random_range(16..64), 2),
            );
            let finest = rng.random_range(-6..-2);
            let set = PointSet::new(pts.clone());
            let got = collect_z(&set, ScaleRange::finest(finest), &domain).unwrap();
            let got_set: BTreeSet<_> = got.intervals.iter().copied().collect();
            assert_eq!(got_set, brute_z(&pts, finest, domain), "pts={pts:?} domain={domain}");
            assert!(got.is_pairwise_disjoint());
        }
    }

    #[test]
    fn collect_z_dense_points_gives_empty() {
        let pts: Vec<Dyadic> = (-8..=40).map(|k| Dyadic::new(k, 3)).collect();
        let z = collect_z(&PointSet::new(pts), ScaleRange::finest(-3), &iv("0", "4")).unwrap();
        assert!(z.is_empty());
    }

    #[test]
    fn collect_z_rejects_empty_set() {
        let err = collect_z(&PointSet::default(), ScaleRange::finest(0), &iv("0", "1"));
        assert_eq!(err, Err(Error::EmptyPointSet));
    }

    #[test]
    fn z_members_are_maximal() {
        let pts = PointSet::new(vec![d("3/8"), d("5"), d("41/4")]);
        let z = collect_z(&pts, ScaleRange::finest(-5), &iv("0", "16")).unwrap();
        assert!(!z.is_empty());
        for i in &z.intervals {
            assert!(pts.triple_misses(i));
            assert!(!pts.triple_misses(&i.parent()));
        }
    }

    #[test]
    fn capped_coarsest_scale_stops_ascent() {
        let pts = PointSet::new(vec![d("100")]);
        let z = collect_z(
            &pts,
            ScaleRange { finest: -2, coarsest: Some(1) },
            &iv("0", "8"),
        )
        .unwrap();
        // far from the point every cell at the cap qualifies
        assert_eq!(z.len(), 4);
        assert!(z.intervals.iter().all(|i| i.m == 1));
    }

    #[test]
    fn yj_zj_single_point_partition() {
        let pts = PointSet::new(vec![d("5")]);
        let xi = vec![d("32")];
        let (y, z) = collect_yj_zj(&pts, &xi, 0, 3).unwrap();
        // cells of length 16 in [0, 32) whose triple contains 5: [0,16) and [16,32)
        assert_eq!(y.intervals, vec![DyadicInterval::new(0, 4), DyadicInterval::new(1, 4)]);
        assert!(z.is_empty());
        let xi = vec![d("128")];
        let (y, z) = collect_yj_zj(&pts, &xi, 0, 3).unwrap();
        let mut all = y.intervals.clone();
        all.extend(z.intervals.iter().copied());
        assert!(first_overlap(&all).is_none());
        let total = y.total_length() + z.total_length();
        assert_eq!(total, d("128"));
        // brute force: Z inside [0,128) at scales >= 16 not contained in Y_0
        let brute = brute_z(&[d("5")], 1, iv("0", "128"));
        let brute: Vec<_> = brute
            .into_iter()
            .filter(|i| !y.intervals.iter().any(|yy| i.is_subset_of(yy)))
            .collect();
        let got: Vec<_> = z.intervals.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        assert_eq!(got, brute);
    }

    #[test]
    fn yj_requires_alignment() {
        let pts = PointSet::new(vec![d("1")]);
        let err = collect_yj_zj(&pts, &[d("17/16")], 0, 2).unwrap_err();
        assert!(matches!(err, Error::NotAligned { .. }));
    }

    #[test]
    fn nesting_law_exhaustive() {
        let mut all = Vec::new();
        for m in -2..=1 {
            for k in -4..4 {
                all.push(DyadicInterval::new(k, m));
            }
        }
        for a in &all {
            for b in &all {
                let n = a.nesting(b);
                let ea = a.exact();
                let eb = b.exact();
                let disjoint = !ea.intersects(&eb);
                let sub = ea.is_subset_of(&eb);
                let sup = eb.is_subset_of(&ea);
                assert!(disjoint || sub || sup);
                assert_eq!(disjoint as u8 + (sub || sup) as u8, 1);
                match n {
                    Nesting::Disjoint => assert!(disjoint),
                    Nesting::Equal => assert!(sub && sup),
                    Nesting::Inside => assert!(sub && !sup),
                    Nesting::Contains => assert!(sup && !sub),
                }
            }
        }
    }

    fn sweep_oracle(ivs: &[ExactInterval]) -> usize {
        ivs.iter()
            .map(|probe| ivs.iter().filter(|iv| iv.contains(probe.lo)).count())
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn overlap_count_basics() {
        assert_eq!(overlap_count(&[iv("0", "1"), iv("1", "2"), iv("5", "6")]), 1);
        assert_eq!(overlap_count(&[iv("0", "1"), iv("0", "1")]), 2);
        assert_eq!(overlap_count(&[]), 0);
    }

    #[test]
    fn z_right_extensions_overlap_at_most_two() {
        let pts = PointSet::new(vec![d("0"), d("3"), d("7/2"), d("19")]);
        let z = collect_z(&pts, ScaleRange::finest(-6), &iv("-8", "32")).unwrap();
        let ext: Vec<_> = z.intervals.iter().map(|i| i.right_extension()).collect();
        let c = overlap_count(&ext);
        assert_eq!(c, sweep_oracle(&ext));
        assert!(c <= 2, "overlap {c}");
    }

    #[test]
    fn label_round_trip() {
        for l in [Label::Y, Label::Z, Label::Yj(-3), Label::Zj(4), Label::Wi(2), Label::Vi(0)] {
            assert_eq!(l.to_string().parse::<Label>().unwrap(), l);
        }
        let c = IntervalCollection::new(Label::Wi(1), vec![DyadicInterval::new(3, -2)]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"label":"W_1","intervals":[{"k":3,"m":-2}]}"#);
        assert_eq!(serde_json::from_str::<IntervalCollection>(&s).unwrap(), c);
    }
}
