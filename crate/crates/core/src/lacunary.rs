//! Multi-lacunary point sets: certificates, exhaustive and greedy search,
//! and generators for admissible frequency sequences.
//!
//! A finite set is `(0,b)`-lacunary when it is a singleton. It is
//! `(d+1,b)`-lacunary when it splits into `L` and `O` with `L` being
//! `(d,b)`-lacunary and every pair of distinct points of `O` at distance at
//! least `2^-b dist(xi, L)`. Unrolling the recursion gives the level
//! partition `O_0, ..., O_d` carried by [`LacunarityCertificate`].

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Dyadic;

/// Level partition `O_0, ..., O_d` witnessing `(d,b)`-lacunarity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LacunarityCertificate {
    pub b: u32,
    pub d: usize,
    pub levels: Vec<Vec<Dyadic>>,
}

/// How the pair condition is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairRule {
    /// Both `dist(a,a') >= 2^-b dist(a, L)` and the same with roles swapped.
    #[default]
    Symmetric,
    /// At least one of the two orderings holds.
    OneSided,
}

/// Why a certificate was rejected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    LevelCount { expected: usize, found: usize },
    BaseNotSingleton { size: usize },
    Repeated { point: Dyadic },
    Separation {
        level: usize,
        pair: (Dyadic, Dyadic),
        distance: Dyadic,
        distance_to_prefix: Dyadic,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::LevelCount { expected, found } => {
                write!(f, "expected {expected} levels, found {found}")
            }
            Violation::BaseNotSingleton { size } => {
                write!(f, "level 0 has {size} points, expected exactly one")
            }
            Violation::Repeated { point } => write!(f, "point {point} appears twice"),
            Violation::Separation { level, pair, distance, distance_to_prefix } => write!(
                f,
                "level {level}: dist({}, {}) = {distance} is below 2^-b * {distance_to_prefix}",
                pair.0, pair.1
            ),
        }
    }
}

impl LacunarityCertificate {
    /// All certified points, sorted.
    pub fn points(&self) -> Vec<Dyadic> {
        let mut v: Vec<Dyadic> = self.levels.iter().flatten().copied().collect();
        v.sort();
        v
    }

    /// Level index of every point.
    pub fn level_map(&self) -> HashMap<Dyadic, usize> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(i, lv)| lv.iter().map(move |x| (*x, i)))
            .collect()
    }

    /// Verify under the default symmetric pair rule.
    pub fn verify(&self) -> std::result::Result<(), Violation> {
        self.verify_with(PairRule::Symmetric)
    }

    pub fn verify_with(&self, rule: PairRule) -> std::result::Result<(), Violation> {
        if self.levels.len() != self.d + 1 {
            return Err(Violation::LevelCount { expected: self.d + 1, found: self.levels.len() });
        }
        if self.levels[0].len() != 1 {
            return Err(Violation::BaseNotSingleton { size: self.levels[0].len() });
        }
        let mut all = self.points();
        let n = all.len();
        all.dedup();
        if all.len() != n {
            let mut seen = std::collections::HashSet::new();
            for x in self.levels.iter().flatten() {
                if !seen.insert(*x) {
                    return Err(Violation::Repeated { point: *x });
                }
            }
        }
        let mut prefix = self.levels[0].clone();
        for (i, level) in self.levels.iter().enumerate().skip(1) {
            if let Some(v) = separation_violation(level, &prefix, self.b, rule) {
                return Err(match v {
                    Violation::Separation { pair, distance, distance_to_prefix, .. } => {
                        Violation::Separation { level: i, pair, distance, distance_to_prefix }
                    }
                    other => other,
                });
            }
            prefix.extend(level.iter().copied());
            prefix.sort();
        }
        Ok(())
    }

    /// The levels with every prefix union `X_i`, after verification.
    pub fn decompose(&self) -> Result<Vec<Vec<Dyadic>>> {
        self.verify()
            .map_err(|v| Error::InvalidCertificate(v.to_string()))?;
        Ok(self
            .levels
            .iter()
            .map(|lv| {
                let mut lv = lv.clone();
                lv.sort();
                lv
            })
            .collect())
    }
}

/// Distance from `x` to a sorted, nonempty set.
pub fn dist_to_sorted(x: Dyadic, sorted: &[Dyadic]) -> Dyadic {
    let i = sorted.partition_point(|y| *y < x);
    let mut best: Option<Dyadic> = None;
    for k in [i.wrapping_sub(1), i] {
        if let Some(y) = sorted.get(k) {
            let dd = (x - *y).abs();
            best = Some(best.map_or(dd, |b| b.min(dd)));
        }
    }
    best.expect("distance to empty set")
}

/// First pair of `level` violating the separation rule relative to the
/// sorted prefix. The prefix must be nonempty.
fn separation_violation(
    level: &[Dyadic],
    prefix: &[Dyadic],
    b: u32,
    rule: PairRule,
) -> Option<Violation> {
    if level.len() < 2 {
        return None;
    }
    let mut pts = level.to_vec();
    pts.sort();
    let dl: Vec<Dyadic> = pts.iter().map(|x| dist_to_sorted(*x, prefix)).collect();
    let ok = |dist: Dyadic, to_prefix: Dyadic| dist.mul_pow2(b as i32) >= to_prefix;
    let report = |a: usize, c: usize| Violation::Separation {
        level: 0,
        pair: (pts[a], pts[c]),
        distance: (pts[a] - pts[c]).abs(),
        distance_to_prefix: dl[a],
    };
    match rule {
        PairRule::Symmetric => {
            // every partner of a point is at least as far as its nearest neighbour
            for a in 0..pts.len() {
                let mut nn = None;
                for c in [a.wrapping_sub(1), a + 1] {
                    if let Some(y) = pts.get(c) {
                        let dd = (pts[a] - *y).abs();
                        if nn.is_none_or(|(_, best)| dd < best) {
                            nn = Some((c, dd));
                        }
                    }
                }
                let (c, dd) = nn.expect("level has two points");
                if !ok(dd, dl[a]) {
                    return Some(report(a, c));
                }
            }
            None
        }
        PairRule::OneSided => {
            for a in 0..pts.len() {
                for c in a + 1..pts.len() {
                    let dd = pts[c] - pts[a];
                    if !ok(dd, dl[a]) && !ok(dd, dl[c]) {
                        let k = if dl[a] <= dl[c] { a } else { c };
                        let other = if k == a { c } else { a };
                        return Some(report(k, other));
                    }
                }
            }
            None
        }
    }
}

/// Search strategy for [`is_lacunary`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub mode: SearchMode,
    pub rule: PairRule,
    /// Largest set accepted by the exhaustive search.
    pub max_points: usize,
    /// Number of visited subproblems after which the search gives up.
    pub work_budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            mode: SearchMode::Exhaustive,
            rule: PairRule::Symmetric,
            max_points: 24,
            work_budget: 20_000_000,
        }
    }
}

/// Outcome of a lacunarity search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found { certificate: LacunarityCertificate, heuristic: bool },
    /// Exhaustive search proved that no certificate exists.
    NotLacunary,
    /// The search could not decide within its budget, or a heuristic failed.
    Undecided { reason: String },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&LacunarityCertificate> {
        match self {
            SearchOutcome::Found { certificate, .. } => Some(certificate),
            _ => None,
        }
    }
}

/// Decide `(d,b)`-lacunarity of `points` and produce a certificate.
pub fn is_lacunary(points: &[Dyadic], d: usize, b: u32, opts: &SearchOptions) -> Result<SearchOutcome> {
    let mut xs = points.to_vec();
    xs.sort();
    let n = xs.len();
    xs.dedup();
    if xs.len() != n {
        return Err(Error::InvalidParameter("point set contains repeated values".into()));
    }
    if xs.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    // Peeling one point per level always works.
    if d + 1 >= xs.len() {
        let mut levels: Vec<Vec<Dyadic>> = xs.iter().map(|x| vec![*x]).collect();
        levels.resize(d + 1, Vec::new());
        let certificate = LacunarityCertificate { b, d, levels };
        return Ok(SearchOutcome::Found { certificate, heuristic: false });
    }
    match opts.mode {
        SearchMode::Exhaustive => {
            if xs.len() > opts.max_points {
                return Ok(SearchOutcome::Undecided {
                    reason: format!(
                        "exhaustive search limited to {} points, got {}",
                        opts.max_points,
                        xs.len()
                    ),
                });
            }
            let mut search = Exhaustive::new(&xs, b, opts.rule, opts.work_budget);
            let full = (1u32 << xs.len()) - 1;
            match search.solve(full, d) {
                Some(true) => {
                    let levels = search.extract(full, d);
                    let certificate = LacunarityCertificate { b, d, levels };
                    debug_assert!(certificate.verify_with(opts.rule).is_ok());
                    Ok(SearchOutcome::Found { certificate, heuristic: false })
                }
                Some(false) => Ok(SearchOutcome::NotLacunary),
                None => Ok(SearchOutcome::Undecided {
                    reason: format!("work budget of {} subproblems exhausted", opts.work_budget),
                }),
            }
        }
        SearchMode::Greedy => Ok(match greedy(&xs, d, b, opts.rule) {
            Some(certificate) => SearchOutcome::Found { certificate, heuristic: true },
            None => SearchOutcome::Undecided { reason: "greedy heuristic found no certificate".into() },
        }),
    }
}

/// Reference decision by enumerating level assignments `O_0, ..., O_d`
/// directly, with all pairs compared. Exponential; intended for sets of at
/// most a dozen points.
pub fn is_lacunary_brute(points: &[Dyadic], d: usize, b: u32, rule: PairRule) -> bool {
    fn pair_ok(x: Dyadic, y: Dyadic, prefix: &[Dyadic], b: u32, rule: PairRule) -> bool {
        let dist = |p: Dyadic| prefix.iter().map(|q| (p - *q).abs()).min().expect("nonempty prefix");
        let sep = (x - y).abs().mul_pow2(b as i32);
        let (ox, oy) = (sep >= dist(x), sep >= dist(y));
        match rule {
            PairRule::Symmetric => ox && oy,
            PairRule::OneSided => ox || oy,
        }
    }
    fn level_ok(level: &[Dyadic], prefix: &[Dyadic], b: u32, rule: PairRule) -> bool {
        level.iter().enumerate().all(|(i, x)| level[i + 1..].iter().all(|y| pair_ok(*x, *y, prefix, b, rule)))
    }
    fn go(rest: &[Dyadic], prefix: &mut Vec<Dyadic>, levels_left: usize, b: u32, rule: PairRule) -> bool {
        if levels_left == 1 {
            return level_ok(rest, prefix, b, rule);
        }
        for mask in 0u32..1 << rest.len() {
            let (inside, outside): (Vec<_>, Vec<_>) =
                rest.iter().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
            let level: Vec<Dyadic> = inside.into_iter().map(|(_, x)| *x).collect();
            if !level_ok(&level, prefix, b, rule) {
                continue;
            }
            let remaining: Vec<Dyadic> = outside.into_iter().map(|(_, x)| *x).collect();
            let keep = prefix.len();
            prefix.extend(&level);
            let found = go(&remaining, prefix, levels_left - 1, b, rule);
            prefix.truncate(keep);
            if found {
                return true;
            }
        }
        false
    }
    let mut xs = points.to_vec();
    xs.sort();
    xs.dedup();
    if xs.is_empty() || xs.len() != points.len() {
        return false;
    }
    if d == 0 {
        return xs.len() == 1;
    }
    (0..xs.len()).any(|i| {
        let mut rest = xs.clone();
        let base = rest.remove(i);
        go(&rest, &mut vec![base], d, b, rule)
    })
}

/// Memoized recursion over `(subset, depth)`: `S` is `(k,b)`-lacunary iff it
/// is `(k-1,b)`-lacunary or splits as `L ∪ O` with `L` `(k-1,b)`-lacunary and
/// `O` separated relative to `L`.
struct Exhaustive<'a> {
    xs: &'a [Dyadic],
    b: u32,
    rule: PairRule,
    memo: HashMap<(u32, usize), bool>,
    work: u64,
    budget: u64,
}

impl<'a> Exhaustive<'a> {
    fn new(xs: &'a [Dyadic], b: u32, rule: PairRule, budget: u64) -> Self {
        Exhaustive { xs, b, rule, memo: HashMap::new(), work: 0, budget }
    }

    fn members(&self, mask: u32) -> Vec<Dyadic> {
        (0..self.xs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.xs[i])
            .collect()
    }

    fn separated(&self, o: u32, l: u32) -> bool {
        let o = self.members(o);
        let l = self.members(l);
        separation_violation(&o, &l, self.b, self.rule).is_none()
    }

    /// `None` when the budget ran out.
    fn solve(&mut self, s: u32, k: usize) -> Option<bool> {
        let size = s.count_ones() as usize;
        if size == 1 {
            return Some(true);
        }
        if k == 0 || size == 0 {
            return Some(false);
        }
        if k + 1 >= size {
            return Some(true);
        }
        if let Some(&v) = self.memo.get(&(s, k)) {
            return Some(v);
        }
        self.work += 1;
        if self.work > self.budget {
            return None;
        }
        let mut found = false;
        // proper nonempty submasks as candidates for L; L = S is the k-1 case
        let mut l = s;
        loop {
            if l != s && l != 0 {
                let o = s ^ l;
                let l_size = l.count_ones() as usize;
                let plausible = k > 1 || l_size == 1;
                if plausible && self.separated(o, l) && self.solve(l, k - 1)? {
                    found = true;
                    break;
                }
            }
            if l == 0 {
                break;
            }
            l = (l - 1) & s;
        }
        if !found {
            found = self.solve(s, k - 1)?;
        }
        self.memo.insert((s, k), found);
        Some(found)
    }

    /// Reconstruct levels `O_0..O_k` for a subset known to be lacunary.
    fn extract(&mut self, s: u32, k: usize) -> Vec<Vec<Dyadic>> {
        let size = s.count_ones() as usize;
        if size == 1 {
            let mut levels = vec![self.members(s)];
            levels.resize(k + 1, Vec::new());
            return levels;
        }
        if k + 1 >= size {
            let mut levels: Vec<Vec<Dyadic>> = self.members(s).into_iter().map(|x| vec![x]).collect();
            levels.resize(k + 1, Vec::new());
            return levels;
        }
        let mut l = s;
        loop {
            if l != s && l != 0 {
                let o = s ^ l;
                if (k > 1 || l.count_ones() == 1)
                    && self.separated(o, l)
                    && self.solve(l, k - 1) == Some(true)
                {
                    let mut levels = self.extract(l, k - 1);
                    levels.push(self.members(o));
                    return levels;
                }
            }
            if l == 0 {
                break;
            }
            l = (l - 1) & s;
        }
        let mut levels = self.extract(s, k - 1);
        levels.push(Vec::new());
        levels
    }
}

/// Greedy bottom-up heuristic. Each point is tried as `O_0`; each further
/// level takes the remaining points in order of decreasing distance to the
/// current prefix (ties toward the smaller value), keeping a point when the
/// level stays separated. The last level must absorb everything left.
fn greedy(xs: &[Dyadic], d: usize, b: u32, rule: PairRule) -> Option<LacunarityCertificate> {
    for &root in xs {
        let mut prefix = vec![root];
        let mut levels = vec![vec![root]];
        let mut rest: Vec<Dyadic> = xs.iter().copied().filter(|x| *x != root).collect();
        for level_idx in 1..=d {
            if level_idx == d {
                if separation_violation(&rest, &prefix, b, rule).is_some() {
                    break;
                }
                levels.push(std::mem::take(&mut rest));
                break;
            }
            let mut order: Vec<(Dyadic, Dyadic)> =
                rest.iter().map(|x| (dist_to_sorted(*x, &prefix), *x)).collect();
            order.sort_by(|a, c| c.0.cmp(&a.0).then(a.1.cmp(&c.1)));
            let mut level: Vec<Dyadic> = Vec::new();
            for (_, x) in order {
                level.push(x);
                if separation_violation(&level, &prefix, b, rule).is_some() {
                    level.pop();
                }
            }
            rest.retain(|x| !level.contains(x));
            prefix.extend(level.iter().copied());
            prefix.sort();
            levels.push(level);
        }
        if rest.is_empty() && levels.len() == d + 1 {
            return Some(LacunarityCertificate { b, d, levels });
        }
    }
    None
}

/// Frequency sequences with the spacing and shell conditions of the
/// multi-lacunary paraproduct.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleSequences {
    pub xi: Vec<Dyadic>,
    pub eta: Vec<Dyadic>,
    pub zeta: Vec<Dyadic>,
    pub beta: u8,
    pub certificate: LacunarityCertificate,
}

impl AdmissibleSequences {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Shape of the tree underlying [`generate_admissible`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeShape {
    /// Random tree of depth at most `d`.
    #[default]
    Random,
    /// A single chain of children of the root: an ordinary lacunary cascade.
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    pub shape: TreeShape,
    /// Fixed shell class; random in `0..=2` when `None`.
    pub beta: Option<u8>,
    /// Largest allowed `log2` of the leading sequence value.
    pub max_log2: i32,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions { shape: TreeShape::Random, beta: None, max_log2: 80 }
    }
}

/// Check `2^-j <= eta_j <= zeta_j < 2^(2-j)`.
pub fn check_eta_spacing(eta: &[Dyadic], zeta: &[Dyadic]) -> Result<()> {
    if eta.len() != zeta.len() {
        return Err(Error::InvalidParameter("eta and zeta lengths differ".into()));
    }
    for (j, (e, z)) in eta.iter().zip(zeta).enumerate() {
        let lo = Dyadic::pow2(-(j as i32));
        let hi = Dyadic::pow2(2 - j as i32);
        if !(lo <= *e && e <= z && *z < hi) {
            return Err(Error::Spacing {
                index: j,
                reason: format!("need {lo} <= eta = {e} <= zeta = {z} < {hi}"),
            });
        }
    }
    Ok(())
}

/// Check `0 <= xi_j + gap * 2^-j <= xi_(j-1)` with `gap = 2^g`.
pub fn check_xi_spacing_with(xi: &[Dyadic], g: i32) -> Result<()> {
    for j in 1..xi.len() {
        let step = Dyadic::pow2(g - j as i32);
        let lhs = xi[j] + step;
        if !(Dyadic::ZERO <= lhs && lhs <= xi[j - 1]) {
            return Err(Error::Spacing {
                index: j,
                reason: format!("need 0 <= {} + {} <= {}", xi[j], step, xi[j - 1]),
            });
        }
    }
    Ok(())
}

/// Check `0 <= xi_j + 2^(6-j) <= xi_(j-1)`.
pub fn check_xi_spacing(xi: &[Dyadic]) -> Result<()> {
    check_xi_spacing_with(xi, 6)
}

/// Interval `[(1+beta) 2^-j, (2+beta) 2^-j)` of shell class `beta`.
/// Its intersection with `[2^-j, 2^(2-j))` is empty for `beta = 3`.
pub fn beta_class(j: usize, beta: u8) -> (Dyadic, Dyadic) {
    let unit = Dyadic::pow2(-(j as i32));
    let lo = unit * Dyadic::from_int(1 + beta as i128);
    let hi = unit * Dyadic::from_int(2 + beta as i128);
    let cap = Dyadic::pow2(2 - j as i32);
    (lo.min(cap), hi.min(cap))
}

/// Split `[eta, zeta)` into its four shell-class pieces (possibly empty).
pub fn beta_split(j: usize, eta: Dyadic, zeta: Dyadic) -> [(Dyadic, Dyadic); 4] {
    let mut out = [(Dyadic::ZERO, Dyadic::ZERO); 4];
    for (beta, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = beta_class(j, beta as u8);
        let a = lo.max(eta);
        let c = hi.min(zeta);
        *slot = if a < c { (a, c) } else { (a, a) };
    }
    out
}

/// `xi'_j`: the largest multiple of `2^(4-j)` not exceeding `xi_j`.
pub fn round_xi(xi: &[Dyadic]) -> Vec<Dyadic> {
    xi.iter()
        .enumerate()
        .map(|(j, x)| x.floor_to_pow2(4 - j as i32))
        .collect()
}

/// Certificate for a sequence obtained by moving the points of `cert`
/// along the map `old[j] -> new[j]`, with parameter `b`.
pub fn transport_certificate(
    cert: &LacunarityCertificate,
    old: &[Dyadic],
    new: &[Dyadic],
    b: u32,
) -> LacunarityCertificate {
    let map: HashMap<Dyadic, Dyadic> = old.iter().copied().zip(new.iter().copied()).collect();
    LacunarityCertificate {
        b,
        d: cert.d,
        levels: cert
            .levels
            .iter()
            .map(|lv| lv.iter().map(|x| map[x]).collect())
            .collect(),
    }
}

struct Node {
    value: Dyadic,
    /// exponent of the last term; `None` for the root
    last: Option<i32>,
    depth: usize,
    used: Vec<i32>,
}

/// Pseudorandom admissible sequences of length `j_len` whose image is
/// certified `(d,b)`-lacunary.
///
/// Points are sums `c + 2^(a_1) + ... + 2^(a_k)` with `k <= d` and
/// `a_(l+1) <= a_l - 2`, arranged as a prefix-closed tree; the level of a
/// point is its number of terms. Any two points of one level then differ by
/// at least a quarter of their distance to the shallower levels. The
/// sequence lists the points in decreasing order, rescaled by the smallest
/// power of two that meets the spacing condition.
pub fn generate_admissible(
    j_len: usize,
    d: usize,
    b: u32,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<AdmissibleSequences> {
    if j_len == 0 {
        return Err(Error::InvalidParameter("sequence length must be at least 1".into()));
    }
    if d < 2 || b < 2 {
        return Err(Error::InvalidParameter(format!("need d, b >= 2, got d = {d}, b = {b}")));
    }
    if let Some(beta) = opts.beta {
        if beta > 2 {
            return Err(Error::InvalidParameter(format!(
                "shell class {beta} is empty; use 0, 1 or 2"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = Dyadic::new(rng.random_range(0..16), 4);
    let mut nodes = vec![Node { value: root, last: None, depth: 0, used: Vec::new() }];
    let top = 0i32;
    while nodes.len() < j_len {
        let parent = match opts.shape {
            TreeShape::Geometric => 0,
            TreeShape::Random => {
                let open: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].depth < d).collect();
                open[rng.random_range(0..open.len())]
            }
        };
        let ceiling = nodes[parent].last.map_or(top, |a| a - 2);
        let mut a = ceiling - rng.random_range(0..2);
        while nodes[parent].used.contains(&a) {
            a -= 1;
        }
        nodes[parent].used.push(a);
        let child = Node {
            value: nodes[parent].value + Dyadic::pow2(a),
            last: Some(a),
            depth: nodes[parent].depth + 1,
            used: Vec::new(),
        };
        nodes.push(child);
    }
    let mut levels = vec![Vec::new(); d + 1];
    for n in &nodes {
        levels[n.depth].push(n.value);
    }
    let mut xi: Vec<Dyadic> = nodes.iter().map(|n| n.value).collect();
    xi.sort_by(|a, c| c.cmp(a));

    // smallest shift s with gap_j * 2^s >= 2^(6-j) for all j
    let mut shift = i32::MIN;
    for j in 1..xi.len() {
        let gap = xi[j - 1] - xi[j];
        let need = (6 - j as i32) - gap.floor_log2();
        shift = shift.max(need);
        let lead = xi[0].max(Dyadic::ONE).ceil_log2() + shift;
        if lead > opts.max_log2 {
            return Err(Error::Infeasible {
                index: j,
                reason: format!(
                    "spacing needs leading value near 2^{lead}, above the cap 2^{}",
                    opts.max_log2
                ),
            });
        }
    }
    if shift == i32::MIN {
        shift = 0;
    }
    let xi: Vec<Dyadic> = xi.iter().map(|x| x.mul_pow2(shift)).collect();
    for lv in &mut levels {
        for x in lv.iter_mut() {
            *x = x.mul_pow2(shift);
        }
        lv.sort();
    }
    let certificate = LacunarityCertificate { b, d, levels };
    certificate
        .verify()
        .map_err(|v| Error::InvalidCertificate(format!("generator produced {v}")))?;

    let beta = opts.beta.unwrap_or_else(|| rng.random_range(0..3));
    let mut eta = Vec::with_capacity(xi.len());
    let mut zeta = Vec::with_capacity(xi.len());
    for j in 0..xi.len() {
        let (lo, _) = beta_class(j, beta);
        let tick = Dyadic::pow2(-(j as i32) - 4);
        let u: i128 = rng.random_range(0..15);
        let v: i128 = rng.random_range(1..16 - u);
        let e = lo + tick * Dyadic::from_int(u);
        eta.push(e);
        zeta.push(e + tick * Dyadic::from_int(v));
    }
    check_xi_spacing(&xi)?;
    check_eta_spacing(&eta, &zeta)?;
    Ok(AdmissibleSequences { xi, eta, zeta, beta, certificate })
}

/// Validate user-supplied sequences and certificate.
pub fn validate_admissible(seqs: &AdmissibleSequences) -> Result<()> {
    let n = seqs.xi.len();
    if seqs.eta.len() != n || seqs.zeta.len() != n {
        return Err(Error::InvalidParameter("sequence lengths differ".into()));
    }
    check_xi_spacing(&seqs.xi)?;
    check_eta_spacing(&seqs.eta, &seqs.zeta)?;
    seqs.certificate
        .verify()
        .map_err(|v| Error::InvalidCertificate(v.to_string()))?;
    let mut pts = seqs.certificate.points();
    let mut xs = seqs.xi.clone();
    xs.sort();
    pts.dedup();
    if pts != xs {
        return Err(Error::InvalidCertificate("certificate does not cover the sequence image".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_list;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn exhaustive() -> SearchOptions {
        SearchOptions::default()
    }

    #[test]
    fn singleton_certificate() {
        let c = LacunarityCertificate { b: 3, d: 0, levels: vec![vec![d("5")]] };
        assert!(c.verify().is_ok());
    }

    #[test]
    fn four_point_example() {
        let c = LacunarityCertificate {
            b: 1,
            d: 1,
            levels: vec![vec![d("1/8")], parse_list("1, 1/2, 1/4").unwrap()],
        };
        assert!(c.verify().is_ok());
        let levels = c.decompose().unwrap();
        assert_eq!(levels[0], vec![d("1/8")]);
        assert_eq!(levels[1], parse_list("1/4, 1/2, 1").unwrap());
    }

    #[test]
    fn arithmetic_progression_not_one_lacunary() {
        let xs: Vec<Dyadic> = (0..10).map(Dyadic::from).collect();
        for root in 0..10usize {
            let rest: Vec<Dyadic> = xs.iter().copied().filter(|x| *x != xs[root]).collect();
            let c = LacunarityCertificate { b: 0, d: 1, levels: vec![vec![xs[root]], rest] };
            assert!(matches!(c.verify(), Err(Violation::Separation { .. })));
        }
        assert_eq!(is_lacunary(&xs, 1, 0, &exhaustive()).unwrap(), SearchOutcome::NotLacunary);
    }

    #[test]
    fn geometric_set_is_one_lacunary() {
        let xs: Vec<Dyadic> = (0..=10).map(|j| Dyadic::pow2(-j)).collect();
        let out = is_lacunary(&xs, 1, 1, &exhaustive()).unwrap();
        let cert = out.certificate().expect("certificate");
        assert!(cert.verify().is_ok());
        assert_eq!(cert.points(), {
            let mut v = xs.clone();
            v.sort();
            v
        });
    }

    #[test]
    fn violation_names_level_and_pair() {
        let c = LacunarityCertificate {
            b: 0,
            d: 1,
            levels: vec![vec![d("0")], vec![d("8"), d("9")]],
        };
        match c.verify() {
            Err(Violation::Separation { level, pair, distance, distance_to_prefix }) => {
                assert_eq!(level, 1);
                assert_eq!(pair, (d("8"), d("9")));
                assert_eq!(distance, d("1"));
                assert_eq!(distance_to_prefix, d("8"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_sided_rule_is_weaker() {
        // dist(1,3) = 2; dist(1,{0}) = 1 passes, dist(3,{0}) = 3 fails at b = 0
        let c = LacunarityCertificate {
            b: 0,
            d: 1,
            levels: vec![vec![d("0")], vec![d("1"), d("3")]],
        };
        assert!(c.verify().is_err());
        assert!(c.verify_with(PairRule::OneSided).is_ok());
    }

    #[test]
    fn structural_checks() {
        let two_roots = LacunarityCertificate { b: 1, d: 0, levels: vec![vec![d("0"), d("1")]] };
        assert_eq!(two_roots.verify(), Err(Violation::BaseNotSingleton { size: 2 }));
        let short = LacunarityCertificate { b: 1, d: 2, levels: vec![vec![d("0")]] };
        assert!(matches!(short.verify(), Err(Violation::LevelCount { .. })));
        let rep = LacunarityCertificate { b: 1, d: 1, levels: vec![vec![d("0")], vec![d("0")]] };
        assert!(matches!(rep.verify(), Err(Violation::Repeated { .. })));
    }

    #[test]
    fn exhaustive_budget_reports_undecided() {
        let xs: Vec<Dyadic> = (0..30).map(Dyadic::from).collect();
        assert!(matches!(
            is_lacunary(&xs, 2, 0, &exhaustive()).unwrap(),
            SearchOutcome::Undecided { .. }
        ));
        let tiny = SearchOptions { work_budget: 1, ..exhaustive() };
        let xs: Vec<Dyadic> = (0..12).map(Dyadic::from).collect();
        assert!(matches!(
            is_lacunary(&xs, 3, 0, &tiny).unwrap(),
            SearchOutcome::Undecided { .. }
        ));
    }

    #[test]
    fn greedy_is_flagged_and_sound() {
        let xs: Vec<Dyadic> = (0..40).map(|j| Dyadic::pow2(-j)).collect();
        let opts = SearchOptions { mode: SearchMode::Greedy, ..exhaustive() };
        match is_lacunary(&xs, 1, 1, &opts).unwrap() {
            SearchOutcome::Found { certificate, heuristic } => {
                assert!(heuristic);
                assert!(certificate.verify().is_ok());
            }
            other => panic!("greedy failed: {other:?}"),
        }
    }

    #[test]
    fn certificate_json_round_trip() {
        let c = LacunarityCertificate {
            b: 2,
            d: 1,
            levels: vec![vec![d("3/8")], vec![d("1"), d("-5/2")]],
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"b":2,"d":1,"levels":[["3/2^3"],["1","-5/2^1"]]}"#);
        assert_eq!(serde_json::from_str::<LacunarityCertificate>(&s).unwrap(), c);
    }

    #[test]
    fn generator_battery() {
        for (dd, b) in [(2usize, 2u32), (2, 4), (3, 3), (4, 2)] {
            for seed in 0..40 {
                let s = generate_admissible(20, dd, b, seed, &GeneratorOptions::default()).unwrap();
                assert_eq!(s.len(), 20);
                validate_admissible(&s).unwrap();
                assert!(s.beta <= 2);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let o = GeneratorOptions::default();
        assert_eq!(generate_admissible(12, 2, 2, 9, &o).unwrap(), generate_admissible(12, 2, 2, 9, &o).unwrap());
        assert_ne!(generate_admissible(12, 2, 2, 9, &o).unwrap(), generate_admissible(12, 2, 2, 10, &o).unwrap());
    }

    #[test]
    fn geometric_shape_is_a_single_cascade() {
        let o = GeneratorOptions { shape: TreeShape::Geometric, ..Default::default() };
        let s = generate_admissible(10, 2, 2, 3, &o).unwrap();
        assert_eq!(s.certificate.levels[0].len(), 1);
        assert_eq!(s.certificate.levels[1].len(), 9);
        assert!(s.certificate.levels[2].is_empty());
        let root = s.certificate.levels[0][0];
        for x in &s.certificate.levels[1] {
            let off = *x - root;
            assert_eq!(Dyadic::pow2(off.floor_log2()), off, "one power of two above the root");
        }
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        let o = GeneratorOptions::default();
        assert!(generate_admissible(0, 2, 2, 0, &o).is_err());
        assert!(generate_admissible(5, 1, 2, 0, &o).is_err());
        let small_cap = GeneratorOptions { max_log2: 8, ..o };
        match generate_admissible(30, 2, 2, 0, &small_cap) {
            Err(Error::Infeasible { index, .. }) => assert!(index >= 1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn round_xi_examples() {
        assert_eq!(round_xi(&[d("17/16")]), vec![Dyadic::ZERO]);
        let aligned = vec![d("64"), d("32"), d("8")];
        assert_eq!(round_xi(&aligned), aligned);
    }

    #[test]
    fn rounded_sequences_keep_spacing_and_comparability() {
        for seed in 0..60 {
            let s = generate_admissible(16, 3, 2, seed, &GeneratorOptions::default()).unwrap();
            let r = round_xi(&s.xi);
            for (j, x) in r.iter().enumerate() {
                assert!(x.is_multiple_of_pow2(4 - j as i32));
            }
            check_xi_spacing_with(&r, 5).unwrap();
            for a in 0..r.len() {
                for c in a + 1..r.len() {
                    let orig = (s.xi[a] - s.xi[c]).abs();
                    let new = (r[a] - r[c]).abs();
                    assert!(new.mul_pow2(1) >= orig && new <= orig.mul_pow2(1));
                }
            }
            let cert = transport_certificate(&s.certificate, &s.xi, &r, s.certificate.b + 2);
            assert!(cert.verify().is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn beta_classes_partition_the_shell() {
        for j in 0..12usize {
            let pieces: Vec<_> = (0..4u8).map(|b| beta_class(j, b)).collect();
            assert_eq!(pieces[0].0, Dyadic::pow2(-(j as i32)));
            for w in pieces.windows(2) {
                assert_eq!(w[0].1, w[1].0);
            }
            assert_eq!(pieces[3].0, pieces[3].1, "class 3 is empty");
            assert_eq!(pieces[3].1, Dyadic::pow2(2 - j as i32));
            let split = beta_split(j, Dyadic::pow2(-(j as i32)), Dyadic::pow2(2 - j as i32));
            let total = split.iter().fold(Dyadic::ZERO, |acc, (a, c)| acc + (*c - *a));
            assert_eq!(total, Dyadic::pow2(2 - j as i32) - Dyadic::pow2(-(j as i32)));
        }
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.random_range(1..=8usize);
            let mut pts: Vec<Dyadic> = Vec::new();
            while pts.len() < n {
                let x = Dyadic::new(rng.random_range(-64..64), rng.random_range(0..4));
                if !pts.contains(&x) {
                    pts.push(x);
                }
            }
            let d = rng.random_range(0..=3usize);
            let b = rng.random_range(0..=4u32);
            for rule in [PairRule::Symmetric, PairRule::OneSided] {
                let opts = SearchOptions { rule, ..exhaustive() };
                let fast = is_lacunary(&pts, d, b, &opts).unwrap();
                let brute = is_lacunary_brute(&pts, d, b, rule);
                assert_eq!(fast.certificate().is_some(), brute, "{pts:?} d={d} b={b} {rule:?}");
                assert!(!matches!(fast, SearchOutcome::Undecided { .. }));
            }
        }
    }

    #[test]
    fn subsets_need_not_stay_lacunary() {
        let x = parse_list("1, 8, -4, 13, -34, -18, -32, -29").unwrap();
        let opts = exhaustive();
        assert!(is_lacunary(&x, 1, 3, &opts).unwrap().certificate().is_some());
        let y: Vec<Dyadic> = x.iter().copied().filter(|p| *p != d("-18")).collect();
        assert_eq!(is_lacunary(&y, 1, 3, &opts).unwrap(), SearchOutcome::NotLacunary);
        assert!(!is_lacunary_brute(&y, 1, 3, PairRule::Symmetric));
    }

    #[test]
    fn dropping_a_top_level_point_keeps_the_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..=9usize);
            let mut pts: Vec<Dyadic> = Vec::new();
            while pts.len() < n {
                let x = Dyadic::from_int(rng.random_range(-64..64));
                if !pts.contains(&x) {
                    pts.push(x);
                }
            }
            let (dd, b) = (rng.random_range(1..=3usize), rng.random_range(0..=3u32));
            let Some(cert) = is_lacunary(&pts, dd, b, &exhaustive()).unwrap().certificate().cloned() else {
                continue;
            };
            let top = cert.levels.iter().rposition(|l| !l.is_empty()).unwrap();
            if top == 0 {
                continue;
            }
            let mut smaller = cert.clone();
            smaller.levels[top].pop();
            assert!(smaller.verify().is_ok());
        }
    }
}
