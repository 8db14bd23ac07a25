//! Planar genealogical forests, their exploration (contour) paths and local
//! times.
//!
//! Individuals alive at a given time are ordered left to right. A daughter is
//! inserted immediately to the right of her mother, and an individual with
//! `l` living individuals on its left gets extra birth rate
//! `(g(l+1) - g(l))^+` and extra death rate `(g(l+1) - g(l))^-` on top of the
//! natural rates. Summed over the population these are exactly the rates of
//! [`crate::discrete`], so the forest's population size is a copy of that
//! chain.
//!
//! Reading the forest depth-first, left to right, at speed `p` gives a
//! piecewise-linear path whose crossings of level `t` number twice the
//! population alive at time `t`.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::Rng;
use rand_distr::Exp1;

use crate::discrete::{DiscreteParams, InteractionSums, StepPath, Termination};
use crate::error::{Error, Result};
use crate::ostree::OrderStatisticList;

/// Position of an individual in the planar order: the ancestor index
/// followed by the birth ordinal among siblings at each generation.
///
/// Younger siblings sit to the left of older ones (each newborn is placed
/// right next to its mother), and an individual precedes all its
/// descendants.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanarKey(Vec<u32>);

impl PlanarKey {
    pub fn root(index: u32) -> Self {
        PlanarKey(alloc::vec![index])
    }

    pub fn child(&self, ordinal: u32) -> Self {
        let mut v = self.0.clone();
        v.push(ordinal);
        PlanarKey(v)
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    pub fn parent(&self) -> Option<PlanarKey> {
        (self.0.len() > 1).then(|| PlanarKey(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn from_components(c: Vec<u32>) -> Option<Self> {
        (!c.is_empty()).then_some(PlanarKey(c))
    }
}

impl Ord for PlanarKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (i, (a, b)) in self.0.iter().zip(&other.0).enumerate() {
            let ord = if i == 0 { a.cmp(b) } else { b.cmp(a) };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for PlanarKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PlanarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    pub death: f64,
    pub key: PlanarKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarForest {
    pub individuals: Vec<Individual>,
    pub ancestor_count: u64,
    /// Mass denominator `N` of the model that generated the forest.
    pub denominator: u32,
    /// Individuals still alive at `horizon` have their branch cut there.
    pub horizon: f64,
    pub termination: Termination,
}

impl PlanarForest {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    /// `sum_i (death_i - birth_i)`.
    pub fn total_branch_length(&self) -> f64 {
        self.individuals.iter().map(|i| i.death - i.birth).sum()
    }

    /// Number of individuals alive at `t`, i.e. with `birth <= t < death`.
    pub fn alive_at(&self, t: f64) -> u64 {
        self.individuals.iter().filter(|i| i.birth <= t && t < i.death).count() as u64
    }

    /// The population-size path read off the forest.
    pub fn population_path(&self) -> StepPath {
        let mut events: Vec<(f64, i8)> = Vec::with_capacity(2 * self.len());
        for ind in &self.individuals {
            if ind.parent.is_some() {
                events.push((ind.birth, 1));
            }
            if ind.death < self.horizon || self.termination != Termination::Horizon {
                events.push((ind.death, -1));
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut path = StepPath::constant(self.ancestor_count, self.denominator, self.horizon);
        let mut k = self.ancestor_count as i64;
        for (t, d) in events {
            if t >= self.horizon && self.termination == Termination::Horizon {
                break;
            }
            k += i64::from(d);
            path.jump_times.push(t);
            path.counts.push(k as u64);
        }
        path.termination = self.termination;
        path
    }
}

/// Individual-based simulation of the planar forest.
pub fn grow_forest<R: Rng + ?Sized>(params: &DiscreteParams, rng: &mut R) -> Result<PlanarForest> {
    params.validate()?;
    let mut sums = InteractionSums::new(&params.f, params.scale);
    let mut individuals: Vec<Individual> = Vec::new();
    let mut children: Vec<u32> = Vec::new();
    let mut alive: OrderStatisticList<usize> = OrderStatisticList::new();
    for r in 0..params.m {
        individuals.push(Individual {
            id: r as usize,
            parent: None,
            birth: 0.0,
            death: f64::INFINITY,
            key: PlanarKey::root(r as u32),
        });
        children.push(0);
        alive.insert(r as usize, r as usize);
    }
    let lambda = params.lambda;
    let mu = params.mu;
    let mut t = 0.0;
    let mut events = 0u64;
    let termination = loop {
        let k = alive.len() as u64;
        if k == 0 {
            break Termination::Extinct;
        }
        sums.ensure(k)?;
        let kf = k as f64;
        let birth = lambda * kf + sums.plus(k);
        let death = mu * kf + sums.minus(k);
        let total = birth + death;
        if !(total > 0.0) {
            break Termination::Horizon;
        }
        let e: f64 = rng.sample(Exp1);
        let next = t + e / total;
        if next > params.t_max {
            break Termination::Horizon;
        }
        if events == params.max_events {
            break Termination::EventCap;
        }
        t = next;
        events += 1;
        let u = rng.random::<f64>() * total;
        if u < birth {
            // rank r carries weight lambda + (g(r+1) - g(r))^+
            let r = weighted_rank(k, u, |j| lambda * j as f64 + sums.plus(j));
            let mother = alive.get(r);
            let ordinal = children[mother];
            children[mother] += 1;
            let id = individuals.len();
            let key = individuals[mother].key.child(ordinal);
            individuals.push(Individual { id, parent: Some(mother), birth: t, death: f64::INFINITY, key });
            children.push(0);
            alive.insert(r + 1, id);
        } else {
            let r = weighted_rank(k, u - birth, |j| mu * j as f64 + sums.minus(j));
            let id = alive.remove(r);
            individuals[id].death = t;
        }
    };
    let horizon = match termination {
        Termination::Extinct => t,
        Termination::Horizon => params.t_max,
        Termination::EventCap => t,
    };
    for ind in individuals.iter_mut() {
        if ind.death.is_infinite() {
            ind.death = horizon;
        }
    }
    // an individual cut at time 0 (t_max tiny) would have an empty branch
    individuals.retain(|i| i.death > i.birth);
    Ok(PlanarForest {
        individuals,
        ancestor_count: params.m,
        denominator: params.scale,
        horizon,
        termination,
    })
}

/// Smallest rank `r < k` with `cumulative(r + 1) > target`.
fn weighted_rank<C: Fn(u64) -> f64>(k: u64, target: f64, cumulative: C) -> usize {
    let (mut lo, mut hi) = (0u64, k);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if cumulative(mid + 1) > target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo.min(k - 1) as usize
}

/// Continuous piecewise-linear path with slopes `+p` / `-p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPath {
    /// `(s, h)` turning points, including both ends.
    pub vertices: Vec<(f64, f64)>,
    pub slope: f64,
}

impl PolyPath {
    pub fn duration(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.0)
    }

    pub fn max_height(&self) -> f64 {
        self.vertices.iter().map(|v| v.1).fold(0.0, f64::max)
    }

    /// Interior local maxima.
    pub fn local_maxima(&self) -> usize {
        self.vertices
            .windows(3)
            .filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1)
            .count()
    }

    pub fn height_at(&self, s: f64) -> f64 {
        let i = self.vertices.partition_point(|v| v.0 <= s);
        if i == 0 {
            return 0.0;
        }
        if i == self.vertices.len() {
            return self.vertices[i - 1].1;
        }
        let (s0, h0) = self.vertices[i - 1];
        let (_, h1) = self.vertices[i];
        if h1 > h0 {
            h0 + self.slope * (s - s0)
        } else {
            h0 - self.slope * (s - s0)
        }
    }
}

/// Depth-first, left-to-right contour of the forest at speed `p`.
pub fn explore(forest: &PlanarForest, p: f64) -> Result<PolyPath> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter { name: "p", reason: "slope must be finite and > 0" });
    }
    let n = forest.len();
    let mut kids: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    let mut roots: Vec<usize> = Vec::new();
    for (idx, ind) in forest.individuals.iter().enumerate() {
        if ind.id != idx {
            return Err(Error::MalformedForest("ids must equal positions"));
        }
        if !(ind.birth < ind.death) || !ind.death.is_finite() {
            return Err(Error::MalformedForest("every branch needs birth < death < inf"));
        }
        match ind.parent {
            None => {
                if ind.birth != 0.0 || ind.key.depth() != 0 {
                    return Err(Error::MalformedForest("roots are born at 0 with a one-component key"));
                }
                roots.push(idx);
            }
            Some(par) => {
                let mother = forest.individuals.get(par).ok_or(Error::MalformedForest("unknown parent"))?;
                if !(mother.birth < ind.birth && ind.birth < mother.death) {
                    return Err(Error::MalformedForest("daughter born outside her mother's life"));
                }
                if ind.key.parent().as_ref() != Some(&mother.key) {
                    return Err(Error::MalformedForest("planar key does not extend the parent key"));
                }
                kids[par].push(idx);
            }
        }
    }
    let by_key = |a: &usize, b: &usize| forest.individuals[*a].key.cmp(&forest.individuals[*b].key);
    roots.sort_by(by_key);
    if roots.windows(2).any(|w| forest.individuals[w[0]].key == forest.individuals[w[1]].key) {
        return Err(Error::MalformedForest("duplicate root keys"));
    }
    for list in kids.iter_mut() {
        list.sort_by(by_key);
        // left to right means youngest first
        for w in list.windows(2) {
            let (a, b) = (&forest.individuals[w[0]], &forest.individuals[w[1]]);
            if a.key == b.key || !(a.birth > b.birth) {
                return Err(Error::MalformedForest("sibling order inconsistent with birth times"));
            }
        }
    }

    let mut heights: Vec<f64> = alloc::vec![0.0];
    let mut push = |h: f64| {
        let len = heights.len();
        let last = heights[len - 1];
        if h == last {
            return;
        }
        if len >= 2 {
            let prev = heights[len - 2];
            if (last - prev > 0.0) == (h - last > 0.0) {
                heights[len - 1] = h;
                return;
            }
        }
        heights.push(h);
    };
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &root in &roots {
        push(forest.individuals[root].death);
        stack.push((root, 0));
        while let Some(top) = stack.last_mut() {
            let (node, next) = *top;
            if next < kids[node].len() {
                top.1 += 1;
                let c = kids[node][next];
                push(forest.individuals[c].birth);
                push(forest.individuals[c].death);
                stack.push((c, 0));
            } else {
                stack.pop();
                push(forest.individuals[node].birth);
            }
        }
    }
    let mut vertices = Vec::with_capacity(heights.len());
    let mut s = 0.0;
    vertices.push((0.0, heights[0]));
    for w in heights.windows(2) {
        s += (w[1] - w[0]).abs() / p;
        vertices.push((s, w[1]));
    }
    Ok(PolyPath { vertices, slope: p })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Raw,
    /// Multiplied by `p / 2`, which turns crossings into population counts.
    HalfP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeProfile {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    /// Passages of the path through each level before the cut-off time.
    pub crossings: Vec<u64>,
    pub normalization: Normalization,
}

impl LocalTimeProfile {
    /// The same profile multiplied by `p / 2` (computed from the integer
    /// crossing counts, so no rounding is introduced).
    pub fn half_p(&self) -> LocalTimeProfile {
        LocalTimeProfile {
            levels: self.levels.clone(),
            values: self.crossings.iter().map(|&c| c as f64 / 2.0).collect(),
            crossings: self.crossings.clone(),
            normalization: Normalization::HalfP,
        }
    }
}

/// Exact local time of `path` up to time `s` at each of `levels` (which
/// must be nondecreasing): every passage through a level contributes `1/p`.
///
/// Levels equal to a vertex height take the left limit (the right limit at
/// level 0).
pub fn local_time(path: &PolyPath, s: f64, levels: &[f64]) -> Result<LocalTimeProfile> {
    if levels.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter { name: "levels", reason: "must be nondecreasing" });
    }
    if !(s >= 0.0) {
        return Err(Error::InvalidParameter { name: "s", reason: "must be >= 0" });
    }
    let p = path.slope;
    let mut diff = alloc::vec![0i64; levels.len() + 1];
    for w in path.vertices.windows(2) {
        let (s0, h0) = w[0];
        let (s1, h1) = w[1];
        if s0 >= s {
            break;
        }
        // portion of the segment traversed before time s
        let h_end = if s1 <= s {
            h1
        } else if h1 > h0 {
            h0 + p * (s - s0)
        } else {
            h0 - p * (s - s0)
        };
        let (lo, hi) = if h0 < h_end { (h0, h_end) } else { (h_end, h0) };
        let (i0, i1) = covered_levels(levels, lo, hi, s1 <= s || h_end == hi);
        if i0 < i1 {
            diff[i0] += 1;
            diff[i1] -= 1;
        }
    }
    let mut crossings = Vec::with_capacity(levels.len());
    let mut acc = 0i64;
    for d in diff.iter().take(levels.len()) {
        acc += d;
        crossings.push(acc as u64);
    }
    let values = crossings.iter().map(|&c| c as f64 / p).collect();
    Ok(LocalTimeProfile { levels: levels.to_vec(), values, crossings, normalization: Normalization::Raw })
}

/// Index range of `levels` crossed by a segment spanning `[lo, hi]`: levels
/// `t > 0` with `lo < t <= hi`, and level 0 when `lo == 0 < hi`. When the
/// segment was cut before reaching `hi`, the top end is open.
fn covered_levels(levels: &[f64], lo: f64, hi: f64, top_closed: bool) -> (usize, usize) {
    if !(hi > lo) {
        return (0, 0);
    }
    let start = if lo == 0.0 {
        levels.partition_point(|&t| t < 0.0)
    } else {
        levels.partition_point(|&t| t <= lo)
    };
    let end = if top_closed {
        levels.partition_point(|&t| t <= hi)
    } else {
        levels.partition_point(|&t| t < hi)
    };
    (start, end.max(start))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayKnightCheck {
    pub max_discrepancy: f64,
    pub levels_checked: usize,
}

/// Compares the population size read from the forest with `(p/2)` times
/// the local time of its exploration path, at every level strictly between
/// consecutive event heights (and above the top one). Both sides are
/// divided by the mass denominator.
pub fn discrete_ray_knight_check(forest: &PlanarForest, p: f64) -> Result<RayKnightCheck> {
    let path = explore(forest, p)?;
    let mut heights: Vec<f64> = forest
        .individuals
        .iter()
        .flat_map(|i| [i.birth, i.death])
        .collect();
    heights.push(0.0);
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let mut levels: Vec<f64> = heights.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    levels.push(heights.last().copied().unwrap_or(0.0) + 1.0);
    let profile = local_time(&path, path.duration(), &levels)?.half_p();

    let mut births: Vec<f64> = forest.individuals.iter().map(|i| i.birth).collect();
    let mut deaths: Vec<f64> = forest.individuals.iter().map(|i| i.death).collect();
    births.sort_by(f64::total_cmp);
    deaths.sort_by(f64::total_cmp);
    let den = f64::from(forest.denominator);
    let mut max_discrepancy: f64 = 0.0;
    for (t, local) in levels.iter().zip(&profile.values) {
        let alive = births.partition_point(|&b| b <= *t) - deaths.partition_point(|&d| d <= *t);
        let diff = (alive as f64 / den - local / den).abs();
        max_discrepancy = max_discrepancy.max(diff);
    }
    Ok(RayKnightCheck { max_discrepancy, levels_checked: levels.len() })
}
