//! Reflected Brownian motion whose drift depends on its own local time,
//!
//! ```text
//! H_s = B_s + 1/2 int_0^s f'(z(H_r) + L_r(H_r)) dr + 1/2 L_s(0),
//! ```
//!
//! and the local-time field `t -> L_{S_x}(t)` at `S_x = inf{s : L_s(0) > x}`,
//! which has the law of the Feller field `t -> Z^x_t`.
//!
//! The scheme is a mirror-reflected Euler step. The local time at 0 is read
//! from the fold amounts, `L(0) += zero_scale * 2 (-H*)^+`; the local time
//! at other levels is the occupation time of level cells of width `dh`
//! divided by `dh`.

use alloc::vec;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked (tests)
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::diffusion::Environment;
use crate::error::{Error, Result};
use crate::interaction::{Classification, InteractionFunction};
use crate::rng::{stream, Replicates};

/// Fold-to-local-time factor before calibration. The mirror compensator
/// `sum 2 (-H*)^+` approximates the symmetric local time of the driving
/// motion, which is half the occupation density of `H` at `0+`.
pub const NOMINAL_ZERO_SCALE: f64 = 2.0;

/// Default `s_cap` in steps.
pub const DEFAULT_CAP_STEPS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct RKParams {
    pub f: InteractionFunction,
    /// Strictly increasing, all > 0.
    pub x_targets: Vec<f64>,
    /// Level-indexed environment `z(.)`; a path environment is extended
    /// by its last value above its horizon.
    pub env: Environment,
    /// Second reflecting barrier `K`.
    pub ceiling: Option<f64>,
    pub ds: f64,
    pub dh: f64,
    /// Maximum simulated time.
    pub s_cap: f64,
    pub zero_scale: f64,
}

impl RKParams {
    pub fn new(f: InteractionFunction, x_targets: Vec<f64>, ds: f64, dh: f64) -> Self {
        RKParams {
            f,
            x_targets,
            env: Environment::Zero,
            ceiling: None,
            ds,
            dh,
            s_cap: DEFAULT_CAP_STEPS * ds,
            zero_scale: NOMINAL_ZERO_SCALE,
        }
    }

    pub fn with_ceiling(mut self, k: f64) -> Self {
        self.ceiling = Some(k);
        self
    }

    pub fn with_env(mut self, env: Environment) -> Self {
        self.env = env;
        self
    }

    pub fn with_s_cap(mut self, s_cap: f64) -> Self {
        self.s_cap = s_cap;
        self
    }

    pub fn with_zero_scale(mut self, c: f64) -> Self {
        self.zero_scale = c;
        self
    }

    /// Parameter checks, including that `f'` is available and that runs
    /// without a ceiling only use subcritical `f` (otherwise `S_x` may be
    /// infinite).
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.ds) {
            return Err(Error::InvalidParameter { name: "ds", reason: "must be finite and > 0" });
        }
        if !positive(self.dh) {
            return Err(Error::InvalidParameter { name: "dh", reason: "must be finite and > 0" });
        }
        if !positive(self.s_cap) {
            return Err(Error::InvalidParameter { name: "s_cap", reason: "must be finite and > 0" });
        }
        if !positive(self.zero_scale) {
            return Err(Error::InvalidParameter { name: "zero_scale", reason: "must be finite and > 0" });
        }
        if self.x_targets.is_empty()
            || !positive(self.x_targets[0])
            || self.x_targets.windows(2).any(|w| !(w[0] < w[1]) || !w[1].is_finite())
        {
            return Err(Error::InvalidParameter { name: "x_targets", reason: "must be nonempty, > 0 and strictly increasing" });
        }
        if let Some(k) = self.ceiling {
            if !positive(k) {
                return Err(Error::InvalidParameter { name: "ceiling", reason: "must be finite and > 0" });
            }
        }
        self.env.check_covers(0.0)?;
        self.f.derivative(0.0)?;
        if self.ceiling.is_none() && self.f.classify(100.0, 1e-6).classification != Classification::Subcritical {
            return Err(Error::InvalidParameter { name: "ceiling", reason: "required unless f is subcritical" });
        }
        Ok(())
    }
}

/// Source of standard normal increments.
pub trait Noise {
    fn standard_normal(&mut self) -> f64;
}

/// Plain draws from a generator.
#[derive(Debug, Clone)]
pub struct Gaussian<R>(pub R);

impl<R: Rng> Noise for Gaussian<R> {
    fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }
}

/// Each value is `(xi_1 + ... + xi_m) / sqrt(m)` for fresh draws: the
/// increment over one coarse step of the Brownian path that a run with step
/// `ds / m` on the same generator sees.
#[derive(Debug, Clone)]
pub struct Aggregated<R> {
    rng: R,
    factor: u32,
    norm: f64,
}

impl<R: Rng> Aggregated<R> {
    pub fn new(rng: R, factor: u32) -> Self {
        let factor = factor.max(1);
        Aggregated { rng, factor, norm: 1.0 / f64::from(factor).sqrt() }
    }
}

impl<R: Rng> Noise for Aggregated<R> {
    fn standard_normal(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..self.factor {
            let xi: f64 = self.rng.sample(StandardNormal);
            s += xi;
        }
        s * self.norm
    }
}

/// Occupation field at `S_x`. Cell `j` covers levels `[j dh, (j+1) dh)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub x: f64,
    pub s_x: f64,
    pub steps: u64,
    pub ds: f64,
    pub dh: f64,
    /// Steps spent in each cell.
    pub occupation: Vec<u64>,
    pub zero_local_time: f64,
}

impl FieldSnapshot {
    pub fn cells(&self) -> usize {
        self.occupation.len()
    }

    /// `L_{S_x}(t_j)`: occupation time of cell `j` divided by `dh`.
    pub fn local_time(&self, j: usize) -> f64 {
        self.occupation.get(j).map_or(0.0, |&c| c as f64 * self.ds / self.dh)
    }

    /// Local time of the cell containing level `t`.
    pub fn at_level(&self, t: f64) -> f64 {
        self.local_time(level_cell(t, self.dh))
    }

    /// `(t_j, L(t_j))` for every visited cell.
    pub fn profile(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.cells()).map(|j| (j as f64 * self.dh, self.local_time(j)))
    }

    /// `sum_j L(t_j) dh`.
    pub fn occupation_integral(&self) -> f64 {
        self.occupation.iter().sum::<u64>() as f64 * self.ds
    }
}

/// Index of the cell containing `t`, tolerant to rounding of `t / dh`.
pub fn level_cell(t: f64, dh: f64) -> usize {
    let pos = t / dh;
    let r = pos.round();
    if (pos - r).abs() < 1e-9 * r.max(1.0) {
        r as usize
    } else {
        pos.floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedRun {
    /// One per target; `None` when `s_cap` was reached first.
    pub snapshots: Vec<Option<FieldSnapshot>>,
    pub steps: u64,
    pub zero_local_time: f64,
    pub ceiling_local_time: f64,
    pub max_height: f64,
}

impl ReflectedRun {
    pub fn s_values(&self) -> Vec<Option<f64>> {
        self.snapshots.iter().map(|s| s.as_ref().map(|s| s.s_x)).collect()
    }

    pub fn truncated(&self) -> Vec<bool> {
        self.snapshots.iter().map(Option::is_none).collect()
    }
}

/// Occupation count at `h`, linearly interpolated between cell centers and
/// constant below the first center.
#[inline]
fn occupation_at(occ: &[u64], h: f64, inv_dh: f64) -> f64 {
    let u = h * inv_dh - 0.5;
    if u <= 0.0 {
        return occ.first().map_or(0.0, |&c| c as f64);
    }
    let j = u as usize;
    let w = u - j as f64;
    let at = |i: usize| occ.get(i).map_or(0.0, |&c| c as f64);
    (1.0 - w) * at(j) + w * at(j + 1)
}

fn drive<N: Noise, V: FnMut(f64)>(params: &RKParams, noise: &mut N, mut visit: V) -> Result<ReflectedRun> {
    params.validate()?;
    let ds = params.ds;
    let sqrt_ds = ds.sqrt();
    let inv_dh = 1.0 / params.dh;
    let per_count = ds / params.dh;
    let max_steps = (params.s_cap / ds).ceil() as u64;
    let env_zero = params.env.is_zero();
    let targets = &params.x_targets;
    let mut snapshots: Vec<Option<FieldSnapshot>> = vec![None; targets.len()];
    let mut occ: Vec<u64> = Vec::new();
    let mut h = 0.0f64;
    let mut l0 = 0.0;
    let mut lk = 0.0;
    let mut max_height = 0.0f64;
    let mut next = 0usize;
    let mut steps = 0u64;
    visit(h);
    while next < targets.len() && steps < max_steps {
        let local = occupation_at(&occ, h, inv_dh) * per_count;
        let z = if env_zero { local } else { params.env.at(h) + local };
        let drift = 0.5 * params.f.derivative(z)?;
        let cell = (h * inv_dh) as usize;
        if cell >= occ.len() {
            occ.resize(cell + 1, 0);
        }
        occ[cell] += 1;
        let mut hs = h + drift * ds + sqrt_ds * noise.standard_normal();
        loop {
            if hs < 0.0 {
                l0 += params.zero_scale * 2.0 * (-hs);
                hs = -hs;
            } else if let Some(k) = params.ceiling.filter(|&k| hs > k) {
                lk += params.zero_scale * 2.0 * (hs - k);
                hs = 2.0 * k - hs;
            } else {
                break;
            }
        }
        h = hs;
        steps += 1;
        max_height = max_height.max(h);
        visit(h);
        while next < targets.len() && l0 > targets[next] {
            snapshots[next] = Some(FieldSnapshot {
                x: targets[next],
                s_x: steps as f64 * ds,
                steps,
                ds,
                dh: params.dh,
                occupation: occ.clone(),
                zero_local_time: l0,
            });
            next += 1;
        }
    }
    Ok(ReflectedRun { snapshots, steps, zero_local_time: l0, ceiling_local_time: lk, max_height })
}

/// One reflected path, stopped at `S_x` for the largest target or at `s_cap`.
pub fn simulate_reflected<R: Rng + ?Sized>(params: &RKParams, rng: &mut R) -> Result<ReflectedRun> {
    drive(params, &mut Gaussian(rng), |_| {})
}

/// As [`simulate_reflected`] with an explicit noise source.
pub fn simulate_reflected_with<N: Noise>(params: &RKParams, noise: &mut N) -> Result<ReflectedRun> {
    drive(params, noise, |_| {})
}

/// As [`simulate_reflected`], also returning `H` at every grid time.
pub fn simulate_reflected_path<R: Rng + ?Sized>(params: &RKParams, rng: &mut R) -> Result<(ReflectedRun, Vec<f64>)> {
    let mut path = Vec::new();
    let run = drive(params, &mut Gaussian(rng), |h| path.push(h))?;
    Ok((run, path))
}

/// Independent runs; replicate `i` uses stream `(seed, "rayknight", i)`.
pub fn ray_knight_field<P: Replicates>(
    params: &RKParams,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<Vec<ReflectedRun>> {
    params.validate()?;
    runner
        .map(replicates, |i| simulate_reflected(params, &mut stream(seed, "rayknight", i as u64)))
        .into_iter()
        .collect()
}

/// `L_{S_x}(t)` for target `target` across runs, skipping truncated runs.
/// Returns the samples and the number of runs skipped.
pub fn field_samples(runs: &[ReflectedRun], target: usize, level: f64) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(runs.len());
    let mut skipped = 0;
    for r in runs {
        match r.snapshots.get(target).and_then(Option::as_ref) {
            Some(s) => out.push(s.at_level(level)),
            None => skipped += 1,
        }
    }
    (out, skipped)
}

/// `|S_x - sum_j L_{S_x}(t_j) dh| / S_x`.
pub fn total_mass_identity(snapshot: &FieldSnapshot) -> f64 {
    (snapshot.s_x - snapshot.occupation_integral()).abs() / snapshot.s_x
}

/// Removes the samples at or above `a` and closes up the gaps.
pub fn excursion_projection(path: &[f64], a: f64) -> Vec<f64> {
    path.iter().copied().filter(|&h| h < a).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub zero_scale: f64,
    pub mean_field_at_zero: f64,
    pub standard_error: f64,
    pub replicates: usize,
}

/// Fixes the fold-to-local-time factor for a given `(ds, dh)`: with
/// `f' = 0` the field just above 0 must have mean `x`. Runs use the nominal
/// factor and a ceiling (which does not affect the field near 0) to keep
/// `S_x` light-tailed.
pub fn calibrate_zero_scale<P: Replicates>(
    ds: f64,
    dh: f64,
    x: f64,
    ceiling: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<Calibration> {
    if replicates < 2 {
        return Err(Error::EmptySample);
    }
    let params = RKParams::new(InteractionFunction::zero(), vec![x], ds, dh).with_ceiling(ceiling);
    params.validate()?;
    let runs: Vec<ReflectedRun> = runner
        .map(replicates, |i| simulate_reflected(&params, &mut stream(seed, "rayknight.calibration", i as u64)))
        .into_iter()
        .collect::<Result<_>>()?;
    let (samples, _) = field_samples(&runs, 0, 0.0);
    if samples.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(Calibration {
        zero_scale: NOMINAL_ZERO_SCALE * mean / x,
        mean_field_at_zero: mean,
        standard_error: (var / n).sqrt(),
        replicates: samples.len(),
    })
}
