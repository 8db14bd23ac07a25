//! Euler schemes for the generalized Feller diffusion
//! `dZ = f(Z) dt + 2 sqrt(Z) dW`, the coupled increment `V^{x,y}`, and the
//! diffusion in a random environment `z(.)`.
//!
//! All solvers use full truncation: the state is clamped at 0 after each
//! step, so paths stay nonnegative and 0 is absorbing.

use alloc::vec::Vec;

// inherent float methods shadow these when std is linked (tests)
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::interaction::InteractionFunction;
use crate::rng::{stream, Replicates};

/// Paths above this level are treated as having exploded and are frozen.
pub const EXPLOSION_LEVEL: f64 = 1e150;

const MAX_STEPS: f64 = 4e9;

/// Values on the uniform grid `0, dt, 2 dt, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub values: Vec<f64>,
    /// First grid time at which the path is 0.
    pub absorbed_at: Option<f64>,
    /// First grid time at which the path exceeded [`EXPLOSION_LEVEL`].
    pub exploded_at: Option<f64>,
}

impl Trajectory {
    /// A path given on a uniform grid, e.g. an externally supplied
    /// environment.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be finite and > 0" });
        }
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "values", reason: "must be finite and >= 0" });
        }
        let absorbed_at = values.iter().position(|&v| v == 0.0).map(|i| i as f64 * dt);
        Ok(Trajectory { dt, values, absorbed_at, exploded_at: None })
    }

    /// Last grid time.
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.dt * i as f64
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectories are nonempty")
    }

    /// Linear interpolation; constant beyond the horizon.
    pub fn value_at(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return self.values[0];
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return self.last();
        }
        let w = pos - i as f64;
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Trapezoidal approximation of `int_0^horizon Z dt`.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        if v.len() < 2 {
            return 0.0;
        }
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        self.dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.time(i), v))
    }
}

/// The environment `z(.)` seen by the diffusion (indexed by time) or by the
/// reflected process (indexed by level).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Environment {
    #[default]
    Zero,
    Constant(f64),
    /// Linearly interpolated path.
    Path(Trajectory),
}

impl Environment {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Environment::Zero => 0.0,
            Environment::Constant(c) => *c,
            Environment::Path(p) => p.value_at(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Environment::Zero) || matches!(self, Environment::Constant(c) if *c == 0.0)
    }

    /// Checks that the environment is defined on `[0, t_max]`.
    pub fn check_covers(&self, t_max: f64) -> Result<()> {
        match self {
            Environment::Zero => Ok(()),
            Environment::Constant(c) if *c >= 0.0 && c.is_finite() => Ok(()),
            Environment::Constant(_) => {
                Err(Error::InvalidParameter { name: "env", reason: "constant must be finite and >= 0" })
            }
            Environment::Path(p) => {
                let covered = p.horizon();
                if covered + 1e-9 * p.dt < t_max {
                    Err(Error::GridMismatch { needed: t_max, covered })
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn step_count(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter { name: "dt", reason: "must be finite and > 0" });
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter { name: "t_max", reason: "must be finite and >= 0" });
    }
    let n = (t_max / dt).round();
    if n > MAX_STEPS {
        return Err(Error::InvalidParameter { name: "dt", reason: "too many steps for the horizon" });
    }
    Ok(n as usize)
}

fn check_start(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain { value: x, domain: "starting point must be finite and >= 0" });
    }
    Ok(())
}

#[inline]
fn euler_step(z: f64, drift: f64, dt: f64, sqrt_dt: f64, xi: f64) -> f64 {
    let next = z + drift * dt + 2.0 * z.sqrt() * sqrt_dt * xi;
    if next > 0.0 {
        next
    } else {
        0.0
    }
}

/// Runs the scheme with drift `drift(k, z)` and reports every grid value to
/// `visit(k, z)`; stops early on absorption, explosion or when `visit`
/// returns `false`.
fn run<R, D, V>(x: f64, n: usize, dt: f64, rng: &mut R, mut drift: D, mut visit: V) -> Result<()>
where
    R: Rng + ?Sized,
    D: FnMut(usize, f64) -> Result<f64>,
    V: FnMut(usize, f64) -> bool,
{
    let sqrt_dt = dt.sqrt();
    let mut z = x;
    if !visit(0, z) {
        return Ok(());
    }
    for k in 0..n {
        if z == 0.0 || z > EXPLOSION_LEVEL {
            return Ok(());
        }
        let xi: f64 = rng.sample(StandardNormal);
        z = euler_step(z, drift(k, z)?, dt, sqrt_dt, xi);
        if !visit(k + 1, z) {
            return Ok(());
        }
    }
    Ok(())
}

fn trajectory_from(dt: f64, n: usize, mut values: Vec<f64>) -> Trajectory {
    let absorbed = values.iter().position(|&v| v == 0.0);
    let exploded = values.iter().position(|&v| v > EXPLOSION_LEVEL);
    // frozen tail after absorption or explosion
    let fill = *values.last().unwrap_or(&0.0);
    values.resize(n + 1, fill);
    Trajectory {
        dt,
        values,
        absorbed_at: absorbed.map(|i| i as f64 * dt),
        exploded_at: exploded.map(|i| i as f64 * dt),
    }
}

/// One path of `Z^x` on `[0, t_max]`.
pub fn solve_feller<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    t_max: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_start(x)?;
    let n = step_count(t_max, dt)?;
    let mut values = Vec::with_capacity(n + 1);
    run(x, n, dt, rng, |_, z| f.value(z), |_, z| {
        values.push(z);
        true
    })?;
    Ok(trajectory_from(dt, n, values))
}

/// `Z^x_t` without storing the path.
pub fn feller_at<R: Rng + ?Sized>(f: &InteractionFunction, x: f64, t: f64, dt: f64, rng: &mut R) -> Result<f64> {
    check_start(x)?;
    let n = step_count(t, dt)?;
    let mut last = x;
    run(x, n, dt, rng, |_, z| f.value(z), |_, z| {
        last = z;
        true
    })?;
    Ok(last)
}

/// `Z^x` together with the increment `V^{x,y}`, driven by independent
/// noises; `Z^y = Z^x + V^{x,y}`.
pub fn solve_coupled<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    y: f64,
    t_max: f64,
    dt: f64,
    rng: &mut R,
) -> Result<(Trajectory, Trajectory)> {
    check_start(x)?;
    if !(y >= x) || !y.is_finite() {
        return Err(Error::InvalidParameter { name: "y", reason: "must be finite and >= x" });
    }
    let n = step_count(t_max, dt)?;
    let sqrt_dt = dt.sqrt();
    let mut zs = Vec::with_capacity(n + 1);
    let mut vs = Vec::with_capacity(n + 1);
    let (mut z, mut v) = (x, y - x);
    zs.push(z);
    vs.push(v);
    for _ in 0..n {
        if (z == 0.0 || z > EXPLOSION_LEVEL) && (v == 0.0 || v > EXPLOSION_LEVEL) {
            break;
        }
        let xi_z: f64 = rng.sample(StandardNormal);
        let xi_v: f64 = rng.sample(StandardNormal);
        let fz = f.value(z)?;
        let drift_v = if v > 0.0 { f.value(z + v)? - fz } else { 0.0 };
        let next_z = if z > 0.0 && z <= EXPLOSION_LEVEL { euler_step(z, fz, dt, sqrt_dt, xi_z) } else { z };
        let next_v = if v > 0.0 && v <= EXPLOSION_LEVEL { euler_step(v, drift_v, dt, sqrt_dt, xi_v) } else { v };
        z = next_z;
        v = next_v;
        zs.push(z);
        vs.push(v);
    }
    Ok((trajectory_from(dt, n, zs), trajectory_from(dt, n, vs)))
}

/// `(Z^x_t, V^{x,y}_t)` without storing the paths.
pub fn coupled_at<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    y: f64,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (z, v) = solve_coupled(f, x, y, t, dt, rng)?;
    Ok((z.last(), v.last()))
}

/// `Z^{x,z}`: drift `f(Z + z(t)) - f(z(t))`. With `env = Zero` and the same
/// generator this is exactly [`solve_feller`].
pub fn solve_environment<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    env: &Environment,
    t_max: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_start(x)?;
    env.check_covers(t_max)?;
    let n = step_count(t_max, dt)?;
    let mut values = Vec::with_capacity(n + 1);
    let drift = |k: usize, z: f64| -> Result<f64> {
        if env.is_zero() {
            return f.value(z);
        }
        let e = env.at(k as f64 * dt);
        Ok(f.value(z + e)? - f.value(e)?)
    };
    run(x, n, dt, rng, drift, |_, z| {
        values.push(z);
        true
    })?;
    Ok(trajectory_from(dt, n, values))
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Independent samples of `Z^x_t`; replicate `i` uses stream `(seed, "diffusion", i)`.
pub fn feller_samples<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    t: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<Vec<f64>> {
    collect(runner.map(replicates, |i| feller_at(f, x, t, dt, &mut stream(seed, "diffusion", i as u64))))
}

/// Independent samples of `(Z^x_t, V^{x,y}_t)`.
#[allow(clippy::too_many_arguments)]
pub fn coupled_samples<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    y: f64,
    t: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<Vec<(f64, f64)>> {
    collect(runner.map(replicates, |i| coupled_at(f, x, y, t, dt, &mut stream(seed, "diffusion.coupled", i as u64))))
}

/// Independent samples of `Z^{x,z}_t`.
#[allow(clippy::too_many_arguments)]
pub fn environment_samples<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    env: &Environment,
    t: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<Vec<f64>> {
    collect(runner.map(replicates, |i| {
        solve_environment(f, x, env, t, dt, &mut stream(seed, "diffusion.environment", i as u64)).map(|p| p.last())
    }))
}

/// Binomial estimate with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::EmptySample);
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        Ok(Proportion {
            successes,
            trials,
            estimate: p,
            standard_error: se,
            ci_low: (p - 1.96 * se).max(0.0),
            ci_high: (p + 1.96 * se).min(1.0),
        })
    }
}

/// Estimate of `P(T_a < T_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstHitEstimate {
    /// Among terminated paths, those that reached `a` first.
    pub lower_first: Proportion,
    /// Paths that hit neither barrier before `t_cap`; excluded from the
    /// estimate.
    pub non_terminated: u64,
}

/// Which barrier a single path reaches first (`None`: neither before `t_cap`).
/// Crossings are detected on the grid, without bridge correction.
pub fn first_exit<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    a: f64,
    b: f64,
    dt: f64,
    t_cap: f64,
    rng: &mut R,
) -> Result<Option<bool>> {
    if !(0.0 <= a && a < x && x < b) || !b.is_finite() {
        return Err(Error::InvalidParameter { name: "barriers", reason: "need 0 <= a < x < b" });
    }
    let n = step_count(t_cap, dt)?;
    let mut outcome = None;
    run(x, n, dt, rng, |_, z| f.value(z), |_, z| {
        if z <= a {
            outcome = Some(true);
        } else if z >= b {
            outcome = Some(false);
        }
        outcome.is_none()
    })?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
pub fn first_hit<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    a: f64,
    b: f64,
    dt: f64,
    t_cap: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<FirstHitEstimate> {
    let outcomes = collect(runner.map(replicates, |i| {
        first_exit(f, x, a, b, dt, t_cap, &mut stream(seed, "diffusion.first_hit", i as u64))
    }))?;
    let lower = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    let done = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    Ok(FirstHitEstimate {
        lower_first: Proportion::new(lower, done)?,
        non_terminated: replicates as u64 - done,
    })
}

/// Extinction time (if before `t_cap`) and `int_0^{min(T_0, t_cap)} Z dt`.
pub fn extinction_run<R: Rng + ?Sized>(
    f: &InteractionFunction,
    x: f64,
    t_cap: f64,
    dt: f64,
    rng: &mut R,
) -> Result<(Option<f64>, f64)> {
    check_start(x)?;
    let n = step_count(t_cap, dt)?;
    let mut prev = x;
    let mut mass = 0.0;
    let mut extinct = None;
    run(x, n, dt, rng, |_, z| f.value(z), |k, z| {
        if k > 0 {
            mass += 0.5 * dt * (prev + z);
        }
        prev = z;
        if z == 0.0 {
            extinct = Some(k as f64 * dt);
        }
        extinct.is_none()
    })?;
    Ok((extinct, mass))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionStats {
    pub extinct: Proportion,
    /// Mean of `int_0^{T_0} Z dt` over the extinct paths (`None` if there
    /// are none).
    pub mean_total_mass: Option<f64>,
    pub total_mass_se: Option<f64>,
}

pub fn extinction_stats<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    t_cap: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<ExtinctionStats> {
    let runs = collect(runner.map(replicates, |i| {
        extinction_run(f, x, t_cap, dt, &mut stream(seed, "diffusion.extinction", i as u64))
    }))?;
    let masses: Vec<f64> = runs.iter().filter(|r| r.0.is_some()).map(|r| r.1).collect();
    let extinct = Proportion::new(masses.len() as u64, replicates as u64)?;
    let (mean, se) = if masses.is_empty() {
        (None, None)
    } else {
        let n = masses.len() as f64;
        let mean = masses.iter().sum::<f64>() / n;
        let se = if masses.len() > 1 {
            let var = masses.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0);
            Some((var / n).sqrt())
        } else {
            None
        };
        (Some(mean), se)
    };
    Ok(ExtinctionStats { extinct, mean_total_mass: mean, total_mass_se: se })
}
