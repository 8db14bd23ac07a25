//! Exact simulation of the interacting birth-death chain.
//!
//! While the population has `k >= 1` individuals it jumps to `k + 1` at rate
//! `lambda k + sum_{l<=k} (g(l) - g(l-1))^+` and to `k - 1` at rate
//! `mu k + sum_{l<=k} (g(l) - g(l-1))^-`, where `g(k) = N f(k / N)` and `N`
//! is the mass denominator (1 for the unrenormalized chain). Since the two
//! sums telescope, `birth - death = (lambda - mu) k + g(k)`.
//!
//! The renormalized process `Z^{N,x}` is the same chain with `m = floor(N x)`,
//! `lambda = mu = 2N` and every individual carrying mass `1/N`.

use alloc::vec::Vec;

// inherent float methods shadow these when std is linked (tests)
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::interaction::InteractionFunction;

pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;

/// Prefix sums of the positive and negative parts of the increments of
/// `g(k) = N f(k / N)`, extended lazily as the population grows.
#[derive(Debug, Clone)]
pub(crate) struct InteractionSums<'a> {
    f: &'a InteractionFunction,
    scale: u32,
    g: Vec<f64>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl<'a> InteractionSums<'a> {
    pub(crate) fn new(f: &'a InteractionFunction, scale: u32) -> Self {
        InteractionSums { f, scale, g: alloc::vec![0.0], plus: alloc::vec![0.0], minus: alloc::vec![0.0] }
    }

    pub(crate) fn ensure(&mut self, k: u64) -> Result<()> {
        let k = k as usize;
        let n = f64::from(self.scale);
        while self.g.len() <= k {
            let l = self.g.len();
            let gl = n * self.f.value(l as f64 / n)?;
            let d = gl - self.g[l - 1];
            let (p, m) = (self.plus[l - 1], self.minus[l - 1]);
            self.plus.push(if d > 0.0 { p + d } else { p });
            self.minus.push(if d < 0.0 { m - d } else { m });
            self.g.push(gl);
        }
        Ok(())
    }

    /// `sum_{l=1}^{k} (g(l) - g(l-1))^+`; `ensure(k)` must have been called.
    #[inline]
    pub(crate) fn plus(&self, k: u64) -> f64 {
        self.plus[k as usize]
    }

    #[inline]
    pub(crate) fn minus(&self, k: u64) -> f64 {
        self.minus[k as usize]
    }

    #[cfg(test)]
    pub(crate) fn g(&self, k: u64) -> f64 {
        self.g[k as usize]
    }
}

/// Total birth and death rates of the unrenormalized chain at state `k`.
pub fn total_rates(f: &InteractionFunction, lambda: f64, mu: f64, k: u64) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter { name: "k", reason: "rates are defined for k >= 1" });
    }
    let mut sums = InteractionSums::new(f, 1);
    sums.ensure(k)?;
    Ok((lambda * k as f64 + sums.plus(k), mu * k as f64 + sums.minus(k)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteParams {
    pub lambda: f64,
    pub mu: f64,
    pub f: InteractionFunction,
    /// Mass denominator `N`; the interaction enters as `N f(k / N)`.
    pub scale: u32,
    /// Number of ancestors.
    pub m: u64,
    pub t_max: f64,
    pub max_events: u64,
}

impl DiscreteParams {
    pub fn new(lambda: f64, mu: f64, f: InteractionFunction, m: u64, t_max: f64) -> Self {
        DiscreteParams { lambda, mu, f, scale: 1, m, t_max, max_events: DEFAULT_MAX_EVENTS }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda", reason: "must be finite and >= 0" });
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter { name: "mu", reason: "must be finite and >= 0" });
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParameter { name: "t_max", reason: "must be > 0" });
        }
        if self.scale == 0 {
            return Err(Error::InvalidParameter { name: "scale", reason: "must be >= 1" });
        }
        if self.max_events == 0 {
            return Err(Error::InvalidParameter { name: "max_events", reason: "must be >= 1" });
        }
        Ok(())
    }
}

/// Parameters of `Z^{N,x}`: `m = floor(N x)`, `lambda = mu = 2N`, mass `1/N`.
pub fn renormalized_params(x: f64, n: u32, f: InteractionFunction, t_max: f64) -> Result<DiscreteParams> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter { name: "x", reason: "must be finite and >= 0" });
    }
    if n == 0 {
        return Err(Error::InvalidParameter { name: "N", reason: "must be >= 1" });
    }
    let nf = f64::from(n);
    Ok(DiscreteParams {
        lambda: 2.0 * nf,
        mu: 2.0 * nf,
        f,
        scale: n,
        m: (nf * x).floor() as u64,
        t_max,
        max_events: DEFAULT_MAX_EVENTS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached `t_max`.
    Horizon,
    /// Hit the absorbing state 0 before `t_max`.
    Extinct,
    /// Stopped by the event cap before `t_max`; the path is truncated.
    EventCap,
}

/// Piecewise-constant trajectory with values `count / denominator`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    pub denominator: u32,
    pub initial: u64,
    pub jump_times: Vec<f64>,
    /// Count right after each jump.
    pub counts: Vec<u64>,
    pub horizon: f64,
    pub termination: Termination,
}

impl StepPath {
    pub fn constant(count: u64, denominator: u32, horizon: f64) -> Self {
        StepPath {
            denominator,
            initial: count,
            jump_times: Vec::new(),
            counts: Vec::new(),
            horizon,
            termination: if count == 0 { Termination::Extinct } else { Termination::Horizon },
        }
    }

    /// Count at time `t` (right-continuous).
    pub fn count_at(&self, t: f64) -> u64 {
        let i = self.jump_times.partition_point(|&s| s <= t);
        if i == 0 {
            self.initial
        } else {
            self.counts[i - 1]
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.count_at(t) as f64 / f64::from(self.denominator)
    }

    pub fn final_count(&self) -> u64 {
        self.counts.last().copied().unwrap_or(self.initial)
    }

    pub fn events(&self) -> usize {
        self.jump_times.len()
    }

    pub fn is_truncated(&self) -> bool {
        self.termination == Termination::EventCap
    }

    /// `(time, value)` pairs: the initial point followed by one per jump.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let d = f64::from(self.denominator);
        core::iter::once((0.0, self.initial as f64 / d))
            .chain(self.jump_times.iter().zip(&self.counts).map(move |(&t, &c)| (t, c as f64 / d)))
    }
}

fn exp_wait<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// Runs the chain, reporting each jump as `(time, new_count)`.
pub(crate) fn run_population<R, J>(params: &DiscreteParams, rng: &mut R, mut on_jump: J) -> Result<(u64, Termination)>
where
    R: Rng + ?Sized,
    J: FnMut(f64, u64),
{
    params.validate()?;
    let mut sums = InteractionSums::new(&params.f, params.scale);
    let mut k = params.m;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        if k == 0 {
            return Ok((0, Termination::Extinct));
        }
        sums.ensure(k)?;
        let kf = k as f64;
        let birth = params.lambda * kf + sums.plus(k);
        let death = params.mu * kf + sums.minus(k);
        let total = birth + death;
        if !(total > 0.0) {
            return Ok((k, Termination::Horizon));
        }
        let next = t + exp_wait(rng, total);
        if next > params.t_max {
            return Ok((k, Termination::Horizon));
        }
        if events == params.max_events {
            return Ok((k, Termination::EventCap));
        }
        t = next;
        events += 1;
        if rng.random::<f64>() * total < birth {
            k += 1;
        } else {
            k -= 1;
        }
        on_jump(t, k);
    }
}

/// Exact (Gillespie) simulation of `X^m` up to `t_max`, extinction or the
/// event cap, whichever comes first.
pub fn simulate_population<R: Rng + ?Sized>(params: &DiscreteParams, rng: &mut R) -> Result<StepPath> {
    let mut jump_times = Vec::new();
    let mut counts = Vec::new();
    let (_, termination) = run_population(params, rng, |t, k| {
        jump_times.push(t);
        counts.push(k);
    })?;
    Ok(StepPath {
        denominator: params.scale,
        initial: params.m,
        jump_times,
        counts,
        horizon: params.t_max,
        termination,
    })
}

/// Population count at `t_max` without recording the path.
pub fn population_at_horizon<R: Rng + ?Sized>(params: &DiscreteParams, rng: &mut R) -> Result<(u64, Termination)> {
    run_population(params, rng, |_, _| {})
}

/// Simulates `V^{m,n} = X^n - X^m` given a realization of `X^m`.
///
/// Conditionally on the base path, `V` is a time-inhomogeneous chain whose
/// up-rate at state `k` is `lambda k + sum_{l<=k} (g(x+l) - g(x+l-1))^+` and
/// down-rate `mu k + sum_{l<=k} (g(x+l) - g(x+l-1))^-`, with `x` the current
/// base count. Rates are constant between jumps of either process, so each
/// holding time is sampled exactly.
pub fn simulate_increment<R: Rng + ?Sized>(
    params: &DiscreteParams,
    base: &StepPath,
    n_minus_m: u64,
    rng: &mut R,
) -> Result<StepPath> {
    params.validate()?;
    if base.denominator != params.scale {
        return Err(Error::InvalidParameter { name: "base_path", reason: "denominator differs from params.scale" });
    }
    let horizon = params.t_max.min(base.horizon);
    let mut sums = InteractionSums::new(&params.f, params.scale);
    let mut path = StepPath::constant(n_minus_m, params.scale, horizon);
    let mut v = n_minus_m;
    let mut t = 0.0;
    let mut x = base.initial;
    let mut next_base = 0usize;
    let mut events = 0u64;
    loop {
        if v == 0 {
            path.termination = Termination::Extinct;
            break;
        }
        sums.ensure(x + v)?;
        let vf = v as f64;
        let up = params.lambda * vf + (sums.plus(x + v) - sums.plus(x));
        let down = params.mu * vf + (sums.minus(x + v) - sums.minus(x));
        let total = up + down;
        let boundary = base.jump_times.get(next_base).copied().unwrap_or(f64::INFINITY).min(horizon);
        let next = if total > 0.0 { t + exp_wait(rng, total) } else { f64::INFINITY };
        if next > boundary {
            if boundary >= horizon {
                path.termination = Termination::Horizon;
                break;
            }
            t = boundary;
            x = base.counts[next_base];
            next_base += 1;
            continue;
        }
        if events == params.max_events {
            path.termination = Termination::EventCap;
            break;
        }
        events += 1;
        t = next;
        if rng.random::<f64>() * total < up {
            v += 1;
        } else {
            v -= 1;
        }
        path.jump_times.push(t);
        path.counts.push(v);
    }
    Ok(path)
}

/// Predictable and realized brackets of the martingale part of `Z^{N,x}`
/// on a uniform time grid.
///
/// `predictable` is `int_0^t (4 Z_r + ||f||_{N,0,Z_r} / N) dr`, which equals
/// the integrated total jump rate divided by `N^2`; `realized` is the number
/// of jumps divided by `N^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleLedger {
    pub times: Vec<f64>,
    pub predictable: Vec<f64>,
    pub realized: Vec<f64>,
}

/// `Z^{N,x}` with its martingale ledger sampled at `ledger_points + 1`
/// equally spaced times in `[0, t_max]`.
pub fn simulate_renormalized<R: Rng + ?Sized>(
    x: f64,
    n: u32,
    f: &InteractionFunction,
    t_max: f64,
    ledger_points: usize,
    rng: &mut R,
) -> Result<(StepPath, MartingaleLedger)> {
    let params = renormalized_params(x, n, f.clone(), t_max)?;
    params.validate()?;
    let ledger_points = ledger_points.max(1);
    let n2 = f64::from(n) * f64::from(n);
    let grid: Vec<f64> = (0..=ledger_points).map(|i| t_max * i as f64 / ledger_points as f64).collect();
    let mut ledger = MartingaleLedger {
        times: grid.clone(),
        predictable: Vec::with_capacity(grid.len()),
        realized: Vec::with_capacity(grid.len()),
    };
    let mut path = StepPath::constant(params.m, n, t_max);
    let mut sums = InteractionSums::new(&params.f, n);
    let mut k = params.m;
    let mut t = 0.0;
    let mut predictable = 0.0;
    let mut events = 0u64;
    let mut next_grid = 0usize;
    loop {
        sums.ensure(k)?;
        let kf = k as f64;
        let birth = params.lambda * kf + sums.plus(k);
        let death = params.mu * kf + sums.minus(k);
        let total = birth + death;
        let next = if k > 0 && total > 0.0 { t + exp_wait(rng, total) } else { f64::INFINITY };
        let capped = next <= t_max && events == params.max_events;
        if !capped {
            while next_grid < grid.len() && grid[next_grid] < next {
                let g = grid[next_grid];
                ledger.predictable.push(predictable + total / n2 * (g - t));
                ledger.realized.push(events as f64 / n2);
                next_grid += 1;
            }
        }
        if capped {
            path.termination = Termination::EventCap;
            break;
        }
        if next > t_max {
            path.termination = if k == 0 { Termination::Extinct } else { Termination::Horizon };
            break;
        }
        predictable += total / n2 * (next - t);
        t = next;
        events += 1;
        if rng.random::<f64>() * total < birth {
            k += 1;
        } else {
            k -= 1;
        }
        path.jump_times.push(t);
        path.counts.push(k);
    }
    Ok((path, ledger))
}

/// Joint realization of `(Z^{N,x}, V^{N,x,y})`; `Z^{N,y} = Z^{N,x} + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub lower: StepPath,
    pub increment: StepPath,
}

impl CoupledPair {
    pub fn upper_count_at(&self, t: f64) -> u64 {
        self.lower.count_at(t) + self.increment.count_at(t)
    }

    pub fn upper_value_at(&self, t: f64) -> f64 {
        self.upper_count_at(t) as f64 / f64::from(self.lower.denominator)
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_coupled<R, J>(
    x: f64,
    y: f64,
    n: u32,
    f: &InteractionFunction,
    t_max: f64,
    max_events: u64,
    rng: &mut R,
    mut on_jump: J,
) -> Result<(u64, u64, Termination)>
where
    R: Rng + ?Sized,
    J: FnMut(f64, bool, u64),
{
    if !(y >= x) {
        return Err(Error::InvalidParameter { name: "y", reason: "need x <= y" });
    }
    let lower = renormalized_params(x, n, f.clone(), t_max)?;
    lower.validate()?;
    let upper_m = (f64::from(n) * y).floor() as u64;
    let rate = lower.lambda;
    let mut sums = InteractionSums::new(f, n);
    let (mut i, mut j) = (lower.m, upper_m - lower.m);
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        if i + j == 0 {
            return Ok((0, 0, Termination::Extinct));
        }
        sums.ensure(i + j)?;
        let (fi, fj) = (i as f64, j as f64);
        let z_up = rate * fi + sums.plus(i);
        let z_down = rate * fi + sums.minus(i);
        let v_up = rate * fj + (sums.plus(i + j) - sums.plus(i));
        let v_down = rate * fj + (sums.minus(i + j) - sums.minus(i));
        let total = z_up + z_down + v_up + v_down;
        let next = t + exp_wait(rng, total);
        if next > t_max {
            return Ok((i, j, Termination::Horizon));
        }
        if events == max_events {
            return Ok((i, j, Termination::EventCap));
        }
        t = next;
        events += 1;
        let u = rng.random::<f64>() * total;
        if u < z_up {
            i += 1;
            on_jump(t, true, i);
        } else if u < z_up + z_down {
            i -= 1;
            on_jump(t, true, i);
        } else if u < z_up + z_down + v_up {
            j += 1;
            on_jump(t, false, j);
        } else {
            j -= 1;
            on_jump(t, false, j);
        }
    }
}

/// Simulates the pair through its four jump channels: `Z` up/down at rates
/// `2N i + sum_{k<=i} (g(k)-g(k-1))^±`, `V` up/down at rates
/// `2N j + sum_{k<=j} (g(i+k)-g(i+k-1))^±`. The components never jump
/// together and `V >= 0`.
pub fn simulate_coupled_pair<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    n: u32,
    f: &InteractionFunction,
    t_max: f64,
    rng: &mut R,
) -> Result<CoupledPair> {
    let nf = f64::from(n);
    let m_lower = (nf * x).floor() as u64;
    let m_upper = (nf * y).floor() as u64;
    let mut lower = StepPath::constant(m_lower, n, t_max);
    let mut increment = StepPath::constant(m_upper.saturating_sub(m_lower), n, t_max);
    let (i, j, termination) = run_coupled(x, y, n, f, t_max, DEFAULT_MAX_EVENTS, rng, |t, is_lower, c| {
        let p = if is_lower { &mut lower } else { &mut increment };
        p.jump_times.push(t);
        p.counts.push(c);
    })?;
    let status = |c: u64| match termination {
        Termination::EventCap => Termination::EventCap,
        _ if c == 0 => Termination::Extinct,
        _ => Termination::Horizon,
    };
    lower.termination = status(i);
    increment.termination = status(j);
    Ok(CoupledPair { lower, increment })
}

/// Counts `(Z^{N,x}_T, V^{N,x,y}_T)` at `T = t_max` without recording paths.
pub fn coupled_at_horizon<R: Rng + ?Sized>(
    x: f64,
    y: f64,
    n: u32,
    f: &InteractionFunction,
    t_max: f64,
    rng: &mut R,
) -> Result<(u64, u64, Termination)> {
    run_coupled(x, y, n, f, t_max, DEFAULT_MAX_EVENTS, rng, |_, _, _| {})
}
