//! Config-driven experiments. Each run validates everything up front (a
//! usage error writes nothing), then writes its CSV/JSON artifacts and a
//! `manifest.json` into the output directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use genfeller_core::analysis::{compare, convergence_experiment, moment_report, Verdict};
use genfeller_core::diffusion::{
    extinction_stats, first_hit, solve_coupled, solve_environment, Environment, Trajectory,
};
use genfeller_core::discrete::{
    population_at_horizon, renormalized_params, simulate_population, simulate_renormalized, DiscreteParams,
    Termination, DEFAULT_MAX_EVENTS,
};
use genfeller_core::forest::{discrete_ray_knight_check, explore, grow_forest, local_time};
use genfeller_core::interaction::{Classification, Criterion, LambdaEstimate};
use genfeller_core::rayknight::{
    calibrate_zero_scale, field_samples, level_cell, ray_knight_field, total_mass_identity, RKParams, NOMINAL_ZERO_SCALE,
};
use genfeller_core::rng::{derive_seed, stream};
use genfeller_core::{InteractionFunction, Replicates};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, UsageError};
use crate::io::{num, Artifacts};
use crate::parallel::Parallel;

pub const MANIFEST: &str = "manifest.json";

/// Allowance for the grid-detection bias of first-hit estimates.
const FIRST_HIT_BIAS: f64 = 0.02;
/// Relative tolerance of the occupation-time identity on completed runs.
const MASS_TOLERANCE: f64 = 1e-9;
const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub replicates_override: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: &'static str,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub verdict: &'static str,
    /// Set when the run stopped with an error after writing some artifacts.
    pub partial: bool,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    pub summary: Value,
}

#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub dir: PathBuf,
    pub manifest: Manifest,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Classify {
        f: InteractionFunction,
        tail_limit: f64,
        tolerance: f64,
        grid_max: f64,
        grid_step: f64,
        expect: Option<Classification>,
    },
    Discrete {
        params: DiscreteParams,
        replicates: usize,
    },
    Renormalized {
        f: InteractionFunction,
        x: f64,
        n: u32,
        t_max: f64,
        replicates: usize,
    },
    Forest {
        params: DiscreteParams,
        p: f64,
    },
    Diffusion {
        f: InteractionFunction,
        x: f64,
        y: Option<f64>,
        env: Environment,
        t_max: f64,
        dt: f64,
        replicates: usize,
        barriers: Option<(f64, f64)>,
        t_cap: Option<f64>,
    },
    Rayknight {
        params: RKParams,
        replicates: usize,
        calibration: Option<usize>,
        level: f64,
        dt: f64,
        threshold: Option<f64>,
    },
    Convergence {
        f: InteractionFunction,
        x: f64,
        t: f64,
        n_list: Vec<u32>,
        dt: f64,
        replicates: usize,
        threshold: Option<f64>,
    },
}

fn positive(name: &'static str, v: f64) -> Result<f64, UsageError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(UsageError::Config(format!("params.{name} must be finite and > 0, got {v}")))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<f64, UsageError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(UsageError::Config(format!("params.{name} must be finite and >= 0, got {v}")))
    }
}

fn parse_classification(s: &str) -> Result<Classification, UsageError> {
    match s.to_ascii_lowercase().as_str() {
        "subcritical" => Ok(Classification::Subcritical),
        "supercritical" => Ok(Classification::Supercritical),
        "inconclusive" => Ok(Classification::Inconclusive),
        other => Err(UsageError::Config(format!("params.expect: unknown classification {other:?}"))),
    }
}

fn prepare(exp: Experiment, cfg: &ExperimentConfig, base: &Path) -> Result<Plan, UsageError> {
    let f = cfg.interaction.build(base)?;
    let p = &cfg.params;
    let replicates = p.replicates.unwrap_or(1);
    if replicates == 0 {
        return Err(UsageError::Config("params.replicates must be >= 1".into()));
    }
    let plan = match exp {
        Experiment::Classify => {
            let tail_limit = p.tail_limit.unwrap_or(100.0);
            if tail_limit.is_nan() || tail_limit < 10.0 {
                return Err(UsageError::Config("params.tail_limit must be >= 10".into()));
            }
            Plan::Classify {
                f,
                tail_limit,
                tolerance: positive("tolerance", p.tolerance.unwrap_or(1e-6))?,
                grid_max: positive("grid_max", p.grid_max.unwrap_or(10.0))?,
                grid_step: positive("grid_step", p.grid_step.unwrap_or(0.01))?,
                expect: p.expect.as_deref().map(parse_classification).transpose()?,
            }
        }
        Experiment::Discrete | Experiment::Forest => {
            let mut params = DiscreteParams::new(
                p.lambda.unwrap_or(1.0),
                p.mu.unwrap_or(1.0),
                f,
                p.m.unwrap_or(if exp == Experiment::Forest { 5 } else { 1 }),
                p.t_max.unwrap_or(if exp == Experiment::Forest { 5.0 } else { 1.0 }),
            );
            params.max_events = p.max_events.unwrap_or(DEFAULT_MAX_EVENTS);
            params.validate()?;
            if exp == Experiment::Forest {
                Plan::Forest { params, p: positive("p", p.p.unwrap_or(2.0))? }
            } else {
                Plan::Discrete { params, replicates }
            }
        }
        Experiment::Renormalized => {
            let x = nonnegative("x", p.x.unwrap_or(1.0))?;
            let n = p.n.unwrap_or(10);
            let t_max = p.t_max.unwrap_or(1.0);
            renormalized_params(x, n, f.clone(), t_max)?.validate()?;
            Plan::Renormalized { f, x, n, t_max, replicates }
        }
        Experiment::Diffusion => {
            let x = nonnegative("x", p.x.unwrap_or(1.0))?;
            let y = p.y.map(|y| nonnegative("y", y)).transpose()?;
            if let Some(y) = y {
                if y < x {
                    return Err(UsageError::Config("params.y must be >= params.x".into()));
                }
            }
            let env = match p.env {
                Some(z) => Environment::Constant(nonnegative("env", z)?),
                None => Environment::Zero,
            };
            let barriers = match (p.a, p.b) {
                (Some(a), Some(b)) => {
                    if !(0.0 <= a && a < x && x < b) {
                        return Err(UsageError::Config("barriers need 0 <= a < x < b".into()));
                    }
                    Some((a, b))
                }
                (None, None) => None,
                _ => return Err(UsageError::Config("params.a and params.b go together".into())),
            };
            Plan::Diffusion {
                f,
                x,
                y,
                env,
                t_max: positive("t_max", p.t_max.unwrap_or(1.0))?,
                dt: positive("dt", p.dt.unwrap_or(1e-3))?,
                replicates,
                barriers,
                t_cap: p.t_cap.map(|t| positive("t_cap", t)).transpose()?,
            }
        }
        Experiment::Rayknight => {
            let ds = positive("ds", p.ds.unwrap_or(1e-3))?;
            let mut params = RKParams::new(f, p.x_targets.clone().unwrap_or_else(|| vec![1.0]), ds, p.dh.unwrap_or(0.02));
            if let Some(k) = p.ceiling {
                params = params.with_ceiling(k);
            }
            if let Some(z) = p.env {
                params = params.with_env(Environment::Constant(z));
            }
            if let Some(s) = p.s_cap {
                params = params.with_s_cap(s);
            }
            if let Some(c) = p.zero_scale {
                params = params.with_zero_scale(c);
            }
            params.validate()?;
            let calibrate = p.calibrate.unwrap_or(p.zero_scale.is_none());
            let calibration = if calibrate {
                let reps = p.calibration_replicates.unwrap_or(1000);
                if reps < 2 {
                    return Err(UsageError::Config("params.calibration_replicates must be >= 2".into()));
                }
                Some(reps)
            } else {
                None
            };
            Plan::Rayknight {
                params,
                replicates: p.replicates.unwrap_or(100),
                calibration,
                level: nonnegative("level", p.level.unwrap_or(0.5))?,
                dt: positive("dt", p.dt.unwrap_or(1e-3))?,
                threshold: p.threshold.map(|t| positive("threshold", t)).transpose()?,
            }
        }
        Experiment::Convergence => {
            let n_list = p.n_list.clone().unwrap_or_else(|| vec![5, 20, 80]);
            if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
                return Err(UsageError::Config("params.n_list must be increasing and >= 1".into()));
            }
            Plan::Convergence {
                f,
                x: nonnegative("x", p.x.unwrap_or(1.0))?,
                t: positive("t", p.t.unwrap_or(1.0))?,
                n_list,
                dt: positive("dt", p.dt.unwrap_or(1e-3))?,
                replicates: p.replicates.unwrap_or(1000).max(2),
                threshold: p.threshold.map(|t| positive("threshold", t)).transpose()?,
            }
        }
    };
    Ok(plan)
}

/// Runs `exp` with `cfg`; `base` resolves relative paths in the config.
pub fn run_experiment(
    exp: Experiment,
    mut cfg: ExperimentConfig,
    base: &Path,
    opts: &RunOptions,
) -> Result<Outcome, CliError> {
    if let Some(s) = opts.seed {
        cfg.master_seed = s;
    }
    if let Some(r) = opts.replicates_override {
        cfg.params.replicates = Some(r);
    }
    cfg.experiment = Some(exp);
    let out = opts
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| if o.is_absolute() { o.clone() } else { base.join(o) }))
        .unwrap_or_else(|| PathBuf::from("out").join(exp.name()));
    cfg.output = Some(out.clone());
    let plan = prepare(exp, &cfg, base)?;

    let runner = Parallel::new(opts.threads);
    let mut artifacts = Artifacts::create(&out)?;
    let start = Instant::now();
    let result = execute(&plan, cfg.master_seed, &runner, &mut artifacts);
    let (verdict, summary, error) = match result {
        Ok((v, s)) => (v, s, None),
        Err(e) => (Verdict::Fail, Value::Null, Some(e.to_string())),
    };
    let manifest = Manifest {
        experiment: exp.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        config: cfg,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        verdict: verdict_name(verdict),
        partial: error.is_some(),
        error,
        artifacts: artifacts.files().to_vec(),
        summary,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out.join(MANIFEST), text + "\n")?;
    Ok(Outcome { verdict, dir: out, manifest })
}

fn execute<P: Replicates>(
    plan: &Plan,
    seed: u64,
    runner: &P,
    art: &mut Artifacts,
) -> Result<(Verdict, Value), CliError> {
    match plan {
        Plan::Classify { f, tail_limit, tolerance, grid_max, grid_step, expect } => {
            classify(f, *tail_limit, *tolerance, *grid_max, *grid_step, *expect, art)
        }
        Plan::Discrete { params, replicates } => discrete(params, *replicates, seed, runner, art),
        Plan::Renormalized { f, x, n, t_max, replicates } => {
            renormalized(f, *x, *n, *t_max, *replicates, seed, runner, art)
        }
        Plan::Forest { params, p } => forest(params, *p, seed, art),
        Plan::Diffusion { .. } => diffusion(plan, seed, runner, art),
        Plan::Rayknight { .. } => rayknight(plan, seed, runner, art),
        Plan::Convergence { f, x, t, n_list, dt, replicates, threshold } => {
            let table = convergence_experiment(f, *x, *t, n_list, *dt, *replicates, seed, runner)?;
            art.csv(
                "convergence.csv",
                &["n", "mean", "variance", "ks_vs_limit", "mean_diff", "mean_diff_se"],
                table.rows.iter().map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.mean),
                        num(r.variance),
                        num(r.ks_vs_limit),
                        num(r.mean_diff),
                        num(r.mean_diff_se),
                    ]
                }),
            )?;
            let last = table.rows.last().map_or(1.0, |r| r.ks_vs_limit);
            let ok = table.decreasing() && threshold.is_none_or(|th| last < th);
            let summary = json!({
                "decreasing": table.decreasing(),
                "last_ks": last,
                "threshold": threshold,
                "limit_mean": table.limit.mean,
            });
            Ok((Verdict::from_bool(ok), summary))
        }
    }
}

fn classify(
    f: &InteractionFunction,
    tail_limit: f64,
    tolerance: f64,
    grid_max: f64,
    grid_step: f64,
    expect: Option<Classification>,
    art: &mut Artifacts,
) -> Result<(Verdict, Value), CliError> {
    let report = f.classify(tail_limit, tolerance);
    let hyp = f.validate_hypotheses(grid_max, grid_step);
    let lambda = match report.lambda_estimate {
        LambdaEstimate::Infinite => json!("infinite"),
        LambdaEstimate::Finite(v) => json!(v),
        LambdaEstimate::Undetermined(v) => json!({ "partial": v }),
    };
    let criterion = match report.criterion {
        Criterion::BoundedByTwo { z0 } => json!({ "bounded_by_two": { "z0": z0 } }),
        Criterion::AboveTwo { z0, delta } => json!({ "above_two": { "z0": z0, "delta": delta } }),
        Criterion::DivergentIntegral => json!("divergent_integral"),
        Criterion::ConvergentIntegral => json!("convergent_integral"),
        Criterion::Undecided => json!("undecided"),
    };
    let classification = format!("{:?}", report.classification);
    let summary = json!({
        "classification": classification,
        "lambda": lambda,
        "criterion": criterion,
        "upper_limit_used": report.upper_limit_used,
        "quadrature_tolerance": report.quadrature_tolerance,
        "hypotheses": {
            "a": hyp.a,
            "b": hyp.b,
            "beta_witness": if hyp.beta_witness.is_finite() { json!(hyp.beta_witness) } else { json!(null) },
            "derivative_max": hyp.derivative_max,
        },
    });
    art.json("classification.json", &summary)?;
    // scale function on [0, 5] where the quadrature is cheap
    let mut rows = Vec::new();
    for i in 0..=100 {
        let z = 0.05 * f64::from(i);
        if z > f.max_arg() {
            break;
        }
        rows.push(vec![num(z), num(f.scale_function(z)?)]);
    }
    art.csv("scale.csv", &["z", "scale"], rows)?;
    let ok = expect.is_none_or(|e| e == report.classification);
    Ok((Verdict::from_bool(ok), summary))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Horizon => "horizon",
        Termination::Extinct => "extinct",
        Termination::EventCap => "event_cap",
    }
}

fn discrete<P: Replicates>(
    params: &DiscreteParams,
    replicates: usize,
    seed: u64,
    runner: &P,
    art: &mut Artifacts,
) -> Result<(Verdict, Value), CliError> {
    let path = simulate_population(params, &mut stream(seed, "discrete.path", 0))?;
    art.csv("path.csv", &["t", "count"], path.points().map(|(t, v)| vec![num(t), num(v)]))?;
    let finals: Vec<(u64, Termination)> = runner
        .map(replicates, |i| population_at_horizon(params, &mut stream(seed, "discrete", i as u64)))
        .into_iter()
        .collect::<Result<_, _>>()?;
    art.csv(
        "finals.csv",
        &["replicate", "count", "termination"],
        finals
            .iter()
            .enumerate()
            .map(|(i, (k, t))| vec![i.to_string(), k.to_string(), termination_name(*t).to_string()]),
    )?;
    let capped = finals.iter().filter(|f| f.1 == Termination::EventCap).count();
    let values: Vec<f64> = finals.iter().map(|f| f.0 as f64).collect();
    let summary = json!({
        "replicates": replicates,
        "mean": values.iter().sum::<f64>() / values.len() as f64,
        "moments": moment_report(&values).ok().map(|m| json!({"mean": m.mean, "variance": m.variance, "se": m.standard_error})),
        "extinct": finals.iter().filter(|f| f.1 == Termination::Extinct).count(),
        "event_cap": capped,
    });
    Ok((Verdict::from_bool(capped == 0), summary))
}

#[allow(clippy::too_many_arguments)]
fn renormalized<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    n: u32,
    t_max: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
    art: &mut Artifacts,
) -> Result<(Verdict, Value), CliError> {
    let (path, ledger) = simulate_renormalized(x, n, f, t_max, 20, &mut stream(seed, "renormalized.path", 0))?;
    art.csv("path.csv", &["t", "value"], path.points().map(|(t, v)| vec![num(t), num(v)]))?;
    art.csv(
        "ledger.csv",
        &["t", "predictable", "realized"],
        (0..ledger.times.len()).map(|i| vec![num(ledger.times[i]), num(ledger.predictable[i]), num(ledger.realized[i])]),
    )?;
    let finals: Vec<(f64, f64, f64, bool)> = runner
        .map(replicates, |i| {
            simulate_renormalized(x, n, f, t_max, 1, &mut stream(seed, "renormalized", i as u64)).map(|(p, l)| {
                let last = l.times.len() - 1;
                (p.value_at(t_max), l.predictable[last], l.realized[last], p.termination == Termination::EventCap)
            })
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    art.csv(
        "finals.csv",
        &["replicate", "value", "predictable", "realized"],
        finals.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(r.0), num(r.1), num(r.2)]),
    )?;
    let capped = finals.iter().filter(|r| r.3).count();
    let mean = |g: fn(&(f64, f64, f64, bool)) -> f64| finals.iter().map(g).sum::<f64>() / finals.len() as f64;
    let summary = json!({
        "replicates": replicates,
        "mean_value": mean(|r| r.0),
        "mean_predictable": mean(|r| r.1),
        "mean_realized": mean(|r| r.2),
        "event_cap": capped,
    });
    Ok((Verdict::from_bool(capped == 0), summary))
}

fn forest(params: &DiscreteParams, p: f64, seed: u64, art: &mut Artifacts) -> Result<(Verdict, Value), CliError> {
    let forest = grow_forest(params, &mut stream(seed, "forest", 0))?;
    art.csv(
        "forest.csv",
        &["id", "parent_id", "birth_time", "death_time", "planar_key"],
        forest.individuals.iter().map(|i| {
            vec![
                i.id.to_string(),
                i.parent.map_or(String::new(), |p| p.to_string()),
                num(i.birth),
                num(i.death),
                i.key.to_string(),
            ]
        }),
    )?;
    let path = explore(&forest, p)?;
    art.csv("exploration.csv", &["s", "h"], path.vertices.iter().map(|(s, h)| vec![num(*s), num(*h)]))?;
    let check = discrete_ray_knight_check(&forest, p)?;
    // local time on a level grid through the midpoints of 100 slices
    let top = path.max_height();
    let levels: Vec<f64> = if top > 0.0 { (0..100).map(|j| top * (j as f64 + 0.5) / 100.0).collect() } else { vec![] };
    let lt = local_time(&path, path.duration(), &levels)?.half_p();
    art.csv(
        "local_time.csv",
        &["level", "half_p_local_time", "alive"],
        levels.iter().zip(&lt.values).map(|(t, v)| vec![num(*t), num(*v), forest.alive_at(*t).to_string()]),
    )?;
    let summary = json!({
        "individuals": forest.len(),
        "ancestors": forest.ancestor_count,
        "truncated_at_horizon": forest.termination == Termination::Horizon,
        "duration": path.duration(),
        "local_maxima": path.local_maxima(),
        "max_discrepancy": check.max_discrepancy,
        "levels_checked": check.levels_checked,
    });
    Ok((Verdict::from_bool(check.max_discrepancy == 0.0), summary))
}

fn diffusion<P: Replicates>(plan: &Plan, seed: u64, runner: &P, art: &mut Artifacts) -> Result<(Verdict, Value), CliError> {
    let Plan::Diffusion { f, x, y, env, t_max, dt, replicates, barriers, t_cap } = plan else { unreachable!() };
    let (x, t_max, dt, replicates) = (*x, *t_max, *dt, *replicates);
    let mut summary = serde_json::Map::new();
    let mut ok = true;
    match y {
        Some(y) => {
            let (z, v) = solve_coupled(f, x, *y, t_max, dt, &mut stream(seed, "diffusion.path", 0))?;
            art.csv(
                "trajectory.csv",
                &["t", "value", "increment"],
                z.points().zip(&v.values).map(|((t, a), b)| vec![num(t), num(a), num(*b)]),
            )?;
            let finals: Vec<(f64, f64)> = runner
                .map(replicates, |i| {
                    solve_coupled(f, x, *y, t_max, dt, &mut stream(seed, "diffusion.coupled", i as u64))
                        .map(|(z, v)| (z.last(), v.last()))
                })
                .into_iter()
                .collect::<Result<_, _>>()?;
            art.csv(
                "finals.csv",
                &["replicate", "value", "increment"],
                finals.iter().enumerate().map(|(i, r)| vec![i.to_string(), num(r.0), num(r.1)]),
            )?;
            let upper: Vec<f64> = finals.iter().map(|r| r.0 + r.1).collect();
            summary.insert("mean_upper".into(), json!(upper.iter().sum::<f64>() / upper.len() as f64));
        }
        None => {
            let path = solve_environment(f, x, env, t_max, dt, &mut stream(seed, "diffusion.path", 0))?;
            art.csv("trajectory.csv", &["t", "value"], path.points().map(|(t, v)| vec![num(t), num(v)]))?;
            let finals: Vec<f64> = runner
                .map(replicates, |i| {
                    solve_environment(f, x, env, t_max, dt, &mut stream(seed, "diffusion", i as u64)).map(|p| p.last())
                })
                .into_iter()
                .collect::<Result<_, _>>()?;
            art.csv(
                "finals.csv",
                &["replicate", "value"],
                finals.iter().enumerate().map(|(i, v)| vec![i.to_string(), num(*v)]),
            )?;
            if let Ok(m) = moment_report(&finals) {
                summary.insert("mean".into(), json!(m.mean));
                summary.insert("se".into(), json!(m.standard_error));
            }
        }
    }
    if let Some((a, b)) = barriers {
        let cap = t_cap.unwrap_or(100.0);
        let est = first_hit(f, x, *a, *b, dt, cap, replicates, derive_seed(seed, "first_hit"), runner)?;
        let p = est.lower_first;
        let exact = if env.is_zero() { Some(f.hitting_probability(x, *a, *b)?) } else { None };
        let within = exact.map(|e| (p.estimate - e).abs() <= 3.0 * p.standard_error + FIRST_HIT_BIAS);
        ok &= within.unwrap_or(true);
        let report = json!({
            "estimate": p.estimate,
            "standard_error": p.standard_error,
            "ci": [p.ci_low, p.ci_high],
            "terminated": p.trials,
            "non_terminated": est.non_terminated,
            "scale_function_value": exact,
            "within_allowance": within,
        });
        art.json("first_hit.json", &report)?;
        summary.insert("first_hit".into(), report);
    } else if let Some(cap) = t_cap {
        let stats = extinction_stats(f, x, *cap, dt, replicates, derive_seed(seed, "extinction"), runner)?;
        let report = json!({
            "extinct_fraction": stats.extinct.estimate,
            "ci": [stats.extinct.ci_low, stats.extinct.ci_high],
            "mean_total_mass": stats.mean_total_mass,
            "total_mass_se": stats.total_mass_se,
            "t_cap": cap,
        });
        art.json("extinction.json", &report)?;
        summary.insert("extinction".into(), report);
    }
    Ok((Verdict::from_bool(ok), Value::Object(summary)))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let w = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - w) + sorted[i + 1] * w
    } else {
        sorted[i]
    }
}

fn rayknight<P: Replicates>(plan: &Plan, seed: u64, runner: &P, art: &mut Artifacts) -> Result<(Verdict, Value), CliError> {
    let Plan::Rayknight { params, replicates, calibration, level, dt, threshold } = plan else { unreachable!() };
    let mut params = params.clone();
    let cal = match calibration {
        Some(reps) => {
            let c = calibrate_zero_scale(params.ds, params.dh, 1.0, 1.0, *reps, derive_seed(seed, "calibration"), runner)?;
            params.zero_scale = c.zero_scale;
            json!({
                "zero_scale": c.zero_scale,
                "nominal": NOMINAL_ZERO_SCALE,
                "mean_field_at_zero": c.mean_field_at_zero,
                "standard_error": c.standard_error,
                "replicates": c.replicates,
            })
        }
        None => json!({ "zero_scale": params.zero_scale, "nominal": NOMINAL_ZERO_SCALE }),
    };
    art.json("calibration.json", &cal)?;
    let runs = ray_knight_field(&params, *replicates, seed, runner)?;

    let mut field_rows = Vec::new();
    let mut run_rows = Vec::new();
    let mut worst_mass: f64 = 0.0;
    for (i, run) in runs.iter().enumerate() {
        for (k, snap) in run.snapshots.iter().enumerate() {
            let x = params.x_targets[k];
            match snap {
                Some(s) => {
                    let d = total_mass_identity(s);
                    worst_mass = worst_mass.max(d);
                    run_rows.push(vec![i.to_string(), num(x), num(s.s_x), "false".into(), num(d)]);
                    for (t, l) in s.profile() {
                        field_rows.push(vec![i.to_string(), num(x), num(t), num(l)]);
                    }
                }
                None => run_rows.push(vec![i.to_string(), num(x), String::new(), "true".into(), String::new()]),
            }
        }
    }
    art.csv("runs.csv", &["replicate", "x_target", "s_x", "truncated", "mass_discrepancy"], run_rows)?;
    art.csv("field.csv", &["replicate", "x_target", "level", "local_time"], field_rows)?;

    // field quantiles next to quantiles of the diffusion started at x_target
    let mut quantile_rows = Vec::new();
    let mut comparisons = Vec::new();
    let mut ok = worst_mass <= MASS_TOLERANCE;
    for (k, &x) in params.x_targets.iter().enumerate() {
        let cells = runs
            .iter()
            .filter_map(|r| r.snapshots[k].as_ref().map(|s| s.cells()))
            .max()
            .unwrap_or(0)
            .max(level_cell(*level, params.dh) + 1);
        let horizon = cells as f64 * params.dh;
        let paths: Vec<Trajectory> = runner
            .map(*replicates, |i| {
                solve_environment(&params.f, x, &params.env, horizon, *dt, &mut stream(seed, "rayknight.diffusion", ((k as u64) << 32) | i as u64))
            })
            .into_iter()
            .collect::<Result<_, _>>()?;
        for j in 0..cells {
            let t = j as f64 * params.dh;
            let (mut field, _) = field_samples(&runs, k, t);
            let mut diff: Vec<f64> = paths.iter().map(|p| p.value_at(t)).collect();
            field.sort_by(f64::total_cmp);
            diff.sort_by(f64::total_cmp);
            for q in QUANTILES {
                quantile_rows.push(vec![num(x), num(t), num(q), num(quantile(&field, q)), num(quantile(&diff, q))]);
            }
        }
        let (field, skipped) = field_samples(&runs, k, *level);
        let diff: Vec<f64> = paths.iter().map(|p| p.value_at(*level)).collect();
        let report = if field.len() >= 2 { Some(compare(&field, &diff, threshold.unwrap_or(1.0))?) } else { None };
        if let (Some(th), Some(r)) = (threshold, &report) {
            ok &= r.ks_statistic < *th;
        }
        if threshold.is_some() && report.is_none() {
            ok = false;
        }
        comparisons.push(json!({
            "x_target": x,
            "level": level,
            "ks": report.map(|r| r.ks_statistic),
            "mean_diff": report.map(|r| r.mean_diff),
            "mean_diff_se": report.map(|r| r.mean_diff_se),
            "truncated": skipped,
        }));
    }
    art.csv("quantiles.csv", &["x_target", "level", "q", "local_time", "diffusion_quantile"], quantile_rows)?;
    let summary = json!({
        "replicates": replicates,
        "calibration": cal,
        "max_mass_discrepancy": worst_mass,
        "threshold": threshold,
        "comparisons": comparisons,
    });
    Ok((Verdict::from_bool(ok), summary))
}
