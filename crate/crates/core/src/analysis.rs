//! Sample statistics used to check law identities: two-sample
//! Kolmogorov-Smirnov distance, moments with normal confidence intervals,
//! and the large-population convergence experiment.

use alloc::string::String;
use alloc::vec::Vec;

// inherent float methods shadow these when std is linked (tests)
#[allow(unused_imports)]
use num_traits::Float;

use crate::diffusion::feller_samples;
use crate::discrete::{population_at_horizon, renormalized_params};
use crate::error::{Error, Result};
use crate::interaction::InteractionFunction;
use crate::rng::{derive_seed, stream, Replicates};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleMeta {
    pub source: String,
    pub parameters: String,
    pub seed: u64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub label: String,
    pub metadata: SampleMeta,
}

impl SampleSet {
    /// Rejects non-finite values.
    pub fn new(label: impl Into<String>, values: Vec<f64>, metadata: SampleMeta) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain { value: v, domain: "samples must be finite" });
        }
        Ok(SampleSet { values, label: label.into(), metadata })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&x) = v.iter().find(|x| x.is_nan()) {
        return Err(Error::Domain { value: x, domain: "samples must not be NaN" });
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `sup_t |F_a(t) - F_b(t)|` by a merged sweep over both sorted samples;
/// tied values are consumed together before the gap is measured.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] == t {
            i += 1;
        }
        while j < b.len() && b[j] == t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Approximate 95% quantile of the two-sample KS statistic under the null.
pub fn ks_critical_95(na: usize, nb: usize) -> f64 {
    let (n, m) = (na as f64, nb as f64);
    1.358 * ((n + m) / (n * m)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (`n - 1`) variance.
    pub variance: f64,
    pub standard_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn moment_report(values: &[f64]) -> Result<MomentReport> {
    if values.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (variance / n).sqrt();
    Ok(MomentReport {
        count: values.len(),
        mean,
        variance,
        standard_error: se,
        ci_low: mean - 1.96 * se,
        ci_high: mean + 1.96 * se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub ks_statistic: f64,
    pub sizes: (usize, usize),
    pub mean_diff: f64,
    /// `sqrt(se_a^2 + se_b^2)`.
    pub mean_diff_se: f64,
    pub threshold: f64,
    /// Pass when the KS statistic is below the threshold.
    pub verdict: Verdict,
}

pub fn compare(a: &[f64], b: &[f64], threshold: f64) -> Result<ComparisonReport> {
    let ks = ks_two_sample(a, b)?;
    let ma = moment_report(a)?;
    let mb = moment_report(b)?;
    Ok(ComparisonReport {
        ks_statistic: ks,
        sizes: (a.len(), b.len()),
        mean_diff: ma.mean - mb.mean,
        mean_diff_se: (ma.standard_error * ma.standard_error + mb.standard_error * mb.standard_error).sqrt(),
        threshold,
        verdict: Verdict::from_bool(ks < threshold),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub mean: f64,
    pub variance: f64,
    pub ks_vs_limit: f64,
    /// Difference of means with the limit sample, and its combined SE.
    pub mean_diff: f64,
    pub mean_diff_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub limit: MomentReport,
}

impl ConvergenceTable {
    /// Last KS below the first one.
    pub fn decreasing(&self) -> bool {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) if self.rows.len() > 1 => b.ks_vs_limit < a.ks_vs_limit,
            _ => false,
        }
    }
}

/// Samples `Z^{N,x}_t` for each `N` and compares them with one sample of
/// the diffusion `Z^x_t` (Euler step `dt`).
#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment<P: Replicates>(
    f: &InteractionFunction,
    x: f64,
    t: f64,
    n_list: &[u32],
    dt: f64,
    replicates: usize,
    seed: u64,
    runner: &P,
) -> Result<ConvergenceTable> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter { name: "n_list", reason: "must be nonempty and increasing" });
    }
    let limit = feller_samples(f, x, t, dt, replicates, derive_seed(seed, "convergence.limit"), runner)?;
    let limit_report = moment_report(&limit)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let params = renormalized_params(x, n, f.clone(), t)?;
        let child = derive_seed(seed, "convergence.discrete");
        let samples: Vec<f64> = runner
            .map(replicates, |i| {
                population_at_horizon(&params, &mut stream(child, "discrete", (u64::from(n) << 32) | i as u64))
                    .map(|(k, _)| k as f64 / f64::from(n))
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let report = moment_report(&samples)?;
        let cmp = compare(&samples, &limit, 1.0)?;
        rows.push(ConvergenceRow {
            n,
            mean: report.mean,
            variance: report.variance,
            ks_vs_limit: cmp.ks_statistic,
            mean_diff: cmp.mean_diff,
            mean_diff_se: cmp.mean_diff_se,
        });
    }
    Ok(ConvergenceTable { rows, limit: limit_report })
}
