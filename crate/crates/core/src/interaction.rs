//! Interaction functions `f`, the hypotheses placed on them, the scale
//! function of the associated diffusion and the subcriticality test.
//!
//! Every model in the crate is parameterized by one [`InteractionFunction`]:
//! the discrete chain uses increments `f(k) - f(k-1)`, the diffusion uses `f`
//! as its drift and the reflected local-time process uses `f'`.

use alloc::vec::Vec;

// inherent float methods shadow these when std is linked (tests)
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Step used for the removable singularity of `f(r)/r` at `r = 0`.
const RATIO_AT_ZERO_STEP: f64 = 1e-6;
const INNER_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-8;
/// Partial integral above which `Lambda(f)` is declared infinite.
const DIVERGENCE_LEVEL: f64 = 1e9;

/// Values of `f` on the uniform grid `0, step, 2 step, ...`, linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    step: f64,
    values: Vec<f64>,
}

impl Table {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right end of the tabulated range.
    pub fn max_arg(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    fn eval(&self, z: f64) -> Result<f64> {
        let pos = z / self.step;
        let last = self.values.len() - 1;
        if !(pos >= 0.0) || pos > last as f64 * (1.0 + 1e-12) {
            return Err(Error::Domain { value: z, domain: "outside tabulated range" });
        }
        let i = (pos.floor() as usize).min(last);
        if i == last {
            return Ok(self.values[last]);
        }
        let w = pos - i as f64;
        if w == 0.0 {
            return Ok(self.values[i]);
        }
        Ok(self.values[i] + w * (self.values[i + 1] - self.values[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InteractionKind {
    /// `f(z) = theta z - gamma z^2`.
    Logistic { theta: f64, gamma: f64 },
    /// `f(z) = theta z`.
    Linear { theta: f64 },
    Custom(Table),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    /// Symmetric difference with half-width `h` (one-sided at 0).
    CentralDifference(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionFunction {
    kind: InteractionKind,
    beta: f64,
    derivative_mode: DerivativeMode,
}

/// Outcome of the grid check of the increment and derivative bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    /// `f(0) = 0` and `f(x + y) - f(x) <= beta y` on the grid, with an
    /// increment bound that does not keep growing with the grid.
    pub a: bool,
    /// `f' <= beta` on the grid (requires a usable derivative).
    pub b: bool,
    /// Smallest `beta` certified by the grid for the increment bound.
    pub beta_witness: f64,
    /// Largest derivative seen on the grid, if a derivative is available.
    pub derivative_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    Subcritical,
    Supercritical,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaEstimate {
    Infinite,
    Finite(f64),
    /// Neither divergence nor convergence could be established; carries the
    /// partial integral up to the tail limit.
    Undetermined(f64),
}

/// Which rule decided the classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `f(z) <= 2` for all grid points `z >= z0`.
    BoundedByTwo { z0: f64 },
    /// `f(z) >= 2 + delta` for all grid points `z >= z0`.
    AboveTwo { z0: f64, delta: f64 },
    DivergentIntegral,
    ConvergentIntegral,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleReport {
    pub lambda_estimate: LambdaEstimate,
    pub classification: Classification,
    pub criterion: Criterion,
    pub upper_limit_used: f64,
    pub quadrature_tolerance: f64,
}

impl InteractionFunction {
    pub fn logistic(theta: f64, gamma: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter { name: "theta", reason: "must be finite" });
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter { name: "gamma", reason: "must be finite and >= 0" });
        }
        Ok(InteractionFunction {
            kind: InteractionKind::Logistic { theta, gamma },
            beta: theta.max(0.0),
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    pub fn linear(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter { name: "theta", reason: "must be finite" });
        }
        Ok(InteractionFunction {
            kind: InteractionKind::Linear { theta },
            beta: theta.max(0.0),
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    /// `f == 0`: the critical (classical Feller) case.
    pub fn zero() -> Self {
        InteractionFunction {
            kind: InteractionKind::Logistic { theta: 0.0, gamma: 0.0 },
            beta: 0.0,
            derivative_mode: DerivativeMode::Analytic,
        }
    }

    /// Tabulated `f` on `0, step, 2 step, ...`. The first value must be 0.
    /// `beta` is set to the largest segment slope (clamped at 0), which is
    /// the exact increment bound of the interpolant.
    pub fn tabulated(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidParameter { name: "step", reason: "must be finite and > 0" });
        }
        if values.len() < 2 {
            return Err(Error::InvalidParameter { name: "values", reason: "need at least two grid values" });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter { name: "values", reason: "must be finite" });
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter { name: "values", reason: "f(0) must be exactly 0" });
        }
        let beta = values
            .windows(2)
            .map(|w| (w[1] - w[0]) / step)
            .fold(0.0, f64::max);
        Ok(InteractionFunction {
            kind: InteractionKind::Custom(Table { step, values }),
            beta,
            derivative_mode: DerivativeMode::CentralDifference(step * 0.5),
        })
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Result<Self> {
        if let DerivativeMode::CentralDifference(h) = mode {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter { name: "derivative_mode", reason: "difference step must be > 0" });
            }
        }
        self.derivative_mode = mode;
        Ok(self)
    }

    /// Overrides the declared increment constant.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter { name: "beta", reason: "must be finite and >= 0" });
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn kind(&self) -> &InteractionKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.derivative_mode
    }

    /// Upper end of the domain (`+inf` except for tabulated functions).
    pub fn max_arg(&self) -> f64 {
        match &self.kind {
            InteractionKind::Custom(t) => t.max_arg(),
            _ => f64::INFINITY,
        }
    }

    /// `f(z)`, with `f(0) = 0` exactly.
    pub fn value(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain { value: z, domain: "z >= 0" });
        }
        if z == 0.0 {
            return Ok(0.0);
        }
        match &self.kind {
            InteractionKind::Logistic { theta, gamma } => Ok(theta * z - gamma * z * z),
            InteractionKind::Linear { theta } => Ok(theta * z),
            InteractionKind::Custom(t) => t.eval(z),
        }
    }

    /// `f'(z)` according to the derivative mode.
    pub fn derivative(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain { value: z, domain: "z >= 0" });
        }
        match self.derivative_mode {
            DerivativeMode::Analytic => match &self.kind {
                InteractionKind::Logistic { theta, gamma } => Ok(theta - 2.0 * gamma * z),
                InteractionKind::Linear { theta } => Ok(*theta),
                InteractionKind::Custom(_) => Err(Error::DerivativeUnavailable),
            },
            DerivativeMode::CentralDifference(h) => {
                let lo = (z - h).max(0.0);
                let hi = (z + h).min(self.max_arg());
                if !(hi > lo) {
                    return Err(Error::DerivativeUnavailable);
                }
                Ok((self.value(hi)? - self.value(lo)?) / (hi - lo))
            }
        }
    }

    /// `f(r)/r`, continued below the difference step by the one-sided
    /// difference quotient at that step, so the extension is continuous.
    fn ratio(&self, r: f64) -> Result<f64> {
        if r < RATIO_AT_ZERO_STEP {
            return Ok(self.value(RATIO_AT_ZERO_STEP)? / RATIO_AT_ZERO_STEP);
        }
        Ok(self.value(r)? / r)
    }

    /// `int_from^to f(r)/r dr`.
    fn log_weight(&self, from: f64, to: f64) -> Result<f64> {
        integrate(|r| self.ratio(r), from, to, INNER_TOL)
    }

    /// Grid certification of the increment bound (A) and derivative bound (B).
    ///
    /// The increment constant is the largest difference quotient over all
    /// grid pairs. Because any finite grid yields a finite quotient, the bound
    /// also has to be stable: the quotient over `[0, grid_max]` may not exceed
    /// the one over `[0, grid_max / 2]`.
    pub fn validate_hypotheses(&self, grid_max: f64, grid_step: f64) -> HypothesisReport {
        let fail = HypothesisReport { a: false, b: false, beta_witness: f64::INFINITY, derivative_max: None };
        if !(grid_max > 0.0 && grid_step > 0.0) {
            return fail;
        }
        let upper = grid_max.min(self.max_arg());
        let n = (upper / grid_step + 1e-9).floor() as usize;
        if n < 2 {
            return fail;
        }
        let zs: Vec<f64> = (0..=n).map(|i| i as f64 * grid_step).collect();
        let fs: Vec<f64> = match zs.iter().map(|&z| self.value(z)).collect::<Result<Vec<_>>>() {
            Ok(v) => v,
            Err(_) => return fail,
        };
        let quotient_max = |last: usize| {
            let mut best = f64::NEG_INFINITY;
            for i in 0..last {
                for j in (i + 1)..=last {
                    let q = (fs[j] - fs[i]) / (zs[j] - zs[i]);
                    if q > best {
                        best = q;
                    }
                }
            }
            best
        };
        let full = quotient_max(n);
        let half = quotient_max(n / 2);
        let tol = |v: f64| 1e-12 * v.abs().max(1.0);
        let beta_witness = full.max(0.0);
        let stable = full <= half + tol(half);
        let a = fs[0] == 0.0 && stable && beta_witness <= self.beta + tol(self.beta);

        let derivs: Option<Vec<f64>> = zs.iter().map(|&z| self.derivative(z).ok()).collect();
        let (b, derivative_max) = match derivs {
            Some(d) => {
                let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let dhalf = d[..=n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ok = fs[0] == 0.0 && dmax <= dhalf + tol(dhalf) && dmax <= self.beta + tol(self.beta);
                (ok, Some(dmax))
            }
            None => (false, None),
        };
        HypothesisReport { a, b, beta_witness, derivative_max }
    }

    /// Scale function `S(z) = int_1^z exp(-1/2 int_1^u f(r)/r dr) du`.
    pub fn scale_function(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::Domain { value: z, domain: "z >= 0" });
        }
        if z == 1.0 {
            return Ok(0.0);
        }
        // unit-length chunks anchored at known values of the inner integral
        let chunks = (z - 1.0).abs().ceil().max(1.0) as usize;
        let h = (z - 1.0) / chunks as f64;
        let tol = OUTER_TOL / chunks as f64;
        let mut anchor = 1.0;
        let mut anchor_weight = 0.0;
        let mut total = 0.0;
        for c in 0..chunks {
            let end = if c + 1 == chunks { z } else { 1.0 + h * (c + 1) as f64 };
            total += integrate(
                |u| Ok(Float::exp(-0.5 * (anchor_weight + self.log_weight(anchor, u)?))),
                anchor,
                end,
                tol,
            )?;
            anchor_weight += self.log_weight(anchor, end)?;
            anchor = end;
        }
        Ok(total)
    }

    /// `P(T_a < T_b)` for the diffusion started at `x`, `0 <= a < x < b`.
    pub fn hitting_probability(&self, x: f64, a: f64, b: f64) -> Result<f64> {
        if !(a >= 0.0 && a < x && x < b) {
            return Err(Error::InvalidParameter { name: "x", reason: "need 0 <= a < x < b" });
        }
        let sa = self.scale_function(a)?;
        let sx = self.scale_function(x)?;
        let sb = self.scale_function(b)?;
        Ok(((sb - sx) / (sb - sa)).clamp(0.0, 1.0))
    }

    /// Decides whether the diffusion dies out almost surely.
    ///
    /// The sufficient conditions (`f <= 2` eventually, or `f >= 2 + delta`
    /// eventually) are checked on a grid over `[1, tail_limit]`, where
    /// "eventually" means from some `z0` in the lower half of the range.
    /// Otherwise the integral `Lambda(f)` is evaluated up to `tail_limit`.
    pub fn classify(&self, tail_limit: f64, tolerance: f64) -> ScaleReport {
        let upper = tail_limit.max(10.0).min(self.max_arg());
        let mut report = ScaleReport {
            lambda_estimate: LambdaEstimate::Undetermined(f64::NAN),
            classification: Classification::Inconclusive,
            criterion: Criterion::Undecided,
            upper_limit_used: upper,
            quadrature_tolerance: tolerance,
        };
        if !(upper > 1.0) {
            return report;
        }
        let points = 10_000usize;
        let step = (upper - 1.0) / points as f64;
        let grid: Option<Vec<f64>> = (0..=points).map(|i| self.value(1.0 + step * i as f64).ok()).collect();
        if let Some(fs) = grid {
            let z_at = |i: usize| 1.0 + step * i as f64;
            let after_last = |pred: &dyn Fn(f64) -> bool| match fs.iter().rposition(|&v| pred(v)) {
                None => Some(0),
                Some(i) if i < points => Some(i + 1),
                Some(_) => None,
            };
            if let Some(i0) = after_last(&|v| v > 2.0) {
                if i0 <= points / 2 {
                    report.classification = Classification::Subcritical;
                    report.criterion = Criterion::BoundedByTwo { z0: z_at(i0) };
                    report.lambda_estimate = LambdaEstimate::Infinite;
                    return report;
                }
            }
            if let Some(i0) = after_last(&|v| v <= 2.0) {
                if i0 <= points / 2 {
                    let delta = fs[i0..].iter().copied().fold(f64::INFINITY, f64::min) - 2.0;
                    report.classification = Classification::Supercritical;
                    report.criterion = Criterion::AboveTwo { z0: z_at(i0), delta };
                    report.lambda_estimate = match self.lambda_partial(upper, tolerance) {
                        Ok(p) if p.tail < tolerance => LambdaEstimate::Finite(p.total),
                        Ok(p) => LambdaEstimate::Undetermined(p.total),
                        Err(_) => LambdaEstimate::Undetermined(f64::NAN),
                    };
                    return report;
                }
            }
        }
        // a failed quadrature leaves the report undecided
        if let Ok(p) = self.lambda_partial(upper, tolerance) {
            if p.total > DIVERGENCE_LEVEL && p.end_integrand >= p.mid_integrand {
                report.classification = Classification::Subcritical;
                report.criterion = Criterion::DivergentIntegral;
                report.lambda_estimate = LambdaEstimate::Infinite;
            } else if p.tail < tolerance {
                report.classification = Classification::Supercritical;
                report.criterion = Criterion::ConvergentIntegral;
                report.lambda_estimate = LambdaEstimate::Finite(p.total);
            } else {
                report.lambda_estimate = LambdaEstimate::Undetermined(p.total);
            }
        }
        report
    }

    /// Partial integral of `Lambda(f)` over `[1, upper]`, the contribution
    /// of `[upper/2, upper]` and the integrand at `upper/2` and `upper`.
    fn lambda_partial(&self, upper: f64, tolerance: f64) -> Result<LambdaPartial> {
        let chunks = ((upper - 1.0).ceil() as usize).clamp(1, 100_000);
        let h = (upper - 1.0) / chunks as f64;
        let mid = 0.5 * upper;
        let mut anchor = 1.0;
        let mut weight = 0.0;
        let mut total = 0.0;
        let mut tail = 0.0;
        let mut mid_integrand = f64::NAN;
        let tol = (tolerance * 1e-3).max(1e-15) / chunks as f64;
        for c in 0..chunks {
            let end = if c + 1 == chunks { upper } else { 1.0 + h * (c + 1) as f64 };
            let integrand = |u: f64| -> Result<f64> { Ok(Float::exp(-0.5 * (weight + self.log_weight(anchor, u)?))) };
            if mid_integrand.is_nan() && end >= mid {
                mid_integrand = integrand(mid)?;
            }
            let piece = if total > DIVERGENCE_LEVEL || !total.is_finite() {
                // already divergent: only the integrand shape is still needed
                0.0
            } else {
                let rel = tol.max(1e-12 * total);
                match integrate(integrand, anchor, end, rel) {
                    Ok(v) => v,
                    Err(Error::Quadrature { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                }
            };
            total += piece;
            if end > mid {
                let lo = anchor.max(mid);
                tail += if anchor >= mid { piece } else { piece * (end - lo) / (end - anchor) };
            }
            weight += self.log_weight(anchor, end)?;
            anchor = end;
        }
        let end_integrand = Float::exp(-0.5 * weight);
        Ok(LambdaPartial { total, tail, mid_integrand, end_integrand })
    }
}

struct LambdaPartial {
    total: f64,
    tail: f64,
    mid_integrand: f64,
    end_integrand: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn evaluate_examples() {
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        assert_eq!(f.value(0.0).unwrap(), 0.0);
        let f = InteractionFunction::logistic(2.0, 1.0).unwrap();
        assert_eq!(f.value(2.0).unwrap(), 0.0);
        let f = InteractionFunction::linear(3.0).unwrap();
        assert_eq!(f.value(1.5).unwrap(), 4.5);
        assert!(matches!(f.value(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn negative_theta_gives_signed_zero_free_origin() {
        let f = InteractionFunction::linear(-2.0).unwrap();
        let v = f.value(0.0).unwrap();
        assert!(v == 0.0 && v.is_sign_positive());
    }

    #[test]
    fn table_interpolates_and_rejects_out_of_range() {
        let f = InteractionFunction::tabulated(0.5, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(f.value(0.25).unwrap(), 0.5);
        assert_eq!(f.value(1.0).unwrap(), 0.0);
        assert_eq!(f.beta(), 2.0);
        assert!(f.value(1.5).is_err());
        assert!(InteractionFunction::tabulated(1.0, vec![0.1, 1.0]).is_err());
        assert_eq!(f.derivative(0.5), Ok(0.0));
        let analytic = f.with_derivative_mode(DerivativeMode::Analytic).unwrap();
        assert_eq!(analytic.derivative(0.3), Err(Error::DerivativeUnavailable));
    }

    #[test]
    fn hypothesis_examples() {
        let f = InteractionFunction::logistic(1.0, 1.0).unwrap();
        let r = f.validate_hypotheses(10.0, 0.05);
        assert!(r.a && r.b);
        assert!(r.beta_witness <= 1.0);

        let squares: Vec<f64> = (0..=100).map(|i| (i as f64 * 0.1).powi(2)).collect();
        let f = InteractionFunction::tabulated(0.1, squares).unwrap();
        let r = f.validate_hypotheses(10.0, 0.1);
        assert!(!r.a);
        assert!(!r.b);

        let f = InteractionFunction::linear(3.0).unwrap();
        let r = f.validate_hypotheses(10.0, 0.1);
        assert!(r.a && r.b);
        assert!(close(r.beta_witness, 3.0, 1e-9));
    }

    #[test]
    fn scale_function_examples() {
        let zero = InteractionFunction::zero();
        assert!(close(zero.scale_function(3.0).unwrap(), 2.0, 1e-8));
        assert_eq!(zero.scale_function(1.0).unwrap(), 0.0);
        assert!(close(zero.scale_function(0.0).unwrap(), -1.0, 1e-8));
        let lin = InteractionFunction::linear(2.0).unwrap();
        let expected = 1.0 - libm::exp(-4.0);
        assert!(close(lin.scale_function(5.0).unwrap(), expected, 1e-7));
        // below 1: S(z) = -int_z^1 e^{(1-u)} du = 1 - e^{1-z}
        assert!(close(lin.scale_function(0.0).unwrap(), 1.0 - libm::exp(1.0), 1e-7));
    }

    #[test]
    fn scale_function_increasing() {
        let f = InteractionFunction::logistic(2.0, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=40 {
            let s = f.scale_function(i as f64 * 0.1).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn classify_examples() {
        let r = InteractionFunction::logistic(1.0, 1.0).unwrap().classify(100.0, 1e-6);
        assert_eq!(r.classification, Classification::Subcritical);
        assert_eq!(r.lambda_estimate, LambdaEstimate::Infinite);

        let r = InteractionFunction::linear(3.0).unwrap().classify(100.0, 1e-6);
        assert_eq!(r.classification, Classification::Supercritical);
        match r.lambda_estimate {
            LambdaEstimate::Finite(v) => assert!(close(v, 2.0 / 3.0, 1e-6)),
            other => panic!("{other:?}"),
        }

        let r = InteractionFunction::zero().classify(100.0, 1e-6);
        assert_eq!(r.classification, Classification::Subcritical);
    }

    #[test]
    fn classify_falls_back_to_integral() {
        // oscillates across 2 forever, so neither sufficient rule applies
        let step = 0.5;
        let values: Vec<f64> = (0..=400)
            .map(|i| if i == 0 { 0.0 } else if i % 2 == 0 { 1.0 } else { 5.0 })
            .collect();
        let f = InteractionFunction::tabulated(step, values).unwrap();
        let r = f.classify(200.0, 1e-6);
        // average of f(r)/r decays like 3/r: exp(-1.5 ln u) -> integrable
        assert_ne!(r.criterion, Criterion::BoundedByTwo { z0: 1.0 });
        assert!(matches!(r.criterion, Criterion::ConvergentIntegral | Criterion::Undecided));
    }

    #[test]
    fn hitting_examples() {
        let zero = InteractionFunction::zero();
        assert!(close(zero.hitting_probability(1.0, 0.0, 2.0).unwrap(), 0.5, 1e-8));
        assert!(close(zero.hitting_probability(1.5, 1.0, 3.0).unwrap(), 0.75, 1e-8));
        assert!(zero.hitting_probability(2.0, 1.0, 1.5).is_err());
        let f = InteractionFunction::logistic(2.0, 1.0).unwrap();
        let p1 = f.hitting_probability(0.8, 0.5, 2.0).unwrap();
        let p2 = f.hitting_probability(1.2, 0.5, 2.0).unwrap();
        assert!(p1 > p2 && p2 > 0.0 && p1 < 1.0);
    }
}
