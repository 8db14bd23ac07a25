use genfeller_core::analysis::{ks_critical_95, ks_two_sample, moment_report};
use genfeller_core::diffusion::{feller_samples, first_hit, solve_feller};
use genfeller_core::discrete::{
    coupled_at_horizon, population_at_horizon, simulate_population, DiscreteParams, Termination,
};
use genfeller_core::rng::stream;
use genfeller_core::{InteractionFunction, Sequential};

fn within(values: &[f64], exact: f64, k: f64) -> bool {
    let r = moment_report(values).unwrap();
    (r.mean - exact).abs() <= k * r.standard_error
}

#[test]
fn pure_death_extinction_time_is_harmonic() {
    let params = DiscreteParams::new(0.0, 1.0, InteractionFunction::zero(), 3, 1e3);
    let times: Vec<f64> = (0..20_000)
        .map(|i| {
            let path = simulate_population(&params, &mut stream(1, "death", i)).unwrap();
            assert_eq!(path.termination, Termination::Extinct);
            *path.jump_times.last().unwrap()
        })
        .collect();
    assert!(within(&times, 1.0 + 0.5 + 1.0 / 3.0, 4.0));
}

#[test]
fn yule_mean_is_exponential() {
    let params = DiscreteParams::new(1.0, 0.0, InteractionFunction::zero(), 1, 1.0);
    let sizes: Vec<f64> =
        (0..20_000).map(|i| population_at_horizon(&params, &mut stream(2, "yule", i)).unwrap().0 as f64).collect();
    assert!(within(&sizes, std::f64::consts::E, 4.0));
}

#[test]
fn without_interaction_the_increment_is_independent() {
    let f = InteractionFunction::zero();
    let n = 20_000;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (a, b, _) = coupled_at_horizon(0.5, 1.0, 20, &f, 1.0, &mut stream(3, "pair", i)).unwrap();
            (a as f64, b as f64)
        })
        .collect();
    let (ma, mb) = (pairs.iter().map(|p| p.0).sum::<f64>() / n as f64, pairs.iter().map(|p| p.1).sum::<f64>() / n as f64);
    let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / n as f64;
    let va = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>() / n as f64;
    let vb = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>() / n as f64;
    let corr = cov / (va * vb).sqrt();
    assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "{corr}");
    // the increment from (x, y) = (0.5, 1) is a copy started from 0.5
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    assert!(ks_two_sample(&a, &b).unwrap() < 1.5 * ks_critical_95(n as usize, n as usize));
}

#[test]
fn diffusion_means_match_the_linear_ode() {
    let zero = feller_samples(&InteractionFunction::zero(), 1.0, 1.0, 1e-3, 10_000, 4, &Sequential).unwrap();
    assert!(within(&zero, 1.0, 4.0));
    let lin = feller_samples(&InteractionFunction::linear(1.0).unwrap(), 1.0, 1.0, 1e-3, 10_000, 5, &Sequential).unwrap();
    assert!(within(&lin, std::f64::consts::E, 4.0));
    let r = moment_report(&zero).unwrap();
    // Var Z_t = 4 x t without interaction
    assert!((r.variance - 4.0).abs() < 0.3, "{}", r.variance);
}

#[test]
fn competition_lowers_the_path_under_shared_noise() {
    let logistic = InteractionFunction::logistic(1.0, 1.0).unwrap();
    let linear = InteractionFunction::linear(1.0).unwrap();
    for i in 0..500 {
        let a = solve_feller(&logistic, 1.0, 2.0, 1e-3, &mut stream(6, "cmp", i)).unwrap();
        let b = solve_feller(&linear, 1.0, 2.0, 1e-3, &mut stream(6, "cmp", i)).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
    }
}

#[test]
fn hitting_law_without_interaction_is_linear() {
    let f = InteractionFunction::zero();
    for (x, a, b) in [(1.0, 0.0, 2.0), (0.5, 0.25, 3.0), (2.0, 1.0, 4.0)] {
        let p = f.hitting_probability(x, a, b).unwrap();
        assert!((p - (b - x) / (b - a)).abs() < 1e-9);
    }
    let est = first_hit(&f, 1.0, 0.5, 2.0, 1e-3, 1e3, 2000, 7, &Sequential).unwrap();
    let p = est.lower_first;
    assert!((p.estimate - 2.0 / 3.0).abs() <= 3.0 * p.standard_error + 0.02);
}
