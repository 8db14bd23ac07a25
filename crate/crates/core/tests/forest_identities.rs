use genfeller_core::discrete::DiscreteParams;
use genfeller_core::forest::{explore, grow_forest, local_time};
use genfeller_core::rng::stream;
use genfeller_core::InteractionFunction;
use rand::Rng;

fn forests(count: u64, seed: u64) -> impl Iterator<Item = (genfeller_core::forest::PlanarForest, f64)> {
    let mut rng = stream(seed, "forests", 0);
    (0..count).map(move |_| {
        let m = rng.random_range(1..=5u64);
        let p = [0.5, 1.0, 2.0, 3.0][rng.random_range(0..4usize)];
        let params = DiscreteParams::new(1.0, 1.0, InteractionFunction::logistic(1.0, 1.0).unwrap(), m, 5.0);
        (grow_forest(&params, &mut rng).unwrap(), p)
    })
}

#[test]
fn exploration_lasts_twice_the_branch_length_over_p() {
    for (forest, p) in forests(1000, 1) {
        let path = explore(&forest, p).unwrap();
        let expected = 2.0 * forest.total_branch_length() / p;
        assert!((path.duration() - expected).abs() <= 1e-9 * expected.max(1.0), "{} vs {expected}", path.duration());
        assert!(path.vertices.iter().all(|v| v.1 >= 0.0));
    }
}

#[test]
fn occupation_density_integrates_to_duration() {
    for (forest, p) in forests(200, 2) {
        let path = explore(&forest, p).unwrap();
        let mut heights: Vec<f64> = path.vertices.iter().map(|v| v.1).collect();
        heights.sort_by(f64::total_cmp);
        heights.dedup();
        // crossings are constant between consecutive vertex heights
        let mids: Vec<f64> = heights.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let lt = local_time(&path, path.duration(), &mids).unwrap();
        let area: f64 = heights.windows(2).zip(&lt.values).map(|(w, l)| (w[1] - w[0]) * l).sum();
        assert!((area - path.duration()).abs() <= 1e-9 * path.duration().max(1.0));
    }
}

#[test]
fn half_p_local_time_counts_the_living() {
    for (forest, p) in forests(200, 3) {
        let path = explore(&forest, p).unwrap();
        let levels: Vec<f64> = (0..50).map(|j| 0.1 * f64::from(j) + 0.0137).collect();
        let lt = local_time(&path, path.duration(), &levels).unwrap().half_p();
        for (t, v) in levels.iter().zip(&lt.values) {
            if *t < forest.horizon {
                assert_eq!(*v, forest.alive_at(*t) as f64, "level {t}");
            }
        }
    }
}
