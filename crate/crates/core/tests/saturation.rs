use ghz_metrology::montecarlo::{crb_saturation_experiment, ExperimentConfig};
use ghz_metrology::PhaseVector;

fn run(n: usize, d: usize, seed: u64) -> ghz_metrology::montecarlo::SaturationReport {
    let cfg = ExperimentConfig::new(n, d, PhaseVector::uniform(d, 0.1), 100_000, 200, seed);
    crb_saturation_experiment(&cfg).unwrap()
}

#[test]
fn variance_reaches_the_bound() {
    for (n, d) in [(2, 4), (4, 4), (2, 6)] {
        let r = run(n, d, 21);
        let scaled = r.variance_theta1 * (n * n) as f64 * 1e5;
        assert!((0.85..=1.15).contains(&scaled), "N={n} d={d}: {scaled}");
        assert!((r.bound - 1.0 / ((n * n) as f64 * 1e5)).abs() <= 1e-18);
    }
}

#[test]
fn estimator_is_unbiased() {
    for (n, d) in [(2, 4), (4, 4), (4, 6)] {
        let r = run(n, d, 5);
        assert!(r.bias.abs() <= 3.0 * r.mean_standard_error, "N={n} d={d}: bias {} se {}", r.bias, r.mean_standard_error);
    }
}

#[test]
fn experiment_is_a_pure_function_of_config() {
    let a = run(2, 4, 99);
    let b = run(2, 4, 99);
    let ta: Vec<Vec<u64>> = a.estimates.iter().map(|e| e.theta.iter().map(|v| v.to_bits()).collect()).collect();
    let tb: Vec<Vec<u64>> = b.estimates.iter().map(|e| e.theta.iter().map(|v| v.to_bits()).collect()).collect();
    assert_eq!(ta, tb);
    assert_eq!(a.variance_theta1.to_bits(), b.variance_theta1.to_bits());

    let c = run(2, 4, 100);
    assert_ne!(a.variance_theta1.to_bits(), c.variance_theta1.to_bits());
}
