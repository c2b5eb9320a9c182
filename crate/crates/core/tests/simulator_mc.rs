//! Monte Carlo checks of the simulators.

use discretize::experiments::{bias_vs_information, worst_case_curve};
use discretize::rules::argmax_rule;
use discretize::simulator::{simulate_gaussian, GaussianSimConfig};
use discretize::{aggregate_posterior, calibration_curve, ClassIndex, TieOrder};

fn cfg(sigma: f64, n: usize, seed: u64) -> GaussianSimConfig {
    GaussianSimConfig { sigma, n, seed, ..Default::default() }
}

#[test]
fn posterior_is_calibrated() {
    let (mut cells, mut good) = (0, 0);
    for seed in 0..5 {
        let d = simulate_gaussian::<f64>(&cfg(0.5, 50_000, seed)).unwrap();
        for y in 0..6 {
            for bin in calibration_curve(&d.probs, &d.truth, ClassIndex(y), 10).unwrap() {
                if bin.count > 0 {
                    cells += 1;
                    good += usize::from(bin.within_binomial_band(3.0));
                }
            }
        }
    }
    assert!(good as f64 >= 0.95 * cells as f64, "{good}/{cells}");
}

#[test]
fn aggregate_posterior_converges_to_prior() {
    for seed in 0..20 {
        let c = cfg(0.5, 100_000, 500 + seed);
        let d = simulate_gaussian::<f64>(&c).unwrap();
        let l1: f64 = aggregate_posterior(&d.probs).weights().iter().zip(&c.prior).map(|(a, p)| (a - p).abs()).sum();
        assert!(l1 <= 0.02, "seed {seed}: {l1}");
    }
}

#[test]
fn mae_increases_with_noise() {
    let pts = bias_vs_information(&[0.1, 0.25, 0.5, 1.0, 2.0, 5.0], &cfg(0.5, 5000, 9), 20).unwrap();
    for w in pts.windows(2) {
        assert!(w[1].mae.mean >= w[0].mae.mean, "{} -> {}", w[0].mae.mean, w[1].mae.mean);
    }
    for p in &pts {
        for b in &p.bias_aggregate {
            assert!(b.mean <= p.mae.mean + 0.02);
        }
    }
}

#[test]
fn bias_limits() {
    let pts = bias_vs_information(&[1e-3, 1e6], &cfg(0.5, 5000, 10), 5).unwrap();
    assert!(pts[0].bias_aggregate.iter().all(|b| b.mean.abs() <= 0.02));
    assert!((pts[1].bias_aggregate[0].mean - 0.5).abs() <= 0.05);
}

#[test]
fn near_noiseless_posterior_recovers_truth() {
    let d = simulate_gaussian::<f64>(&cfg(1e-3, 20_000, 2)).unwrap();
    let a = argmax_rule(&d.probs, &TieOrder::identity(6)).unwrap().classes().unwrap();
    let hits = a.iter().zip(d.truth.labels()).filter(|(a, t)| a == t).count();
    assert!(hits as f64 > 0.999 * 20_000.0, "{hits}");
}

#[test]
fn worst_case_endpoints() {
    let pts = worst_case_curve(&[0.0, 0.5, 1.0], 2, 10_000, 1, 3).unwrap();
    assert_eq!(pts[0].mae.mean, 0.0);
    assert_eq!(pts[0].bias_z.mean, 0.0);
    assert!((pts[1].mae.mean - 0.25).abs() <= 0.02 && (pts[1].bias_z.mean - 0.25).abs() <= 0.02);
    assert!((pts[2].mae.mean - 0.5).abs() < 1e-12 && (pts[2].bias_z.mean - 0.5).abs() < 1e-12);
}
