//! The fitted labeler against exact matching on simulated data.

use discretize::heuristic::{apply_labeler, fit_labeler, TrainConfig};
use discretize::joint::{match_to_reference, target_counts};
use discretize::pipeline::{heuristic_pipeline, RuleContext};
use discretize::simulator::{simulate_gaussian, GaussianSimConfig};
use discretize::{aggregate_posterior, fidelity, LabelAssignment, ProbabilityMatrix, TieOrder};

fn matching(p: &ProbabilityMatrix<f64>, ties: &TieOrder) -> LabelAssignment {
    let agg = aggregate_posterior(p);
    match_to_reference(p, &target_counts(&agg, p.n_rows(), ties).unwrap(), ties).unwrap()
}

#[test]
fn pipeline_tracks_full_matching() {
    for seed in 0..10 {
        let d = simulate_gaussian::<f64>(&GaussianSimConfig { n: 20_000, seed: 300 + seed, ..Default::default() }).unwrap();
        let ties = TieOrder::by_frequency(&aggregate_posterior(&d.probs));
        let h = heuristic_pipeline(&d.probs, &RuleContext::default(), &ties).unwrap();
        let m = matching(&d.probs, &ties);
        let differ = h.labels().iter().zip(m.labels()).filter(|(a, b)| a != b).count();
        assert!(differ as f64 <= 0.05 * 20_000.0, "seed {seed}: {differ} rows differ");
    }
}

#[test]
fn fresh_sample_fidelity() {
    let train = simulate_gaussian::<f64>(&GaussianSimConfig { n: 10_000, seed: 41, ..Default::default() }).unwrap();
    let test = simulate_gaussian::<f64>(&GaussianSimConfig { n: 10_000, seed: 42, ..Default::default() }).unwrap();
    let ties = TieOrder::by_frequency(&aggregate_posterior(&train.probs));
    let fit = fit_labeler(&train.probs, &matching(&train.probs, &ties), &TrainConfig::default(), &ties).unwrap();
    assert!(fit.training_agreement >= 0.95, "{}", fit.training_agreement);
    let h = apply_labeler(&fit.model, &test.probs, &ties).unwrap();
    let f = fidelity(&h, &aggregate_posterior(&test.probs)).unwrap();
    assert!(f >= -0.05, "{f}");

    // Row permutations permute the labels.
    let n = test.probs.n_rows();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7919) % n).collect();
    let shuffled = apply_labeler(&fit.model, &test.probs.select_rows(&perm).unwrap(), &ties).unwrap();
    for (j, &i) in perm.iter().enumerate() {
        assert_eq!(shuffled.labels()[j], h.labels()[i]);
    }
}
