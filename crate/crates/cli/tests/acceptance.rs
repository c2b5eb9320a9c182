//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Run with `cargo test -p discretize-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use discretize::experiments::{bias_vs_information, pareto_sweep, worst_case_curve, Stat, SweepConfig, SweepResult};
use discretize::heuristic::{apply_labeler, fit_labeler, TrainConfig};
use discretize::joint::{match_to_reference, solve_gamma_program, target_counts, JointProblem, ScaledObjective};
use discretize::pipeline::RuleSpec;
use discretize::simulator::{simulate_gaussian, GaussianSimConfig};
use discretize::{
    aggregate_posterior, calibration_curve, fidelity, mae, ClassIndex, ProbabilityMatrix, ReferenceDistribution,
    ReferenceSource, TieOrder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 0.02;
const SIGMA_GRID: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 5.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> ProbabilityMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let coarse = rng.random_bool(0.3);
            let raw: Vec<f64> = (0..k)
                .map(|_| {
                    let v: f64 = rng.random_range(0.0..1.0);
                    if coarse { (v * 4.0).round() + 0.5 } else { v }
                })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    ProbabilityMatrix::from_rows(&rows).unwrap()
}

fn brute_force_max(obj: &ScaledObjective) -> i64 {
    let (n, k) = (obj.n_rows(), obj.n_classes());
    let mut labels = vec![0usize; n];
    let mut best = i64::MIN;
    loop {
        if let Some(v) = obj.evaluate(&labels) {
            best = best.max(v);
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

fn c1_brute_force() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut mismatches = 0;
    let mut checked = 0;
    for case in 0..200 {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(2..=3);
        let p = random_matrix(&mut rng, n, k);
        let r = if case % 2 == 0 {
            aggregate_posterior(&p)
        } else {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            ReferenceDistribution::new(raw.into_iter().map(|v| v / s).collect(), ReferenceSource::Custom).unwrap()
        };
        let ties = TieOrder::by_frequency(&r);
        for gamma in [0.0, 0.5, 0.9, 1.0] {
            let problem = JointProblem::new(&p, &r, gamma).unwrap();
            let obj = problem.scaled().unwrap();
            let a = solve_gamma_program(&problem, &ties).unwrap();
            checked += 1;
            if obj.evaluate(&a.classes().unwrap()) != Some(brute_force_max(&obj)) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("{checked} instances, {mismatches} mismatches, {:.2?}", elapsed),
    )
}

fn base(n: usize) -> GaussianSimConfig {
    GaussianSimConfig { n, seed: 1000, ..Default::default() }
}

fn c2_no_information() -> Outcome {
    let pt = &bias_vs_information(&[1e6], &base(5000), 20).unwrap()[0];
    let prior = base(5000).prior;
    let mut worst = 0.0f64;
    for (y, b) in pt.bias_aggregate.iter().enumerate() {
        let expected = if y == 0 { 1.0 - prior[0] } else { -prior[y] };
        worst = worst.max((b.mean - expected).abs());
    }
    outcome(worst <= SLACK, format!("bias(plurality) = {:.4}, max deviation {worst:.2e}", pt.bias_aggregate[0].mean))
}

fn c3_full_information() -> Outcome {
    let pt = &bias_vs_information(&[1e-3], &base(5000), 20).unwrap()[0];
    let worst = pt.bias_aggregate.iter().map(|b| b.mean.abs()).fold(0.0, f64::max);
    outcome(worst <= SLACK, format!("max |bias| = {worst:.2e}, MAE = {:.2e}", pt.mae.mean))
}

fn c4_bias_bound() -> Outcome {
    let start = Instant::now();
    let pts = bias_vs_information(&SIGMA_GRID, &base(5000), 20).unwrap();
    let mut margin = f64::INFINITY;
    let mut parts = Vec::new();
    for p in &pts {
        let max_bias = p.bias_aggregate.iter().map(|b| b.mean).fold(f64::MIN, f64::max);
        margin = margin.min(p.mae.mean + SLACK - max_bias);
        parts.push(format!("s={}: MAE {:.3} max bias {:.3}", p.sigma, p.mae.mean, max_bias));
    }
    let elapsed = start.elapsed();
    outcome(margin >= 0.0 && elapsed < Duration::from_secs(300), format!("{}; {:.2?}", parts.join(", "), elapsed))
}

fn c5_tightness() -> Outcome {
    let cs: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let mut worst = 0.0f64;
    for k in [2, 6] {
        for p in worst_case_curve(&cs, k, 20_000, 1, 77).unwrap() {
            worst = worst.max((p.bias_z.mean - p.mae.mean).abs());
        }
    }
    outcome(worst <= SLACK, format!("18 points, max |bias(z) - MAE| = {worst:.2e}"))
}

fn c6_mae_anchor() -> Outcome {
    let d = simulate_gaussian::<f64>(&GaussianSimConfig { n: 100_000, seed: 6, ..Default::default() }).unwrap();
    let m = mae(&d.probs, &d.truth).unwrap();
    outcome((m - 0.42).abs() <= 0.01, format!("MAE at sigma 0.5 = {m:.4}, target 0.42 +/- 0.01"))
}

fn main_sweep() -> SweepResult {
    let cfg = SweepConfig {
        replicates: 100,
        sim: GaussianSimConfig { n: 5000, seed: 7, ..Default::default() },
        rules: vec![RuleSpec::Argmax, RuleSpec::Match, RuleSpec::Thompson, RuleSpec::TopK(2)],
        ..Default::default()
    };
    pareto_sweep(&cfg).unwrap()
}

fn accuracy_of(s: &SweepResult, rule: &str) -> Vec<f64> {
    s.per_replicate(rule, |m| m.accuracy.unwrap())
}

fn c7_argmax_accuracy(s: &SweepResult) -> Outcome {
    let am = accuracy_of(s, "argmax");
    let mut worst = (f64::INFINITY, String::new());
    for summary in &s.summaries {
        if summary.rule == "argmax" {
            continue;
        }
        let other = accuracy_of(s, &summary.rule);
        let diff: Vec<f64> = am.iter().zip(&other).map(|(a, o)| a - o).collect();
        let d = Stat::of(&diff);
        let margin = d.mean + d.se;
        if margin < worst.0 {
            worst = (margin, format!("{} (gap {:.2e} +/- {:.1e})", summary.rule, d.mean, d.se));
        }
    }
    outcome(worst.0 >= 0.0, format!("closest competitor {}", worst.1))
}

fn c8_thompson_dominated(s: &SweepResult) -> Outcome {
    let th = s.summary("thompson").unwrap();
    let k = s.config.sim.k as f64;
    let slack = k / s.config.sim.n as f64;
    let dominating: Vec<f64> = s
        .frontier
        .iter()
        .filter(|p| {
            p.accuracy.mean > th.accuracy.mean && p.fidelity_aggregate.mean >= th.fidelity_aggregate.mean - slack
        })
        .map(|p| p.gamma)
        .collect();
    outcome(
        !dominating.is_empty(),
        format!(
            "thompson acc {:.4} fid {:.4}; dominated by {} grid points",
            th.accuracy.mean,
            th.fidelity_aggregate.mean,
            dominating.len()
        ),
    )
}

fn c9_matching_fidelity(s: &SweepResult) -> Outcome {
    let n = s.config.sim.n as f64;
    let k = s.config.sim.k as f64;
    let mut worst = s.per_replicate("match", |m| m.fidelity_aggregate + k / n).into_iter().fold(f64::INFINITY, f64::min);
    let mut tested = s.config.replicates;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..300 {
        let n = rng.random_range(1..400);
        let k = rng.random_range(2..8);
        let p = random_matrix(&mut rng, n, k);
        let r = aggregate_posterior(&p);
        let ties = TieOrder::by_frequency(&r);
        let a = match_to_reference(&p, &target_counts(&r, n, &ties).unwrap(), &ties).unwrap();
        worst = worst.min(fidelity(&a, &r).unwrap() + k as f64 / n as f64);
        tested += 1;
    }
    outcome(worst >= 0.0, format!("{tested} inputs, min (fidelity + K/N) = {worst:.2e}"))
}

fn c10_matching_cost(s: &SweepResult) -> Outcome {
    let diff: Vec<f64> =
        accuracy_of(s, "argmax").iter().zip(accuracy_of(s, "match")).map(|(a, m)| a - m).collect();
    let d = Stat::of(&diff);
    outcome(d.mean <= SLACK, format!("mean accuracy gap {:.4} +/- {:.1e}", d.mean, d.se))
}

fn matching_labels(p: &ProbabilityMatrix<f64>, ties: &TieOrder) -> discretize::LabelAssignment {
    let agg = aggregate_posterior(p);
    match_to_reference(p, &target_counts(&agg, p.n_rows(), ties).unwrap(), ties).unwrap()
}

fn c11_heuristic() -> Outcome {
    let train = simulate_gaussian::<f64>(&GaussianSimConfig { n: 10_000, seed: 111, ..Default::default() }).unwrap();
    let test = simulate_gaussian::<f64>(&GaussianSimConfig { n: 10_000, seed: 112, ..Default::default() }).unwrap();
    let ties = TieOrder::by_frequency(&aggregate_posterior(&train.probs));
    let fit = fit_labeler(&train.probs, &matching_labels(&train.probs, &ties), &TrainConfig::default(), &ties).unwrap();
    let h = apply_labeler(&fit.model, &test.probs, &ties).unwrap();
    let m = matching_labels(&test.probs, &ties);
    let agree = h.labels().iter().zip(m.labels()).filter(|(a, b)| a == b).count() as f64 / 10_000.0;
    outcome(agree >= 0.95, format!("held-out agreement {agree:.4} (training {:.4})", fit.training_agreement))
}

fn c12_calibration() -> Outcome {
    let (mut cells, mut good) = (0usize, 0usize);
    for seed in 0..20 {
        let d = simulate_gaussian::<f64>(&GaussianSimConfig { n: 100_000, seed: 1200 + seed, ..Default::default() })
            .unwrap();
        for y in 0..d.probs.n_classes() {
            for bin in calibration_curve(&d.probs, &d.truth, ClassIndex(y), 10).unwrap() {
                if bin.count > 0 {
                    cells += 1;
                    good += usize::from(bin.within_binomial_band(3.0));
                }
            }
        }
    }
    let frac = good as f64 / cells as f64;
    outcome(frac >= 0.95, format!("{good}/{cells} nonempty cells within 3 SE ({frac:.4})"))
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_discretize")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn c13_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let runs: Vec<(&str, Vec<String>, Vec<String>)> = vec![
        (
            "simulate",
            vec!["simulate", "--n", "2000", "--seed", "13", "-o", "{}sim.csv"].into_iter().map(String::from).collect(),
            vec!["sim.csv".into()],
        ),
        (
            "simulate worst-case",
            vec!["simulate", "--model", "worst-case", "--c", "0.3", "--n", "1000", "--seed", "13", "-o", "{}wc.csv"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["wc.csv".into()],
        ),
        (
            "discretize",
            vec![
                "discretize", "-i", "{0}sim.csv", "-r", "argmax,threshold:0.7,thompson,topk:2,match,gamma:0.9,heuristic",
                "--seed", "13", "--batch-size", "700", "-o", "{}out.csv", "--metrics", "{}m.json", "--save-model",
                "{}model.txt",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            vec!["out.csv".into(), "m.json".into(), "model.txt".into()],
        ),
        (
            "evaluate",
            vec!["evaluate", "-i", "{0}out.csv", "-m", "{}e.json"].into_iter().map(String::from).collect(),
            vec!["e.json".into()],
        ),
        (
            "sweep",
            vec!["sweep", "-r", "argmax,match,thompson", "--replicates", "2", "--n", "500", "--seed", "13", "-o", "{}s.csv", "--summary", "{}s.json"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["s.csv".into(), "s.json".into()],
        ),
    ];
    let mut failures = Vec::new();
    for (name, args, outputs) in &runs {
        let mut contents = Vec::new();
        for attempt in 0..2 {
            // Inputs come from the first attempt; outputs are written per attempt.
            let args: Vec<String> = args
                .iter()
                .map(|a| a.replace("{0}", &p("a0_")).replace("{}", &p(&format!("a{attempt}_"))))
                .collect();
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            if !run_cli(&argv) {
                failures.push(format!("{name} failed to run"));
                break;
            }
            contents.push(
                outputs.iter().map(|o| fs::read(Path::new(&p(&format!("a{attempt}_{o}")))).unwrap()).collect::<Vec<_>>(),
            );
        }
        if contents.len() == 2 && contents[0] != contents[1] {
            failures.push(format!("{name} differs between runs"));
        }
    }
    let detail = if failures.is_empty() { format!("{} commands byte-identical on rerun", runs.len()) } else { failures.join("; ") };
    outcome(failures.is_empty(), detail)
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |id: u32, name: &'static str, o: Outcome| {
        println!("criterion {id:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    report(1, "brute-force optimality", c1_brute_force());
    report(2, "no-information argmax bias", c2_no_information());
    report(3, "full-information argmax bias", c3_full_information());
    report(4, "argmax bias bounded by MAE", c4_bias_bound());
    report(5, "worst-case bound is tight", c5_tightness());
    report(6, "MAE at sigma 0.5", c6_mae_anchor());
    let start = Instant::now();
    let sweep = main_sweep();
    println!("(sweep: 100 replicates x {} rules in {:.2?})", sweep.summaries.len(), start.elapsed());
    report(7, "argmax maximizes accuracy", c7_argmax_accuracy(&sweep));
    report(8, "thompson dominated by the gamma program", c8_thompson_dominated(&sweep));
    report(9, "matching fidelity within rounding", c9_matching_fidelity(&sweep));
    report(10, "matching costs little accuracy", c10_matching_cost(&sweep));
    report(11, "heuristic agrees with matching", c11_heuristic());
    report(12, "simulator calibration", c12_calibration());
    report(13, "CLI determinism", c13_determinism());
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
