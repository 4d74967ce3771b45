//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{oracle_grad, small_problem, to_na};
use matsense::diagnostics::{
    contraction_rho, gradcheck_suite, lemma_suite, probe_suite, ProbeSuiteConfig, SpectralSummary,
};
use matsense::experiments::{
    run_convergence, run_phase, run_staterr, ConvergenceResult, CrossValidation, ExperimentConfig, NGrid, Setting,
};
use matsense::solvers::{svrg_solve_observed, variance_reduced_direction};
use matsense::{init_projected_gd, GradientPair, InitConfig, OutputPolicy, Reference, SolverConfig};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_dev(g: &GradientPair, want: &(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>)) -> f64 {
    let num = (to_na(&g.gu) - &want.0).norm_squared() + (to_na(&g.gv) - &want.1).norm_squared();
    let den = want.0.norm_squared() + want.1.norm_squared();
    (num / den).sqrt()
}

fn criterion_1() -> Outcome {
    let worst = gradcheck_suite(20, 8, 1e-5, SEED).expect("gradcheck suite runs");
    outcome(
        worst <= 1e-5,
        format!("max relative deviation {worst:.2e} over 20 instances (limit 1e-5)"),
    )
}

fn criterion_2() -> Outcome {
    let (ds, xstar) = small_problem(10, 8, 2, 120, 12, 0.05, SEED);
    let z0 = init_projected_gd(
        &ds,
        &InitConfig {
            tau: 0.5,
            iterations: 1,
            rank: 2,
        },
    )
    .unwrap();
    let reference = Reference::new(xstar, 2).unwrap();

    // Exhaustive average over components at a point away from the snapshot.
    let snapshot = z0.clone();
    let snapshot_grad = matsense::objective::grad_loss_full(&ds, &snapshot).unwrap();
    let z = common::random_pair(10, 8, 2, SEED);
    let mut mean = GradientPair::zeros_like(&z);
    for i in 0..ds.num_batches() {
        let d = variance_reduced_direction(&ds, &z, &snapshot, &snapshot_grad, i).unwrap();
        mean.axpy(1.0 / ds.num_batches() as f64, &d).unwrap();
    }
    let unbiased = rel_dev(&mean, &oracle_grad(&ds, &z, ds.full_range()));

    // At every epoch snapshot, every component's direction is the full gradient.
    let mut worst_snapshot = 0.0f64;
    let mut epochs = 0;
    let cfg = SolverConfig {
        eta: matsense::solvers::default_eta(&z0, 0.1).unwrap(),
        inner_iters: 12,
        epochs: 8,
        output_policy: OutputPolicy::RandomT,
        seed: SEED,
        tol_stop: None,
    };
    svrg_solve_observed(&ds, &z0, &cfg, Some(&reference), |start| {
        epochs += 1;
        let want = oracle_grad(&ds, start.snapshot, ds.full_range());
        for i in 0..ds.num_batches() {
            let d = variance_reduced_direction(&ds, start.snapshot, start.snapshot, start.snapshot_grad, i).unwrap();
            worst_snapshot = worst_snapshot.max(rel_dev(&d, &want));
        }
    })
    .unwrap();
    outcome(
        unbiased <= 1e-12 && worst_snapshot <= 1e-12 && epochs == 8,
        format!("enumeration deviation {unbiased:.1e}; snapshot deviation {worst_snapshot:.1e} over {epochs} epochs (limit 1e-12)"),
    )
}

fn convergence_config(gd_eta_scale: f64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        setting: Setting::S1,
        n_grid: NGrid::Multiples(vec![5.0]),
        trials: 10,
        master_seed: SEED,
        cross_validation: Some(CrossValidation::default()),
        ..Default::default()
    };
    cfg.gd.eta_scale = gd_eta_scale;
    cfg
}

fn criterion_3(run: &ConvergenceResult) -> Outcome {
    let mut monotone = 0;
    let mut max_passes = 0.0f64;
    for rec in &run.svrg {
        let Some(trace) = &rec.trace else { continue };
        max_passes = max_passes.max(trace.last().unwrap().data_passes);
        let errs: Vec<f64> = trace.records.iter().map(|r| r.rel_error.unwrap()).collect();
        if errs.windows(2).skip(1).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    let median = run.median_svrg();
    let n = run.svrg[0].n_measurements;
    let (b, m) = (run.svrg[0].batch_size, run.svrg[0].inner_iters);
    outcome(
        median <= 1e-3 && monotone >= 9 && max_passes <= 50.0 && run.svrg.len() == 10,
        format!(
            "N={n}, b={b}, m={m}: median squared relative error {median:.2e} (limit 1e-3) after {max_passes} data passes; {monotone}/10 traces non-increasing after epoch 1"
        ),
    )
}

fn criterion_4(run: &ConvergenceResult, tuned_gd: Option<&ConvergenceResult>) -> Outcome {
    let (s, g) = (run.median_svrg(), run.median_gd());
    let matched = run.svrg.iter().zip(&run.gd).all(|(a, b)| {
        let (pa, pb) = (
            a.trace.as_ref().map_or(0.0, |t| t.last().unwrap().data_passes),
            b.trace.as_ref().map_or(0.0, |t| t.last().unwrap().data_passes),
        );
        pb <= pa && pa - pb < 1.0
    });
    let mut detail = format!("median SVRG {s:.2e} vs GD {g:.2e} at matched data passes, shared step rule 0.1/sigma1");
    if let Some(t) = tuned_gd {
        detail.push_str(&format!(
            "; info: GD with its own tuned step 0.4/sigma1 reaches {:.2e}",
            t.median_gd()
        ));
    }
    outcome(s <= g && matched, detail)
}

/// Largest residual of the least-squares non-decreasing fit (pool adjacent violators).
fn isotonic_residual(y: &[f64]) -> f64 {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, n2) = blocks.pop().unwrap();
            let (v1, n1) = blocks.pop().unwrap();
            blocks.push(((v1 * n1 as f64 + v2 * n2 as f64) / (n1 + n2) as f64, n1 + n2));
        }
    }
    let fit: Vec<f64> = blocks.iter().flat_map(|&(v, n)| std::iter::repeat_n(v, n)).collect();
    y.iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        n_grid: NGrid::Multiples(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        trials: 30,
        master_seed: SEED,
        cross_validation: Some(CrossValidation::default()),
        ..Default::default()
    };
    let res = run_phase(&cfg).expect("phase experiment runs");
    let probs: Vec<f64> = res.points.iter().map(|p| p.prob_recovery).collect();
    let resid = isotonic_residual(&probs);
    let pass = probs.len() == 6
        && res.points.iter().all(|p| p.trials == 30)
        && probs[0] <= 0.1
        && probs[5] >= 0.9
        && resid <= 0.1;
    let shown: Vec<String> = probs.iter().map(|p| format!("{p:.3}")).collect();
    outcome(
        pass,
        format!(
            "recovery probability at N/(rd')=1..6: [{}]; isotonic residual {resid:.3}",
            shown.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut cfg = ExperimentConfig {
        noise_sigma: 0.5,
        n_grid: NGrid::Multiples(vec![6.0, 8.0, 10.0, 12.0, 14.0]),
        trials: 15,
        master_seed: SEED,
        cross_validation: Some(CrossValidation::default()),
        ..Default::default()
    };
    cfg.solver.data_passes = 100.0;
    let res = run_staterr(&cfg).expect("statistical-error experiment runs");
    let slope = res.loglog_slope().unwrap_or(f64::NAN);
    let points = res
        .points
        .iter()
        .filter(|p| p.mean_sq_rel_error.is_finite() && p.trials == 15)
        .count();
    outcome(
        (-1.4..=-0.6).contains(&slope) && points >= 5,
        format!(
            "log-log slope {slope:.3} over {points} grid points, N from {} to {} (range [-1.4, -0.6])",
            res.points.first().map_or(0, |p| p.n_measurements),
            res.points.last().map_or(0, |p| p.n_measurements)
        ),
    )
}

fn criterion_7() -> Outcome {
    let s = lemma_suite(500, 6, SEED).expect("lemma suite runs");
    let tallies = [("A.1", s.a1), ("B.2", s.b2), ("B.3", s.b3), ("B.4", s.b4)];
    let all_evaluated = tallies.iter().all(|(_, t)| t.evaluated == 500);
    let detail: Vec<String> = tallies
        .iter()
        .map(|(n, t)| {
            format!(
                "{n} {}/{} evaluated, {} violations, min margin {:.1e}",
                t.evaluated, t.instances, t.violations, t.min_margin
            )
        })
        .collect();
    outcome(s.violations() == 0 && all_evaluated, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let cfg = ProbeSuiteConfig::default();
    let s = probe_suite(&cfg, SEED).expect("probe suite runs");
    let pass = s.violations() == 0
        && s.delta_hat < 1.0 / 16.0
        && s.curvature.evaluated == 200
        && s.smoothness.evaluated == 200
        && s.max_imbalance_identity_gap <= 1e-12
        && cfg.n_measurements == 50 * cfg.r * cfg.d1.max(cfg.d2);
    outcome(
        pass,
        format!(
            "delta_hat {:.4} (limit 1/16) after {} dataset draws; imbalance identity gap {:.1e}; curvature {} violations (min margin {:.1e}); smoothness {} violations (min margin {:.1e})",
            s.delta_hat, s.dataset_draws, s.max_imbalance_identity_gap, s.curvature.violations, s.curvature.min_margin, s.smoothness.violations, s.smoothness.min_margin
        ),
    )
}

fn criterion_9() -> Outcome {
    let summary = SpectralSummary::new(1.0, 1.0, 1).unwrap();
    let golden_case = contraction_rho(1.0 / 576.0, 51_840, &summary, 0.0).unwrap();
    let golden = golden_case
        .simplified_rho
        .is_some_and(|r| (r - 5.0 / 6.0).abs() <= 4.0 * f64::EPSILON);

    let mut agree = 0;
    let mut flags = [0usize; 2];
    let mut points = 0;
    for &(sigma1, sigma_r) in &[(1.0, 1.0), (4.0, 2.0)] {
        for &m in &[1_000usize, 100_000_000] {
            for &es in &[1e-5, 3e-5, 1e-4, 1e-3, 0.1] {
                let s = SpectralSummary::new(sigma1, sigma_r, 2).unwrap();
                let delta = 0.05;
                let eta = es / sigma1;
                let rep = contraction_rho(eta, m, &s, delta).unwrap();
                let kappa = sigma1 / sigma_r;
                let want = 15.0
                    * kappa
                    * (1.0 / (eta * sigma1 * m as f64) + 384.0 * eta * sigma1 * (1.0 + delta) * (1.0 + delta));
                points += 1;
                flags[usize::from(want < 1.0)] += 1;
                if (rep.rho - want).abs() <= 1e-12 * want && rep.converges == (want < 1.0) {
                    agree += 1;
                }
            }
        }
    }
    outcome(
        golden && agree == points && points == 20 && flags[0] > 0 && flags[1] > 0,
        format!(
            "simplified regime rho {:?} (closed form there {:.4}); flag agrees on {agree}/{points} grid points ({} converge, {} do not)",
            golden_case.simplified_rho, golden_case.rho, flags[1], flags[0]
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_matsense"))
        .args(args)
        .current_dir(dir)
        .env_remove("MATSENSE_SEED")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let small = r#"{"setting": {"custom": {"d1": 12, "d2": 10, "r": 2}}, "n_grid": {"multiples": [5, 10]}, "trials": 3, "noise_sigma": NOISE, "solver": {"data_passes": 10}}"#;
    fs::write(root.join("noiseless.json"), small.replace("NOISE", "0")).unwrap();
    fs::write(root.join("noisy.json"), small.replace("NOISE", "0.5")).unwrap();
    fs::write(
        root.join("cv.json"),
        small.replace("NOISE", "0").replace(
            "\"trials\": 3",
            "\"trials\": 2, \"cross_validation\": {\"seeds\": 2, \"batch_counts\": [4, 8]}",
        ),
    )
    .unwrap();
    fs::write(root.join("solve.json"), r#"{"rank": 2, "epochs": 5}"#).unwrap();
    fs::write(
        root.join("lemmas.json"),
        r#"{"instances": 50, "probes": {"points": 20, "rip_trials": 10, "delta_max": 0.2}}"#,
    )
    .unwrap();
    fs::write(root.join("rip.json"), r#"{"trials": 20}"#).unwrap();

    let mut ok = true;
    for out in ["first", "second"] {
        let data = format!("{out}/data");
        let o = |sub: &str| format!("{out}/{sub}");
        let runs: Vec<Vec<String>> = vec![
            vec![
                "generate".into(),
                "--d1".into(),
                "12".into(),
                "--d2".into(),
                "10".into(),
                "--rank".into(),
                "2".into(),
                "--measurements".into(),
                "240".into(),
                "--batch-size".into(),
                "24".into(),
                "--noise-sigma".into(),
                "0.1".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                data.clone(),
            ],
            vec![
                "solve".into(),
                "--data".into(),
                data.clone(),
                "--config".into(),
                "solve.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("solve"),
            ],
            vec![
                "experiment".into(),
                "convergence".into(),
                "--config".into(),
                "cv.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("conv"),
            ],
            vec![
                "experiment".into(),
                "phase".into(),
                "--config".into(),
                "noiseless.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("phase"),
            ],
            vec![
                "experiment".into(),
                "staterr".into(),
                "--config".into(),
                "noisy.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("staterr"),
            ],
            vec![
                "check".into(),
                "rip".into(),
                "--data".into(),
                data.clone(),
                "--config".into(),
                "rip.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("checks"),
            ],
            vec![
                "check".into(),
                "gradcheck".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("checks"),
            ],
            vec![
                "check".into(),
                "lemmas".into(),
                "--config".into(),
                "lemmas.json".into(),
                "--seed".into(),
                "4".into(),
                "--out".into(),
                o("checks"),
            ],
            vec!["check".into(), "rho".into(), "--out".into(), o("checks")],
        ];
        for args in &runs {
            let args: Vec<&str> = args.iter().map(String::as_str).collect();
            if !run_cli(root, &args) {
                ok = false;
                eprintln!("command failed: matsense {}", args.join(" "));
            }
        }
    }

    let mut files = 0;
    let mut differing = Vec::new();
    let mut stack = vec![root.join("first")];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let twin = root.join("second").join(path.strip_prefix(root.join("first")).unwrap());
            files += 1;
            if fs::read(&path).ok() != fs::read(&twin).ok() {
                differing.push(path.strip_prefix(root).unwrap().display().to_string());
            }
        }
    }
    let expected = [
        "data/manifest.json",
        "data/matrices.lrmx",
        "data/y.lrmx",
        "data/xstar.lrmx",
        "solve/u.lrmx",
        "solve/v.lrmx",
        "solve/trace.csv",
        "solve/summary.json",
        "conv/convergence.csv",
        "conv/convergence_trials.csv",
        "conv/convergence_cv.json",
        "phase/phase.csv",
        "phase/phase_trials.csv",
        "staterr/staterr.csv",
        "staterr/staterr_trials.csv",
        "checks/rip.json",
        "checks/gradcheck.json",
        "checks/lemmas.json",
        "checks/rho.json",
    ];
    let complete = expected.iter().all(|f| root.join("first").join(f).is_file());
    outcome(
        ok && differing.is_empty() && complete && files == expected.len(),
        format!(
            "{files} output files from 9 commands compared across two runs; {} differ {:?}",
            differing.len(),
            differing
        ),
    )
}

fn report(id: usize, title: &str, elapsed: Duration, limit: Option<Duration>, result: Outcome) -> bool {
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let pass = result.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(", budget {}s", l.as_secs()));
    println!(
        "criterion {id:>2} [{}] {title}: {} ({:.1}s{budget})",
        if pass { "PASS" } else { "FAIL" },
        result.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn main() {
    let secs = Duration::from_secs;
    let mut passed = Vec::new();

    let (r, t) = timed(criterion_1);
    passed.push(report(1, "gradient correctness", t, Some(secs(5)), r));
    let (r, t) = timed(criterion_2);
    passed.push(report(2, "variance-reduced direction", t, Some(secs(5)), r));

    // Criteria 3 and 4 share one run; the informational tuned-GD rerun is not
    // counted against the budget.
    let (conv, t_conv) = timed(|| run_convergence(&convergence_config(0.1)).expect("convergence experiment runs"));
    let (r, t) = timed(|| criterion_3(&conv));
    passed.push(report(
        3,
        "noiseless linear convergence",
        t_conv + t,
        Some(secs(180)),
        r,
    ));
    let tuned = run_convergence(&convergence_config(0.4)).ok();
    let (r, t) = timed(|| criterion_4(&conv, tuned.as_ref()));
    passed.push(report(
        4,
        "SVRG vs GD at matched data passes",
        t_conv + t,
        Some(secs(300)),
        r,
    ));

    let (r, t) = timed(criterion_5);
    passed.push(report(5, "phase transition", t, Some(secs(900)), r));
    let (r, t) = timed(criterion_6);
    passed.push(report(6, "statistical error scaling", t, Some(secs(900)), r));
    let (r, t) = timed(criterion_7);
    passed.push(report(7, "deterministic lemma suites", t, Some(secs(30)), r));
    let (r, t) = timed(criterion_8);
    passed.push(report(8, "curvature and smoothness probes", t, Some(secs(120)), r));
    let (r, t) = timed(criterion_9);
    passed.push(report(9, "contraction calculator", t, Some(secs(1)), r));
    let (r, t) = timed(criterion_10);
    passed.push(report(10, "CLI reproducibility", t, None, r));

    let failed = passed.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} of {} criteria passed",
        passed.len() - failed,
        passed.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
