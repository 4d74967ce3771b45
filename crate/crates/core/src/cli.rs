//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{
    contraction_rho, gradcheck_suite, lemma_suite, probe_suite, rip_estimate, ProbeSuiteConfig, Report, SpectralSummary,
};
use crate::error::{Error, Result};
use crate::experiments::{run_convergence, run_phase, run_staterr, CvSelection, ExperimentConfig};
use crate::linalg::io::{load_lrmx, save_lrmx};
use crate::objective::objective_full;
use crate::rng::{gaussian_matrix, stream};
use crate::sensing::{generate_dataset, EnsembleKind, EnsembleSpec, NoiseSpec, SensingDataset};
use crate::solvers::{
    default_eta, gd_solve, init_projected_gd, svrg_solve, InitConfig, OutputPolicy, Reference, SolverConfig,
};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "MATSENSE_SEED";

/// Ground truth written next to generated datasets.
pub const XSTAR_FILE: &str = "xstar.lrmx";

const EXPERIMENT_HELP: &str = "\
Output files (all begin with a header row):
  convergence.csv  algorithm,N,trial,epoch,data_passes,rel_error
  phase.csv        N,N_over_rdprime,prob_recovery,trials
  staterr.csv      N,N_over_rdprime,mean_sq_rel_error,stderr,trials,failures
  <kind>_trials.csv
                   experiment,trial,seed,d1,d2,r,N,b,m,eta,final_rel_error,recovered,error
  <kind>_cv.json   cross-validation scores and selections, when enabled

rel_error is the squared relative error |X - X*|_F^2 / |X*|_F^2. A run that
fails numerically has rel_error NaN and its message in the error column.";

const SOLVE_HELP: &str = "\
Output files:
  u.lrmx, v.lrmx   recovered factors
  trace.csv        epoch,data_passes,objective,rel_error,dist
                   (rel_error and dist are empty without xstar.lrmx in the dataset)
  summary.json     step size, epochs and final values";

#[derive(Debug, Parser)]
#[command(
    name = "matsense",
    version,
    about = "Low-rank matrix sensing by variance-reduced gradient descent"
)]
pub struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to MATSENSE_SEED, then the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for independent trials.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a ground-truth matrix and its measurements and save them.
    Generate(GenerateArgs),
    /// Recover a low-rank matrix from a saved dataset.
    #[command(after_help = SOLVE_HELP)]
    Solve(SolveArgs),
    /// Run a synthetic experiment and write CSV.
    #[command(after_help = EXPERIMENT_HELP)]
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
    },
    /// Run a diagnostic and write a JSON report.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        /// Dataset directory for `rip` (otherwise one is generated).
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    Convergence,
    Phase,
    Staterr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Rip,
    Gradcheck,
    Lemmas,
    Rho,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub d1: Option<usize>,
    #[arg(long)]
    pub d2: Option<usize>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Number of measurements N.
    #[arg(long)]
    pub measurements: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dataset directory written by `generate`.
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    pub n_measurements: usize,
    pub batch_size: usize,
    pub noise_sigma: f64,
    pub ensemble: EnsembleKind,
    pub seed: u64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            d1: 50,
            d2: 30,
            rank: 3,
            n_measurements: 750,
            batch_size: 75,
            noise_sigma: 0.0,
            ensemble: EnsembleKind::GaussianIid,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Svrg,
    Gd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub rank: usize,
    pub algorithm: Algorithm,
    /// Absolute step size; overrides `eta_scale`.
    pub eta: Option<f64>,
    /// `η = eta_scale / ‖U⁰V⁰ᵀ‖₂` when `eta` is absent.
    pub eta_scale: f64,
    /// Inner iterations per epoch; defaults to the number of batches.
    pub inner_iters: Option<usize>,
    pub epochs: usize,
    /// Full-gradient steps; defaults to the SVRG data-pass budget.
    pub gd_iterations: Option<usize>,
    pub output_policy: OutputPolicy,
    pub tol_stop: Option<f64>,
    pub init_tau: f64,
    pub init_iterations: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rank: 3,
            algorithm: Algorithm::Svrg,
            eta: None,
            eta_scale: 0.1,
            inner_iters: None,
            epochs: 25,
            gd_iterations: None,
            output_policy: OutputPolicy::RandomT,
            tol_stop: None,
            init_tau: 0.5,
            init_iterations: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RipCheckConfig {
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
    /// Defaults to `50·r·max(d1, d2)`.
    pub n_measurements: Option<usize>,
    pub r_order: usize,
    pub trials: usize,
    /// The check passes when the estimate is below this value.
    pub delta_max: f64,
    pub seed: u64,
}

impl Default for RipCheckConfig {
    fn default() -> Self {
        RipCheckConfig {
            d1: 20,
            d2: 15,
            r: 2,
            n_measurements: None,
            r_order: 2,
            trials: 200,
            delta_max: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub instances: usize,
    pub max_dim: usize,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            instances: 20,
            max_dim: 8,
            step: 1e-5,
            tolerance: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaCheckConfig {
    pub instances: usize,
    pub max_dim: usize,
    /// Also run the local curvature/smoothness probes.
    pub probes: Option<ProbeSuiteConfig>,
    pub seed: u64,
}

impl Default for LemmaCheckConfig {
    fn default() -> Self {
        LemmaCheckConfig {
            instances: 500,
            max_dim: 6,
            probes: Some(ProbeSuiteConfig::default()),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhoCheckConfig {
    pub eta: f64,
    pub m: usize,
    pub sigma1: f64,
    pub sigma_r: f64,
    pub r: usize,
    pub delta4r_prime: f64,
}

impl Default for RhoCheckConfig {
    fn default() -> Self {
        RhoCheckConfig {
            eta: 1.0 / 576.0,
            m: 51_840,
            sigma1: 1.0,
            sigma_r: 1.0,
            r: 1,
            delta4r_prime: 0.0,
        }
    }
}

/// Failure of a CLI invocation, with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 1 on usage or input errors,
/// 2 on numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), CliError> {
    let env_seed = match std::env::var(SEED_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<u64>()
                .map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?,
        ),
        Err(_) => None,
    };
    let seed = cli.seed.or(env_seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))?;
    fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    pool.install(|| match &cli.command {
        Command::Generate(args) => generate(cli, args, seed),
        Command::Solve(args) => solve(cli, args, seed),
        Command::Experiment { kind } => experiment(cli, *kind, seed),
        Command::Check { kind, data } => check(cli, *kind, data.as_deref(), seed),
    })
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> std::result::Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config file {}: {e}", path.display())))
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

fn generate(cli: &Cli, args: &GenerateArgs, seed: Option<u64>) -> std::result::Result<(), CliError> {
    let mut cfg: GenerateConfig = load_config(cli.config.as_deref())?;
    cfg.d1 = args.d1.unwrap_or(cfg.d1);
    cfg.d2 = args.d2.unwrap_or(cfg.d2);
    cfg.rank = args.rank.unwrap_or(cfg.rank);
    cfg.n_measurements = args.measurements.unwrap_or(cfg.n_measurements);
    cfg.batch_size = args.batch_size.unwrap_or(cfg.batch_size);
    cfg.noise_sigma = args.noise_sigma.unwrap_or(cfg.noise_sigma);
    cfg.seed = seed.unwrap_or(cfg.seed);
    if cfg.rank == 0 || cfg.rank > cfg.d1.min(cfg.d2) {
        return Err(usage(format!("rank {} is invalid for {}x{}", cfg.rank, cfg.d1, cfg.d2)));
    }

    let mut rng = stream(cfg.seed, "generate/xstar");
    let u = gaussian_matrix(&mut rng, cfg.d1, cfg.rank);
    let v = gaussian_matrix(&mut rng, cfg.d2, cfg.rank);
    let xstar = u.matmul_t(&v)?;
    let noise = if cfg.noise_sigma > 0.0 {
        NoiseSpec::gaussian(cfg.noise_sigma)
    } else {
        NoiseSpec::NONE
    };
    let spec = EnsembleSpec {
        kind: cfg.ensemble,
        d1: cfg.d1,
        d2: cfg.d2,
    };
    let ds = generate_dataset(spec, &xstar, cfg.n_measurements, cfg.batch_size, noise, cfg.seed)?;
    ds.save(&cli.out)?;
    save_lrmx(cli.out.join(XSTAR_FILE), &xstar)?;
    Ok(())
}

fn solve(cli: &Cli, args: &SolveArgs, seed: Option<u64>) -> std::result::Result<(), CliError> {
    let mut cfg: SolveConfig = load_config(cli.config.as_deref())?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    let ds = SensingDataset::load(&args.data)?;
    let xstar_path = args.data.join(XSTAR_FILE);
    let reference = if xstar_path.exists() {
        Some(Reference::new(load_lrmx(&xstar_path)?, cfg.rank)?)
    } else {
        None
    };
    let z0 = init_projected_gd(
        &ds,
        &InitConfig {
            tau: cfg.init_tau,
            iterations: cfg.init_iterations,
            rank: cfg.rank,
        },
    )?;
    let eta = match cfg.eta {
        Some(eta) => eta,
        None => default_eta(&z0, cfg.eta_scale)?,
    };
    let inner_iters = cfg.inner_iters.unwrap_or(ds.num_batches());
    let passes_per_epoch = 1.0 + (inner_iters * ds.batch_size()) as f64 / ds.len() as f64;
    let (z, trace) = match cfg.algorithm {
        Algorithm::Svrg => {
            let scfg = SolverConfig {
                eta,
                inner_iters,
                epochs: cfg.epochs,
                output_policy: cfg.output_policy,
                seed: cfg.seed,
                tol_stop: cfg.tol_stop,
            };
            svrg_solve(&ds, &z0, &scfg, reference.as_ref())?
        }
        Algorithm::Gd => {
            let iterations = cfg
                .gd_iterations
                .unwrap_or((cfg.epochs as f64 * passes_per_epoch).floor() as usize);
            gd_solve(&ds, &z0, eta, iterations, reference.as_ref())?
        }
    };
    save_lrmx(cli.out.join("u.lrmx"), &z.u)?;
    save_lrmx(cli.out.join("v.lrmx"), &z.v)?;
    write(cli.out.join("trace.csv"), &trace.to_csv())?;
    let last = trace.last().expect("trace holds the starting point");
    let summary = json!({
        "algorithm": cfg.algorithm,
        "eta": eta,
        "records": trace.records.len(),
        "data_passes": last.data_passes,
        "objective": objective_full(&ds, &z)?,
        "rel_error": last.rel_error,
        "dist": last.dist,
        "seed": cfg.seed,
    });
    write(cli.out.join("summary.json"), &pretty(&summary))?;
    Ok(())
}

fn experiment(cli: &Cli, kind: ExperimentKind, seed: Option<u64>) -> std::result::Result<(), CliError> {
    let mut cfg: ExperimentConfig = load_config(cli.config.as_deref())?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let (name, csv, trials, cv): (&str, String, String, Vec<CvSelection>) = match kind {
        ExperimentKind::Convergence => {
            let r = run_convergence(&cfg)?;
            ("convergence", r.to_csv(), r.trials_csv(), r.cv)
        }
        ExperimentKind::Phase => {
            let r = run_phase(&cfg)?;
            ("phase", r.to_csv(), r.trials_csv(), r.cv)
        }
        ExperimentKind::Staterr => {
            let r = run_staterr(&cfg)?;
            ("staterr", r.to_csv(), r.trials_csv(), r.cv)
        }
    };
    for sel in &cv {
        eprintln!(
            "cross-validation N={}: b={}, m={} (median error {:e})",
            sel.n_measurements, sel.batch_size, sel.inner_iters, sel.median_error
        );
    }
    write(cli.out.join(format!("{name}.csv")), &csv)?;
    write(cli.out.join(format!("{name}_trials.csv")), &trials)?;
    if !cv.is_empty() {
        write(cli.out.join(format!("{name}_cv.json")), &pretty(&cv))?;
    }
    Ok(())
}

fn check(cli: &Cli, kind: CheckKind, data: Option<&Path>, seed: Option<u64>) -> std::result::Result<(), CliError> {
    let config = cli.config.as_deref();
    let report = match kind {
        CheckKind::Rip => {
            let mut cfg: RipCheckConfig = load_config(config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let ds = match data {
                Some(dir) => SensingDataset::load(dir)?,
                None => {
                    let n = cfg.n_measurements.unwrap_or(50 * cfg.r * cfg.d1.max(cfg.d2));
                    let zero = crate::linalg::Matrix::zeros(cfg.d1, cfg.d2);
                    generate_dataset(
                        EnsembleSpec::gaussian(cfg.d1, cfg.d2),
                        &zero,
                        n,
                        n,
                        NoiseSpec::NONE,
                        cfg.seed,
                    )?
                }
            };
            let est = rip_estimate(&ds, cfg.r_order, cfg.trials, cfg.seed)?;
            Report {
                check: "rip".into(),
                inputs: json!({
                    "d1": ds.d1(), "d2": ds.d2(), "n_measurements": ds.len(),
                    "r_order": cfg.r_order, "trials": cfg.trials, "delta_max": cfg.delta_max,
                    "note": "Monte-Carlo lower bound on the restricted isometry constant",
                }),
                margins: json!({
                    "delta_hat": est.delta_hat,
                    "max_ratio_dev": est.max_ratio_dev,
                    "margin": cfg.delta_max - est.delta_hat,
                }),
                pass: est.delta_hat < cfg.delta_max,
                seed: cfg.seed,
            }
        }
        CheckKind::Gradcheck => {
            let mut cfg: GradcheckConfig = load_config(config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let worst = gradcheck_suite(cfg.instances, cfg.max_dim, cfg.step, cfg.seed)?;
            Report {
                check: "gradcheck".into(),
                inputs: serde_json::to_value(&cfg).expect("plain data"),
                margins: json!({ "max_rel_deviation": worst, "margin": cfg.tolerance - worst }),
                pass: worst <= cfg.tolerance,
                seed: cfg.seed,
            }
        }
        CheckKind::Lemmas => {
            let mut cfg: LemmaCheckConfig = load_config(config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let suite = lemma_suite(cfg.instances, cfg.max_dim, cfg.seed)?;
            let probes = cfg.probes.as_ref().map(|p| probe_suite(p, cfg.seed)).transpose()?;
            let violations = suite.violations() + probes.as_ref().map_or(0, |p| p.violations());
            Report {
                check: "lemmas".into(),
                inputs: serde_json::to_value(&cfg).expect("plain data"),
                margins: json!({ "deterministic": suite, "probes": probes, "violations": violations }),
                pass: violations == 0,
                seed: cfg.seed,
            }
        }
        CheckKind::Rho => {
            let cfg: RhoCheckConfig = load_config(config)?;
            let summary = SpectralSummary::new(cfg.sigma1, cfg.sigma_r, cfg.r)?;
            let rep = contraction_rho(cfg.eta, cfg.m, &summary, cfg.delta4r_prime)?;
            Report {
                check: "rho".into(),
                inputs: serde_json::to_value(&cfg).expect("plain data"),
                margins: json!({
                    "rho": rep.rho,
                    "simplified_rho": rep.simplified_rho,
                    "kappa": rep.kappa,
                    "margin": 1.0 - rep.rho,
                }),
                pass: rep.converges,
                seed: seed.unwrap_or(0),
            }
        }
    };
    let name = match kind {
        CheckKind::Rip => "rip",
        CheckKind::Gradcheck => "gradcheck",
        CheckKind::Lemmas => "lemmas",
        CheckKind::Rho => "rho",
    };
    let text = report.to_json();
    write(cli.out.join(format!("{name}.json")), &text)?;
    print!("{text}");
    Ok(())
}
