//! Randomized instance generators for the lemma checks and local probes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_lemma_a1, check_lemma_b2, check_lemma_b3_b4, gradcheck, holds_with_slack, probe_curvature_smoothness,
    rip_estimate, rip_estimate_range, LEMMA_SLACK,
};
use crate::error::{Error, Result};
use crate::objective::FactorPair;
use crate::rng::{derive_seed, gaussian_matrix, random_rotation, stream};
use crate::sensing::{generate_dataset, EnsembleSpec, NoiseSpec, SensingDataset};

/// Outcome counts of one randomized suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteTally {
    pub instances: usize,
    /// Instances where the inequality's precondition held and it was evaluated.
    pub evaluated: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen (negative means a violation).
    pub min_margin: f64,
}

impl SuiteTally {
    fn new() -> Self {
        SuiteTally {
            min_margin: f64::INFINITY,
            ..Default::default()
        }
    }

    fn add(&mut self, evaluated: bool, holds: bool, margin: f64) {
        self.instances += 1;
        if evaluated {
            self.evaluated += 1;
            self.min_margin = self.min_margin.min(margin);
            if !holds {
                self.violations += 1;
            }
        }
    }
}

/// Random dimensions `d1, d2 ∈ [2, max_dim]`, `r ∈ [1, min(d1, d2)]`.
pub fn random_dims(rng: &mut impl Rng, max_dim: usize) -> (usize, usize, usize) {
    let d1 = rng.random_range(2..=max_dim);
    let d2 = rng.random_range(2..=max_dim);
    let r = rng.random_range(1..=d1.min(d2));
    (d1, d2, r)
}

fn gaussian_pair(rng: &mut impl Rng, d1: usize, d2: usize, r: usize) -> FactorPair {
    FactorPair {
        u: gaussian_matrix(rng, d1, r),
        v: gaussian_matrix(rng, d2, r),
    }
}

/// Balanced factors of a random rank-`r` matrix.
pub fn random_balanced(rng: &mut impl Rng, d1: usize, d2: usize, r: usize) -> Result<FactorPair> {
    let x = gaussian_pair(rng, d1, d2, r).product();
    FactorPair::balanced_from_matrix(&x, r)
}

/// `Z*R + s·G` with a random rotation and perturbation scale `s`.
fn perturbed(rng: &mut impl Rng, base: &FactorPair, scale: f64) -> Result<FactorPair> {
    let r = base.rank();
    let mut z = base.rotate(&random_rotation(rng, r))?;
    z.u.axpy(scale, &gaussian_matrix(rng, base.d1(), r))?;
    z.v.axpy(scale, &gaussian_matrix(rng, base.d2(), r))?;
    Ok(z)
}

/// Perturbation scales spanning tiny to large relative moves.
const SCALES: [f64; 5] = [1e-3, 1e-2, 0.1, 0.5, 2.0];

/// Summary of the deterministic-lemma suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteSummary {
    pub a1: SuiteTally,
    pub b2: SuiteTally,
    pub b3: SuiteTally,
    pub b4: SuiteTally,
}

impl LemmaSuiteSummary {
    pub fn violations(&self) -> usize {
        self.a1.violations + self.b2.violations + self.b3.violations + self.b4.violations
    }
}

/// Runs `instances` random draws of each of the regularizer-curvature,
/// factorization-closeness and lifted-distance inequalities, with all
/// dimensions at most `max_dim`.
pub fn lemma_suite(instances: usize, max_dim: usize, seed: u64) -> Result<LemmaSuiteSummary> {
    if max_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "max_dim must be at least 2, got {max_dim}"
        )));
    }
    let mut a1 = SuiteTally::new();
    let mut b2 = SuiteTally::new();
    let mut b3 = SuiteTally::new();
    let mut b4 = SuiteTally::new();
    for k in 0..instances as u64 {
        let scale = SCALES[k as usize % SCALES.len()];

        let mut rng = stream(derive_seed(seed, "lemma/a1", k), "lemma");
        let (d1, d2, r) = random_dims(&mut rng, max_dim);
        let zstar = random_balanced(&mut rng, d1, d2, r)?;
        let z = perturbed(&mut rng, &zstar, scale * zstar.stacked().max_abs())?;
        let rep = check_lemma_a1(&z, &zstar)?;
        a1.add(true, rep.holds, rep.lhs - rep.rhs);

        // B.2 and B.4 have preconditions: halve the perturbation until they hold
        let mut rng = stream(derive_seed(seed, "lemma/b2", k), "lemma");
        let (d1, d2, r) = random_dims(&mut rng, max_dim);
        let base = gaussian_pair(&mut rng, d1, d2, r);
        let mut s = 0.2 * scale;
        let rep = loop {
            let moved = perturbed(&mut rng, &base, s)?;
            let rep = check_lemma_b2(&base.product(), &moved.product(), r)?;
            if rep.applicable || s < 1e-12 {
                break rep;
            }
            s *= 0.5;
        };
        b2.add(rep.applicable, rep.holds, rep.rhs - rep.lhs);

        let mut rng = stream(derive_seed(seed, "lemma/b3", k), "lemma");
        let (d1, d2, r) = random_dims(&mut rng, max_dim);
        let z2 = gaussian_pair(&mut rng, d1, d2, r);
        let z1 = perturbed(&mut rng, &z2, scale)?;
        let rep = check_lemma_b3_b4(&z1, &z2)?;
        b3.add(
            true,
            holds_with_slack(rep.b3_lhs, rep.b3_rhs, LEMMA_SLACK),
            rep.b3_rhs - rep.b3_lhs,
        );

        let mut rng = stream(derive_seed(seed, "lemma/b4", k), "lemma");
        let (d1, d2, r) = random_dims(&mut rng, max_dim);
        let z2 = gaussian_pair(&mut rng, d1, d2, r);
        let mut s = scale;
        let rep = loop {
            let rep = check_lemma_b3_b4(&perturbed(&mut rng, &z2, s)?, &z2)?;
            if rep.b4_applicable || s < 1e-12 {
                break rep;
            }
            s *= 0.5;
        };
        let b4_holds = holds_with_slack(rep.b4_lhs, rep.b4_rhs, LEMMA_SLACK);
        b4.add(rep.b4_applicable, b4_holds, rep.b4_rhs - rep.b4_lhs);
    }
    Ok(LemmaSuiteSummary { a1, b2, b3, b4 })
}

/// Worst relative deviation between analytic and finite-difference gradients
/// over `instances` random problems with dimensions at most `max_dim`.
pub fn gradcheck_suite(instances: usize, max_dim: usize, step: f64, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..instances as u64 {
        let mut rng = stream(derive_seed(seed, "gradcheck", k), "gradcheck");
        let (d1, d2, r) = random_dims(&mut rng, max_dim);
        let xstar = gaussian_pair(&mut rng, d1, d2, r).product();
        let n = rng.random_range(2..=4);
        let b = rng.random_range(3..=8);
        let ds = generate_dataset(
            EnsembleSpec::gaussian(d1, d2),
            &xstar,
            n * b,
            b,
            NoiseSpec::gaussian(0.1),
            derive_seed(seed, "gradcheck/data", k),
        )?;
        let z = gaussian_pair(&mut rng, d1, d2, r);
        worst = worst.max(gradcheck(&ds, &z, step)?.rel_deviation);
    }
    Ok(worst)
}

/// Settings of the local curvature/smoothness probe suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSuiteConfig {
    pub d1: usize,
    pub d2: usize,
    pub r: usize,
    pub n_measurements: usize,
    pub batch_size: usize,
    /// Probe points drawn with `‖H‖ ≤ radius·√σ_r`.
    pub points: usize,
    pub radius: f64,
    /// Random matrices per restricted isometry estimate.
    pub rip_trials: usize,
    /// The dataset must have an estimated constant below this value.
    pub delta_max: f64,
    /// Dataset seeds tried, in order, until one meets `delta_max`.
    pub max_dataset_draws: usize,
}

impl Default for ProbeSuiteConfig {
    fn default() -> Self {
        ProbeSuiteConfig {
            d1: 20,
            d2: 15,
            r: 2,
            n_measurements: 2000,
            batch_size: 200,
            points: 200,
            radius: 0.2,
            rip_trials: 20,
            delta_max: 1.0 / 16.0,
            max_dataset_draws: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSuiteSummary {
    pub dataset_seed: u64,
    pub dataset_draws: usize,
    /// Estimated constant of the full operator at rank order `4r`.
    pub delta_hat: f64,
    /// Largest per-batch estimate at rank order `4r`.
    pub delta_prime_hat: f64,
    pub sigma_r: f64,
    pub curvature: SuiteTally,
    pub smoothness: SuiteTally,
    /// Largest relative gap between `‖Z̃ᵀZ‖²` and `‖UᵀU − VᵀV‖²`.
    pub max_imbalance_identity_gap: f64,
}

impl ProbeSuiteSummary {
    pub fn violations(&self) -> usize {
        self.curvature.violations + self.smoothness.violations
    }
}

/// Finds a noiseless dataset whose operator estimate is below `delta_max`,
/// then probes both local inequalities at random points near the truth.
pub fn probe_suite(cfg: &ProbeSuiteConfig, seed: u64) -> Result<ProbeSuiteSummary> {
    let (d1, d2, r) = (cfg.d1, cfg.d2, cfg.r);
    let mut rng = stream(derive_seed(seed, "probe/xstar", 0), "probe");
    let zstar = random_balanced(&mut rng, d1, d2, r)?;
    let xstar = zstar.product();

    let mut chosen: Option<(u64, SensingDataset, f64)> = None;
    let mut draws = 0;
    for k in 0..cfg.max_dataset_draws as u64 {
        draws += 1;
        let ds_seed = derive_seed(seed, "probe/dataset", k);
        let ds = generate_dataset(
            EnsembleSpec::gaussian(d1, d2),
            &xstar,
            cfg.n_measurements,
            cfg.batch_size,
            NoiseSpec::NONE,
            ds_seed,
        )?;
        let est = rip_estimate(&ds, 4 * r, cfg.rip_trials, derive_seed(ds_seed, "probe/rip", 0))?;
        if est.delta_hat < cfg.delta_max {
            chosen = Some((ds_seed, ds, est.delta_hat));
            break;
        }
    }
    let Some((dataset_seed, ds, delta_hat)) = chosen else {
        return Err(Error::NotConverged {
            what: "search for a well-conditioned dataset",
            iterations: draws,
            residual: cfg.delta_max,
        });
    };

    let mut delta_prime_hat = 0.0f64;
    for i in 0..ds.num_batches() {
        let est = rip_estimate_range(
            &ds,
            ds.batch_range(i)?,
            4 * r,
            cfg.rip_trials,
            derive_seed(dataset_seed, "probe/batch-rip", i as u64),
        )?;
        delta_prime_hat = delta_prime_hat.max(est.delta_hat);
    }

    let sigma_r = crate::linalg::top_k_svd(&xstar, r)?.s[r - 1];
    let mut curvature = SuiteTally::new();
    let mut smoothness = SuiteTally::new();
    let mut max_gap = 0.0f64;
    for k in 0..cfg.points as u64 {
        let mut rng = stream(derive_seed(seed, "probe/point", k), "probe");
        let h = gaussian_matrix(&mut rng, d1 + d2, r);
        let len = cfg.radius * sigma_r.sqrt() * rng.random_range(0.0..=1.0f64);
        let h = h.scale(len / h.frobenius_norm());
        let base = zstar.rotate(&random_rotation(&mut rng, r))?.stacked();
        let z = FactorPair::from_stacked(&base.add(&h)?, d1)?;
        let rep = probe_curvature_smoothness(&ds, &z, &zstar, delta_prime_hat)?;
        curvature.add(true, rep.curvature_holds, rep.curvature_lhs - rep.curvature_rhs);
        smoothness.add(
            true,
            rep.smoothness_holds,
            rep.smoothness_margin.min(rep.loss_smoothness_margin),
        );
        max_gap = max_gap.max(rep.imbalance_identity_gap);
    }
    Ok(ProbeSuiteSummary {
        dataset_seed,
        dataset_draws: draws,
        delta_hat,
        delta_prime_hat,
        sigma_r,
        curvature,
        smoothness,
        max_imbalance_identity_gap: max_gap,
    })
}
