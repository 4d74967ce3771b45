//! Measurement ensembles, the linear sensing operator and its adjoint.

use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy_slice, dot, io, Matrix};
use crate::rng::{self, standard_normal, GENERATOR_VERSION};

/// Distribution of the entries of each sensing matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Every entry i.i.d. N(0, 1).
    #[default]
    GaussianIid,
    /// Diagonal entries N(0, 2), off-diagonal N(0, 1).
    GaussianDiag2,
    /// Entries ±1 with equal probability.
    Rademacher,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub d1: usize,
    pub d2: usize,
}

impl EnsembleSpec {
    pub fn gaussian(d1: usize, d2: usize) -> Self {
        EnsembleSpec {
            kind: EnsembleKind::GaussianIid,
            d1,
            d2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian,
}

/// Additive observation noise. `sigma` is ignored when `kind` is `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        kind: NoiseKind::None,
        sigma: 0.0,
    };

    pub fn gaussian(sigma: f64) -> Self {
        NoiseSpec {
            kind: NoiseKind::Gaussian,
            sigma,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.kind == NoiseKind::None || self.sigma == 0.0
    }
}

/// `N` sensing matrices with their observations, split into `n` contiguous
/// batches of `b` measurements each.
#[derive(Clone, Debug)]
pub struct SensingDataset {
    spec: EnsembleSpec,
    noise_spec: NoiseSpec,
    seed: u64,
    batch_size: usize,
    // N blocks of d1*d2 row-major entries
    matrices: Arc<Vec<f64>>,
    y: Vec<f64>,
    noise: Option<Vec<f64>>,
}

/// Draws sensing matrices and noisy observations `yᵢ = ⟨Aᵢ, X*⟩ + εᵢ`.
///
/// Matrices and noise come from independent streams keyed by `seed`, so the
/// matrices do not change when only the noise level changes.
pub fn generate_dataset(
    spec: EnsembleSpec,
    xstar: &Matrix,
    n_measurements: usize,
    batch_size: usize,
    noise: NoiseSpec,
    seed: u64,
) -> Result<SensingDataset> {
    if xstar.shape() != (spec.d1, spec.d2) {
        return Err(Error::dims(
            "generate_dataset",
            format!("{}x{}", spec.d1, spec.d2),
            format!("{}x{}", xstar.rows(), xstar.cols()),
        ));
    }
    check_partition(n_measurements, batch_size)?;
    if noise.kind == NoiseKind::Gaussian && !(noise.sigma >= 0.0 && noise.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be finite and non-negative, got {}",
            noise.sigma
        )));
    }

    let block = spec.d1 * spec.d2;
    let mut mat_rng = rng::stream(seed, "sensing/matrices");
    let mut matrices = Vec::with_capacity(n_measurements * block);
    for _ in 0..n_measurements {
        for j in 0..spec.d1 {
            for k in 0..spec.d2 {
                let v = match spec.kind {
                    EnsembleKind::GaussianIid => standard_normal(&mut mat_rng),
                    EnsembleKind::GaussianDiag2 => {
                        let z = standard_normal(&mut mat_rng);
                        if j == k {
                            std::f64::consts::SQRT_2 * z
                        } else {
                            z
                        }
                    }
                    EnsembleKind::Rademacher => {
                        if mat_rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                matrices.push(v);
            }
        }
    }

    let mut noise_rng = rng::stream(seed, "sensing/noise");
    let eps: Vec<f64> = match noise.kind {
        NoiseKind::None => vec![0.0; n_measurements],
        NoiseKind::Gaussian => (0..n_measurements)
            .map(|_| noise.sigma * standard_normal(&mut noise_rng))
            .collect(),
    };

    let y = matrices
        .chunks_exact(block)
        .zip(&eps)
        .map(|(a, e)| dot(a, xstar.data()) + e)
        .collect();

    Ok(SensingDataset {
        spec,
        noise_spec: noise,
        seed,
        batch_size,
        matrices: Arc::new(matrices),
        y,
        noise: Some(eps),
    })
}

fn check_partition(n_measurements: usize, batch_size: usize) -> Result<()> {
    if n_measurements == 0 || batch_size == 0 {
        return Err(Error::InvalidArgument(format!(
            "measurement count ({n_measurements}) and batch size ({batch_size}) must be positive"
        )));
    }
    if !n_measurements.is_multiple_of(batch_size) {
        return Err(Error::InvalidArgument(format!(
            "batch size {batch_size} does not divide measurement count {n_measurements}"
        )));
    }
    Ok(())
}

impl SensingDataset {
    /// Assembles a dataset from explicit sensing matrices and observations.
    pub fn from_parts(spec: EnsembleSpec, matrices: &[Matrix], y: Vec<f64>, batch_size: usize) -> Result<Self> {
        if matrices.len() != y.len() {
            return Err(Error::dims("SensingDataset::from_parts", matrices.len(), y.len()));
        }
        check_partition(y.len(), batch_size)?;
        let mut flat = Vec::with_capacity(matrices.len() * spec.d1 * spec.d2);
        for m in matrices {
            if m.shape() != (spec.d1, spec.d2) {
                return Err(Error::dims(
                    "SensingDataset::from_parts",
                    format!("{}x{}", spec.d1, spec.d2),
                    format!("{}x{}", m.rows(), m.cols()),
                ));
            }
            flat.extend_from_slice(m.data());
        }
        Ok(SensingDataset {
            spec,
            noise_spec: NoiseSpec::NONE,
            seed: 0,
            batch_size,
            matrices: Arc::new(flat),
            y,
            noise: None,
        })
    }

    pub fn spec(&self) -> EnsembleSpec {
        self.spec
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        self.noise_spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn d1(&self) -> usize {
        self.spec.d1
    }

    pub fn d2(&self) -> usize {
        self.spec.d2
    }

    /// Number of measurements `N`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Measurements per batch `b`.
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Number of batches `n = N / b`.
    pub fn num_batches(&self) -> usize {
        self.y.len() / self.batch_size
    }

    pub fn batch_range(&self, i: usize) -> Result<Range<usize>> {
        if i >= self.num_batches() {
            return Err(Error::IndexOutOfRange {
                op: "batch_range",
                index: i,
                len: self.num_batches(),
            });
        }
        Ok(i * self.batch_size..(i + 1) * self.batch_size)
    }

    pub fn full_range(&self) -> Range<usize> {
        0..self.len()
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    /// Realized noise vector, when the dataset was generated in-process.
    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    /// Row-major entries of `Aᵢ`.
    #[inline]
    pub fn measurement(&self, i: usize) -> &[f64] {
        let block = self.spec.d1 * self.spec.d2;
        &self.matrices[i * block..(i + 1) * block]
    }

    pub fn sensing_matrix(&self, i: usize) -> Matrix {
        Matrix::new(self.spec.d1, self.spec.d2, self.measurement(i).to_vec()).expect("stored blocks have d1*d2 entries")
    }

    /// All sensing matrices stacked vertically (`N·d1 × d2`).
    pub fn stacked_matrices(&self) -> Matrix {
        Matrix::new(self.len() * self.spec.d1, self.spec.d2, self.matrices.to_vec())
            .expect("stored blocks have d1*d2 entries")
    }

    /// Same sensing matrices with a different batch size.
    pub fn repartition(&self, batch_size: usize) -> Result<Self> {
        check_partition(self.len(), batch_size)?;
        let mut out = self.clone();
        out.batch_size = batch_size;
        Ok(out)
    }

    /// Same sensing matrices with replaced observations.
    pub fn with_observations(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.len() {
            return Err(Error::dims("with_observations", self.len(), y.len()));
        }
        let mut out = self.clone();
        out.y = y;
        out.noise = None;
        Ok(out)
    }

    /// Prefix of the first `n_measurements` measurements.
    pub fn truncated(&self, n_measurements: usize, batch_size: usize) -> Result<Self> {
        if n_measurements > self.len() {
            return Err(Error::IndexOutOfRange {
                op: "truncated",
                index: n_measurements,
                len: self.len(),
            });
        }
        check_partition(n_measurements, batch_size)?;
        let block = self.spec.d1 * self.spec.d2;
        Ok(SensingDataset {
            spec: self.spec,
            noise_spec: self.noise_spec,
            seed: self.seed,
            batch_size,
            matrices: Arc::new(self.matrices[..n_measurements * block].to_vec()),
            y: self.y[..n_measurements].to_vec(),
            noise: self.noise.as_ref().map(|e| e[..n_measurements].to_vec()),
        })
    }

    fn check_range(&self, range: &Range<usize>, op: &'static str) -> Result<()> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::IndexOutOfRange {
                op,
                index: range.end,
                len: self.len(),
            });
        }
        Ok(())
    }

    fn check_operand(&self, x: &Matrix, op: &'static str) -> Result<()> {
        if x.shape() != (self.spec.d1, self.spec.d2) {
            return Err(Error::dims(
                op,
                format!("{}x{}", self.spec.d1, self.spec.d2),
                format!("{}x{}", x.rows(), x.cols()),
            ));
        }
        Ok(())
    }

    /// `(⟨Aᵢ, x⟩)` for `i` in `range`.
    pub fn apply_operator(&self, x: &Matrix, range: Range<usize>) -> Result<Vec<f64>> {
        self.check_range(&range, "apply_operator")?;
        self.check_operand(x, "apply_operator")?;
        Ok(range.map(|i| dot(self.measurement(i), x.data())).collect())
    }

    /// `Σ_{i∈range} vᵢ·Aᵢ`, unnormalized.
    pub fn apply_adjoint(&self, v: &[f64], range: Range<usize>) -> Result<Matrix> {
        self.check_range(&range, "apply_adjoint")?;
        if v.len() != range.len() {
            return Err(Error::dims("apply_adjoint", range.len(), v.len()));
        }
        let mut out = Matrix::zeros(self.spec.d1, self.spec.d2);
        for (i, &vi) in range.zip(v) {
            if vi != 0.0 {
                axpy_slice(out.data_mut(), vi, self.measurement(i));
            }
        }
        Ok(out)
    }

    /// Residuals `⟨Aᵢ, x⟩ − yᵢ` over `range`.
    pub(crate) fn residuals(&self, x: &Matrix, range: Range<usize>) -> Vec<f64> {
        range.map(|i| dot(self.measurement(i), x.data()) - self.y[i]).collect()
    }

    /// Writes the dataset as a directory: `manifest.json`, `matrices.lrmx`
    /// (`N·d1 × d2`, one block per measurement) and `y.lrmx` (`N × 1`).
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = DatasetManifest {
            format_version: 1,
            generator_version: GENERATOR_VERSION,
            d1: self.spec.d1,
            d2: self.spec.d2,
            n_measurements: self.len(),
            batch_size: self.batch_size,
            num_batches: self.num_batches(),
            seed: self.seed,
            ensemble: self.spec.kind,
            noise: self.noise_spec,
        };
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Json {
            path: path.clone(),
            source: e,
        })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        io::save_lrmx(dir.join(MATRICES_FILE), &self.stacked_matrices())?;
        io::save_lrmx(dir.join(OBSERVATIONS_FILE), &Matrix::column_vector(self.y.clone())?)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })?;
        let stacked = io::load_lrmx(dir.join(MATRICES_FILE))?;
        let y = io::load_lrmx(dir.join(OBSERVATIONS_FILE))?;
        let n = manifest.n_measurements;
        if stacked.shape() != (n * manifest.d1, manifest.d2) || y.shape() != (n, 1) {
            return Err(Error::Format {
                what: "dataset directory",
                detail: format!(
                    "manifest declares N={n}, {}x{}; files hold {}x{} matrices and {}x{} observations",
                    manifest.d1,
                    manifest.d2,
                    stacked.rows(),
                    stacked.cols(),
                    y.rows(),
                    y.cols()
                ),
            });
        }
        check_partition(n, manifest.batch_size)?;
        Ok(SensingDataset {
            spec: EnsembleSpec {
                kind: manifest.ensemble,
                d1: manifest.d1,
                d2: manifest.d2,
            },
            noise_spec: manifest.noise,
            seed: manifest.seed,
            batch_size: manifest.batch_size,
            matrices: Arc::new(stacked.into_data()),
            y: y.into_data(),
            noise: None,
        })
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MATRICES_FILE: &str = "matrices.lrmx";
pub const OBSERVATIONS_FILE: &str = "y.lrmx";

/// JSON manifest of a saved dataset directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub generator_version: u32,
    pub d1: usize,
    pub d2: usize,
    pub n_measurements: usize,
    pub batch_size: usize,
    pub num_batches: usize,
    pub seed: u64,
    pub ensemble: EnsembleKind,
    pub noise: NoiseSpec,
}
