//! Deterministic random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and a purpose tag, so independent consumers (sensing matrices, noise,
//! sampling of component indices, per-trial problems) never share a stream and
//! results are reproducible from `(seed, GENERATOR_VERSION)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;

/// Bumped whenever stream derivation changes in a way that alters outputs.
pub const GENERATOR_VERSION: u32 = 1;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    // FNV-1a
    tag.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Child seed for item `index` of the family `tag` under `master`.
///
/// Seeds of earlier indices do not depend on how many indices are drawn.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ tag_hash(tag)).wrapping_add(splitmix64(index)))
}

/// Generator for `purpose` under `seed`.
pub fn stream(seed: u64, purpose: &str) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag_hash(purpose));
    rng
}

pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| standard_normal(rng)).collect()
}

/// Matrix with i.i.d. N(0, 1) entries, filled row by row.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| standard_normal(rng))
}

/// `n × k` matrix with orthonormal columns (Q factor of a Gaussian matrix).
pub fn random_orthonormal(rng: &mut impl Rng, n: usize, k: usize) -> Matrix {
    let g = gaussian_matrix(rng, n, k);
    crate::linalg::qr::thin_q(&g)
}

/// Random element of the orthogonal group O(k).
pub fn random_rotation(rng: &mut impl Rng, k: usize) -> Matrix {
    random_orthonormal(rng, k, k)
}
