//! Small dense linear-algebra helpers shared by the extrapolation and
//! bound-evaluation code.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Relative tolerance for the power-iteration stopping rule.
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;

/// Largest singular value of `a`, via power iteration on the Gram operator.
///
/// Deterministic: the start vector comes from a fixed seed, so repeated calls
/// on the same matrix return bitwise-identical values.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 || a.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    // Iterate in the smaller dimension; the Gram operator is applied as two
    // rectangular products so `a' * a` is never formed explicitly.
    let dim = cols.min(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut v = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
    v /= v.norm();

    let apply = |v: &DVector<f64>| -> DVector<f64> {
        if cols <= rows {
            a.tr_mul(&(a * v))
        } else {
            a * (a.tr_mul(v))
        }
    };

    let mut sq = 0.0_f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            // v landed exactly in the null space; restart from a fresh draw.
            v = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
            v /= v.norm();
            continue;
        }
        let next = v.dot(&w).max(0.0);
        v = w / norm;
        if (next - sq).abs() <= POWER_TOL * next.max(f64::MIN_POSITIVE) {
            sq = next;
            break;
        }
        sq = next;
    }
    sq.sqrt()
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian draw with the R
/// diagonal sign-fixed so the factorization is unique.
pub fn random_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for i in 0..d {
        if r[(i, i)] < 0.0 {
            for k in 0..d {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    q
}

/// Uniform draw from the unit sphere in `d` dimensions.
pub fn unit_sphere_vector<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-30 {
            return v / n;
        }
    }
}

/// True when every entry is finite.
pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}
