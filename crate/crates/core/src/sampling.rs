//! Seeded test points and random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::linalg::{self, c};
use crate::algebra::{AlgElem, Mat};
use crate::realization::Realization;

/// Deterministic generator for a `(seed, stream)` pair.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / 2f64.sqrt()
    })
}

/// `(G + G*)/2` for a complex Gaussian `G`.
pub fn gaussian_hermitian(rng: &mut impl Rng, n: usize) -> Mat {
    linalg::hermitian_part(&gaussian_matrix(rng, n, n))
}

/// Evaluation points `b = H₁ + i(1 + |H₂|)` at level `n`, so `Im b ⪰ 1`.
///
/// The first points are `i·y·1` for `y ∈ {1, 5, 20}`.
pub fn half_plane_samples(d: usize, n: usize, count: usize, seed: u64) -> Vec<AlgElem> {
    let mut r = rng(seed, (d as u64) << 32 | n as u64);
    let dim = n * d;
    let mut out: Vec<AlgElem> = [1.0, 5.0, 20.0].iter().take(count).map(|&y| AlgElem::iy(d, n, y)).collect();
    while out.len() < count {
        let h1 = gaussian_hermitian(&mut r, dim);
        let h2 = gaussian_hermitian(&mut r, dim);
        let im = linalg::identity(dim) + linalg::hermitian_abs(&h2);
        let b = h1 + im * c(0.0, 1.0);
        out.push(AlgElem::new(d, n, b).expect("finite sample"));
    }
    out
}

/// A well-conditioned `S ∈ GL_n`: a random unitary times `exp(δH)`.
pub fn near_unitary(rng: &mut impl Rng, n: usize, delta: f64) -> Mat {
    let g = gaussian_matrix(rng, n, n);
    let q = g.qr().q();
    let h = gaussian_hermitian(rng, n);
    let (vals, vecs) = linalg::hermitian_eigen(&h);
    let e = linalg::from_real_diag(&vals.iter().map(|v| (delta * v).exp()).collect::<Vec<_>>());
    q * (&vecs * e * vecs.adjoint())
}

/// Random realization over `M_d` with multiplicity `m`, scaled so that the
/// assembled operator has norm `norm`.
pub fn random_realization(d: usize, m: usize, norm: f64, seed: u64) -> Realization {
    let mut r = rng(seed, 0xa11ce);
    let n = (1 + m) * d;
    let x = gaussian_hermitian(&mut r, n);
    let scale = norm / linalg::spectral_norm(&x).max(1e-300);
    Realization::from_operator(d, &(x * c(scale, 0.0))).expect("Hermitian by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_in_the_half_plane_and_reproducible() {
        let a = half_plane_samples(2, 3, 10, 7);
        let b = half_plane_samples(2, 3, 10, 7);
        assert_eq!(a, b);
        for s in &a {
            assert!(s.min_imag() >= 1.0 - 1e-12);
        }
        assert_eq!(a[1], AlgElem::iy(2, 3, 5.0));
    }

    #[test]
    fn random_realization_has_requested_norm() {
        let r = random_realization(2, 2, 1.5, 3);
        assert!((r.norm() - 1.5).abs() < 1e-12);
    }
}
