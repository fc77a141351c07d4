use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matops::{CMatrix, CVector, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gauss(r), gauss(r)))
}

pub fn random_real_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gauss(r), 0.0))
}

pub fn random_vector(r: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(gauss(r), gauss(r)))
}

pub fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_matrix(r, n, n);
    (&a + a.adjoint()) * C64::from(0.5)
}

pub fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    random_matrix(r, n, n).qr().q()
}

/// Faithful density matrix with real entries.
pub fn random_real_density(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_real_matrix(r, n, n);
    let m = &a * a.adjoint() + CMatrix::identity(n, n) * C64::from(0.1);
    let tr = m.trace();
    m / tr
}

#[allow(dead_code)]
pub fn real(m: &DMatrix<f64>) -> CMatrix {
    m.map(C64::from)
}
