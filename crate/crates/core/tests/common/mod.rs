#![allow(dead_code)]

use nalgebra::DMatrix;
use qmsep::gksl::{invariant_states, DensityMatrix, GkslGenerator};
use qmsep::models::{generic_model, generic_stationary_state, GenericSpec};
use qmsep::{CMatrix, CVector, C64, DEFAULT_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

pub fn random_matrix(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| C64::new(gauss(r), gauss(r)))
}

pub fn random_vector(r: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(gauss(r), gauss(r)))
}

pub fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = random_matrix(r, n);
    (&a + a.adjoint()) * C64::from(0.5)
}

pub fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    random_matrix(r, n).qr().q()
}

/// Faithful real density matrix with eigenvalues bounded away from zero.
pub fn random_real_density(r: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| C64::from(gauss(r)));
    let m = &a * a.adjoint() + CMatrix::identity(n, n) * C64::from(0.1);
    let tr = m.trace();
    m / tr
}

/// Rewrites `gen` in the eigenbasis of its unique faithful invariant state,
/// so that the state is real diagonal, then puts it in special form.
pub fn special_in_state_basis(gen: &GkslGenerator) -> Option<(GkslGenerator, DensityMatrix)> {
    let inv = invariant_states(gen, DEFAULT_TOL).ok()?;
    let rho = inv.unique_faithful()?.clone();
    if rho.min_eigenvalue() < 1e-4 {
        return None;
    }
    let u = rho.eig().eigenvectors.clone();
    let conj = |x: &CMatrix| u.adjoint() * x * &u;
    let h = conj(gen.hamiltonian());
    let jumps = gen.jumps().iter().map(conj).collect();
    let rotated = GkslGenerator::new((&h + h.adjoint()) * C64::from(0.5), jumps).ok()?;
    let ev = &rho.eig().eigenvalues;
    let diag = CMatrix::from_diagonal(&CVector::from_iterator(ev.len(), ev.iter().map(|&x| C64::from(x))));
    let rho = DensityMatrix::new(diag, DEFAULT_TOL).ok()?;
    let special = rotated.make_special(&rho, DEFAULT_TOL).ok()?;
    Some((special, rho))
}

/// Random model with `d` full-rank jumps, in special form for its real
/// diagonal invariant state.
pub fn random_special_model(r: &mut ChaCha8Rng, n: usize, d: usize) -> (GkslGenerator, DensityMatrix) {
    loop {
        let jumps = (0..d).map(|_| random_matrix(r, n) * C64::from(0.6)).collect();
        let gen = GkslGenerator::new(random_hermitian(r, n), jumps).unwrap();
        if let Some(out) = special_in_state_basis(&gen) {
            return out;
        }
    }
}

/// Random model whose jump set is rank deficient: rank-one jumps plus one
/// jump that is a linear combination of the others.
pub fn random_deficient_model(r: &mut ChaCha8Rng, n: usize) -> (GkslGenerator, DensityMatrix) {
    loop {
        let mut jumps: Vec<CMatrix> = (0..n)
            .map(|_| {
                let a = random_vector(r, n);
                let b = random_vector(r, n);
                &a * b.adjoint() * C64::from(0.5)
            })
            .collect();
        let combo = &jumps[0] * C64::new(gauss(r), gauss(r)) + &jumps[1] * C64::new(gauss(r), gauss(r));
        jumps.push(combo);
        let gen = GkslGenerator::new(random_hermitian(r, n), jumps).unwrap();
        if let Some(out) = special_in_state_basis(&gen) {
            return out;
        }
    }
}

/// Rate matrix with positive entries off the diagonal except for a few
/// pairs removed in both directions, keeping the chain irreducible.
pub fn random_reversible_support_rates(r: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.2 + r.random::<f64>() * 2.0 });
    // Keep the path 0-1-…-(n−1) and drop some chords symmetrically.
    for i in 0..n {
        for j in i + 2..n {
            if r.random::<f64>() < 0.3 {
                g[(i, j)] = 0.0;
                g[(j, i)] = 0.0;
            }
        }
    }
    g
}

/// Rates satisfying `p_l γ_lm = p_m γ_ml` for a random positive `p`.
pub fn random_balanced_rates(r: &mut ChaCha8Rng, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut p: Vec<f64> = (0..n).map(|_| 0.2 + r.random::<f64>()).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    let mut g = DMatrix::zeros(n, n);
    for l in 0..n {
        for m in l + 1..n {
            let c = 0.2 + r.random::<f64>();
            g[(l, m)] = c / p[l];
            g[(m, l)] = c / p[m];
        }
    }
    (g, p)
}

pub fn generic(gamma: DMatrix<f64>) -> (GkslGenerator, DensityMatrix) {
    let spec = GenericSpec::new(gamma);
    (generic_model(&spec).unwrap(), generic_stationary_state(&spec).unwrap())
}
