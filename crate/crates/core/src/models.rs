//! Example model families: the n-cycle with a coherent shift, generic
//! (classical-chain) semigroups, and the two-level model with a real
//! antisymmetric Hamiltonian. Also the classical entropy-production sum and
//! the real eigenbasis construction for θ-invariant states.

use nalgebra::{DMatrix, DVector};

use crate::entropy::EpValue;
use crate::error::{Error, Result};
use crate::gksl::{DensityMatrix, GkslGenerator};
use crate::matops::{
    hermitian_eig, matrix_unit, null_space, theta_conj, CMatrix, CVector, C64, DEFAULT_TOL, I,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSpec {
    pub n: usize,
    pub lambda: f64,
    pub mu: f64,
    pub h_diag: Vec<f64>,
}

impl CycleSpec {
    pub fn new(n: usize, lambda: f64, mu: f64) -> Self {
        CycleSpec { n, lambda, mu, h_diag: vec![0.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {}", self.n)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter("cycle rates must be positive and finite".into()));
        }
        check_h_diag(&self.h_diag, self.n)
    }
}

fn check_h_diag(h: &[f64], n: usize) -> Result<()> {
    if h.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("h_diag of length {n}"), got: h.len().to_string() });
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn diag_hamiltonian(h: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(h.len(), h.iter().map(|&x| C64::from(x))))
}

/// Right shift `S e_j = e_{j+1 mod n}`.
pub fn shift(n: usize) -> CMatrix {
    let mut s = CMatrix::zeros(n, n);
    for j in 0..n {
        s[((j + 1) % n, j)] = C64::from(1.0);
    }
    s
}

/// Jumps `√λ S`, `√μ S*`, Hamiltonian `diag(h)`, invariant state `1/n`.
pub fn cycle_model(spec: &CycleSpec) -> Result<(GkslGenerator, DensityMatrix)> {
    spec.validate()?;
    let s = shift(spec.n);
    let jumps = vec![&s * C64::from(spec.lambda.sqrt()), s.adjoint() * C64::from(spec.mu.sqrt())];
    let gen = GkslGenerator::new(diag_hamiltonian(&spec.h_diag), jumps)?;
    let rho = DensityMatrix::maximally_mixed(spec.n);
    let gen = gen.make_special(&rho, DEFAULT_TOL)?;
    Ok((gen, rho))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericSpec {
    pub n: usize,
    /// `gamma[(l, m)]` is the rate of the transition `e_l → e_m`.
    pub gamma: DMatrix<f64>,
    pub h_diag: Vec<f64>,
}

impl GenericSpec {
    pub fn new(gamma: DMatrix<f64>) -> Self {
        let n = gamma.nrows();
        GenericSpec { n, gamma, h_diag: vec![0.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("generic model needs n >= 2, got {}", self.n)));
        }
        validate_rates(&self.gamma)?;
        if self.gamma.nrows() != self.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0} rate matrix", self.n),
                got: format!("{}x{}", self.gamma.nrows(), self.gamma.ncols()),
            });
        }
        check_h_diag(&self.h_diag, self.n)
    }
}

fn validate_rates(gamma: &DMatrix<f64>) -> Result<()> {
    if !gamma.is_square() {
        return Err(Error::NotSquare { rows: gamma.nrows(), cols: gamma.ncols() });
    }
    for ((l, m), &g) in (0..gamma.ncols()).flat_map(|m| (0..gamma.nrows()).map(move |l| (l, m))).zip(gamma.iter()) {
        if !g.is_finite() {
            return Err(Error::NonFinite);
        }
        if l == m && g != 0.0 {
            return Err(Error::InvalidParameter(format!("rate matrix diagonal must vanish, gamma[{l},{l}] = {g}")));
        }
        if g < 0.0 {
            return Err(Error::InvalidParameter(format!("negative rate gamma[{l},{m}] = {g}")));
        }
    }
    Ok(())
}

/// Jumps `√γ_lm |e_m⟩⟨e_l|` for every positive rate, in row-major order of
/// `(l, m)`, and `H = diag(h)`.
pub fn generic_model(spec: &GenericSpec) -> Result<GkslGenerator> {
    spec.validate()?;
    let n = spec.n;
    let mut jumps = Vec::new();
    for l in 0..n {
        for m in 0..n {
            let g = spec.gamma[(l, m)];
            if g > 0.0 {
                jumps.push(matrix_unit(n, m, l) * C64::from(g.sqrt()));
            }
        }
    }
    if jumps.is_empty() {
        return Err(Error::Empty("positive rates"));
    }
    GkslGenerator::new(diag_hamiltonian(&spec.h_diag), jumps)
}

/// Stationary distribution of the classical chain with rates `gamma`.
/// Fails unless it is unique.
pub fn classical_stationary(gamma: &DMatrix<f64>) -> Result<Vec<f64>> {
    validate_rates(gamma)?;
    let n = gamma.nrows();
    let mut q = CMatrix::zeros(n, n);
    for l in 0..n {
        let out: f64 = gamma.row(l).sum();
        for m in 0..n {
            q[(m, l)] = C64::from(if l == m { -out } else { gamma[(l, m)] });
        }
    }
    let kernel = null_space(&q, DEFAULT_TOL);
    if kernel.dim() != 1 {
        return Err(Error::Inconsistent(format!(
            "classical chain has {} stationary directions; pick a mixture explicitly",
            kernel.dim()
        )));
    }
    let v = &kernel.basis[0];
    let phase = v.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).map(|z| z.conj() / z.norm()).unwrap();
    let p: Vec<f64> = v.iter().map(|z| (z * phase).re).collect();
    let total: f64 = p.iter().sum();
    let p: Vec<f64> = p.iter().map(|x| x / total).collect();
    if p.iter().any(|&x| x < -1e-10) {
        return Err(Error::Inconsistent("stationary vector has negative entries".into()));
    }
    Ok(p.into_iter().map(|x| x.max(0.0)).collect())
}

/// Invariant state `diag(π)` of a generic model.
pub fn generic_stationary_state(spec: &GenericSpec) -> Result<DensityMatrix> {
    spec.validate()?;
    let p = classical_stationary(&spec.gamma)?;
    DensityMatrix::new(
        CMatrix::from_diagonal(&DVector::from_iterator(p.len(), p.iter().map(|&x| C64::from(x)))),
        DEFAULT_TOL,
    )
}

/// `½ Σ_{γ_lm > 0} (ρ_l γ_lm − ρ_m γ_ml) ln(ρ_l γ_lm / (ρ_m γ_ml))`, infinite
/// when a positive flux has no reverse.
pub fn classical_ep(gamma: &DMatrix<f64>, rho_diag: &[f64]) -> Result<EpValue> {
    validate_rates(gamma)?;
    let n = gamma.nrows();
    if rho_diag.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("length {n}"), got: rho_diag.len().to_string() });
    }
    if rho_diag.iter().any(|&p| !(p >= 0.0)) || (rho_diag.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("rho_diag is not a probability vector".into()));
    }
    let mut total = 0.0;
    for l in 0..n {
        for m in 0..n {
            if gamma[(l, m)] <= 0.0 {
                continue;
            }
            let fwd = rho_diag[l] * gamma[(l, m)];
            let bwd = rho_diag[m] * gamma[(m, l)];
            if fwd == 0.0 && bwd == 0.0 {
                continue;
            }
            if bwd == 0.0 || fwd == 0.0 {
                return Ok(EpValue::Infinite);
            }
            total += (fwd - bwd) * (fwd / bwd).ln();
        }
    }
    Ok(EpValue::Finite((0.5 * total).max(0.0)))
}

/// Jumps `|e_1⟩⟨e_2|`, `|e_2⟩⟨e_1|`, `H = iκ(|e_2⟩⟨e_1| − |e_1⟩⟨e_2|)`, state `1/2`.
pub fn two_level_model(kappa: f64) -> Result<(GkslGenerator, DensityMatrix)> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be finite and nonzero, got {kappa}")));
    }
    let e01 = matrix_unit(2, 0, 1);
    let e10 = matrix_unit(2, 1, 0);
    let h = (&e10 - &e01) * (I * kappa);
    let gen = GkslGenerator::new(h, vec![e01, e10])?;
    let rho = DensityMatrix::maximally_mixed(2);
    let gen = gen.make_special(&rho, DEFAULT_TOL)?;
    Ok((gen, rho))
}

/// Orthonormal eigenbasis with real (θ-fixed) vectors.
#[derive(Debug, Clone)]
pub struct ThetaEigenbasis {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl ThetaEigenbasis {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.len();
        let mut out = CMatrix::zeros(n, n);
        for (l, f) in self.eigenvalues.iter().zip(&self.vectors) {
            out += f * f.adjoint() * C64::from(*l);
        }
        out
    }
}

/// Real eigenbasis of a Hermitian matrix with real entries.
pub fn theta_eigenbasis(rho: &CMatrix, tol: f64) -> Result<ThetaEigenbasis> {
    let residual = (rho - theta_conj(rho)).norm();
    if residual > tol * rho.norm().max(1.0) {
        return Err(Error::NotThetaInvariant { residual });
    }
    let eig = hermitian_eig(rho, tol)?;
    let vectors: Vec<CVector> = (0..eig.dim()).map(|j| eig.vector(j)).collect();
    theta_real_basis(rho, &eig.eigenvalues, &vectors, tol)
}

/// Replaces an orthonormal eigenbasis of a θ-invariant `rho` by a real one.
///
/// Each eigenvalue cluster contributes the real candidates `e + θe` and
/// `i(e − θe)` for every eigenvector `e`; their span is the real form of the
/// eigenspace and an orthonormal basis of it is extracted by SVD.
pub fn theta_real_basis(rho: &CMatrix, eigenvalues: &[f64], vectors: &[CVector], tol: f64) -> Result<ThetaEigenbasis> {
    let n = rho.nrows();
    if vectors.len() != n || eigenvalues.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("{n} eigenpairs"), got: vectors.len().to_string() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    let scale = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let cluster_tol = tol.max(DEFAULT_TOL).sqrt() * scale;

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match clusters.last_mut() {
            Some(c) if eigenvalues[j] - eigenvalues[*c.last().unwrap()] <= cluster_tol => c.push(j),
            _ => clusters.push(vec![j]),
        }
    }

    let mut out = ThetaEigenbasis { eigenvalues: Vec::with_capacity(n), vectors: Vec::with_capacity(n) };
    for cluster in clusters {
        let k = cluster.len();
        let mut cands = DMatrix::<f64>::zeros(n, 2 * k);
        for (c, &j) in cluster.iter().enumerate() {
            let e = &vectors[j];
            for a in 0..n {
                let plus = e[a] + e[a].conj();
                let minus = I * (e[a] - e[a].conj());
                cands[(a, 2 * c)] = plus.re;
                cands[(a, 2 * c + 1)] = minus.re;
            }
        }
        let svd = cands.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        if idx.len() < k || svd.singular_values[idx[k - 1]] < 1e-6 {
            return Err(Error::NotThetaInvariant { residual: svd.singular_values[idx[k.min(idx.len()) - 1]] });
        }
        for &s in idx.iter().take(k) {
            let f = CVector::from_iterator(n, u.column(s).iter().map(|&x| C64::from(x)));
            let value = (f.adjoint() * rho * &f)[(0, 0)].re;
            out.eigenvalues.push(value);
            out.vectors.push(f);
        }
    }
    Ok(out)
}
