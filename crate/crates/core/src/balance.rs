//! Detailed-balance checks. Under the special form `{L_l ρ^{1/2}}` is
//! linearly independent, so the coefficients `u` in
//! `A_k = Σ_l u_kl L_l ρ^{1/2}` are unique when they exist and the
//! detailed-balance conditions reduce to properties of one matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::gksl::{DensityMatrix, GkslGenerator, SuperoperatorKind};
use crate::matops::{
    commutator, flip, identity, least_squares, matrix_unit, op_norm, tensor, theta_conj, vectorize, CMatrix, C64,
    DEFAULT_TOL, I,
};
use crate::support::g_condition_residual;

/// Absolute tolerance for every detailed-balance verdict.
pub const VERDICT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceVariant {
    /// `ρ^{1/2} L_k* = Σ_l u_kl L_l ρ^{1/2}` with `u` unitary and symmetric.
    Standard,
    /// `ρ^{1/2} θL_k*θ = Σ_l u_kl L_l ρ^{1/2}` with `u` unitary and
    /// self-adjoint, plus the drift condition.
    Theta,
}

#[derive(Debug, Clone)]
pub struct DetailedBalanceCheck {
    pub variant: BalanceVariant,
    pub holds: bool,
    pub u: CMatrix,
    /// `max_k ‖A_k − Σ_l u_kl L_l ρ^{1/2}‖_F`.
    pub residual_jump: f64,
    /// `‖u u* − 1‖_F`.
    pub residual_unitary: f64,
    /// `‖u − uᵀ‖_F` for the standard variant, `‖u − u*‖_F` for the θ variant.
    pub residual_symmetry: f64,
    /// `‖ρ^{1/2}θG*θ − Gρ^{1/2}‖` (θ variant only).
    pub g_condition_residual: Option<f64>,
    pub tol: f64,
}

fn targets(gen: &GkslGenerator, s: &CMatrix, variant: BalanceVariant) -> Vec<CMatrix> {
    gen.jumps()
        .iter()
        .map(|l| match variant {
            BalanceVariant::Standard => s * l.adjoint(),
            BalanceVariant::Theta => s * theta_conj(&l.adjoint()),
        })
        .collect()
}

/// `max_k ‖A_k − Σ_l u_kl L_l ρ^{1/2}‖_F` for a given `u`, evaluated directly.
pub fn witness_residual(gen: &GkslGenerator, rho: &DensityMatrix, u: &CMatrix, variant: BalanceVariant) -> f64 {
    let s = rho.sqrt();
    let a = targets(gen, &s, variant);
    let b: Vec<CMatrix> = gen.jumps().iter().map(|l| l * &s).collect();
    let n = gen.dim();
    a.iter()
        .enumerate()
        .map(|(k, ak)| {
            let mut combo = CMatrix::zeros(n, n);
            for (l, bl) in b.iter().enumerate() {
                combo += bl * u[(k, l)];
            }
            (ak - combo).norm()
        })
        .fold(0.0, f64::max)
}

fn check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64, variant: BalanceVariant) -> Result<DetailedBalanceCheck> {
    gen.ensure_special_state(rho, tol)?;
    let d = gen.jumps().len();
    let s = rho.sqrt();
    let u = if d == 0 {
        CMatrix::zeros(0, 0)
    } else {
        let a = CMatrix::from_columns(&targets(gen, &s, variant).iter().map(vectorize).collect::<Vec<_>>());
        let b = CMatrix::from_columns(&gen.jumps().iter().map(|l| vectorize(&(l * &s))).collect::<Vec<_>>());
        least_squares(&b, &a, DEFAULT_TOL).transpose()
    };
    let residual_jump = witness_residual(gen, rho, &u, variant);
    let residual_unitary = (&u * u.adjoint() - identity(d)).norm();
    let residual_symmetry = match variant {
        BalanceVariant::Standard => (&u - u.transpose()).norm(),
        BalanceVariant::Theta => (&u - u.adjoint()).norm(),
    };
    let g_condition_residual = match variant {
        BalanceVariant::Standard => None,
        BalanceVariant::Theta => Some(g_condition_residual(gen, rho)),
    };
    let holds = residual_jump <= VERDICT_TOL
        && residual_unitary <= VERDICT_TOL
        && residual_symmetry <= VERDICT_TOL
        && g_condition_residual.is_none_or(|g| g <= VERDICT_TOL);
    Ok(DetailedBalanceCheck {
        variant,
        holds,
        u,
        residual_jump,
        residual_unitary,
        residual_symmetry,
        g_condition_residual,
        tol: VERDICT_TOL,
    })
}

/// Standard quantum detailed balance for a generator in special form for `ρ`.
pub fn sqdb_check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<DetailedBalanceCheck> {
    check(gen, rho, tol, BalanceVariant::Standard)
}

/// Standard quantum detailed balance with the reversing operation `Θ(x) = θx*θ`.
pub fn sqdb_theta_check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<DetailedBalanceCheck> {
    check(gen, rho, tol, BalanceVariant::Theta)
}

#[derive(Debug, Clone)]
pub struct DerivationGap {
    /// Traceless Hermitian `K` minimizing `‖L' − ΘLΘ − i[K, ·]‖`.
    pub k: CMatrix,
    /// Frobenius norm of the superoperator misfit.
    pub residual: f64,
    /// `‖[K, ρ]‖_F`.
    pub k_rho_commutator: f64,
}

/// Superoperator of `x ↦ Θ(L(Θ(x)))`. On matrices `Θ(x) = xᵀ`, which in
/// column-stacked form is the flip permutation.
pub fn theta_conjugated_superoperator(gen: &GkslGenerator) -> Result<CMatrix> {
    let t = flip(gen.dim())?;
    Ok(&t * gen.superoperator(SuperoperatorKind::Heisenberg).mat * &t)
}

fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        out.push(matrix_unit(n, a, a));
        for b in a + 1..n {
            out.push(matrix_unit(n, a, b) + matrix_unit(n, b, a));
            out.push((matrix_unit(n, a, b) - matrix_unit(n, b, a)) * I);
        }
    }
    out
}

/// `i[K, ·]` in column-stacked form.
fn ad_superoperator(k: &CMatrix) -> CMatrix {
    let id = identity(k.nrows());
    (tensor(&id, k) - tensor(&k.transpose(), &id)) * I
}

/// Fits `L' − ΘLΘ = i[K, ·]`, where `L'` is the KMS dual, over Hermitian `K`.
pub fn derivation_gap(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<DerivationGap> {
    let n = gen.dim();
    let dual = gen.kms_dual(rho, tol)?;
    let delta = dual.superoperator(SuperoperatorKind::Heisenberg).mat - theta_conjugated_superoperator(gen)?;

    let basis = hermitian_basis(n);
    let rows = 2 * n.pow(4);
    let mut design = DMatrix::<f64>::zeros(rows, basis.len());
    for (j, b) in basis.iter().enumerate() {
        let col = ad_superoperator(b);
        for (i, z) in col.iter().enumerate() {
            design[(i, j)] = z.re;
            design[(i + n.pow(4), j)] = z.im;
        }
    }
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, z) in delta.iter().enumerate() {
        rhs[i] = z.re;
        rhs[i + n.pow(4)] = z.im;
    }
    let svd = design.svd(true, true);
    let coeffs = svd.solve(&rhs, DEFAULT_TOL * svd.singular_values.max()).map_err(|e| {
        crate::error::Error::Inconsistent(format!("least-squares solve failed: {e}"))
    })?;

    let mut k = CMatrix::zeros(n, n);
    for (c, b) in coeffs.iter().zip(&basis) {
        k += b * C64::from(*c);
    }
    let shift = k.trace() / C64::from(n as f64);
    k -= identity(n) * shift;
    let k = (&k + k.adjoint()) * C64::from(0.5);
    let residual = (&delta - ad_superoperator(&k)).norm();
    let k_rho_commutator = commutator(&k, rho.matrix()).norm();
    Ok(DerivationGap { k, residual, k_rho_commutator })
}

#[derive(Debug, Clone)]
pub struct BalanceReport {
    pub sqdb: DetailedBalanceCheck,
    pub sqdb_theta: DetailedBalanceCheck,
    pub gap: DerivationGap,
}

pub fn balance_report(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<BalanceReport> {
    Ok(BalanceReport {
        sqdb: sqdb_check(gen, rho, tol)?,
        sqdb_theta: sqdb_theta_check(gen, rho, tol)?,
        gap: derivation_gap(gen, rho, tol)?,
    })
}

/// `‖u‖` in operator norm, convenient for reports.
pub fn witness_norm(u: &CMatrix) -> f64 {
    if u.is_empty() {
        0.0
    } else {
        op_norm(u)
    }
}
