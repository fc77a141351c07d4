//! Relative entropies and entropy production. All logarithms are natural.

use std::fmt;

use crate::error::{Error, Result};
use crate::gksl::{DensityMatrix, GkslGenerator};
use crate::matops::{
    ensure_same_shape, log_from_eig, projection_from_eig, psd_eig, subspace_tol, support_basis, CMatrix,
    HermitianEig,
};
use crate::support::{phi_support_from, PhiSupportReport};
use crate::twopoint::{forward_backward, phi_pair};

/// Nonnegative value that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpValue {
    Finite(f64),
    Infinite,
}

impl EpValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, EpValue::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            EpValue::Finite(v) => *v,
            EpValue::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for EpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpValue::Finite(v) => write!(f, "{v}"),
            EpValue::Infinite => f.write_str("inf"),
        }
    }
}

fn state_eig(a: &CMatrix, tol: f64) -> Result<HermitianEig> {
    let eig = psd_eig(a, tol)?;
    let trace: f64 = eig.eigenvalues.iter().sum();
    let allowed = tol.max(1e-12) * a.nrows() as f64;
    if (trace - 1.0).abs() > allowed.max(1e-9) {
        return Err(Error::NotNormalized { trace, tol: allowed });
    }
    Ok(eig)
}

/// `‖(1 − P_b) P_a‖`: zero iff `supp a ⊆ supp b`.
fn support_excess(a: &HermitianEig, b: &HermitianEig, tol: f64) -> f64 {
    let sa = support_basis(a, tol);
    let sb = support_basis(b, tol);
    sa.excess_over(&sb)
}

fn clamp_nonnegative(v: f64, scale: f64) -> Result<f64> {
    if v < -1e-8 * scale.max(1.0) {
        return Err(Error::Inconsistent(format!("divergence evaluated to {v:.3e} < 0")));
    }
    Ok(v.max(0.0))
}

/// `S(ρ, σ) = tr ρ(log ρ − log σ)`, infinite unless `supp ρ ⊆ supp σ`.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix, tol: f64) -> Result<EpValue> {
    ensure_same_shape(rho, sigma)?;
    let a = state_eig(rho, tol)?;
    let b = state_eig(sigma, tol)?;
    if support_excess(&a, &b, tol) > subspace_tol(tol) {
        return Ok(EpValue::Infinite);
    }
    let m = rho * (log_from_eig(&a, tol) - log_from_eig(&b, tol));
    Ok(EpValue::Finite(clamp_nonnegative(m.trace().re, 1.0)?))
}

/// `½ tr(a − b)(log a − log b)` for positive semidefinite `a`, `b`;
/// infinite unless the supports coincide.
fn symmetric_divergence(a: &CMatrix, ea: &HermitianEig, b: &CMatrix, eb: &HermitianEig, tol: f64) -> Result<EpValue> {
    let sub = subspace_tol(tol);
    if support_excess(ea, eb, tol) > sub || support_excess(eb, ea, tol) > sub {
        return Ok(EpValue::Infinite);
    }
    let diff = a - b;
    let scale = a.trace().re.abs().max(b.trace().re.abs());
    if diff.norm() <= tol * scale.max(1.0) {
        return Ok(EpValue::Finite(0.0));
    }
    // Both logs vanish off the common support, so restricting by the support
    // projection of `a` changes nothing on exact inputs and removes noise.
    let p = projection_from_eig(ea, tol);
    let m = &p * diff * &p * (log_from_eig(ea, tol) - log_from_eig(eb, tol));
    Ok(EpValue::Finite(clamp_nonnegative(0.5 * m.trace().re, scale)?))
}

/// `½ tr(ρ − σ)(log ρ − log σ)`, infinite unless the supports coincide.
pub fn symmetric_relative_entropy(rho: &CMatrix, sigma: &CMatrix, tol: f64) -> Result<EpValue> {
    ensure_same_shape(rho, sigma)?;
    let a = state_eig(rho, tol)?;
    let b = state_eig(sigma, tol)?;
    symmetric_divergence(rho, &a, sigma, &b, tol)
}

#[derive(Debug, Clone)]
pub struct LimitSample {
    pub t: f64,
    pub s: EpValue,
    pub s_over_t: EpValue,
}

#[derive(Debug, Clone)]
pub struct EpReport {
    pub value: EpValue,
    pub support: PhiSupportReport,
    /// Nonzero eigenvalues of `Φ→(D)` and `Φ←(D)`, descending, paired by rank.
    pub formula_terms: Vec<(f64, f64)>,
    /// `‖Φ→(D) − Φ←(D)‖_F`.
    pub phi_difference: f64,
    /// Infinite value established from differing Φ supports.
    pub infinite_from_supports: bool,
    pub limit_trace: Option<Vec<LimitSample>>,
}

fn positive_spectrum(eig: &HermitianEig, tol: f64) -> Vec<f64> {
    let cut = eig.cutoff(tol);
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&x| x > cut).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Entropy production `½ tr(Φ→(D) − Φ←(D))(log Φ→(D) − log Φ←(D))`, or `+∞`
/// when the Φ supports differ.
///
/// Requires a faithful invariant `ρ` and a generator in special form for it.
pub fn entropy_production(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<EpReport> {
    gen.ensure_special_state(rho, tol)?;
    gen.ensure_invariant(rho.matrix(), tol)?;
    let (pf, pb) = phi_pair(gen, rho, tol)?;
    let support = phi_support_from(gen, rho, &pf, &pb, tol)?;
    let phi_difference = (&pf.mat - &pb.mat).norm();
    if !support.holds {
        return Ok(EpReport {
            value: EpValue::Infinite,
            support,
            formula_terms: Vec::new(),
            phi_difference,
            infinite_from_supports: true,
            limit_trace: None,
        });
    }
    if gen.jumps().is_empty() {
        return Ok(EpReport {
            value: EpValue::Finite(0.0),
            support,
            formula_terms: Vec::new(),
            phi_difference,
            infinite_from_supports: false,
            limit_trace: None,
        });
    }
    let ef = psd_eig(&pf.mat, tol)?;
    let eb = psd_eig(&pb.mat, tol)?;
    let formula_terms = positive_spectrum(&ef, tol).into_iter().zip(positive_spectrum(&eb, tol)).collect();
    let value = symmetric_divergence(&pf.mat, &ef, &pb.mat, &eb, tol)?;
    if value.is_infinite() {
        return Err(Error::Inconsistent("Φ supports agree but the divergence is infinite".into()));
    }
    Ok(EpReport { value, support, formula_terms, phi_difference, infinite_from_supports: false, limit_trace: None })
}

/// `S(D→_t, D←_t)/t` on `t_grid`, returned in descending order of `t`.
pub fn ep_limit_estimate(gen: &GkslGenerator, rho: &DensityMatrix, t_grid: &[f64], tol: f64) -> Result<Vec<LimitSample>> {
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(format!("limit grid times must be positive, got {t}")));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.into_iter()
        .map(|t| {
            let (f, b) = forward_backward(gen, rho, t, tol)?;
            let ef = psd_eig(&f.mat, tol)?;
            let eb = psd_eig(&b.mat, tol)?;
            let s = symmetric_divergence(&f.mat, &ef, &b.mat, &eb, tol)?;
            let s_over_t = match s {
                EpValue::Finite(v) => EpValue::Finite(v / t),
                EpValue::Infinite => EpValue::Infinite,
            };
            Ok(LimitSample { t, s, s_over_t })
        })
        .collect()
}
