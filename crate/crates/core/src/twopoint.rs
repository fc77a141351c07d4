//! The vector `r = Σ_j ρ_j^{1/2} θf_j ⊗ f_j`, the two-point density
//! `D = |r⟩⟨r|`, its forward and backward evolutions on `h ⊗ h`, and the
//! images of `D` under the completely positive parts of the lifted generators.

use crate::error::{Error, Result};
use crate::gksl::{DensityMatrix, GkslGenerator, SuperoperatorKind};
use crate::matops::{
    devectorize, flip, outer, tensor, tensor_vec, theta_conj, vectorize, CMatrix, CVector, C64, DEFAULT_TOL,
};
use crate::models::theta_eigenbasis;

#[derive(Debug, Clone)]
pub struct RVector {
    pub vec: CVector,
    pub source_state: CMatrix,
}

impl RVector {
    pub fn dim(&self) -> usize {
        self.source_state.nrows()
    }

    /// `M` with `r = Σ_ab M_ab e_a ⊗ e_b`; equals `ρ^{1/2}`.
    pub fn coefficients(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |a, b| self.vec[a * n + b])
    }
}

/// Builds `r` in a real eigenbasis of `ρ`.
pub fn build_r(rho: &DensityMatrix, tol: f64) -> Result<RVector> {
    if !rho.is_faithful() {
        return Err(Error::NotFaithful { min_eigenvalue: rho.min_eigenvalue() });
    }
    let basis = theta_eigenbasis(rho.matrix(), tol)?;
    let n = rho.dim();
    let mut vec = CVector::zeros(n * n);
    for (p, f) in basis.eigenvalues.iter().zip(&basis.vectors) {
        vec += tensor_vec(&theta_conj(f), f) * C64::from(p.max(0.0).sqrt());
    }
    Ok(RVector { vec, source_state: rho.matrix().clone() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoPointKind {
    Reference,
    Forward(f64),
    Backward(f64),
    PhiForward,
    PhiBackward,
}

/// Operator on `h ⊗ h`. Trace one for `D`, `D→_t`, `D←_t`; the Φ images
/// carry trace `Σ_l tr(ρ L_l*L_l)` and are not normalized.
#[derive(Debug, Clone)]
pub struct TwoPointDensity {
    pub mat: CMatrix,
    pub kind: TwoPointKind,
    /// `‖L_*(ρ)‖` when `ρ` failed the invariance check.
    pub invariance_warning: Option<f64>,
}

impl TwoPointDensity {
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
}

pub fn build_d(r: &RVector) -> TwoPointDensity {
    TwoPointDensity { mat: outer(&r.vec, &r.vec), kind: TwoPointKind::Reference, invariance_warning: None }
}

fn invariance_warning(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<Option<f64>> {
    match gen.ensure_invariant(rho.matrix(), tol) {
        Ok(()) => Ok(None),
        Err(Error::NotInvariant { residual, .. }) => Ok(Some(residual)),
        Err(e) => Err(e),
    }
}

/// `(I ⊗ P)(x)` for a column-stacked `n² × n²` superoperator `P`: `P` acts on
/// every `n × n` block of `x`.
fn apply_inner(prop: &CMatrix, x: &CMatrix, n: usize) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(n * n, n * n);
    for a in 0..n {
        for c in 0..n {
            let block = x.view((a * n, c * n), (n, n)).into_owned();
            let image = devectorize(&(prop * vectorize(&block)), n)?;
            out.view_mut((a * n, c * n), (n, n)).copy_from(&image);
        }
    }
    Ok(out)
}

fn propagator(gen: &GkslGenerator, t: f64) -> Result<CMatrix> {
    gen.superoperator(SuperoperatorKind::Schrodinger).propagator(t)
}

fn evolve_forward(prop: &CMatrix, d: &CMatrix, n: usize) -> Result<CMatrix> {
    apply_inner(prop, d, n)
}

/// `(P ⊗ I)(x) = F (I ⊗ P)(F x F) F`.
fn evolve_backward(prop: &CMatrix, d: &CMatrix, n: usize) -> Result<CMatrix> {
    flip_conjugate(&apply_inner(prop, &flip_conjugate(d, n)?, n)?, n)
}

/// `D→_t = (I ⊗ T_{*t})(D)`.
pub fn forward_density(gen: &GkslGenerator, rho: &DensityMatrix, t: f64, tol: f64) -> Result<TwoPointDensity> {
    let warning = invariance_warning(gen, rho, tol)?;
    let d = build_d(&build_r(rho, tol)?);
    let mat = evolve_forward(&propagator(gen, t)?, &d.mat, gen.dim())?;
    Ok(TwoPointDensity { mat, kind: TwoPointKind::Forward(t), invariance_warning: warning })
}

/// `D←_t = (T_{*t} ⊗ I)(D)`.
pub fn backward_density(gen: &GkslGenerator, rho: &DensityMatrix, t: f64, tol: f64) -> Result<TwoPointDensity> {
    let warning = invariance_warning(gen, rho, tol)?;
    let d = build_d(&build_r(rho, tol)?);
    let mat = evolve_backward(&propagator(gen, t)?, &d.mat, gen.dim())?;
    Ok(TwoPointDensity { mat, kind: TwoPointKind::Backward(t), invariance_warning: warning })
}

/// Both densities at `t`, sharing one `r`.
pub fn forward_backward(
    gen: &GkslGenerator,
    rho: &DensityMatrix,
    t: f64,
    tol: f64,
) -> Result<(TwoPointDensity, TwoPointDensity)> {
    let warning = invariance_warning(gen, rho, tol)?;
    let d = build_d(&build_r(rho, tol)?);
    let prop = propagator(gen, t)?;
    let fwd = evolve_forward(&prop, &d.mat, gen.dim())?;
    let bwd = evolve_backward(&prop, &d.mat, gen.dim())?;
    Ok((
        TwoPointDensity { mat: fwd, kind: TwoPointKind::Forward(t), invariance_warning: warning },
        TwoPointDensity { mat: bwd, kind: TwoPointKind::Backward(t), invariance_warning: warning },
    ))
}

fn phi_image(gen: &GkslGenerator, r: &RVector, forward: bool, kind: TwoPointKind) -> TwoPointDensity {
    let n = gen.dim();
    let id = crate::matops::identity(n);
    let mut mat = CMatrix::zeros(n * n, n * n);
    for l in gen.jumps() {
        let lifted = if forward { tensor(&id, l) } else { tensor(l, &id) };
        let v = lifted * &r.vec;
        mat += outer(&v, &v);
    }
    TwoPointDensity { mat, kind, invariance_warning: None }
}

/// `Φ→(D) = Σ_l (1⊗L_l) D (1⊗L_l*)`.
pub fn phi_forward(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<TwoPointDensity> {
    gen.ensure_special_state(rho, tol)?;
    Ok(phi_image(gen, &build_r(rho, tol)?, true, TwoPointKind::PhiForward))
}

/// `Φ←(D) = Σ_l (L_l⊗1) D (L_l*⊗1)`.
pub fn phi_backward(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<TwoPointDensity> {
    gen.ensure_special_state(rho, tol)?;
    Ok(phi_image(gen, &build_r(rho, tol)?, false, TwoPointKind::PhiBackward))
}

/// `(Φ→(D), Φ←(D))` from a single `r`.
pub fn phi_pair(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<(TwoPointDensity, TwoPointDensity)> {
    gen.ensure_special_state(rho, tol)?;
    let r = build_r(rho, tol)?;
    Ok((
        phi_image(gen, &r, true, TwoPointKind::PhiForward),
        phi_image(gen, &r, false, TwoPointKind::PhiBackward),
    ))
}

#[derive(Debug, Clone)]
pub struct DerivativeSymmetry {
    pub holds: bool,
    /// `‖(I⊗L_*)(D) − (L_*⊗I)(D)‖_F`.
    pub residual: f64,
    pub tol: f64,
    /// `max_t ‖D→_t − D←_t‖_F` over `t ∈ {0.1, 1}`, computed when `holds`.
    pub spot_check: Option<f64>,
}

pub const DERIVATIVE_SPOT_TIMES: [f64; 2] = [0.1, 1.0];
pub const DERIVATIVE_SPOT_TOL: f64 = 1e-9;

/// Compares the forward and backward generators on `D`. When the
/// derivatives agree, the evolved densities must agree as well; a mismatch
/// is reported as an inconsistency.
pub fn derivative_symmetry_check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<DerivativeSymmetry> {
    let d = build_d(&build_r(rho, tol)?);
    let fwd = gen.lift_forward().apply_schrodinger(&d.mat)?;
    let bwd = gen.lift_backward().apply_schrodinger(&d.mat)?;
    let residual = (fwd - bwd).norm();
    let allowed = tol * gen.scale().max(1.0);
    let holds = residual <= allowed;
    let spot_check = if holds {
        let mut worst = 0.0f64;
        for t in DERIVATIVE_SPOT_TIMES {
            let (f, b) = forward_backward(gen, rho, t, tol.max(DEFAULT_TOL))?;
            worst = worst.max((f.mat - b.mat).norm());
        }
        if worst > DERIVATIVE_SPOT_TOL {
            return Err(Error::Inconsistent(format!(
                "derivatives agree on D but evolved densities differ by {worst:.3e}"
            )));
        }
        Some(worst)
    } else {
        None
    };
    Ok(DerivativeSymmetry { holds, residual, tol: allowed, spot_check })
}

/// `F X F` on `h ⊗ h`.
pub fn flip_conjugate(x: &CMatrix, n: usize) -> Result<CMatrix> {
    let f = flip(n)?;
    Ok(&f * x * &f)
}
