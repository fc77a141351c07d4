//! Supports of evolved pure states via multiple commutators with the drift,
//! the span criterion comparing `{L_l ρ^{1/2}}` with `{ρ^{1/2} θL_l*θ}`, and
//! the decision procedure for equal forward/backward supports.

use crate::error::{Error, Result};
use crate::gksl::{DensityMatrix, GkslGenerator};
use crate::matops::{
    commutator, expm, identity, op_norm, outer, psd_eig, span_basis, span_of_vectors, subspace_tol, support_basis,
    theta_conj, CMatrix, CVector, SpanBasis, C64,
};
use crate::twopoint::{build_r, forward_backward, phi_pair, TwoPointDensity};

/// Tolerance for the drift condition `ρ^{1/2}θG*θ = Gρ^{1/2}`; matches the
/// detailed-balance verdict tolerance.
pub const G_CONDITION_TOL: f64 = 1e-8;

/// Times at which supports are compared when no structural argument applies.
pub const SAMPLE_TIMES: [f64; 3] = [1e-2, 1e-1, 1.0];

/// `δ_G^m(L_l)` for `m = 0..=max_m`, listed by `(m, l)`. Stops early at the
/// first order that does not raise the rank of the span. `max_m` defaults
/// to `n² − 1`.
pub fn commutator_family(gen: &GkslGenerator, max_m: Option<usize>, tol: f64) -> Vec<CMatrix> {
    let n = gen.dim();
    let max_m = max_m.unwrap_or(n * n - 1);
    let g = gen.drift();
    let mut family: Vec<CMatrix> = gen.jumps().to_vec();
    if family.is_empty() {
        return family;
    }
    let mut rank = span_basis(&family, tol).map(|s| s.dim()).unwrap_or(0);
    let mut current: Vec<CMatrix> = family.clone();
    for _ in 1..=max_m {
        let next: Vec<CMatrix> = current.iter().map(|x| commutator(g, x)).collect();
        let mut extended = family.clone();
        extended.extend(next.iter().cloned());
        let new_rank = span_basis(&extended, tol).map(|s| s.dim()).unwrap_or(0);
        if new_rank == rank {
            break;
        }
        family = extended;
        rank = new_rank;
        current = next;
    }
    family
}

fn commutator_order(gen: &GkslGenerator, family_len: usize) -> usize {
    let d = gen.jumps().len();
    if d == 0 {
        0
    } else {
        family_len / d - 1
    }
}

#[derive(Debug, Clone)]
pub struct ReachabilityReport {
    pub space: SpanBasis,
    pub dim: usize,
    pub g_invariant: bool,
    /// `‖(1 − P) G P‖`.
    pub g_invariance_residual: f64,
    pub truncation_order: usize,
}

/// Smallest subspace containing `u` and invariant under the algebra
/// generated by [`commutator_family`].
pub fn reachable_space(gen: &GkslGenerator, u: &CVector, tol: f64) -> Result<ReachabilityReport> {
    let n = gen.dim();
    if u.len() != n {
        return Err(Error::ShapeMismatch { expected: format!("vector of length {n}"), got: u.len().to_string() });
    }
    if u.norm() == 0.0 {
        return Err(Error::InvalidParameter("reachable space of the zero vector".into()));
    }
    let raw = commutator_family(gen, None, tol);
    let truncation_order = commutator_order(gen, raw.len());
    let family: Vec<CMatrix> =
        raw.into_iter().filter(|x| x.norm() > 0.0).map(|x| { let s = x.norm(); x / C64::from(s) }).collect();
    let mut space = span_of_vectors(&[u / C64::from(u.norm())], tol)?;
    let mut stable_sweeps = 0;
    while stable_sweeps < 2 && !space.is_full() {
        let mut vectors = space.basis.clone();
        for x in &family {
            for b in &space.basis {
                vectors.push(x * b);
            }
        }
        let next = span_of_vectors(&vectors, tol)?;
        if next.dim() == space.dim() {
            stable_sweeps += 1;
        } else {
            stable_sweeps = 0;
        }
        space = next;
    }
    let p = space.projector();
    let g = gen.drift();
    let g_invariance_residual = op_norm(&((identity(n) - &p) * g * &p));
    let g_invariant = g_invariance_residual <= subspace_tol(tol) * op_norm(g).max(1.0);
    Ok(ReachabilityReport { dim: space.dim(), space, g_invariant, g_invariance_residual, truncation_order })
}

/// Support of `T_{*t}(|u⟩⟨u|)` as `e^{tG} S(u)`.
pub fn support_at_t(gen: &GkslGenerator, u: &CVector, t: f64, tol: f64) -> Result<SpanBasis> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("support time must be positive, got {t}")));
    }
    let reach = reachable_space(gen, u, tol)?;
    let p = expm(&(gen.drift() * C64::from(t)))?;
    let moved: Vec<CVector> = reach.space.basis.iter().map(|b| &p * b).collect();
    span_of_vectors(&moved, tol)
}

/// Numerical support of the evolved state `T_{*t}(|u⟩⟨u|)`.
pub fn evolved_support(gen: &GkslGenerator, u: &CVector, t: f64, tol: f64) -> Result<SpanBasis> {
    let v = u / C64::from(u.norm());
    let state = DensityMatrix::new(outer(&v, &v), tol)?;
    let evolved = gen.evolve(&state, t)?;
    Ok(support_basis(evolved.eig(), tol))
}

#[derive(Debug, Clone)]
pub struct SpanCondition {
    pub holds: bool,
    /// Dimension of `span{ρ^{1/2} θL_l*θ}`.
    pub forward_dim: usize,
    /// Dimension of `span{L_l ρ^{1/2}}`.
    pub backward_dim: usize,
    /// Largest residual of either basis outside the other span.
    pub distance: f64,
    pub tol: f64,
}

/// Compares `span{L_l ρ^{1/2}}` with `span{ρ^{1/2} θL_l*θ}`.
pub fn hs_span_condition(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<SpanCondition> {
    gen.ensure_special_state(rho, tol)?;
    let s = rho.sqrt();
    let n = gen.dim();
    let sub_tol = subspace_tol(tol);
    if gen.jumps().is_empty() {
        return Ok(SpanCondition { holds: true, forward_dim: 0, backward_dim: 0, distance: 0.0, tol: sub_tol });
    }
    let fwd: Vec<CMatrix> = gen.jumps().iter().map(|l| &s * theta_conj(&l.adjoint())).collect();
    let bwd: Vec<CMatrix> = gen.jumps().iter().map(|l| l * &s).collect();
    let fspan = span_basis(&fwd, tol)?;
    let bspan = span_basis(&bwd, tol)?;
    debug_assert_eq!(fspan.ambient_dim, n * n);
    let distance = fspan.excess_over(&bspan).max(bspan.excess_over(&fspan));
    let holds = fspan.dim() == bspan.dim() && distance <= sub_tol;
    Ok(SpanCondition { holds, forward_dim: fspan.dim(), backward_dim: bspan.dim(), distance, tol: sub_tol })
}

#[derive(Debug, Clone)]
pub struct PhiSupportReport {
    pub holds: bool,
    pub forward_dim: usize,
    pub backward_dim: usize,
    /// Operator-norm distance of the two support projections.
    pub distance: f64,
    pub tol: f64,
    pub span_condition: SpanCondition,
}

/// Support comparison of `Φ→(D)` and `Φ←(D)` from already computed images.
pub fn phi_support_from(
    gen: &GkslGenerator,
    rho: &DensityMatrix,
    phi_fwd: &TwoPointDensity,
    phi_bwd: &TwoPointDensity,
    tol: f64,
) -> Result<PhiSupportReport> {
    let span_condition = hs_span_condition(gen, rho, tol)?;
    let sub_tol = subspace_tol(tol);
    let (fs, bs) = if gen.jumps().is_empty() {
        (SpanBasis::empty(phi_fwd.mat.nrows(), tol), SpanBasis::empty(phi_fwd.mat.nrows(), tol))
    } else {
        (support_basis(&psd_eig(&phi_fwd.mat, tol)?, tol), support_basis(&psd_eig(&phi_bwd.mat, tol)?, tol))
    };
    let distance = if fs.dim() == bs.dim() { fs.distance(&bs) } else { 1.0 };
    let holds = fs.dim() == bs.dim() && distance <= sub_tol;
    if holds != span_condition.holds {
        return Err(Error::Inconsistent(format!(
            "Φ supports {} (distance {distance:.3e}) but span condition {} (distance {:.3e}); \
             numerical rank is unstable at tolerance {tol:e}",
            if holds { "agree" } else { "differ" },
            if span_condition.holds { "holds" } else { "fails" },
            span_condition.distance
        )));
    }
    Ok(PhiSupportReport { holds, forward_dim: fs.dim(), backward_dim: bs.dim(), distance, tol: sub_tol, span_condition })
}

/// Compares the supports of `Φ→(D)` and `Φ←(D)` directly and cross-checks the
/// answer against [`hs_span_condition`].
pub fn phi_support_check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<PhiSupportReport> {
    let (pf, pb) = phi_pair(gen, rho, tol)?;
    phi_support_from(gen, rho, &pf, &pb, tol)
}

/// `‖ρ^{1/2} θG*θ − G ρ^{1/2}‖` in operator norm.
pub fn g_condition_residual(gen: &GkslGenerator, rho: &DensityMatrix) -> f64 {
    let s = rho.sqrt();
    let g = gen.drift();
    op_norm(&(&s * theta_conj(&g.adjoint()) - g * &s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbsMethod {
    Theorem,
    FullSpace,
    ConstantSupport,
    Sampled,
}

impl FbsMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FbsMethod::Theorem => "theorem",
            FbsMethod::FullSpace => "full-space",
            FbsMethod::ConstantSupport => "constant-support",
            FbsMethod::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupportSample {
    pub t: f64,
    pub equal: bool,
    pub forward_dim: usize,
    pub backward_dim: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Default)]
pub struct FbsDetails {
    pub g_condition_residual: f64,
    pub span_condition: Option<SpanCondition>,
    pub forward_dim: Option<usize>,
    pub backward_dim: Option<usize>,
    pub samples: Vec<SupportSample>,
}

#[derive(Debug, Clone)]
pub struct FbsReport {
    pub holds: bool,
    pub method: FbsMethod,
    pub details: FbsDetails,
}

/// Decides whether the supports of `D→_t` and `D←_t` coincide.
///
/// In order: the span criterion when the drift condition holds; both
/// reachable spaces full; both reachable spaces invariant under the lifted
/// drift (time-independent supports); otherwise per-sample comparison at
/// [`SAMPLE_TIMES`], with `holds` true only if every sample agrees.
pub fn fbs_check(gen: &GkslGenerator, rho: &DensityMatrix, tol: f64) -> Result<FbsReport> {
    gen.ensure_special_state(rho, tol)?;
    let g_res = g_condition_residual(gen, rho);
    let mut details = FbsDetails { g_condition_residual: g_res, ..Default::default() };
    if g_res <= G_CONDITION_TOL {
        let span = hs_span_condition(gen, rho, tol)?;
        let holds = span.holds;
        details.span_condition = Some(span);
        return Ok(FbsReport { holds, method: FbsMethod::Theorem, details });
    }

    let r = build_r(rho, tol)?;
    let fwd = reachable_space(&gen.lift_forward(), &r.vec, tol)?;
    let bwd = reachable_space(&gen.lift_backward(), &r.vec, tol)?;
    details.forward_dim = Some(fwd.dim);
    details.backward_dim = Some(bwd.dim);
    if fwd.space.is_full() && bwd.space.is_full() {
        return Ok(FbsReport { holds: true, method: FbsMethod::FullSpace, details });
    }
    if fwd.g_invariant && bwd.g_invariant {
        let holds = fwd.space.same_subspace(&bwd.space, subspace_tol(tol));
        return Ok(FbsReport { holds, method: FbsMethod::ConstantSupport, details });
    }

    let sub_tol = subspace_tol(tol);
    for t in SAMPLE_TIMES {
        let (df, db) = forward_backward(gen, rho, t, tol)?;
        let fs = support_basis(&psd_eig(&df.mat, tol)?, tol);
        let bs = support_basis(&psd_eig(&db.mat, tol)?, tol);
        let distance = if fs.dim() == bs.dim() { fs.distance(&bs) } else { 1.0 };
        details.samples.push(SupportSample {
            t,
            equal: fs.dim() == bs.dim() && distance <= sub_tol,
            forward_dim: fs.dim(),
            backward_dim: bs.dim(),
            distance,
        });
    }
    let holds = details.samples.iter().all(|s| s.equal);
    Ok(FbsReport { holds, method: FbsMethod::Sampled, details })
}
