//! GKSL generators `L(x) = G*x + Σ_l L_l* x L_l + xG` with drift
//! `G = −½ Σ_l L_l*L_l − iH`, their predual `L_*(σ) = Gσ + Σ_l L_l σ L_l* + σG*`,
//! invariant states, time evolution and the KMS dual.

use crate::error::{Error, Result};
use crate::matops::{
    self, devectorize, ensure_finite, ensure_square, expm, identity, null_space, span_basis,
    tensor, vectorize, CMatrix, HermitianEig, C64, DEFAULT_TOL, I,
};

#[derive(Debug, Clone)]
pub struct GkslGenerator {
    dim: usize,
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    drift: CMatrix,
    special_for: Option<CMatrix>,
}

impl GkslGenerator {
    /// Generator with Hamiltonian `h` and a nonempty list of jump operators.
    pub fn new(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        if jumps.is_empty() {
            return Err(Error::Empty("jump operators"));
        }
        Self::with_jumps(hamiltonian, jumps)
    }

    /// Purely Hamiltonian generator `i[H, ·]`.
    pub fn hamiltonian_only(hamiltonian: CMatrix) -> Result<Self> {
        Self::with_jumps(hamiltonian, Vec::new())
    }

    fn with_jumps(hamiltonian: CMatrix, jumps: Vec<CMatrix>) -> Result<Self> {
        let dim = ensure_square(&hamiltonian)?;
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        ensure_finite(&hamiltonian)?;
        for l in &jumps {
            ensure_finite(l)?;
            if l.shape() != (dim, dim) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{dim}x{dim}"),
                    got: format!("{}x{}", l.nrows(), l.ncols()),
                });
            }
        }
        let adj = hamiltonian.adjoint();
        let residual = (&hamiltonian - &adj).norm();
        let allowed = DEFAULT_TOL * hamiltonian.norm();
        if residual > allowed {
            return Err(Error::NotHermitian { residual, tol: allowed });
        }
        let hamiltonian = (&hamiltonian + adj) * C64::from(0.5);
        let drift = drift_of(&hamiltonian, &jumps);
        Ok(GkslGenerator { dim, hamiltonian, jumps, drift, special_for: None })
    }

    /// Rebuilds a generator from its drift and jumps, recovering
    /// `H = i(G + ½ Σ L*L)`; fails when that `H` is not Hermitian within
    /// `tol` relative to the generator scale.
    pub fn from_drift(drift: CMatrix, jumps: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let n = ensure_square(&drift)?;
        let mut kinetic = CMatrix::zeros(n, n);
        for l in &jumps {
            kinetic += l.adjoint() * l;
        }
        let h = (&drift + kinetic * C64::from(0.5)) * I;
        let residual = (&h - h.adjoint()).norm();
        let scale = drift.norm().max(1.0);
        if residual > tol * scale {
            return Err(Error::NotHermitian { residual, tol: tol * scale });
        }
        let h = (&h + h.adjoint()) * C64::from(0.5);
        Self::with_jumps(h, jumps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[CMatrix] {
        &self.jumps
    }

    pub fn drift(&self) -> &CMatrix {
        &self.drift
    }

    /// State the special form was normalized against by [`make_special`](Self::make_special).
    pub fn special_for(&self) -> Option<&CMatrix> {
        self.special_for.as_ref()
    }

    /// Rough magnitude of the generator, `‖H‖ + Σ ‖L_l‖²`, used to scale
    /// absolute residual checks.
    pub fn scale(&self) -> f64 {
        self.hamiltonian.norm() + self.jumps.iter().map(|l| l.norm_squared()).sum::<f64>()
    }

    fn check_operand(&self, x: &CMatrix) -> Result<()> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.dim),
                got: format!("{}x{}", x.nrows(), x.ncols()),
            });
        }
        Ok(())
    }

    /// Heisenberg-picture action `L(x)`.
    pub fn apply_heisenberg(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_operand(x)?;
        let mut out = self.drift.adjoint() * x + x * &self.drift;
        for l in &self.jumps {
            out += l.adjoint() * x * l;
        }
        Ok(out)
    }

    /// Schrödinger-picture action `L_*(σ)`.
    pub fn apply_schrodinger(&self, sigma: &CMatrix) -> Result<CMatrix> {
        self.check_operand(sigma)?;
        let mut out = &self.drift * sigma + sigma * self.drift.adjoint();
        for l in &self.jumps {
            out += l * sigma * l.adjoint();
        }
        Ok(out)
    }

    pub fn superoperator(&self, kind: SuperoperatorKind) -> Superoperator {
        let n = self.dim;
        let id = identity(n);
        let g = &self.drift;
        let mut mat = match kind {
            SuperoperatorKind::Heisenberg => tensor(&id, &g.adjoint()) + tensor(&g.transpose(), &id),
            SuperoperatorKind::Schrodinger => tensor(&id, g) + tensor(&matops::theta_conj(g), &id),
        };
        for l in &self.jumps {
            mat += match kind {
                SuperoperatorKind::Heisenberg => tensor(&l.transpose(), &l.adjoint()),
                SuperoperatorKind::Schrodinger => tensor(&matops::theta_conj(l), l),
            };
        }
        Superoperator { n, mat, kind }
    }

    /// `‖L_*(ρ)‖_F`.
    pub fn invariance_residual(&self, rho: &CMatrix) -> Result<f64> {
        Ok(self.apply_schrodinger(rho)?.norm())
    }

    /// Fails unless `‖L_*(ρ)‖ ≤ tol · max(1, scale)`.
    pub fn ensure_invariant(&self, rho: &CMatrix, tol: f64) -> Result<()> {
        let residual = self.invariance_residual(rho)?;
        let allowed = tol * self.scale().max(1.0);
        if residual > allowed {
            return Err(Error::NotInvariant { residual, tol: allowed });
        }
        Ok(())
    }

    /// Checks the special-form conditions for `ρ`: `tr(ρ L_l) = 0` and
    /// linear independence of `{1, L_1, …, L_d}`.
    pub fn ensure_special(&self, rho: &CMatrix, tol: f64) -> Result<()> {
        self.check_operand(rho)?;
        for (k, l) in self.jumps.iter().enumerate() {
            let c = (rho * l).trace();
            if c.norm() > tol * l.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::NotSpecial {
                    reason: format!("tr(rho L_{k}) = {:.3e} is not zero", c.norm()),
                });
            }
        }
        let mut family = vec![identity(self.dim)];
        family.extend(self.jumps.iter().cloned());
        let rank = span_basis(&family, tol)?.dim();
        if rank != family.len() {
            return Err(Error::NotSpecial {
                reason: format!("{{1, L_l}} has rank {rank} < {}", family.len()),
            });
        }
        Ok(())
    }

    /// Preconditions shared by the two-point, balance and support checks:
    /// matching dimension, faithful `ρ` and special form for `ρ`.
    pub fn ensure_special_state(&self, rho: &DensityMatrix, tol: f64) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("state of dimension {}", self.dim),
                got: format!("dimension {}", rho.dim()),
            });
        }
        if !rho.is_faithful() {
            return Err(Error::NotFaithful { min_eigenvalue: rho.min_eigenvalue() });
        }
        self.ensure_special(rho.matrix(), tol)
    }

    /// Special GKSL representation for the faithful state `ρ`: jumps are
    /// shifted to `L_l − tr(ρL_l)·1`, the Hamiltonian absorbs the shift, and
    /// linearly dependent jumps are compressed so `{1, L_l}` is independent.
    /// The superoperator is unchanged.
    pub fn make_special(&self, rho: &DensityMatrix, tol: f64) -> Result<Self> {
        if rho.dim() != self.dim {
            return Err(Error::ShapeMismatch {
                expected: format!("state of dimension {}", self.dim),
                got: format!("dimension {}", rho.dim()),
            });
        }
        if !rho.is_faithful() {
            return Err(Error::NotFaithful { min_eigenvalue: rho.min_eigenvalue() });
        }
        let id = identity(self.dim);
        let mut h = self.hamiltonian.clone();
        let mut shifted = Vec::with_capacity(self.jumps.len());
        for l in &self.jumps {
            let c = (rho.matrix() * l).trace();
            let l0 = l - &id * c;
            // i[ΔH, x] cancels the commutator term produced by the shift.
            h += (l0.adjoint() * c - &l0 * c.conj()) * (C64::from(0.5) / I);
            if l0.norm() > tol * l.norm() {
                shifted.push(l0);
            }
        }
        let h = (&h + h.adjoint()) * C64::from(0.5);
        let jumps = if shifted.is_empty() || span_basis(&shifted, tol)?.dim() == shifted.len() {
            shifted
        } else {
            compress_jumps(&shifted, self.dim, tol)
        };
        let mut out = Self::with_jumps(h, jumps)?;
        out.special_for = Some(rho.matrix().clone());
        Ok(out)
    }

    /// Jumps replaced by `L'_l = Σ_j u_{lj} L_j` for a unitary `u`.
    pub fn remix_jumps(&self, u: &CMatrix) -> Result<Self> {
        let d = self.jumps.len();
        if u.shape() != (d, d) {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d} mixing matrix"),
                got: format!("{}x{}", u.nrows(), u.ncols()),
            });
        }
        let unitarity = (u * u.adjoint() - identity(d)).norm();
        if unitarity > 1e-10 {
            return Err(Error::InvalidParameter(format!("mixing matrix not unitary ({unitarity:.3e})")));
        }
        let jumps = (0..d)
            .map(|l| {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for (j, lj) in self.jumps.iter().enumerate() {
                    acc += lj * u[(l, j)];
                }
                acc
            })
            .collect();
        let mut out = Self::with_jumps(self.hamiltonian.clone(), jumps)?;
        out.special_for = self.special_for.clone();
        Ok(out)
    }

    /// Generator `(1⊗G, {1⊗L_l})` on `h ⊗ h`, i.e. `I ⊗ L`.
    pub fn lift_forward(&self) -> Self {
        let id = identity(self.dim);
        self.lift(|x| tensor(&id, x))
    }

    /// Generator `(G⊗1, {L_l⊗1})` on `h ⊗ h`, i.e. `L ⊗ I`.
    pub fn lift_backward(&self) -> Self {
        let id = identity(self.dim);
        self.lift(|x| tensor(x, &id))
    }

    fn lift(&self, embed: impl Fn(&CMatrix) -> CMatrix) -> Self {
        GkslGenerator {
            dim: self.dim * self.dim,
            hamiltonian: embed(&self.hamiltonian),
            jumps: self.jumps.iter().map(&embed).collect(),
            drift: embed(&self.drift),
            special_for: None,
        }
    }

    /// `x ↦ T_{*t}(x)` for an arbitrary operator `x`.
    pub fn propagate(&self, x: &CMatrix, t: f64) -> Result<CMatrix> {
        self.superoperator(SuperoperatorKind::Schrodinger).evolve(x, t)
    }

    /// `T_{*t}(σ0)` as a density matrix.
    pub fn evolve(&self, sigma0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        let out = self.propagate(sigma0.matrix(), t)?;
        DensityMatrix::new(out, DEFAULT_TOL)
    }

    /// KMS dual generator with `G' = ρ^{1/2} G* ρ^{−1/2}` and
    /// `L'_l = ρ^{1/2} L_l* ρ^{−1/2}`, in special form for `ρ`.
    pub fn kms_dual(&self, rho: &DensityMatrix, tol: f64) -> Result<Self> {
        if !rho.is_faithful() {
            return Err(Error::NotFaithful { min_eigenvalue: rho.min_eigenvalue() });
        }
        self.ensure_special(rho.matrix(), tol)?;
        self.ensure_invariant(rho.matrix(), tol.max(DEFAULT_TOL))?;
        let s = rho.sqrt();
        let si = rho.inv_sqrt()?;
        let drift = &s * self.drift.adjoint() * &si;
        let jumps = self.jumps.iter().map(|l| &s * l.adjoint() * &si).collect();
        let mut dual = Self::from_drift(drift, jumps, tol.max(1e-8))?;
        dual.special_for = Some(rho.matrix().clone());
        Ok(dual)
    }

    /// `|tr(ρ^{1/2} a ρ^{1/2} T_t(b)) − tr(ρ^{1/2} T'_t(a) ρ^{1/2} b)|` for
    /// a candidate dual generator.
    pub fn kms_duality_residual(
        &self,
        dual: &GkslGenerator,
        rho: &DensityMatrix,
        a: &CMatrix,
        b: &CMatrix,
        t: f64,
    ) -> Result<f64> {
        let s = rho.sqrt();
        let tb = self.superoperator(SuperoperatorKind::Heisenberg).evolve(b, t)?;
        let ta = dual.superoperator(SuperoperatorKind::Heisenberg).evolve(a, t)?;
        let lhs = (&s * a * &s * tb).trace();
        let rhs = (&s * ta * &s * b).trace();
        Ok((lhs - rhs).norm())
    }
}

fn drift_of(hamiltonian: &CMatrix, jumps: &[CMatrix]) -> CMatrix {
    let n = hamiltonian.nrows();
    let mut kinetic = CMatrix::zeros(n, n);
    for l in jumps {
        kinetic += l.adjoint() * l;
    }
    kinetic * C64::from(-0.5) - hamiltonian * I
}

/// Minimal family with the same `Σ_l vec(L_l) vec(L_l)*`, hence the same
/// completely positive part and the same `Σ L_l*L_l`.
fn compress_jumps(jumps: &[CMatrix], n: usize, tol: f64) -> Vec<CMatrix> {
    let cols: Vec<_> = jumps.iter().map(vectorize).collect();
    let m = CMatrix::from_columns(&cols);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol * smax)
        .map(|(k, &s)| devectorize(&(u.column(k) * C64::from(s)), n).expect("square shape"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperoperatorKind {
    Heisenberg,
    Schrodinger,
}

/// `n² × n²` matrix acting on column-stacked operators.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub n: usize,
    pub mat: CMatrix,
    pub kind: SuperoperatorKind,
}

impl Superoperator {
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}", self.n),
                got: format!("{}x{}", x.nrows(), x.ncols()),
            });
        }
        devectorize(&(&self.mat * vectorize(x)), self.n)
    }

    /// `exp(t · mat)`.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
        }
        expm(&(&self.mat * C64::from(t)))
    }

    pub fn evolve(&self, x: &CMatrix, t: f64) -> Result<CMatrix> {
        let p = self.propagator(t)?;
        devectorize(&(p * vectorize(x)), self.n)
    }

    /// Choi matrix `Σ_ij E_ij ⊗ e^{t·mat}(E_ij)`.
    pub fn choi(&self, t: f64) -> Result<CMatrix> {
        let n = self.n;
        let p = self.propagator(t)?;
        let mut c = CMatrix::zeros(n * n, n * n);
        for i in 0..n {
            for j in 0..n {
                let image = devectorize(&(&p * vectorize(&matops::matrix_unit(n, i, j))), n)?;
                c += tensor(&matops::matrix_unit(n, i, j), &image);
            }
        }
        Ok(c)
    }
}

/// Positive semidefinite unit-trace matrix with its cached spectral data.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMatrix,
    eig: HermitianEig,
    support: CMatrix,
    faithful: bool,
    tol: f64,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, tol: f64) -> Result<Self> {
        let n = ensure_square(&mat)?;
        let eig = matops::psd_eig(&mat, tol)?;
        let trace = eig.eigenvalues.iter().sum::<f64>();
        let allowed = tol * n as f64;
        if (trace - 1.0).abs() > allowed {
            return Err(Error::NotNormalized { trace, tol: allowed });
        }
        let mat = (&mat + mat.adjoint()) * C64::from(0.5);
        let support = matops::projection_from_eig(&eig, tol);
        let faithful = eig.min() > tol;
        Ok(DensityMatrix { mat, eig, support, faithful, tol })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::new(identity(n) / C64::from(n as f64), DEFAULT_TOL).expect("1/n is a state")
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn eig(&self) -> &HermitianEig {
        &self.eig
    }

    pub fn support(&self) -> &CMatrix {
        &self.support
    }

    pub fn rank(&self) -> usize {
        matops::rank_from_eig(&self.eig, self.tol)
    }

    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.min()
    }

    pub fn sqrt(&self) -> CMatrix {
        self.eig.map(|x| x.max(0.0).sqrt())
    }

    pub fn inv_sqrt(&self) -> Result<CMatrix> {
        if !self.faithful {
            return Err(Error::NotFaithful { min_eigenvalue: self.eig.min() });
        }
        Ok(self.eig.map(|x| 1.0 / x.sqrt()))
    }
}

/// Result of [`invariant_states`].
#[derive(Debug, Clone)]
pub struct InvariantStates {
    pub states: Vec<DensityMatrix>,
    pub kernel_dim: usize,
}

impl InvariantStates {
    /// More than one linearly independent invariant operator exists.
    pub fn multiplicity_warning(&self) -> bool {
        self.kernel_dim > 1
    }

    pub fn unique_faithful(&self) -> Option<&DensityMatrix> {
        match (self.kernel_dim, self.states.as_slice()) {
            (1, [only]) if only.is_faithful() => Some(only),
            _ => None,
        }
    }
}

/// Density matrices in the kernel of `L_*`.
///
/// Candidates are the kernel projection of the identity followed by every
/// Hermitized kernel basis element and its negation; those that normalize to
/// a positive semidefinite unit-trace matrix are returned.
pub fn invariant_states(gen: &GkslGenerator, tol: f64) -> Result<InvariantStates> {
    let n = gen.dim();
    let sup = gen.superoperator(SuperoperatorKind::Schrodinger);
    let kernel = null_space(&sup.mat, tol);
    if kernel.dim() == 0 {
        return Err(Error::Inconsistent("L_* has an empty kernel".into()));
    }
    let id = vectorize(&identity(n));
    let projected = kernel.basis.iter().fold(id.clone() * C64::from(0.0), |acc, x| acc + x * x.dotc(&id));
    let mut candidates = vec![devectorize(&projected, n)?];
    for x in &kernel.basis {
        let m = devectorize(x, n)?;
        let herm = (&m + m.adjoint()) * C64::from(0.5);
        let anti = (&m - m.adjoint()) * C64::new(0.0, -0.5);
        for h in [herm, anti] {
            candidates.push(-&h);
            candidates.push(h);
        }
    }
    let mut states: Vec<DensityMatrix> = Vec::new();
    for c in candidates {
        let tr = c.trace().re;
        if tr.abs() <= tol * c.norm().max(f64::MIN_POSITIVE) * n as f64 || tr <= 0.0 {
            continue;
        }
        let normalized = c / C64::from(tr);
        let Ok(state) = DensityMatrix::new(normalized, tol) else {
            continue;
        };
        if states.iter().all(|s| (s.matrix() - state.matrix()).norm() > 1e-8) {
            states.push(state);
        }
    }
    Ok(InvariantStates { states, kernel_dim: kernel.dim() })
}
