//! Dense complex-matrix primitives.
//!
//! Conventions used throughout the crate:
//!
//! * `tensor(a, b)` is the Kronecker product, so `e_j ⊗ e_k` has index `j·n + k`;
//! * `vectorize` stacks columns, which gives `vec(A X B) = (Bᵀ ⊗ A) vec(X)`;
//! * `θ` is entrywise complex conjugation in the computational basis and
//!   `Θ(A) = θ A* θ`, which for matrices is the transpose.
//!
//! Rank, support and residual decisions are relative to the largest
//! eigenvalue or singular value and default to [`DEFAULT_TOL`].

use nalgebra::{allocator::Allocator, DMatrix, DVector, DefaultAllocator, Dim, OMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for rank, support and residual decisions.
pub const DEFAULT_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub(crate) fn ensure_same_shape(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", a.nrows(), a.ncols()),
            got: format!("{}x{}", b.nrows(), b.ncols()),
        });
    }
    Ok(())
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|e_i⟩⟨e_j|` on `ℂⁿ`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vector(n: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[i] = ONE;
    v
}

/// `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius (Hilbert–Schmidt) norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.norm()
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    ensure_same_shape(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Entrywise complex conjugation in the computational basis; applies to
/// vectors and to matrices viewed as vectors.
pub fn theta_conj<R: Dim, C: Dim>(m: &OMatrix<C64, R, C>) -> OMatrix<C64, R, C>
where
    DefaultAllocator: Allocator<R, C>,
{
    m.map(|z| z.conj())
}

/// The reversing operation `Θ(A) = θ A* θ`.
pub fn theta_map(a: &CMatrix) -> Result<CMatrix> {
    ensure_square(a)?;
    // θ X θ acts as the entrywise conjugate of X, so θ A* θ = conj(A*) = Aᵀ.
    Ok(theta_conj(&a.adjoint()))
}

/// The flip `F(e_j ⊗ e_k) = e_k ⊗ e_j` on `ℂⁿ ⊗ ℂⁿ`.
pub fn flip(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("flip dimension must be positive".into()));
    }
    let mut f = CMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..n {
            f[(k * n + j, j * n + k)] = ONE;
        }
    }
    Ok(f)
}

pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vectorize(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

pub fn devectorize(v: &CVector, n: usize) -> Result<CMatrix> {
    if v.len() != n * n {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {}", n * n),
            got: format!("length {}", v.len()),
        });
    }
    Ok(CMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Spectral decomposition `A = V Λ V*` of a Hermitian matrix with
/// eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn vector(&self, j: usize) -> CVector {
        self.eigenvectors.column(j).into_owned()
    }

    /// `Σ_j f(λ_j) |v_j⟩⟨v_j|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let w = C64::from(f(lam));
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// Eigenvalues kept by the relative cutoff `rel_tol · λ_max`.
    pub fn cutoff(&self, rel_tol: f64) -> f64 {
        rel_tol * self.max_abs()
    }
}

/// Eigendecomposition of a matrix that is Hermitian up to `tol · ‖A‖`;
/// the input is symmetrized as `(A + A*)/2` first.
pub fn hermitian_eig(a: &CMatrix, tol: f64) -> Result<HermitianEig> {
    ensure_square(a)?;
    ensure_finite(a)?;
    let adj = a.adjoint();
    let residual = (a - &adj).norm();
    let scale = a.norm();
    if residual > tol * scale {
        return Err(Error::NotHermitian { residual, tol: tol * scale });
    }
    let sym = (a + adj) * C64::from(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let columns: Vec<CVector> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    let eigenvectors = if columns.is_empty() {
        CMatrix::zeros(0, 0)
    } else {
        CMatrix::from_columns(&columns)
    };
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Eigendecomposition of a positive semidefinite matrix; eigenvalues below
/// `-rel_tol · λ_max` are rejected.
pub fn psd_eig(a: &CMatrix, rel_tol: f64) -> Result<HermitianEig> {
    let eig = hermitian_eig(a, rel_tol.max(DEFAULT_TOL))?;
    let floor = -eig.cutoff(rel_tol);
    if eig.min() < floor {
        return Err(Error::NotPositive { min_eigenvalue: eig.min(), floor });
    }
    Ok(eig)
}

/// Absolute tolerance for deciding subspace equality from numerically
/// computed bases. Eigenvector errors scale like `ε / gap`, so comparisons
/// are made at `sqrt(rel_tol)`.
pub fn subspace_tol(rel_tol: f64) -> f64 {
    rel_tol.max(f64::EPSILON).sqrt()
}

/// Eigenvectors spanning the support, i.e. eigenvalues above `rel_tol · λ_max`.
pub fn support_basis(eig: &HermitianEig, rel_tol: f64) -> SpanBasis {
    let cut = eig.cutoff(rel_tol);
    let basis = (0..eig.dim()).filter(|&j| eig.eigenvalues[j] > cut).map(|j| eig.vector(j)).collect();
    SpanBasis { ambient_dim: eig.dim(), basis, tol_used: rel_tol }
}

/// Orthogonal projection onto the eigenspaces with eigenvalue above
/// `rel_tol · λ_max`.
pub fn support_projection(a: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    let eig = psd_eig(a, rel_tol)?;
    Ok(projection_from_eig(&eig, rel_tol))
}

pub(crate) fn projection_from_eig(eig: &HermitianEig, rel_tol: f64) -> CMatrix {
    let cut = eig.cutoff(rel_tol);
    eig.map(|x| if x > cut && x > 0.0 { 1.0 } else { 0.0 })
}

pub(crate) fn rank_from_eig(eig: &HermitianEig, rel_tol: f64) -> usize {
    let cut = eig.cutoff(rel_tol);
    eig.eigenvalues.iter().filter(|&&x| x > cut && x > 0.0).count()
}

/// `log A` on the support of `A`, zero on its orthogonal complement.
pub fn log_on_support(a: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    let eig = psd_eig(a, rel_tol)?;
    Ok(log_from_eig(&eig, rel_tol))
}

pub(crate) fn log_from_eig(eig: &HermitianEig, rel_tol: f64) -> CMatrix {
    let cut = eig.cutoff(rel_tol);
    eig.map(|x| if x > cut && x > 0.0 { x.ln() } else { 0.0 })
}

/// Positive square root of a positive semidefinite matrix.
pub fn sqrt_psd(a: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    let eig = psd_eig(a, rel_tol)?;
    Ok(eig.map(|x| x.max(0.0).sqrt()))
}

/// Orthonormal basis of a subspace of `ℂ^ambient_dim`.
#[derive(Debug, Clone)]
pub struct SpanBasis {
    pub ambient_dim: usize,
    pub basis: Vec<CVector>,
    pub tol_used: f64,
}

impl SpanBasis {
    pub fn empty(ambient_dim: usize, tol_used: f64) -> Self {
        SpanBasis { ambient_dim, basis: Vec::new(), tol_used }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    /// Basis vectors as the columns of an `ambient_dim × dim` matrix.
    pub fn as_matrix(&self) -> CMatrix {
        if self.basis.is_empty() {
            CMatrix::zeros(self.ambient_dim, 0)
        } else {
            CMatrix::from_columns(&self.basis)
        }
    }

    pub fn projector(&self) -> CMatrix {
        let q = self.as_matrix();
        &q * q.adjoint()
    }

    /// `‖v − P v‖`.
    pub fn residual(&self, v: &CVector) -> f64 {
        let q = self.as_matrix();
        let coeffs = q.adjoint() * v;
        (v - q * coeffs).norm()
    }

    pub fn contains(&self, v: &CVector, tol: f64) -> bool {
        self.residual(v) <= tol * v.norm().max(f64::MIN_POSITIVE)
    }

    /// Operator-norm distance between the orthogonal projections.
    pub fn distance(&self, other: &SpanBasis) -> f64 {
        op_norm(&(self.projector() - other.projector()))
    }

    /// Largest residual of a basis vector of `self` outside `other`
    /// (zero iff `self ⊆ other`).
    pub fn excess_over(&self, other: &SpanBasis) -> f64 {
        self.basis.iter().map(|v| other.residual(v)).fold(0.0, f64::max)
    }

    pub fn same_subspace(&self, other: &SpanBasis, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim
            && self.excess_over(other) <= tol
            && other.excess_over(self) <= tol
    }
}

/// Orthonormal basis of the span of `vectors`; singular values below
/// `rel_tol · σ_max` are discarded.
pub fn span_of_vectors(vectors: &[CVector], rel_tol: f64) -> Result<SpanBasis> {
    let first = vectors.first().ok_or(Error::Empty("span of an empty list"))?;
    let ambient = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != ambient) {
        return Err(Error::ShapeMismatch {
            expected: format!("vectors of length {ambient}"),
            got: format!("length {}", bad.len()),
        });
    }
    let m = CMatrix::from_columns(vectors);
    if m.iter().all(|z| *z == ZERO) {
        return Ok(SpanBasis::empty(ambient, rel_tol));
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let basis = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * smax)
        .map(|(j, _)| u.column(j).into_owned())
        .collect();
    Ok(SpanBasis { ambient_dim: ambient, basis, tol_used: rel_tol })
}

/// Orthonormal basis of the Hilbert–Schmidt span of `mats`, in
/// vectorized form.
pub fn span_basis(mats: &[CMatrix], rel_tol: f64) -> Result<SpanBasis> {
    if mats.is_empty() {
        return Err(Error::Empty("span of an empty list"));
    }
    let shape = mats[0].shape();
    if let Some(bad) = mats.iter().find(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", shape.0, shape.1),
            got: format!("{}x{}", bad.nrows(), bad.ncols()),
        });
    }
    let vecs: Vec<CVector> = mats.iter().map(vectorize).collect();
    span_of_vectors(&vecs, rel_tol)
}

/// Null space of `a` (right singular vectors with singular value at most
/// `rel_tol · σ_max`).
pub fn null_space(a: &CMatrix, rel_tol: f64) -> SpanBasis {
    let n = a.ncols();
    // Pad to square so the SVD returns a full set of right singular vectors.
    let padded = if a.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let basis = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= rel_tol * smax)
        .map(|(j, _)| v_t.row(j).adjoint())
        .collect();
    SpanBasis { ambient_dim: n, basis, tol_used: rel_tol }
}

/// Minimum-norm least-squares solution of `a x = b` via the SVD
/// pseudo-inverse with relative cutoff `rel_tol`.
pub fn least_squares(a: &CMatrix, b: &CMatrix, rel_tol: f64) -> CMatrix {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, rel_tol * smax).expect("both factors computed")
}

const PADE_LOW: [(f64, &[f64]); 4] = [
    (1.495585217958292e-2, &[120.0, 60.0, 12.0, 1.0]),
    (2.539398330063230e-1, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    (
        9.504178996162932e-1,
        &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
    ),
    (
        2.097847961257068e0,
        &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
    ),
];

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn pade_ratio(u: CMatrix, v: CMatrix) -> Result<CMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Inconsistent("singular Padé denominator in expm".into()))
}

fn pade_low(a: &CMatrix, b: &[f64]) -> Result<CMatrix> {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = identity(n);
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for k in (0..b.len()).step_by(2) {
        v += &power * C64::from(b[k]);
        if k + 1 < b.len() {
            u += &power * C64::from(b[k + 1]);
        }
        power = &power * &a2;
    }
    pade_ratio(a * u, v)
}

fn pade_13(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let b = |k: usize| C64::from(PADE_13[k]);
    let id = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    pade_ratio(u, v)
}

/// Matrix exponential by scaling and squaring with diagonal Padé
/// approximants of degree 3–13.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = ensure_square(a)?;
    ensure_finite(a)?;
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    for (theta, coeffs) in PADE_LOW {
        if norm <= theta {
            return pade_low(a, coeffs);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a * C64::from(0.5f64.powi(s));
    let mut x = pade_13(&scaled)?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{random_hermitian, random_matrix, random_vector, rng};
    use approx::assert_abs_diff_eq;

    #[test]
    fn hs_inner_examples() {
        let id = identity(2);
        assert_abs_diff_eq!(hs_inner(&id, &id).unwrap().re, 2.0);
        let z = hs_inner(&matrix_unit(2, 0, 1), &matrix_unit(2, 1, 0)).unwrap();
        assert_eq!(z, ZERO);

        let mut r = rng(1);
        let a = random_matrix(&mut r, 3, 3);
        let direct: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(hs_inner(&a, &a).unwrap().re, direct, epsilon = 1e-12);

        let b = random_matrix(&mut r, 3, 3);
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        assert_abs_diff_eq!((ab - ba.conj()).norm(), 0.0, epsilon = 1e-13);
        assert!(hs_inner(&a, &identity(2)).is_err());
    }

    #[test]
    fn theta_is_antiunitary_involution() {
        let v = basis_vector(2, 0) * I;
        assert_eq!(theta_conj(&v)[0], -I);
        let mut r = rng(2);
        let u = random_vector(&mut r, 4);
        let w = random_vector(&mut r, 4);
        assert_eq!(theta_conj(&theta_conj(&u)), u);
        let lhs = theta_conj(&w).dotc(&theta_conj(&u));
        let rhs = u.dotc(&w);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn theta_map_examples() {
        assert_eq!(theta_map(&identity(3)).unwrap(), identity(3));
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, I]));
        assert_eq!(theta_map(&d).unwrap(), d);
        let mut r = rng(3);
        let a = random_matrix(&mut r, 3, 3);
        let b = random_matrix(&mut r, 3, 3);
        let lhs = theta_map(&(&a * &b)).unwrap();
        let rhs = theta_map(&b).unwrap() * theta_map(&a).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);
        let star = theta_map(&a.adjoint()).unwrap() - theta_map(&a).unwrap().adjoint();
        assert!(star.norm() < 1e-14);
        assert_eq!(theta_map(&theta_map(&a).unwrap()).unwrap(), a);
        assert!(theta_map(&random_matrix(&mut r, 2, 3)).is_err());
    }

    #[test]
    fn flip_examples() {
        assert_eq!(flip(1).unwrap(), identity(1));
        let f = flip(2).unwrap();
        let e12 = tensor_vec(&basis_vector(2, 0), &basis_vector(2, 1));
        let e21 = tensor_vec(&basis_vector(2, 1), &basis_vector(2, 0));
        assert_eq!(&f * e12, e21);
        assert_eq!(&f * &f, identity(4));
        assert!(flip(0).is_err());

        let mut r = rng(4);
        let a = random_matrix(&mut r, 3, 3);
        let b = random_matrix(&mut r, 3, 3);
        let f3 = flip(3).unwrap();
        let lhs = &f3 * tensor(&a, &b) * &f3;
        assert!((lhs - tensor(&b, &a)).norm() < 1e-13);
    }

    #[test]
    fn vectorization_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
        let mut r = rng(5);
        let a = random_matrix(&mut r, 2, 2);
        let x = random_matrix(&mut r, 2, 2);
        let b = random_matrix(&mut r, 2, 2);
        assert_eq!(devectorize(&vectorize(&a), 2).unwrap(), a);
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = tensor(&b.transpose(), &a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-14);
        assert!(devectorize(&vectorize(&a), 3).is_err());
    }

    #[test]
    fn hermitian_eig_examples() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![3.0.into(), 1.0.into(), 2.0.into()]));
        let e = hermitian_eig(&d, DEFAULT_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let e = hermitian_eig(&x, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);

        let mut r = rng(6);
        let h = random_hermitian(&mut r, 4);
        let e = hermitian_eig(&h, DEFAULT_TOL).unwrap();
        assert!((e.reconstruct() - &h).norm() < 1e-12);
        let v = &e.eigenvectors;
        assert!((v.adjoint() * v - identity(4)).norm() < 1e-12);

        let nh = random_matrix(&mut r, 3, 3);
        assert!(matches!(hermitian_eig(&nh, DEFAULT_TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn support_projection_examples() {
        let d = |a: f64, b: f64| CMatrix::from_diagonal(&CVector::from_vec(vec![a.into(), b.into()]));
        assert_eq!(support_projection(&d(1.0, 0.0), DEFAULT_TOL).unwrap(), d(1.0, 0.0));
        assert!((support_projection(&d(1.0, 1e-16), 1e-10).unwrap() - d(1.0, 0.0)).norm() < 1e-15);
        let rv = CVector::from_vec(vec![C64::new(1.0, 1.0), C64::new(2.0, 0.0)]);
        let rank1 = outer(&rv, &rv);
        let p = support_projection(&rank1, DEFAULT_TOL).unwrap();
        assert!((p - rank1 / C64::from(rv.norm_squared())).norm() < 1e-14);
        assert!(matches!(
            support_projection(&d(1.0, -0.5), DEFAULT_TOL),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn log_on_support_examples() {
        let d = |a: f64, b: f64| CMatrix::from_diagonal(&CVector::from_vec(vec![a.into(), b.into()]));
        assert!(log_on_support(&identity(3), DEFAULT_TOL).unwrap().norm() < 1e-15);
        let l = log_on_support(&d(std::f64::consts::E, 1.0), DEFAULT_TOL).unwrap();
        assert!((l - d(1.0, 0.0)).norm() < 1e-14);
        let l = log_on_support(&d(0.5, 0.0), DEFAULT_TOL).unwrap();
        assert!((l - d(-std::f64::consts::LN_2, 0.0)).norm() < 1e-14);
        assert!(log_on_support(&d(1.0, -1e-3), DEFAULT_TOL).is_err());
    }

    #[test]
    fn log_inverts_exp_on_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![0.3.into(), (-1.2).into(), 2.0.into()]));
        let back = log_on_support(&expm(&a).unwrap(), DEFAULT_TOL).unwrap();
        assert!((back - a).norm() < 1e-13);
    }

    #[test]
    fn span_basis_examples() {
        let id = identity(2);
        let s = span_basis(&[id.clone(), &id * C64::from(2.0)], DEFAULT_TOL).unwrap();
        assert_eq!(s.dim(), 1);
        let s = span_basis(&[matrix_unit(2, 0, 1), matrix_unit(2, 1, 0)], DEFAULT_TOL).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(span_basis(&[], DEFAULT_TOL).is_err());

        let mut r = rng(7);
        let mut mats: Vec<CMatrix> = (0..4).map(|_| random_matrix(&mut r, 3, 3)).collect();
        let base = span_basis(&mats, DEFAULT_TOL).unwrap();
        assert_eq!(base.dim(), 4);
        let combo = &mats[0] * C64::new(0.5, -1.0) + &mats[2] * C64::new(2.0, 0.3);
        mats.push(combo);
        let extended = span_basis(&mats, DEFAULT_TOL).unwrap();
        assert_eq!(extended.dim(), 4);
        assert!(base.same_subspace(&extended, 1e-10));

        for (j, u) in extended.basis.iter().enumerate() {
            for (k, v) in extended.basis.iter().enumerate() {
                let expected = if j == k { 1.0 } else { 0.0 };
                assert!((u.dotc(v) - C64::from(expected)).norm() < 1e-12);
            }
        }

        mats.reverse();
        let permuted = span_basis(&mats, DEFAULT_TOL).unwrap();
        assert!(permuted.distance(&extended) < 1e-10);
    }

    #[test]
    fn null_space_of_rank_deficient() {
        let a = CMatrix::from_row_slice(2, 3, &[ONE, ONE, ZERO, ZERO, ZERO, ONE]);
        let ns = null_space(&a, DEFAULT_TOL);
        assert_eq!(ns.dim(), 1);
        assert!((a * &ns.basis[0]).norm() < 1e-14);
    }

    #[test]
    fn expm_examples() {
        assert_eq!(expm(&CMatrix::zeros(3, 3)).unwrap(), identity(3));
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![1.0.into(), 2.0.into()]));
        let e = expm(&d).unwrap();
        assert_abs_diff_eq!(e[(0, 0)].re, 1f64.exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(e[(1, 1)].re, 2f64.exp(), epsilon = 1e-12);
        assert!(e[(0, 1)].norm() < 1e-15);

        let mut r = rng(8);
        for scale in [0.01, 0.2, 1.0, 5.0, 10.0] {
            let mut a = random_matrix(&mut r, 4, 4);
            a *= C64::from(scale / op_norm(&a));
            let prod = expm(&a).unwrap() * expm(&-&a).unwrap();
            assert!((prod - identity(4)).norm() < 1e-10, "scale {scale}");
        }
    }

    #[test]
    fn expm_matches_spectral_exponential() {
        let mut r = rng(9);
        let h = random_hermitian(&mut r, 5) * C64::from(3.0);
        let eig = hermitian_eig(&h, DEFAULT_TOL).unwrap();
        let v = &eig.eigenvectors;
        let phases = CVector::from_iterator(5, eig.eigenvalues.iter().map(|&x| (-I * x).exp()));
        let spectral = v * CMatrix::from_diagonal(&phases) * v.adjoint();
        let pade = expm(&(&h * -I)).unwrap();
        assert!((pade - spectral).norm() < 1e-11);
    }
}
