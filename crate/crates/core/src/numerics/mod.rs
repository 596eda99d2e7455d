//! Dense numerical kernels: Hermitian spectral calculus, nullspaces,
//! simplex projection, a small dense LP and sphere quadrature.
//!
//! Everything here is a pure function of its inputs.

mod lp;
mod quadrature;

pub use lp::{lp_feasible, lp_minimize, FarkasCertificate, LpFeasibility, LpOptimum, LpProblem};
pub use quadrature::{gauss_legendre, sphere_quadrature, QuadratureNode, MAX_QUADRATURE_ORDER};

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Asymmetry (relative to max(1, largest entry)) above which input is rejected.
pub const HERMITIAN_REJECT_TOL: f64 = 1e-9;

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

pub const fn c64(re: f64, im: f64) -> C64 {
    Complex { re, im }
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes the input, so the stored entries are exactly
/// Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(Error::BadDimension("empty matrix".into()));
        }
        let asym = hermitian_defect(&m);
        if asym > HERMITIAN_REJECT_TOL {
            return Err(Error::NonHermitian(asym));
        }
        let sym = (&m + m.adjoint()) * c64(0.5, 0.0);
        Ok(HermitianMatrix { m: sym })
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| c64(x, 0.0)))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c64(x, 0.0);
        }
        HermitianMatrix { m }
    }

    pub fn identity(d: usize) -> Self {
        HermitianMatrix {
            m: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        HermitianMatrix {
            m: CMatrix::zeros(d, d),
        }
    }

    /// Rank-one projector |v><v| / <v|v>.
    pub fn projector(v: &CVector) -> Self {
        let n2 = v.norm_squared();
        let m = v * v.adjoint() * c64(1.0 / n2, 0.0);
        HermitianMatrix::new(m).expect("outer product is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// Re tr(self * other); exact for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        frobenius_inner(&self.m, &other.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix {
            m: &self.m * c64(s, 0.0),
        }
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        HermitianMatrix {
            m: &self.m - &other.m,
        }
    }

    /// self^2, re-symmetrized.
    pub fn square(&self) -> Self {
        let sq = &self.m * &self.m;
        HermitianMatrix {
            m: (&sq + sq.adjoint()) * c64(0.5, 0.0),
        }
    }

    /// U self U†.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        let c = u * &self.m * u.adjoint();
        HermitianMatrix {
            m: (&c + c.adjoint()) * c64(0.5, 0.0),
        }
    }

    pub fn eig(&self) -> SpectralDecomposition {
        eig_hermitian(self)
    }
}

/// Largest entrywise deviation from Hermiticity, relative to max(1, max |m_ij|).
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            scale = scale.max(m[(i, j)].norm());
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst / scale
}

/// Re tr(A† B).
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// Σ f(λ_i) v_i v_i†.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(lam);
            scaled.column_mut(k).scale_mut(fk);
        }
        &scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Eigenvalues ascend; every eigenvector is rotated so its first entry of
/// non-negligible magnitude is real and positive.
pub fn eig_hermitian(m: &HermitianMatrix) -> SpectralDecomposition {
    let d = m.dim();
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = CMatrix::zeros(d, d);
    let mut vals = Vec::with_capacity(d);
    for (k, &idx) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[idx]);
        let mut col = eig.eigenvectors.column(idx).into_owned();
        fix_phase(&mut col);
        vecs.set_column(k, &col);
    }
    SpectralDecomposition {
        eigenvalues: vals,
        eigenvectors: vecs,
    }
}

/// Rotate a vector so its first non-negligible component is real positive.
pub fn fix_phase(v: &mut CVector) {
    let vmax = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-10 * vmax).copied() {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Σ f(λ_i) v_i v_i†. Fails if `f` is not finite on some eigenvalue.
pub fn matrix_function(m: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let sd = eig_hermitian(m);
    for &lam in &sd.eigenvalues {
        if !f(lam).is_finite() {
            return Err(Error::DomainError(lam));
        }
    }
    HermitianMatrix::new(sd.reconstruct_with(f))
}

/// exp(-i t H).
pub fn unitary_exp(h: &HermitianMatrix, t: f64) -> CMatrix {
    let sd = eig_hermitian(h);
    let v = &sd.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lam) in sd.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(1.0, -t * lam);
        for x in scaled.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    &scaled * v.adjoint()
}

/// x ln x with the 0 ln 0 = 0 convention; non-positive inputs map to 0.
pub fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Orthonormal basis of the approximate nullspace {x : ‖Ax‖ ≤ tol ‖A‖}.
///
/// Rank is decided on the singular values relative to the largest one.
pub fn nullspace<T>(a: &DMatrix<T>, tol: f64) -> Vec<DVector<T>>
where
    T: ComplexField<RealField = f64>,
{
    nullspace_scaled(a, tol, 0.0)
}

/// Like [`nullspace`], but singular values are compared against
/// `tol * max(σ_max, scale)`, so a map that is pure round-off relative to
/// `scale` is treated as zero.
pub fn nullspace_scaled<T>(a: &DMatrix<T>, tol: f64, scale: f64) -> Vec<DVector<T>>
where
    T: ComplexField<RealField = f64>,
{
    let (m, n) = a.shape();
    if n == 0 {
        return Vec::new();
    }
    let identity = || {
        (0..n)
            .map(|k| {
                let mut e = DVector::<T>::zeros(n);
                e[k] = T::one();
                e
            })
            .collect::<Vec<_>>()
    };
    if m == 0 || a.iter().all(|x| x.clone().modulus() == 0.0) {
        return identity();
    }
    // pad with zero rows so the SVD returns a full set of right singular vectors
    let padded = if m < n {
        let mut p = DMatrix::<T>::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(scale);
    let mut out = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol * smax {
            out.push(v_t.row(k).adjoint());
        }
    }
    out
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - 1.0) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Orthonormal basis of the real vector space of d×d Hermitian matrices.
///
/// Order: diagonal units E_ii, then for i<j the pair
/// (E_ij + E_ji)/√2 and i(E_ij − E_ji)/√2.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut e = CMatrix::zeros(d, d);
        e[(i, i)] = c64(1.0, 0.0);
        out.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut s = CMatrix::zeros(d, d);
            s[(i, j)] = c64(r, 0.0);
            s[(j, i)] = c64(r, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(d, d);
            a[(i, j)] = c64(0.0, r);
            a[(j, i)] = c64(0.0, -r);
            out.push(a);
        }
    }
    out
}

/// Coordinates of a Hermitian matrix in [`hermitian_basis`].
pub fn hermitian_coords(m: &CMatrix) -> DVector<f64> {
    let d = m.nrows();
    let r = std::f64::consts::SQRT_2;
    let mut out = DVector::zeros(d * d);
    for i in 0..d {
        out[i] = m[(i, i)].re;
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            out[k] = r * m[(i, j)].re;
            out[k + 1] = r * m[(i, j)].im;
            k += 2;
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn hermitian_from_coords(x: &DVector<f64>, d: usize) -> CMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = c64(x[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c64(r * x[k], r * x[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm(m: &HermitianMatrix) -> f64 {
    eig_hermitian(m).eigenvalues.iter().map(|x| x.abs()).sum()
}

/// ‖V†V − I‖_max for the columns of `v`.
pub fn orthonormality_defect(vectors: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let g = a.dotc(b);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - c64(target, 0.0)).norm());
        }
    }
    worst
}
