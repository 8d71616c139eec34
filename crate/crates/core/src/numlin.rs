//! Dense complex linear algebra and subspace calculus.
//!
//! Everything here works on `nalgebra` dense matrices over `Complex64`.
//! Rank decisions go through a single singular-value cutoff so that every
//! subspace result can report the tolerance it was computed with.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
/// Dense complex matrix, the numeric carrier used throughout the crate.
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Floor below which singular values are treated as zero regardless of scale.
const ABS_FLOOR: f64 = 1e-13;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix has eigenvalue {value:.3e} below the PSD clamp threshold")]
    NegativeEigenvalue { value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is rank deficient (smallest singular value {sigma_min:.3e})")]
    RankDeficient { sigma_min: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("malformed matrix: {0}")]
    Malformed(String),
}

/// Singular-value cutoff and residual cutoff used by every rank or equality decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub rank_tol: f64,
    pub eq_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            eq_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(rank_tol: f64, eq_tol: f64) -> Result<Self, NumError> {
        let t = Self { rank_tol, eq_tol };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), NumError> {
        for (name, v) in [("rank_tol", self.rank_tol), ("eq_tol", self.eq_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(NumError::InvalidTolerance(format!(
                    "{name} = {v} must lie in (0, 1e-2]"
                )));
            }
        }
        Ok(())
    }
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<(), NumError> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(NumError::NonFinite)
    }
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn to_faer(m: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values in descending order. Empty matrices have none.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values().expect("svd converges on finite input");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

fn cutoff(sigma_max: f64, rank_tol: f64) -> f64 {
    (rank_tol * sigma_max).max(ABS_FLOOR)
}

/// Numerical rank with the relative cutoff `rank_tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, rank_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    let cut = cutoff(smax, rank_tol);
    s.iter().filter(|&&x| x > cut).count()
}

/// Rank with a caller-supplied absolute cutoff.
pub fn rank_above(m: &ComplexMatrix, cut: f64) -> usize {
    singular_values(m).iter().filter(|&&x| x > cut).count()
}

/// Full SVD `m = U diag(s) V^H` with square `U` (rows x rows) and `V` (cols x cols).
/// Singular values are sorted descending, `min(rows, cols)` of them.
pub fn full_svd(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return (identity(r), Vec::new(), identity(c));
    }
    // faer rather than nalgebra: the latter is inaccurate on rank-deficient complex input
    let svd = to_faer(m).svd().expect("svd converges on finite input");
    let k = r.min(c);
    let diag = svd.S().column_vector();
    let raw: Vec<f64> = (0..k).map(|i| diag[i].re).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    let s: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let (u0, v0) = (from_faer(svd.U()), from_faer(svd.V()));
    let perm = |full: &ComplexMatrix| {
        let n = full.ncols();
        let cols: Vec<usize> = order.iter().copied().chain(k..n).collect();
        ComplexMatrix::from_fn(full.nrows(), n, |i, j| full[(i, cols[j])])
    };
    (perm(&u0), s, perm(&v0))
}

/// Extends an orthonormal n x k frame to an n x n unitary whose first k columns are the frame.
pub fn complete_basis(q: &ComplexMatrix) -> ComplexMatrix {
    let (n, k) = q.shape();
    if k >= n {
        return q.columns(0, n).into_owned();
    }
    let comp = orth_complement_frame(q);
    let mut out = ComplexMatrix::zeros(n, n);
    out.columns_mut(0, k).copy_from(q);
    out.columns_mut(k, n - k).copy_from(&comp);
    out
}

/// Orthonormal frame of the orthogonal complement of the span of an orthonormal frame.
fn orth_complement_frame(q: &ComplexMatrix) -> ComplexMatrix {
    let n = q.nrows();
    let k = q.ncols();
    if k == 0 {
        return identity(n);
    }
    if k >= n {
        return ComplexMatrix::zeros(n, 0);
    }
    let p = identity(n) - q * q.adjoint();
    let (vals, vecs) = hermitian_eigen(&p);
    let cols: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    ComplexMatrix::from_fn(n, cols.len(), |i, j| vecs[(i, cols[j])])
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * c64(0.5, 0.0);
    let eig = to_faer(&herm)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigensolver converges on finite input");
    let diag = eig.S().column_vector();
    let raw: Vec<f64> = (0..n).map(|i| diag[i].re).collect();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let vals = order.iter().map(|&i| raw[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    (vals, vecs)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-10 * rank_tol, 0)` are clamped to zero.
pub fn hermitian_sqrt(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix, NumError> {
    if m.nrows() != m.ncols() {
        return Err(NumError::DimensionMismatch(format!(
            "hermitian_sqrt needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let dev = hermitian_deviation(m);
    if dev > tol.eq_tol.max(tol.eq_tol * frobenius(m)) {
        return Err(NumError::NotHermitian { deviation: dev });
    }
    let (vals, vecs) = hermitian_eigen(m);
    if let Some(&lowest) = vals.first() {
        if lowest < -10.0 * tol.rank_tol {
            return Err(NumError::NegativeEigenvalue { value: lowest });
        }
    }
    let roots = DVector::from_iterator(vals.len(), vals.iter().map(|&v| c64(v.max(0.0).sqrt(), 0.0)));
    let scaled = ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| vecs[(i, j)] * roots[j]);
    let r = &scaled * vecs.adjoint();
    Ok((&r + r.adjoint()) * c64(0.5, 0.0))
}

/// A subspace of `C^ambient_dim` given by an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: ComplexMatrix,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize, tol: f64) -> Self {
        Self {
            frame: ComplexMatrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: f64) -> Self {
        Self {
            frame: identity(ambient_dim),
            tol,
        }
    }

    /// Wraps a frame that is already orthonormal (checked against `tol`).
    pub fn from_orthonormal(frame: ComplexMatrix, tol: f64) -> Result<Self, NumError> {
        let k = frame.ncols();
        let dev = frobenius(&(frame.adjoint() * &frame - identity(k)));
        if dev > tol.max(1e-10) * (1.0 + k as f64) {
            return Err(NumError::Malformed(format!(
                "frame is not orthonormal (deviation {dev:.3e})"
            )));
        }
        Ok(Self { frame, tol })
    }

    /// Column span of `vectors`, rank decided with the relative cutoff `rank_tol`.
    pub fn span(vectors: &ComplexMatrix, rank_tol: f64) -> Self {
        range_space(vectors, rank_tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn frame(&self) -> &ComplexMatrix {
        &self.frame
    }

    pub fn into_frame(self) -> ComplexMatrix {
        self.frame
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.frame * self.frame.adjoint()
    }

    pub fn complement(&self) -> Self {
        Self {
            frame: orth_complement_frame(&self.frame),
            tol: self.tol,
        }
    }

    /// Relative distance of `v` from the subspace.
    pub fn residual_of(&self, v: &ComplexVector) -> f64 {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        let proj = &self.frame * (self.frame.adjoint() * v);
        (v - proj).norm() / nv
    }

    /// Largest residual of `other`'s frame vectors against `self`.
    pub fn containment_gap(&self, other: &Subspace) -> f64 {
        if other.dim() == 0 {
            return 0.0;
        }
        let proj = &self.frame * (self.frame.adjoint() * &other.frame);
        op_norm(&(&other.frame - proj))
    }

    /// Sum of two subspaces.
    pub fn sum(&self, other: &Subspace, rank_tol: f64) -> Result<Self, NumError> {
        same_ambient(self, other)?;
        let mut stacked = ComplexMatrix::zeros(self.ambient_dim(), self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.frame);
        stacked.columns_mut(self.dim(), other.dim()).copy_from(&other.frame);
        Ok(range_space(&stacked, rank_tol))
    }

    /// `self ⊖ other`: the part of `self` orthogonal to `other`.
    pub fn minus(&self, other: &Subspace, rank_tol: f64) -> Result<Self, NumError> {
        same_ambient(self, other)?;
        if self.dim() == 0 {
            return Ok(self.clone());
        }
        // restrict the complement projector to self and keep its eigenvalue-1 part
        let g = self.frame.adjoint() * (identity(self.ambient_dim()) - other.projector()) * &self.frame;
        let (vals, vecs) = hermitian_eigen(&g);
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1.0 - rank_tol.sqrt()).collect();
        let coeffs = ComplexMatrix::from_fn(self.dim(), keep.len(), |i, j| vecs[(i, keep[j])]);
        Ok(Self {
            frame: &self.frame * coeffs,
            tol: self.tol,
        })
    }

    /// Principal-angle cosines between two subspaces, descending.
    pub fn overlap(&self, other: &Subspace) -> Vec<f64> {
        singular_values(&(self.frame.adjoint() * &other.frame))
    }
}

fn same_ambient(u: &Subspace, v: &Subspace) -> Result<(), NumError> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(NumError::DimensionMismatch(format!(
            "subspaces live in C^{} and C^{}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    Ok(())
}

/// Orthonormal basis of `{x : ||Mx|| <= rank_tol ||M|| ||x||}`.
pub fn kernel_space(m: &ComplexMatrix, tol: &Tolerance) -> Subspace {
    kernel_with_rank_tol(m, tol.rank_tol, tol.rank_tol)
}

fn kernel_with_rank_tol(m: &ComplexMatrix, rank_tol: f64, report_tol: f64) -> Subspace {
    let (r, c) = m.shape();
    if c == 0 {
        return Subspace::zero(0, report_tol);
    }
    if r == 0 {
        return Subspace::full(c, report_tol);
    }
    let (_, sv, v) = full_svd(m);
    let cut = cutoff(sv.first().copied().unwrap_or(0.0), rank_tol);
    let idx: Vec<usize> = (0..c).filter(|&j| j >= sv.len() || sv[j] <= cut).collect();
    let frame = ComplexMatrix::from_fn(c, idx.len(), |i, j| v[(i, idx[j])]);
    Subspace { frame, tol: report_tol }
}

/// Orthonormal basis of the numerical column space of `m`.
pub fn range_space(m: &ComplexMatrix, rank_tol: f64) -> Subspace {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Subspace::zero(r, rank_tol);
    }
    let (u, sv, _) = full_svd(m);
    let cut = cutoff(sv.first().copied().unwrap_or(0.0), rank_tol);
    let keep = sv.iter().filter(|&&x| x > cut).count();
    let frame = u.columns(0, keep).into_owned();
    Subspace { frame, tol: rank_tol }
}

/// `U ∩ V` as the kernel of the stacked complementary projections.
pub fn subspace_intersect(u: &Subspace, v: &Subspace, tol: &Tolerance) -> Result<Subspace, NumError> {
    same_ambient(u, v)?;
    let n = u.ambient_dim();
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::zero(n, tol.rank_tol));
    }
    let mut stacked = ComplexMatrix::zeros(2 * n, n);
    stacked.rows_mut(0, n).copy_from(&(identity(n) - u.projector()));
    stacked.rows_mut(n, n).copy_from(&(identity(n) - v.projector()));
    if frobenius(&stacked) <= ABS_FLOOR {
        return Ok(Subspace::full(n, tol.rank_tol));
    }
    // complementary projections have norm one, so the cutoff is absolute
    let ker = kernel_with_rank_tol(&stacked, tol.rank_tol, tol.rank_tol);
    Ok(ker)
}

/// `[rank(N), rank(N^2), ..., rank(N^kmax)]`.
///
/// The cutoff for `N^k` is `rank_tol * max(1, ||N||)^k`, so roundoff in
/// high powers of a nilpotent does not register as rank.
pub fn rank_sequence(n: &ComplexMatrix, kmax: usize, tol: &Tolerance) -> Vec<usize> {
    let dim = n.nrows();
    let scale = op_norm(n).max(1.0);
    let mut out = Vec::with_capacity(kmax);
    let mut power = identity(dim);
    for k in 1..=kmax {
        power = &power * n;
        out.push(rank_above(&power, tol.rank_tol * scale.powi(k as i32)));
    }
    out
}

/// Unitary factor of the polar decomposition `M = U P`.
pub fn polar_unitary(m: &ComplexMatrix, tol: &Tolerance) -> Result<ComplexMatrix, NumError> {
    if m.nrows() != m.ncols() {
        return Err(NumError::DimensionMismatch(format!(
            "polar_unitary needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let s = singular_values(m);
    let smin = s.last().copied().unwrap_or(f64::INFINITY);
    if smin <= tol.rank_tol {
        return Err(NumError::RankDeficient { sigma_min: smin });
    }
    Ok(procrustes_unitary(m))
}

/// Unitary (or partial-isometric for rectangular input) `W` maximising `Re tr(W^H M)`.
/// Unlike [`polar_unitary`] this accepts rank-deficient input and completes arbitrarily.
pub fn procrustes_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let (u, _, v) = full_svd(m);
    let k = m.nrows().min(m.ncols());
    u.columns(0, k) * v.columns(0, k).adjoint()
}

/// Matrix wire format: `{"rows": r, "cols": c, "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = NumError;

    fn try_from(j: MatrixJson) -> Result<Self, NumError> {
        if j.entries.len() != j.rows * j.cols {
            return Err(NumError::Malformed(format!(
                "{} entries for a {}x{} matrix",
                j.entries.len(),
                j.rows,
                j.cols
            )));
        }
        let m = ComplexMatrix::from_fn(j.rows, j.cols, |r, c| {
            let [re, im] = j.entries[r * j.cols + c];
            c64(re, im)
        });
        ensure_finite(&m)?;
        Ok(m)
    }
}

/// Serde adapter for fields holding a [`ComplexMatrix`].
pub mod matrix_serde {
    use super::{ComplexMatrix, MatrixJson};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for complex scalars as `[re, im]`.
pub mod complex_serde {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(serde::de::Error::custom("non-finite complex scalar"));
        }
        Ok(C64::new(re, im))
    }
}

/// Seeded random matrices for restarts and tests.
pub mod random {
    use super::{c64, ComplexMatrix};
    use nalgebra::QR;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
    }

    /// Haar-distributed unitary via QR with the diagonal phase fix.
    pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
        if n == 0 {
            return ComplexMatrix::zeros(0, 0);
        }
        let qr = QR::new(gaussian(n, n, rng));
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// Random matrix with prescribed singular values (padded with zeros).
    pub fn with_singular_values<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        sigma: &[f64],
        rng: &mut R,
    ) -> ComplexMatrix {
        let u = unitary(rows, rng);
        let v = unitary(cols, rng);
        let mut d = ComplexMatrix::zeros(rows, cols);
        for (i, &s) in sigma.iter().enumerate().take(rows.min(cols)) {
            d[(i, i)] = c64(s, 0.0);
        }
        u * d * v.adjoint()
    }
}
