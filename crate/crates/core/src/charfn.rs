//! Defect operators and the characteristic function
//! `Θ_T(z) = [-T + z D_{T*} (I - z T*)^{-1} D_T]` restricted to the defect space.
//!
//! Taylor coefficients are `Θ_0 = -T` and `Θ_k = D_{T*} T*^{k-1} D_T`, each
//! computed by pushing the finitely many defect generators through `T*`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numlin::{self, c64, ComplexMatrix, ComplexVector, MatrixJson, NumError, Subspace, Tolerance, C64};
use crate::windowed::{DefectBlock, FiberIndex, WindowError, WindowVector, WindowedShiftOperator};

/// Hard cap on the number of Taylor terms any single call will compute.
pub const MAX_TERMS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharFnError {
    #[error("point {modulus} is not inside the open unit disk")]
    OutsideDisk { modulus: f64 },
    #[error("{requested} Taylor terms requested, the cap is {cap}")]
    BudgetExceeded { requested: usize, cap: usize },
    #[error("malformed polynomial: {0}")]
    Malformed(String),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Which defect operator a [`DefectSide`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Defect {
    /// `D_T = (I - T*T)^{1/2}`
    T,
    /// `D_{T*} = (I - TT*)^{1/2}`
    TStar,
}

/// One defect operator on its finite fiber support, with an orthonormal
/// frame of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectSide {
    pub which: Defect,
    pub index: FiberIndex,
    pub gram: ComplexMatrix,
    pub op: ComplexMatrix,
    /// Columns span the defect space, in the coordinates of `index`.
    pub frame: ComplexMatrix,
    /// Gram eigenvalues belonging to the frame columns, descending.
    pub spectrum: Vec<f64>,
}

impl DefectSide {
    fn from_block(which: Defect, block: DefectBlock, tol: &Tolerance) -> Result<Self, CharFnError> {
        let op = numlin::hermitian_sqrt(&block.gram, tol)?;
        let (vals, vecs) = numlin::hermitian_eigen(&block.gram);
        // grams of contractions live in [0, 1], so the cutoff is absolute
        let keep: Vec<usize> = (0..vals.len()).rev().filter(|&i| vals[i] > tol.rank_tol).collect();
        let mut frame = ComplexMatrix::from_fn(vecs.nrows(), keep.len(), |i, j| vecs[(i, keep[j])]);
        for mut col in frame.column_iter_mut() {
            // fix the phase so the largest entry is real positive
            let pivot = col.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm()));
            if let Some(p) = pivot {
                if p.norm() > 0.0 {
                    col *= p.conj() / p.norm();
                }
            }
        }
        let spectrum = keep.iter().map(|&i| vals[i]).collect();
        Ok(Self {
            which,
            index: block.index,
            gram: block.gram,
            op,
            frame,
            spectrum,
        })
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn support(&self) -> (i64, i64) {
        (self.index.lo(), self.index.hi())
    }

    pub fn subspace(&self, tol: &Tolerance) -> Subspace {
        Subspace::from_orthonormal(self.frame.clone(), tol.eq_tol).expect("eigenvectors are orthonormal")
    }

    pub fn frame_vectors(&self) -> Vec<WindowVector> {
        self.index.unflatten_columns(&self.frame)
    }

    /// Frame coordinates of the orthogonal projection of `x` onto the defect space.
    pub fn coordinates(&self, x: &WindowVector) -> ComplexVector {
        self.frame.adjoint() * self.index.flatten(x)
    }

    /// Frame coordinates of `D x`.
    pub fn apply_defect(&self, x: &WindowVector) -> ComplexVector {
        self.frame.adjoint() * (&self.op * self.index.flatten(x))
    }
}

/// Both defect operators of a contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectData {
    pub dt: DefectSide,
    pub dt_star: DefectSide,
}

pub fn defect_data(op: &WindowedShiftOperator, tol: &Tolerance) -> Result<DefectData, CharFnError> {
    let (g, gs) = op.defect_grams(tol)?;
    Ok(DefectData {
        dt: DefectSide::from_block(Defect::T, g, tol)?,
        dt_star: DefectSide::from_block(Defect::TStar, gs, tol)?,
    })
}

/// Coefficients `Θ_0, Θ_1, ...` of a polynomial `𝒟 -> 𝒟'` valued function.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<ComplexMatrix>,
    dom: usize,
    cod: usize,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<ComplexMatrix>, dom: usize, cod: usize) -> Result<Self, CharFnError> {
        for (k, c) in coeffs.iter().enumerate() {
            if c.shape() != (cod, dom) {
                return Err(CharFnError::Malformed(format!(
                    "coefficient {k} is {}x{}, expected {cod}x{dom}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            numlin::ensure_finite(c)?;
        }
        let coeffs = if coeffs.is_empty() {
            vec![ComplexMatrix::zeros(cod, dom)]
        } else {
            coeffs
        };
        Ok(Self { coeffs, dom, cod })
    }

    pub fn scalar(coeffs: &[C64]) -> Self {
        let cs = coeffs.iter().map(|&z| ComplexMatrix::from_element(1, 1, z)).collect();
        Self::new(cs, 1, 1).expect("1x1 coefficients")
    }

    /// `a z^k`.
    pub fn monomial(k: usize, a: &ComplexMatrix) -> Self {
        let (cod, dom) = a.shape();
        let mut coeffs = vec![ComplexMatrix::zeros(cod, dom); k + 1];
        coeffs[k] = a.clone();
        Self { coeffs, dom, cod }
    }

    pub fn coeffs(&self) -> &[ComplexMatrix] {
        &self.coeffs
    }

    pub fn dom(&self) -> usize {
        self.dom
    }

    pub fn cod(&self) -> usize {
        self.cod
    }

    /// Index of the last stored coefficient.
    pub fn len_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> ComplexMatrix {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| ComplexMatrix::zeros(self.cod, self.dom))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(numlin::op_norm).fold(0.0, f64::max)
    }

    /// Drops trailing coefficients with norm at most `rel * max_k ‖Θ_k‖`.
    pub fn trimmed(&self, rel: f64) -> Self {
        let cut = rel * self.max_coeff_norm();
        let mut n = self.coeffs.len();
        while n > 1 && numlin::op_norm(&self.coeffs[n - 1]) <= cut {
            n -= 1;
        }
        Self {
            coeffs: self.coeffs[..n].to_vec(),
            dom: self.dom,
            cod: self.cod,
        }
    }

    /// Indices of coefficients above `rel * max_k ‖Θ_k‖`.
    pub fn support(&self, rel: f64) -> Vec<usize> {
        let cut = rel * self.max_coeff_norm();
        (0..self.coeffs.len())
            .filter(|&k| self.max_coeff_norm() > 0.0 && numlin::op_norm(&self.coeffs[k]) > cut)
            .collect()
    }

    pub fn eval(&self, z: C64) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.cod, self.dom);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            dom: self.dom,
            cod: self.cod,
            coeffs: self.coeffs.iter().map(MatrixJson::from).collect(),
        }
    }

    pub fn from_json(j: PolynomialJson) -> Result<Self, CharFnError> {
        let coeffs = j
            .coeffs
            .into_iter()
            .map(ComplexMatrix::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(coeffs, j.dom, j.cod)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub dom: usize,
    pub cod: usize,
    pub coeffs: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degree {
    Exact(usize),
    AtLeast(usize),
}

impl Degree {
    pub fn exact(self) -> Option<usize> {
        match self {
            Degree::Exact(n) => Some(n),
            Degree::AtLeast(_) => None,
        }
    }
}

fn check_budget(requested: usize) -> Result<(), CharFnError> {
    if requested > MAX_TERMS {
        return Err(CharFnError::BudgetExceeded {
            requested,
            cap: MAX_TERMS,
        });
    }
    Ok(())
}

fn check_disk(z: C64) -> Result<(), CharFnError> {
    if z.norm().is_nan() || z.norm() >= 1.0 {
        return Err(CharFnError::OutsideDisk { modulus: z.norm() });
    }
    Ok(())
}

/// Below this fiber `T*` is a plain backward shift that never returns.
fn escape_fiber(op: &WindowedShiftOperator, data: &DefectData) -> i64 {
    let min_target = op.blocks().iter().map(|b| b.to).min().unwrap_or(i64::MAX);
    op.window().0.min(min_target).min(data.dt_star.index.lo())
}

fn escaped(v: &WindowVector, floor: i64) -> bool {
    v.is_empty() || v.hi() < floor || v.norm_sqr() == 0.0
}

/// `D_T f_j` for the frame vectors `f_j` of the defect space.
fn generators(data: &DefectData) -> Vec<WindowVector> {
    let d = &data.dt;
    let image = &d.op * &d.frame;
    d.index.unflatten_columns(&image)
}

fn theta_zero(op: &WindowedShiftOperator, data: &DefectData) -> ComplexMatrix {
    let (cod, dom) = (data.dt_star.dim(), data.dt.dim());
    let mut m = ComplexMatrix::zeros(cod, dom);
    for (j, f) in data.dt.frame_vectors().iter().enumerate() {
        let col = -data.dt_star.coordinates(&op.apply(f));
        m.set_column(j, &col);
    }
    m
}

/// Raw coefficients `Θ_0..=Θ_kmax` and whether every generator escaped.
fn raw_coeffs(op: &WindowedShiftOperator, data: &DefectData, kmax: usize) -> (Vec<ComplexMatrix>, bool) {
    let (cod, dom) = (data.dt_star.dim(), data.dt.dim());
    let floor = escape_fiber(op, data);
    let mut coeffs = vec![theta_zero(op, data)];
    let mut vs = generators(data);
    let mut done = vs.iter().all(|v| escaped(v, floor));
    for _ in 1..=kmax {
        if done {
            coeffs.push(ComplexMatrix::zeros(cod, dom));
            continue;
        }
        let mut m = ComplexMatrix::zeros(cod, dom);
        for (j, v) in vs.iter().enumerate() {
            m.set_column(j, &data.dt_star.apply_defect(v));
        }
        coeffs.push(m);
        vs = vs.iter().map(|v| op.adjoint_apply(v)).collect();
        done = vs.iter().all(|v| escaped(v, floor));
    }
    (coeffs, done)
}

/// Taylor coefficients `Θ_0..=Θ_kmax` in the stored defect frames, with
/// negligible trailing coefficients removed.
pub fn theta_coeffs(op: &WindowedShiftOperator, kmax: usize, tol: &Tolerance) -> Result<MatrixPolynomial, CharFnError> {
    check_budget(kmax)?;
    let data = defect_data(op, tol)?;
    let (coeffs, _) = raw_coeffs(op, &data, kmax);
    let p = MatrixPolynomial::new(coeffs, data.dt.dim(), data.dt_star.dim())?;
    Ok(p.trimmed(tol.rank_tol))
}

/// `Θ_T(z)` in the stored defect frames. The Neumann series is summed for at
/// most `budget` terms and is exact when the generators leave the defect
/// support sooner, which is the case for polynomial characteristic functions.
pub fn theta_at(
    op: &WindowedShiftOperator,
    z: C64,
    budget: usize,
    tol: &Tolerance,
) -> Result<ComplexMatrix, CharFnError> {
    check_disk(z)?;
    check_budget(budget)?;
    let data = defect_data(op, tol)?;
    let floor = escape_fiber(op, &data);
    let mut theta = theta_zero(op, &data);
    for (j, g) in generators(&data).into_iter().enumerate() {
        // acc = sum_k z^k T*^k D_T f_j
        let mut acc = WindowVector::empty();
        let mut v = g;
        let mut zk = c64(1.0, 0.0);
        for _ in 0..budget {
            if escaped(&v, floor) {
                break;
            }
            acc = acc.axpy(zk, &v);
            v = op.adjoint_apply(&v);
            zk *= z;
        }
        let col = data.dt_star.apply_defect(&acc) * z;
        let mut c = theta.column_mut(j);
        c += col;
    }
    Ok(theta)
}

/// Smallest `n` with `‖Θ_k‖ <= rank_tol * max_j ‖Θ_j‖` for `n < k <= bound`.
pub fn poly_degree(op: &WindowedShiftOperator, bound: usize, tol: &Tolerance) -> Result<Degree, CharFnError> {
    check_budget(bound)?;
    let data = defect_data(op, tol)?;
    let (coeffs, done) = raw_coeffs(op, &data, bound);
    let norms: Vec<f64> = coeffs.iter().map(numlin::op_norm).collect();
    let cut = tol.rank_tol * norms.iter().copied().fold(0.0, f64::max);
    let n = norms.iter().rposition(|&x| x > cut).unwrap_or(0);
    if n == bound && bound > 0 && !done {
        return Ok(Degree::AtLeast(bound));
    }
    Ok(Degree::Exact(n))
}

/// Whether `z` lies in the spectrum: `Θ_T(z)` fails to be boundedly invertible.
pub fn in_disk_spectrum(
    op: &WindowedShiftOperator,
    z: C64,
    budget: usize,
    tol: &Tolerance,
) -> Result<bool, CharFnError> {
    let theta = theta_at(op, z, budget, tol)?;
    if theta.nrows() != theta.ncols() {
        return Ok(true);
    }
    let smin = numlin::singular_values(&theta).last().copied();
    Ok(matches!(smin, Some(s) if s <= tol.rank_tol))
}
