//! Constructors for the explicit models: `T_{a,b,c}`, the Jordan nilpotents
//! `J_m`, the monomial models `T_A` and `T̃_A`, and the degree-one realizer.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charfn::MatrixPolynomial;
use crate::numlin::{self, c64, ComplexMatrix, NumError, Tolerance, C64};
use crate::windowed::{Block, FiberProfile, WindowError, WindowedShiftOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameters do not define a contraction: {0}")]
    NotContraction(String),
    #[error("A is not a pure contraction (largest singular value {sigma_max})")]
    NotPureContraction { sigma_max: f64 },
    #[error("alpha + beta z is not realizable: {0}")]
    NotRealizable(String),
    #[error("purity undecided: boundary maximum {boundary_max} with slack {slack}")]
    Inconclusive { boundary_max: f64, slack: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelWarning {
    /// `|a| = |b| = 1` and `c = 0`: the operator is the bilateral shift.
    BilateralShiftCase,
    /// `|c| = 1`: the operator has a bilateral-shift summand and is not c.n.u.
    UnitaryPart,
    /// `|beta| = 1` was routed to the finite model `J_1`.
    BoundaryRealization,
}

/// Parameters of `T_{a,b,c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabcParams {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    /// `c / ((1-|a|^2)(1-|b|^2))^{1/2}` when the denominator is nonzero.
    pub gamma: Option<C64>,
}

impl TabcParams {
    /// Checks that `Q = [a c; 0 b]` is a contraction.
    pub fn new(a: C64, b: C64, c: C64, tol: &Tolerance) -> Result<Self, ModelError> {
        for (name, z) in [("a", a), ("b", b), ("c", c)] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(ModelError::InvalidParameter(format!("{name} is not finite")));
            }
            if z.norm() > 1.0 + tol.eq_tol {
                return Err(ModelError::NotContraction(format!("|{name}| = {} > 1", z.norm())));
            }
        }
        let e = tol.eq_tol;
        if a.norm_sqr() + c.norm_sqr() > 1.0 + e || b.norm_sqr() + c.norm_sqr() > 1.0 + e {
            return Err(ModelError::NotContraction(format!(
                "|a|^2 + |c|^2 = {:.6}, |b|^2 + |c|^2 = {:.6}",
                a.norm_sqr() + c.norm_sqr(),
                b.norm_sqr() + c.norm_sqr()
            )));
        }
        let room = ((1.0 - a.norm_sqr()).max(0.0) * (1.0 - b.norm_sqr()).max(0.0)).sqrt();
        if c.norm() > room + e {
            return Err(ModelError::NotContraction(format!(
                "|c| = {} exceeds ((1-|a|^2)(1-|b|^2))^(1/2) = {room}",
                c.norm()
            )));
        }
        let gamma = (room > 0.0).then(|| c / room);
        Ok(Self { a, b, c, gamma })
    }

    /// `c = gamma ((1-|a|^2)(1-|b|^2))^{1/2}`.
    pub fn from_gamma(a: C64, b: C64, gamma: C64, tol: &Tolerance) -> Result<Self, ModelError> {
        if gamma.norm() > 1.0 + tol.eq_tol {
            return Err(ModelError::NotContraction(format!("|gamma| = {} > 1", gamma.norm())));
        }
        let room = ((1.0 - a.norm_sqr()).max(0.0) * (1.0 - b.norm_sqr()).max(0.0)).sqrt();
        let mut p = Self::new(a, b, gamma * room, tol)?;
        p.gamma = Some(gamma);
        Ok(p)
    }

    pub fn warnings(&self, tol: &Tolerance) -> Vec<ModelWarning> {
        let unit = |z: C64| (z.norm() - 1.0).abs() <= tol.eq_tol;
        let mut w = Vec::new();
        if unit(self.a) && unit(self.b) && self.c.norm() <= tol.eq_tol {
            w.push(ModelWarning::BilateralShiftCase);
        }
        if unit(self.c) {
            w.push(ModelWarning::UnitaryPart);
        }
        w
    }

    /// The 2x2 matrix `Q_{a,b,c}`.
    pub fn q_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[self.a, self.c, c64(0.0, 0.0), self.b])
    }
}

fn scalar(z: C64) -> ComplexMatrix {
    ComplexMatrix::from_element(1, 1, z)
}

/// `T e_0 = a e_1`, `T e_{-1} = b e_0 + c e_1`, `T e_n = e_{n+1}` otherwise.
pub fn make_tabc(p: &TabcParams, tol: &Tolerance) -> Result<WindowedShiftOperator, ModelError> {
    let op = WindowedShiftOperator::new(
        FiberProfile::scalar(),
        (-1, 0),
        vec![
            Block {
                from: 0,
                to: 1,
                matrix: scalar(p.a),
            },
            Block {
                from: -1,
                to: 0,
                matrix: scalar(p.b),
            },
            Block {
                from: -1,
                to: 1,
                matrix: scalar(p.c),
            },
        ],
    )?;
    match op.defect_grams(tol) {
        Ok(_) => Ok(op),
        Err(WindowError::NotContraction { min_eig }) => Err(ModelError::NotContraction(format!(
            "defect gram eigenvalue {min_eig:.3e}"
        ))),
        Err(e) => Err(e.into()),
    }
}

/// The `(m·dim) x (m·dim)` nilpotent with identity blocks on the superdiagonal.
pub fn make_jm(m: usize, dim: usize) -> ComplexMatrix {
    let n = m * dim;
    let mut j = ComplexMatrix::zeros(n, n);
    for k in 0..m.saturating_sub(1) {
        for i in 0..dim {
            j[(k * dim + i, (k + 1) * dim + i)] = c64(1.0, 0.0);
        }
    }
    j
}

/// `J_m` as a windowed operator on fibers `0..m` of dimension `dim`; fiber
/// `n` maps to fiber `n + 1` and the last fiber to zero.
pub fn jordan_operator(m: usize, dim: usize) -> Result<WindowedShiftOperator, ModelError> {
    if m == 0 || dim == 0 {
        return Err(ModelError::InvalidParameter("J_m needs m >= 1 and dim >= 1".into()));
    }
    let top = m as i64 - 1;
    let overrides: BTreeMap<i64, usize> = (0..=top).map(|n| (n, dim)).collect();
    let blocks = (0..top)
        .map(|n| Block {
            from: n,
            to: n + 1,
            matrix: numlin::identity(dim),
        })
        .collect();
    Ok(WindowedShiftOperator::with_fiber_dims(
        FiberProfile::new(0, 0),
        (-1, top),
        blocks,
        overrides,
    )?)
}

/// A pure contraction `A: 𝓜 -> 𝓝` and the order `m` of the monomial `A z^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialParams {
    pub a: ComplexMatrix,
    pub m: usize,
}

impl MonomialParams {
    pub fn new(a: ComplexMatrix, m: usize, tol: &Tolerance) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::InvalidParameter("m must be at least 1".into()));
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(ModelError::InvalidParameter("A must have nonzero dimensions".into()));
        }
        numlin::ensure_finite(&a)?;
        let sigma_max = numlin::op_norm(&a);
        if sigma_max >= 1.0 - tol.rank_tol {
            return Err(ModelError::NotPureContraction { sigma_max });
        }
        Ok(Self { a, m })
    }

    /// `dim 𝓜`.
    pub fn left_dim(&self) -> usize {
        self.a.ncols()
    }

    /// `dim 𝓝`.
    pub fn right_dim(&self) -> usize {
        self.a.nrows()
    }

    fn defects(&self, tol: &Tolerance) -> Result<(ComplexMatrix, ComplexMatrix), ModelError> {
        let (r, c) = self.a.shape();
        let da = numlin::hermitian_sqrt(&(numlin::identity(c) - self.a.adjoint() * &self.a), tol)?;
        let das = numlin::hermitian_sqrt(&(numlin::identity(r) - &self.a * self.a.adjoint()), tol)?;
        Ok((da, das))
    }
}

/// `T_A`: `D_{A*}: L_{m-1} -> L_m`, `-A: L_{-1} -> L_m`, identity shift elsewhere.
pub fn make_ta(p: &MonomialParams, tol: &Tolerance) -> Result<WindowedShiftOperator, ModelError> {
    let (_, das) = p.defects(tol)?;
    let top = p.m as i64 - 1;
    let n = p.right_dim();
    let mut blocks: Vec<Block> = (0..top)
        .map(|k| Block {
            from: k,
            to: k + 1,
            matrix: numlin::identity(n),
        })
        .collect();
    blocks.push(Block {
        from: top,
        to: top + 1,
        matrix: das,
    });
    blocks.push(Block {
        from: -1,
        to: top + 1,
        matrix: -p.a.clone(),
    });
    let profile = FiberProfile::new(p.left_dim(), p.right_dim());
    Ok(WindowedShiftOperator::new(profile, (-1, top), blocks)?)
}

/// `T̃_A`: `-A ⊕ D_A: L_{-m-1} -> L_0 ⊕ L_{-m}`, identity shift inside
/// `L_{-m}..L_{-1}` except that `L_{-1}` is mapped to zero. This is the
/// reflected adjoint of `T_{A*}`.
pub fn make_ta_star(p: &MonomialParams, tol: &Tolerance) -> Result<WindowedShiftOperator, ModelError> {
    let (da, _) = p.defects(tol)?;
    let m = p.m as i64;
    let k = p.left_dim();
    let mut blocks: Vec<Block> = (-m..-1)
        .map(|n| Block {
            from: n,
            to: n + 1,
            matrix: numlin::identity(k),
        })
        .collect();
    blocks.push(Block {
        from: -m - 1,
        to: 0,
        matrix: -p.a.clone(),
    });
    blocks.push(Block {
        from: -m - 1,
        to: -m,
        matrix: da,
    });
    let profile = FiberProfile::new(p.left_dim(), p.right_dim());
    Ok(WindowedShiftOperator::new(profile, (-m - 1, -1), blocks)?)
}

/// The scalar polynomial `alpha + beta z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeOnePoly {
    pub alpha: C64,
    pub beta: C64,
}

impl DegreeOnePoly {
    pub fn new(alpha: C64, beta: C64) -> Self {
        Self { alpha, beta }
    }

    /// `|alpha| + |beta| <= 1` and `|alpha| < 1`.
    pub fn is_purely_contractive(&self, tol: &Tolerance) -> bool {
        self.alpha.norm() < 1.0 && self.alpha.norm() + self.beta.norm() <= 1.0 + tol.eq_tol
    }

    pub fn polynomial(&self) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&[self.alpha, self.beta])
    }
}

/// A model whose characteristic function coincides with a given `alpha + beta z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Realization {
    Tabc(TabcParams),
    /// `J_m` on `C^{m·dim}`; its characteristic function is `z^m` times a unitary.
    Jordan {
        m: usize,
        dim: usize,
        phase: C64,
    },
}

impl Realization {
    pub fn operator(&self, tol: &Tolerance) -> Result<WindowedShiftOperator, ModelError> {
        match self {
            Realization::Tabc(p) => make_tabc(p, tol),
            Realization::Jordan { m, dim, .. } => jordan_operator(*m, *dim),
        }
    }

    pub fn warnings(&self, tol: &Tolerance) -> Vec<ModelWarning> {
        match self {
            Realization::Tabc(p) => p.warnings(tol),
            Realization::Jordan { .. } => vec![ModelWarning::BoundaryRealization],
        }
    }
}

/// Picks `a = |a| >= 0`, `b = |b| e^{i arg alpha}`, `c = beta` with
/// `ab = alpha` and `(1-|a|^2)(1-|b|^2) = |beta|^2`; `|a|^2 >= |b|^2` are the
/// two roots of `t^2 - (1 + |alpha|^2 - |beta|^2) t + |alpha|^2`.
pub fn realize_degree_one(p: &DegreeOnePoly, tol: &Tolerance) -> Result<Realization, ModelError> {
    let (alpha, beta) = (p.alpha, p.beta);
    if !p.is_purely_contractive(tol) {
        return Err(ModelError::NotRealizable(format!(
            "|alpha| = {}, |alpha| + |beta| = {}",
            alpha.norm(),
            alpha.norm() + beta.norm()
        )));
    }
    if (beta.norm() - 1.0).abs() <= tol.eq_tol {
        let phase = beta / beta.norm();
        return Ok(Realization::Jordan { m: 1, dim: 1, phase });
    }
    let s = 1.0 + alpha.norm_sqr() - beta.norm_sqr();
    let disc = (s * s - 4.0 * alpha.norm_sqr()).max(0.0);
    let x = ((s + disc.sqrt()) / 2.0).min(1.0);
    let y = if x > 0.0 { (alpha.norm_sqr() / x).min(1.0) } else { 0.0 };
    let a = c64(x.sqrt(), 0.0);
    let b = if alpha.norm() > 0.0 {
        alpha / alpha.norm() * y.sqrt()
    } else {
        c64(y.sqrt(), 0.0)
    };
    // (1-x)(1-y) = |beta|^2 holds up to roundoff, so c is taken as beta itself
    let gamma = if beta.norm() > 0.0 {
        beta / beta.norm()
    } else {
        c64(1.0, 0.0)
    };
    let c = beta;
    let mut params = TabcParams::new(a, b, c, tol)?;
    params.gamma = Some(gamma);
    Ok(Realization::Tabc(params))
}

/// Outcome of a purity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityCertificate {
    pub purely_contractive: bool,
    pub method: PurityMethod,
    /// Largest sampled `‖P(e^{iθ})‖`; absent for the closed form.
    pub boundary_max: Option<f64>,
    /// Lipschitz padding added to the sampled maximum.
    pub slack: Option<f64>,
    pub grid: Option<usize>,
    /// `‖P(0)‖`.
    pub at_zero: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurityMethod {
    ClosedForm,
    BoundaryGrid,
}

/// Decides whether `P` is purely contractive: `‖P(z)‖ <= 1` on the disk and
/// `‖P(0) f‖ < ‖f‖` for `f != 0`. Scalar degree-one inputs use the closed
/// form; otherwise the boundary is sampled on `grid` points and padded by
/// `sum_k k ‖P_k‖ (2π / grid)`.
pub fn is_purely_contractive(
    p: &MatrixPolynomial,
    grid: usize,
    tol: &Tolerance,
) -> Result<PurityCertificate, ModelError> {
    let at_zero = numlin::op_norm(&p.coeff(0));
    if p.dom() == 1 && p.cod() == 1 && p.len_degree() <= 1 {
        let q = DegreeOnePoly::new(p.coeff(0)[(0, 0)], p.coeff(1)[(0, 0)]);
        return Ok(PurityCertificate {
            purely_contractive: q.is_purely_contractive(tol),
            method: PurityMethod::ClosedForm,
            boundary_max: None,
            slack: None,
            grid: None,
            at_zero,
        });
    }
    if grid == 0 {
        return Err(ModelError::InvalidParameter("grid must be positive".into()));
    }
    let boundary_max = (0..grid)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / grid as f64;
            numlin::op_norm(&p.eval(c64(t.cos(), t.sin())))
        })
        .fold(0.0, f64::max);
    let lipschitz: f64 = p
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| k as f64 * numlin::op_norm(c))
        .sum();
    let slack = lipschitz * 2.0 * PI / grid as f64;
    let strict = p.dom() == 0 || at_zero < 1.0 - tol.rank_tol;
    let contractive = if boundary_max > 1.0 + tol.eq_tol {
        false
    } else if boundary_max + slack <= 1.0 + tol.eq_tol {
        true
    } else {
        return Err(ModelError::Inconclusive { boundary_max, slack });
    };
    Ok(PurityCertificate {
        purely_contractive: contractive && strict,
        method: PurityMethod::BoundaryGrid,
        boundary_max: Some(boundary_max),
        slack: Some(slack),
        grid: Some(grid),
        at_zero,
    })
}
