//! Triangular splittings `T = [S * *; 0 N *; 0 0 C]` on interior coordinates.
//!
//! Every subspace lives in the coordinates of a block of fibers `[-d, d]`
//! (the interior). The canonical spaces are kernels of finitely many exact
//! orbit vectors `T^k h` (`h` in the `D_{T*}` frame) or `T*^k g` (`g` in the
//! `D_T` frame), restricted to the interior. Once every orbit has left the
//! interior the restriction is exact, which the [`Exactness`] record certifies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charfn::{self, CharFnError, Degree};
use crate::numlin::{self, ComplexMatrix, MatrixJson, NumError, Subspace, Tolerance};
use crate::windowed::{FiberIndex, WindowVector, WindowedShiftOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanonicalError {
    #[error("characteristic function degree not detected within {bound} terms")]
    DegreeUndetected { bound: usize },
    #[error("radius {radius} leaves interior depth {depth}, the model needs {need}")]
    ExactnessTooShallow { radius: usize, depth: i64, need: i64 },
    #[error("orbits keep mass {leak:.3e} in the interior after {steps} steps")]
    NotStabilized { steps: usize, leak: f64 },
    #[error("{steps} steps exceed the budget of radius {radius}")]
    BudgetExceeded { steps: usize, radius: usize },
    #[error("hypothesis violated: {which} has dimension {dim}")]
    HypothesisViolated { which: String, dim: usize },
    #[error("matrix is not nilpotent (smallest power norm {residual:.3e})")]
    NotNilpotent { residual: f64 },
    #[error("invalid splitting: {0}")]
    InvalidSplitting(String),
    #[error(transparent)]
    CharFn(#[from] CharFnError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Canonical,
    StarCanonical,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `M_1`: `||T^{k+1} h|| = ||T^k h||` for all `k`.
    Forward,
    /// `M_{-1}`: the same for `T*`.
    Backward,
}

/// How the interior was chosen and how well the orbits cleared it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exactness {
    pub radius: usize,
    pub steps: usize,
    pub degree: usize,
    /// `d = radius - (degree + window width + steps)`.
    pub depth: i64,
    pub interior: (i64, i64),
    /// Norm of `T^{steps+1} h` still at or below the interior top.
    pub forward_leak: f64,
    /// Norm of `T*^{steps+1} g` still at or above the interior bottom.
    pub adjoint_leak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    /// `||G^H G - I||` for `G = [H1 H0 Hm1]`.
    pub orthogonality: f64,
    /// Largest below-diagonal compression.
    pub triangularity: f64,
    /// Largest `||(I - T*T) x||` over the `H1` frame.
    pub isometry: f64,
    /// Largest `||(I - TT*) x||` over the `Hm1` frame.
    pub coisometry: f64,
    /// `||N^order||`, or the smallest power norm when `N` is not nilpotent.
    pub nilpotency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    pub variant: Variant,
    pub index: FiberIndex,
    pub h1: Subspace,
    pub h0: Subspace,
    pub hm1: Subspace,
    pub s_block: ComplexMatrix,
    pub n_block: ComplexMatrix,
    pub c_block: ComplexMatrix,
    /// `P_I T P_I` in interior coordinates.
    pub t_interior: ComplexMatrix,
    pub nilpotent_order: Option<usize>,
    pub mult_s: usize,
    pub mult_c: usize,
    pub exactness: Exactness,
    pub checks: Checks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frames {
    pub h1: MatrixJson,
    pub h0: MatrixJson,
    pub hm1: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub variant: Variant,
    pub dims: [usize; 3],
    pub degree: usize,
    pub nilpotent_order: Option<usize>,
    #[serde(rename = "mult_S")]
    pub mult_s: usize,
    #[serde(rename = "mult_C")]
    pub mult_c: usize,
    pub exactness_depth: i64,
    pub interior: [i64; 2],
    pub checks: Checks,
    pub frames: Frames,
}

impl CanonicalDecomposition {
    pub fn dims(&self) -> [usize; 3] {
        [self.h1.dim(), self.h0.dim(), self.hm1.dim()]
    }

    /// Upper triangular, orthogonal, with isometric top, co-isometric bottom and nilpotent middle.
    pub fn is_valid(&self, tol: &Tolerance) -> bool {
        let c = &self.checks;
        self.nilpotent_order.is_some()
            && c.orthogonality <= tol.eq_tol
            && c.triangularity <= tol.eq_tol
            && c.isometry <= tol.eq_tol
            && c.coisometry <= tol.eq_tol
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            variant: self.variant,
            dims: self.dims(),
            degree: self.exactness.degree,
            nilpotent_order: self.nilpotent_order,
            mult_s: self.mult_s,
            mult_c: self.mult_c,
            exactness_depth: self.exactness.depth,
            interior: [self.index.lo(), self.index.hi()],
            checks: self.checks.clone(),
            frames: Frames {
                h1: self.h1.frame().into(),
                h0: self.h0.frame().into(),
                hm1: self.hm1.frame().into(),
            },
        }
    }
}

pub fn multiplicities(d: &CanonicalDecomposition) -> (usize, usize) {
    (d.mult_s, d.mult_c)
}

// ---------------------------------------------------------------------------
// interior and orbits

struct Interior {
    index: FiberIndex,
    exactness: Exactness,
    t: ComplexMatrix,
    /// `P_I T^k h` as columns, one matrix per `k = 0..=steps`.
    forward: Vec<ComplexMatrix>,
    /// `P_I T*^k g` likewise.
    adjoint: Vec<ComplexMatrix>,
    cut: f64,
}

fn detected_degree(op: &WindowedShiftOperator, radius: usize, tol: &Tolerance) -> Result<usize, CanonicalError> {
    match charfn::poly_degree(op, radius, tol)? {
        Degree::Exact(n) => Ok(n),
        Degree::AtLeast(_) => Err(CanonicalError::DegreeUndetected { bound: radius }),
    }
}

fn build_interior(
    op: &WindowedShiftOperator,
    radius: usize,
    steps: usize,
    degree: usize,
    tol: &Tolerance,
) -> Result<Interior, CanonicalError> {
    if steps > charfn::MAX_TERMS || steps >= radius.max(1) {
        return Err(CanonicalError::BudgetExceeded { steps, radius });
    }
    let data = charfn::defect_data(op, tol)?;
    let (w_lo, w_hi) = op.window();
    let width = w_hi - w_lo + 1;
    let depth = radius as i64 - (degree as i64 + width + steps as i64);

    let mut lo_need = w_lo;
    let mut hi_need = w_hi;
    for side in [&data.dt, &data.dt_star] {
        if side.index.dim() > 0 {
            lo_need = lo_need.min(side.index.lo());
            hi_need = hi_need.max(side.index.hi());
        }
    }
    for b in op.blocks() {
        lo_need = lo_need.min(b.to);
        hi_need = hi_need.max(b.to);
    }
    let need = (1 - lo_need).max(hi_need + 1);
    if depth < need {
        return Err(CanonicalError::ExactnessTooShallow { radius, depth, need });
    }

    let index = FiberIndex::new(op, -depth, depth);
    let target_lo = op.blocks().iter().map(|b| b.to).min().unwrap_or(w_lo);
    let (forward, forward_leak) = orbit(
        op,
        data.dt_star.frame_vectors(),
        steps,
        &index,
        |x| x.restrict(i64::MIN, depth.max(w_hi)).norm(),
        false,
    );
    let (adjoint, adjoint_leak) = orbit(
        op,
        data.dt.frame_vectors(),
        steps,
        &index,
        |x| x.restrict((-depth).min(w_lo).min(target_lo), i64::MAX).norm(),
        true,
    );

    let all = hcat_all(index.dim(), forward.iter().chain(adjoint.iter()));
    let cut = tol.rank_tol * numlin::op_norm(&all).max(1.0);
    let t = interior_matrix(op, &index);
    Ok(Interior {
        exactness: Exactness {
            radius,
            steps,
            degree,
            depth,
            interior: (index.lo(), index.hi()),
            forward_leak,
            adjoint_leak,
        },
        index,
        t,
        forward,
        adjoint,
        cut,
    })
}

fn orbit(
    op: &WindowedShiftOperator,
    gens: Vec<WindowVector>,
    steps: usize,
    index: &FiberIndex,
    leak: impl Fn(&WindowVector) -> f64,
    adjoint: bool,
) -> (Vec<ComplexMatrix>, f64) {
    let mut by_k = vec![ComplexMatrix::zeros(index.dim(), gens.len()); steps + 1];
    let mut worst: f64 = 0.0;
    for (j, g) in gens.into_iter().enumerate() {
        let mut x = g;
        for m in by_k.iter_mut() {
            m.set_column(j, &index.flatten(&x));
            x = if adjoint { op.adjoint_apply(&x) } else { op.apply(&x) };
        }
        worst = worst.max(leak(&x));
    }
    (by_k, worst)
}

fn interior_matrix(op: &WindowedShiftOperator, index: &FiberIndex) -> ComplexMatrix {
    let n = index.dim();
    let mut t = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let y = op.apply(&index.basis_vector(k));
        t.set_column(k, &index.flatten(&y));
    }
    t
}

fn hcat_all<'a>(rows: usize, mats: impl Iterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mats: Vec<&ComplexMatrix> = mats.collect();
    let cols = mats.iter().map(|m| m.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for m in mats {
        out.columns_mut(at, m.ncols()).copy_from(m);
        at += m.ncols();
    }
    out
}

fn hcat(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    hcat_all(a.nrows(), [a, b].into_iter())
}

/// Orthonormal basis of `{x : ||M x|| <= cut ||x||}` with an absolute cutoff.
fn kernel_abs(m: &ComplexMatrix, cut: f64) -> ComplexMatrix {
    let c = m.ncols();
    if m.nrows() == 0 {
        return numlin::identity(c);
    }
    let (_, s, v) = numlin::full_svd(m);
    let keep: Vec<usize> = (0..c).filter(|&j| j >= s.len() || s[j] <= cut).collect();
    ComplexMatrix::from_fn(c, keep.len(), |i, j| v[(i, keep[j])])
}

fn subspace(frame: ComplexMatrix, tol: &Tolerance) -> Result<Subspace, CanonicalError> {
    Ok(Subspace::from_orthonormal(frame, tol.eq_tol)?)
}

/// Splits `V_I` as `H_hi ⊕ H_mid ⊕ K_lo`, where `K_lo ⊕ H_mid` is orthogonal
/// to the orbit columns with `k >= n` and `K_lo` to all of them.
fn orbit_split(
    orbits: &[ComplexMatrix],
    n: usize,
    dim: usize,
    cut: f64,
    tol: &Tolerance,
) -> Result<(Subspace, Subspace, Subspace), CanonicalError> {
    let late = hcat_all(dim, orbits.iter().skip(n));
    let early = hcat_all(dim, orbits.iter().take(n));
    let k1 = kernel_abs(&late.adjoint(), cut);
    let z = kernel_abs(&(early.adjoint() * &k1), cut);
    let z_sub = subspace(z, tol)?;
    let w = z_sub.complement();
    let reached = subspace(k1.clone(), tol)?.complement();
    Ok((
        reached,
        subspace(&k1 * w.frame(), tol)?,
        subspace(&k1 * z_sub.frame(), tol)?,
    ))
}

fn kernel_of_columns(cols: &ComplexMatrix, cut: f64, tol: &Tolerance) -> Result<Subspace, CanonicalError> {
    subspace(kernel_abs(&cols.adjoint(), cut), tol)
}

fn compress(t: &ComplexMatrix, f: &ComplexMatrix) -> ComplexMatrix {
    f.adjoint() * t * f
}

fn cross(t: &ComplexMatrix, to: &ComplexMatrix, from: &ComplexMatrix) -> f64 {
    if to.ncols() == 0 || from.ncols() == 0 {
        return 0.0;
    }
    numlin::op_norm(&(to.adjoint() * t * from))
}

/// Smallest `p` with `||N^p|| <= rank_tol max(1, ||N||)^p`.
fn nilpotent_order(n: &ComplexMatrix, tol: &Tolerance) -> (Option<usize>, f64) {
    let dim = n.nrows();
    if dim == 0 {
        return (Some(0), 0.0);
    }
    let scale = numlin::op_norm(n).max(1.0);
    let mut power = numlin::identity(dim);
    let mut smallest = f64::INFINITY;
    for k in 1..=dim {
        power = &power * n;
        let norm = numlin::op_norm(&power);
        if norm <= tol.rank_tol * scale.powi(k as i32) {
            return (Some(k), norm);
        }
        smallest = smallest.min(norm);
    }
    (None, smallest)
}

fn assemble(
    op: &WindowedShiftOperator,
    variant: Variant,
    interior: &Interior,
    h1: Subspace,
    h0: Subspace,
    hm1: Subspace,
    tol: &Tolerance,
) -> Result<CanonicalDecomposition, CanonicalError> {
    let t = &interior.t;
    let index = &interior.index;
    let (f1, f0, fm) = (h1.frame(), h0.frame(), hm1.frame());
    let all = hcat(&hcat(f1, f0), fm);
    if all.ncols() != index.dim() {
        return Err(CanonicalError::InvalidSplitting(format!(
            "dimensions {} + {} + {} do not fill {}",
            f1.ncols(),
            f0.ncols(),
            fm.ncols(),
            index.dim()
        )));
    }
    let orthogonality = numlin::op_norm(&(all.adjoint() * &all - numlin::identity(all.ncols())));
    let triangularity = cross(t, f0, f1).max(cross(t, fm, f1)).max(cross(t, fm, f0));

    let mut isometry: f64 = 0.0;
    for x in index.unflatten_columns(f1) {
        let y = op.adjoint_apply(&op.apply(&x));
        isometry = isometry.max(x.axpy(numlin::c64(-1.0, 0.0), &y).norm());
    }
    let mut coisometry: f64 = 0.0;
    for x in index.unflatten_columns(fm) {
        let y = op.apply(&op.adjoint_apply(&x));
        coisometry = coisometry.max(x.axpy(numlin::c64(-1.0, 0.0), &y).norm());
    }

    let s_block = compress(t, f1);
    let n_block = compress(t, f0);
    let c_block = compress(t, fm);
    let (order, nilpotency) = nilpotent_order(&n_block, tol);
    // truncation leaves singular values of size at most the kernel cutoff,
    // while the compressed isometries keep the rest near one
    let gap = tol.rank_tol.sqrt();
    let mult_s = kernel_abs(&s_block.adjoint(), gap).ncols();
    let mult_c = kernel_abs(&c_block, gap).ncols();

    Ok(CanonicalDecomposition {
        variant,
        index: index.clone(),
        h1,
        h0,
        hm1,
        s_block,
        n_block,
        c_block,
        t_interior: t.clone(),
        nilpotent_order: order,
        mult_s,
        mult_c,
        exactness: interior.exactness.clone(),
        checks: Checks {
            orthogonality,
            triangularity,
            isometry,
            coisometry,
            nilpotency,
        },
    })
}

fn default_steps(radius: usize) -> usize {
    radius / 2
}

fn settled(interior: &Interior, tol: &Tolerance) -> Result<(), CanonicalError> {
    let leak = interior.exactness.forward_leak.max(interior.exactness.adjoint_leak);
    if leak > tol.eq_tol {
        return Err(CanonicalError::NotStabilized {
            steps: interior.exactness.steps,
            leak,
        });
    }
    Ok(())
}

fn canonical_interior(op: &WindowedShiftOperator, radius: usize, tol: &Tolerance) -> Result<Interior, CanonicalError> {
    let degree = detected_degree(op, radius, tol)?;
    let interior = build_interior(op, radius, default_steps(radius), degree, tol)?;
    if degree > interior.exactness.steps {
        return Err(CanonicalError::BudgetExceeded { steps: degree, radius });
    }
    settled(&interior, tol)?;
    Ok(interior)
}

fn decompose_on(
    op: &WindowedShiftOperator,
    variant: Variant,
    interior: &Interior,
    tol: &Tolerance,
) -> Result<CanonicalDecomposition, CanonicalError> {
    let n = interior.exactness.degree;
    let dim = interior.index.dim();
    match variant {
        Variant::Canonical => {
            let (h1, h0, hm1) = orbit_split(&interior.forward, n, dim, interior.cut, tol)?;
            assemble(op, variant, interior, h1, h0, hm1, tol)
        }
        Variant::StarCanonical => {
            let (hm1, h0, h1) = orbit_split(&interior.adjoint, n, dim, interior.cut, tol)?;
            assemble(op, variant, interior, h1, h0, hm1, tol)
        }
        Variant::User => Err(CanonicalError::InvalidSplitting(
            "user splittings come from coordinate_splitting".into(),
        )),
    }
}

/// `M_1` (forward) or `M_{-1}` (backward) on interior coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometricSubspace {
    pub space: Subspace,
    pub index: FiberIndex,
    pub exactness: Exactness,
}

pub fn isometric_subspace(
    op: &WindowedShiftOperator,
    side: Side,
    steps: usize,
    radius: usize,
    tol: &Tolerance,
) -> Result<IsometricSubspace, CanonicalError> {
    let degree = charfn::poly_degree(op, radius, tol)?.exact().unwrap_or(0);
    let interior = build_interior(op, radius, steps, degree, tol)?;
    let orbits = match side {
        Side::Forward => &interior.adjoint,
        Side::Backward => &interior.forward,
    };
    let cols = hcat_all(interior.index.dim(), orbits.iter());
    Ok(IsometricSubspace {
        space: kernel_of_columns(&cols, interior.cut, tol)?,
        index: interior.index,
        exactness: interior.exactness,
    })
}

pub fn canonical_decomposition(
    op: &WindowedShiftOperator,
    variant: Variant,
    radius: usize,
    tol: &Tolerance,
) -> Result<CanonicalDecomposition, CanonicalError> {
    let interior = canonical_interior(op, radius, tol)?;
    decompose_on(op, variant, &interior, tol)
}

/// The coordinate splitting with `H0` = fibers `h0.0..=h0.1`, on the same
/// interior as the canonical decomposition of the same radius. An empty
/// range (`h0.1 = h0.0 - 1`) puts the cut between two fibers.
pub fn coordinate_splitting(
    op: &WindowedShiftOperator,
    h0: (i64, i64),
    radius: usize,
    tol: &Tolerance,
) -> Result<CanonicalDecomposition, CanonicalError> {
    let interior = canonical_interior(op, radius, tol)?;
    let index = &interior.index;
    let (lo, hi) = h0;
    if lo < index.lo() || hi > index.hi() || hi < lo - 1 {
        return Err(CanonicalError::InvalidSplitting(format!(
            "fibers {lo}..={hi} do not fit the interior {}..={}",
            index.lo(),
            index.hi()
        )));
    }
    let select = |a: i64, b: i64| -> ComplexMatrix {
        let cols: Vec<usize> = (a..=b).flat_map(|n| index.range(n)).collect();
        ComplexMatrix::from_fn(index.dim(), cols.len(), |i, j| {
            numlin::c64(if i == cols[j] { 1.0 } else { 0.0 }, 0.0)
        })
    };
    let h1 = subspace(select(hi + 1, index.hi()), tol)?;
    let mid = subspace(select(lo, hi), tol)?;
    let hm1 = subspace(select(index.lo(), lo - 1), tol)?;
    assemble(op, Variant::User, &interior, h1, mid, hm1, tol)
}

// ---------------------------------------------------------------------------
// minimal splittings

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSplittings {
    pub canonical: CanonicalDecomposition,
    pub star: CanonicalDecomposition,
    /// `H10 = H1 ⊕ (M1 ∩ H0)`, `H00 = H0 ⊖ (M1 ∩ H0)`, `H-1`.
    pub minimal: CanonicalDecomposition,
    /// `H1*`, `H0*0 = H0* ⊖ (H0* ∩ M-1)`, `H-1* ⊕ (H0* ∩ M-1)`.
    pub star_minimal: CanonicalDecomposition,
}

impl MinimalSplittings {
    pub fn n0(&self) -> &ComplexMatrix {
        &self.minimal.n_block
    }

    pub fn nstar0(&self) -> &ComplexMatrix {
        &self.star_minimal.n_block
    }
}

pub fn minimal_nilpotents(
    op: &WindowedShiftOperator,
    radius: usize,
    tol: &Tolerance,
) -> Result<MinimalSplittings, CanonicalError> {
    let interior = canonical_interior(op, radius, tol)?;
    let canonical = decompose_on(op, Variant::Canonical, &interior, tol)?;
    let star = decompose_on(op, Variant::StarCanonical, &interior, tol)?;
    let m1 = &star.h1;
    let mm1 = &canonical.hm1;

    let x = numlin::subspace_intersect(m1, &canonical.h0, tol)?;
    let h00 = canonical.h0.minus(&x, tol.rank_tol)?;
    let h10 = subspace(hcat(canonical.h1.frame(), x.frame()), tol)?;
    let minimal = assemble(op, Variant::User, &interior, h10, h00, canonical.hm1.clone(), tol)?;

    let y = numlin::subspace_intersect(&star.h0, mm1, tol)?;
    let h0s0 = star.h0.minus(&y, tol.rank_tol)?;
    let hm1s0 = subspace(hcat(star.hm1.frame(), y.frame()), tol)?;
    let star_minimal = assemble(op, Variant::User, &interior, star.h1.clone(), h0s0, hm1s0, tol)?;

    Ok(MinimalSplittings {
        canonical,
        star,
        minimal,
        star_minimal,
    })
}

// ---------------------------------------------------------------------------
// quasi-affinities and intertwiners

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiAffinityWitness {
    pub y_tilde: ComplexMatrix,
    pub ker_dim: usize,
    pub range_codim: usize,
    pub intertwining_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiAffinityReport {
    pub y_tilde: MatrixJson,
    pub ker_dim: usize,
    pub range_codim: usize,
    pub intertwining_residual: f64,
}

impl QuasiAffinityWitness {
    pub fn report(&self) -> QuasiAffinityReport {
        QuasiAffinityReport {
            y_tilde: (&self.y_tilde).into(),
            ker_dim: self.ker_dim,
            range_codim: self.range_codim,
            intertwining_residual: self.intertwining_residual,
        }
    }
}

/// `Ỹ = P_{H'0 ⊕ L'-1} |_{L1 ⊕ H0}` between two splittings of the same
/// interior, with `L1 = H1 ⊖ (H1 ∩ H'1)` and `L'-1 = H'-1 ⊖ (H-1 ∩ H'-1)`.
pub fn quasi_affinity_witness(
    op: &WindowedShiftOperator,
    a: &CanonicalDecomposition,
    b: &CanonicalDecomposition,
    tol: &Tolerance,
) -> Result<QuasiAffinityWitness, CanonicalError> {
    if a.index != b.index {
        return Err(CanonicalError::InvalidSplitting(
            "the two splittings live on different interiors".into(),
        ));
    }
    let ex = &a.exactness;
    let interior = build_interior(op, ex.radius, ex.steps, ex.degree, tol)?;
    let dim = interior.index.dim();
    let m1 = kernel_of_columns(&hcat_all(dim, interior.adjoint.iter()), interior.cut, tol)?;
    let mm1 = kernel_of_columns(&hcat_all(dim, interior.forward.iter()), interior.cut, tol)?;
    for (name, d) in [("first", a), ("second", b)] {
        let x = numlin::subspace_intersect(&m1, &d.h0, tol)?;
        if x.dim() > 0 {
            return Err(CanonicalError::HypothesisViolated {
                which: format!("M1 ∩ H0 of the {name} splitting"),
                dim: x.dim(),
            });
        }
        let y = numlin::subspace_intersect(&d.h0, &mm1, tol)?;
        if y.dim() > 0 {
            return Err(CanonicalError::HypothesisViolated {
                which: format!("H0 ∩ M-1 of the {name} splitting"),
                dim: y.dim(),
            });
        }
    }

    let common_top = numlin::subspace_intersect(&a.h1, &b.h1, tol)?;
    let l1 = a.h1.minus(&common_top, tol.rank_tol)?;
    let common_bottom = numlin::subspace_intersect(&a.hm1, &b.hm1, tol)?;
    let lm1 = b.hm1.minus(&common_bottom, tol.rank_tol)?;
    let dom = hcat(l1.frame(), a.h0.frame());
    let cod = hcat(b.h0.frame(), lm1.frame());
    let y_tilde = cod.adjoint() * &dom;
    let t = &a.t_interior;
    let t_dom = compress(t, &dom);
    let t_cod = compress(t, &cod);
    let rank = numlin::rank_above(&y_tilde, tol.rank_tol);
    let residual = if y_tilde.is_empty() {
        0.0
    } else {
        numlin::op_norm(&(&y_tilde * t_dom - t_cod * &y_tilde))
    };
    Ok(QuasiAffinityWitness {
        ker_dim: dom.ncols() - rank,
        range_codim: cod.ncols() - rank,
        y_tilde,
        intertwining_residual: residual,
    })
}

fn require_nilpotent(n: &ComplexMatrix, tol: &Tolerance) -> Result<usize, CanonicalError> {
    if !n.is_square() {
        return Err(CanonicalError::InvalidSplitting("nilpotent must be square".into()));
    }
    match nilpotent_order(n, tol) {
        (Some(p), _) => Ok(p),
        (None, residual) => Err(CanonicalError::NotNilpotent { residual }),
    }
}

/// An injective `X` with `X N1 = N2 X`, found as a random point of the
/// solution space. `None` after 50 rank-deficient draws.
pub fn injection_intertwiner(
    n1: &ComplexMatrix,
    n2: &ComplexMatrix,
    seed: u64,
    tol: &Tolerance,
) -> Result<Option<ComplexMatrix>, CanonicalError> {
    require_nilpotent(n1, tol)?;
    require_nilpotent(n2, tol)?;
    let (d1, d2) = (n1.nrows(), n2.nrows());
    if d1 == 0 {
        return Ok(Some(ComplexMatrix::zeros(d2, 0)));
    }
    if d2 < d1 {
        return Ok(None);
    }
    // vec(X) column-major: X[(p, q)] sits at p + q d2
    let size = d1 * d2;
    let mut sys = ComplexMatrix::zeros(size, size);
    for j in 0..d1 {
        for i in 0..d2 {
            let row = i + j * d2;
            for q in 0..d1 {
                sys[(row, i + q * d2)] += n1[(q, j)];
            }
            for p in 0..d2 {
                sys[(row, p + j * d2)] -= n2[(i, p)];
            }
        }
    }
    let cut = tol.rank_tol * numlin::op_norm(&sys).max(1.0);
    let basis = kernel_abs(&sys, cut);
    if basis.ncols() == 0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        let w = numlin::random::gaussian(basis.ncols(), 1, &mut rng);
        let v = &basis * w;
        let x = ComplexMatrix::from_fn(d2, d1, |p, q| v[p + q * d2]);
        if numlin::numerical_rank(&x, tol.rank_tol) == d1 {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JordanAlignment {
    pub unitary: ComplexMatrix,
    /// `||U N1 - N2 U||`.
    pub residual: f64,
    /// `||U^H U - I||`.
    pub unitarity_defect: f64,
}

/// Jordan chains `h, Nh, ..., N^{l-1}h` with heads `h` in `ker N*`, longest first.
fn jordan_chains(
    n: &ComplexMatrix,
    order: usize,
    tol: &Tolerance,
) -> Result<(ComplexMatrix, Vec<usize>), CanonicalError> {
    let dim = n.nrows();
    let heads_all = subspace(kernel_abs(&n.adjoint(), tol.rank_tol), tol)?;
    let mut cols = ComplexMatrix::zeros(dim, 0);
    let mut lengths = Vec::new();
    let mut power = numlin::identity(dim);
    let mut kernels = vec![Subspace::zero(dim, tol.rank_tol)];
    for _ in 1..=order {
        power = &power * n;
        let k = subspace(kernel_abs(&power, tol.rank_tol), tol)?;
        kernels.push(numlin::subspace_intersect(&heads_all, &k, tol)?);
    }
    for l in (1..=order).rev() {
        let heads = kernels[l].minus(&kernels[l - 1], tol.rank_tol)?;
        for h in heads.frame().column_iter() {
            let mut v = h.into_owned();
            for _ in 0..l {
                cols = hcat(&cols, &ComplexMatrix::from_column_slice(dim, 1, v.as_slice()));
                v = n * v;
            }
            lengths.push(l);
        }
    }
    Ok((cols, lengths))
}

/// Unitary `U` with `U N1 = N2 U` built from matched Jordan chains. `None`
/// when the chain structures differ or the chains do not fill the space.
pub fn jordan_unitary_intertwiner(
    n1: &ComplexMatrix,
    n2: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<Option<JordanAlignment>, CanonicalError> {
    let p1 = require_nilpotent(n1, tol)?;
    let p2 = require_nilpotent(n2, tol)?;
    if n1.nrows() != n2.nrows() || p1 != p2 {
        return Ok(None);
    }
    let (b1, l1) = jordan_chains(n1, p1, tol)?;
    let (b2, l2) = jordan_chains(n2, p2, tol)?;
    if l1 != l2 || b1.ncols() != n1.nrows() {
        return Ok(None);
    }
    let unitary = &b2 * b1.adjoint();
    let residual = if unitary.is_empty() {
        0.0
    } else {
        numlin::op_norm(&(&unitary * n1 - n2 * &unitary))
    };
    let unitarity_defect = numlin::op_norm(&(unitary.adjoint() * &unitary - numlin::identity(unitary.ncols())));
    Ok(Some(JordanAlignment {
        unitary,
        residual,
        unitarity_defect,
    }))
}

// ---------------------------------------------------------------------------
// classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateForm {
    #[serde(rename = "SNC")]
    Snc,
    #[serde(rename = "SN")]
    Sn,
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "SC")]
    Sc,
    S,
    N,
    C,
}

/// Class in the `C_{αβ}` scheme; a dot leaves that index open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassTag {
    #[serde(rename = "C00")]
    C00,
    #[serde(rename = "C10")]
    C10,
    #[serde(rename = "C01")]
    C01,
    #[serde(rename = "C.0")]
    CDot0,
    #[serde(rename = "C0.")]
    C0Dot,
    #[serde(rename = "C..")]
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub form: DegenerateForm,
    pub class: ClassTag,
    pub dims: [usize; 3],
    pub degree: usize,
    /// `Θ_T ≡ 0`.
    pub theta_vanishes: bool,
}

pub fn classify_degenerate(
    op: &WindowedShiftOperator,
    radius: usize,
    tol: &Tolerance,
) -> Result<Classification, CanonicalError> {
    let d = canonical_decomposition(op, Variant::Canonical, radius, tol)?;
    let dims = d.dims();
    let (s, n, c) = (dims[0] > 0, dims[1] > 0, dims[2] > 0);
    let (form, class) = match (s, n, c) {
        (true, true, true) => (DegenerateForm::Snc, ClassTag::Open),
        (true, true, false) => (DegenerateForm::Sn, ClassTag::CDot0),
        (false, true, true) => (DegenerateForm::Nc, ClassTag::C0Dot),
        (true, false, true) => (DegenerateForm::Sc, ClassTag::Open),
        (true, false, false) => (DegenerateForm::S, ClassTag::C10),
        (false, false, true) => (DegenerateForm::C, ClassTag::C01),
        (false, _, false) => (DegenerateForm::N, ClassTag::C00),
    };
    let theta = charfn::theta_coeffs(op, d.exactness.degree + 1, tol)?;
    Ok(Classification {
        form,
        class,
        dims,
        degree: d.exactness.degree,
        theta_vanishes: theta.max_coeff_norm() <= tol.eq_tol,
    })
}

/// Dimension of the vectors orthogonal to every defect orbit for
/// `k <= steps`: an upper bound on a unitary part. Only fibers that the
/// leading fiber of every orbit reaches within `steps` are tested; farther
/// vectors would pass vacuously. Without defects the whole interior counts.
pub fn unitary_part_dim(
    op: &WindowedShiftOperator,
    steps: usize,
    radius: usize,
    tol: &Tolerance,
) -> Result<usize, CanonicalError> {
    let degree = charfn::poly_degree(op, radius, tol)?.exact().unwrap_or(0);
    let interior = build_interior(op, radius, steps, degree, tol)?;
    let index = &interior.index;
    let data = charfn::defect_data(op, tol)?;
    let s = steps as i64;
    // adjoint orbits of D_T move down, forward orbits of D_{T*} move up
    let down = (data.dt.dim() > 0).then(|| data.dt.support().1 - s);
    let up = (data.dt_star.dim() > 0).then(|| data.dt_star.support().0 + s);
    let band = match (down, up) {
        (None, None) => (index.lo(), index.hi()),
        (d, u) => (
            d.unwrap_or_else(|| data.dt_star.support().0),
            u.unwrap_or_else(|| data.dt.support().1),
        ),
    };
    let rows: Vec<usize> = (band.0.max(index.lo())..=band.1.min(index.hi()))
        .flat_map(|n| index.range(n))
        .collect();
    let all = hcat_all(index.dim(), interior.forward.iter().chain(interior.adjoint.iter()));
    let restricted = all.select_rows(rows.iter());
    Ok(kernel_abs(&restricted.adjoint(), interior.cut).ncols())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, MonomialParams, TabcParams};
    use crate::numlin::c64;
    use crate::windowed;
    use proptest::prelude::*;

    const R: usize = 48;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn tabc(a: f64, b: f64) -> WindowedShiftOperator {
        let p = TabcParams::from_gamma(c64(a, 0.0), c64(b, 0.0), c64(1.0, 0.0), &tol()).unwrap();
        models::make_tabc(&p, &tol()).unwrap()
    }

    fn ta(m: usize, rows: usize, cols: usize, seed: u64) -> (WindowedShiftOperator, MonomialParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: Vec<f64> = (0..rows.min(cols)).map(|i| 0.7 - 0.2 * i as f64).collect();
        let a = numlin::random::with_singular_values(rows, cols, &s, &mut rng);
        let p = MonomialParams::new(a, m, &tol()).unwrap();
        (models::make_ta(&p, &tol()).unwrap(), p)
    }

    fn same(u: &Subspace, v: &Subspace) -> bool {
        u.dim() == v.dim() && u.containment_gap(v) < 1e-9 && v.containment_gap(u) < 1e-9
    }

    #[test]
    fn tabc_large_a_recovers_coordinate_splitting() {
        let op = tabc(0.8, 0.3);
        let d = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
        let user = coordinate_splitting(&op, (0, 0), R, &tol()).unwrap();
        assert!(d.is_valid(&tol()), "{:?}", d.checks);
        assert!(user.is_valid(&tol()), "{:?}", user.checks);
        assert_eq!(d.exactness.depth, 21);
        assert_eq!(d.dims(), [21, 1, 21]);
        assert!(same(&d.h1, &user.h1) && same(&d.h0, &user.h0) && same(&d.hm1, &user.hm1));
        assert_eq!(multiplicities(&d), (1, 1));
        assert_eq!(d.nilpotent_order, Some(1));
    }

    #[test]
    fn tabc_small_a_enlarges_backward_isometric_part() {
        let op = tabc(0.3, 0.8);
        let d = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
        let user = coordinate_splitting(&op, (0, 0), R, &tol()).unwrap();
        assert!(d.is_valid(&tol()));
        assert_eq!(d.hm1.dim(), user.hm1.dim() + 1);
        assert!(d.hm1.containment_gap(&user.hm1) < 1e-9);
        let m = isometric_subspace(&op, Side::Backward, 24, R, &tol()).unwrap();
        assert!(same(&m.space, &d.hm1));
        // the star variant is the coordinate one here
        let s = canonical_decomposition(&op, Variant::StarCanonical, R, &tol()).unwrap();
        assert!(same(&s.h1, &user.h1) && same(&s.hm1, &user.hm1));
        assert_eq!(multiplicities(&s), (1, 1));
        assert_eq!(multiplicities(&d), (1, 1));
    }

    #[test]
    fn tabc_equal_moduli_is_canonical_both_ways() {
        let op = tabc(0.5, 0.5);
        let user = coordinate_splitting(&op, (0, 0), R, &tol()).unwrap();
        for v in [Variant::Canonical, Variant::StarCanonical] {
            let d = canonical_decomposition(&op, v, R, &tol()).unwrap();
            assert!(same(&d.hm1, &user.hm1), "{v:?} {:?}", d.dims());
            assert!(same(&d.h1, &user.h1), "{v:?} {:?}", d.dims());
        }
    }

    #[test]
    fn ta_canonical_is_the_display_splitting() {
        for (m, rows, cols) in [(1, 2, 2), (2, 2, 3), (3, 3, 2)] {
            let (op, p) = ta(m, rows, cols, 11 + m as u64);
            let d = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
            let user = coordinate_splitting(&op, (0, m as i64 - 1), R, &tol()).unwrap();
            assert!(d.is_valid(&tol()), "{:?}", d.checks);
            assert!(same(&d.h1, &user.h1) && same(&d.h0, &user.h0) && same(&d.hm1, &user.hm1));
            assert_eq!(multiplicities(&d), (p.right_dim(), p.left_dim()));
            assert_eq!(d.nilpotent_order, Some(m));
            let s = canonical_decomposition(&op, Variant::StarCanonical, R, &tol()).unwrap();
            assert!(s.is_valid(&tol()), "{:?}", s.checks);
            assert_eq!(multiplicities(&s), multiplicities(&d));
        }
    }

    #[test]
    fn jordan_is_all_nilpotent() {
        let op = models::jordan_operator(3, 2).unwrap();
        let d = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
        assert_eq!(d.dims(), [0, 6, 0]);
        assert_eq!(multiplicities(&d), (0, 0));
        assert_eq!(d.nilpotent_order, Some(3));
        let c = classify_degenerate(&op, R, &tol()).unwrap();
        assert_eq!((c.form, c.class), (DegenerateForm::N, ClassTag::C00));
        let mins = minimal_nilpotents(&op, R, &tol()).unwrap();
        assert!((mins.n0() - &d.n_block).norm() < 1e-12);
        assert!((mins.nstar0() - &d.n_block).norm() < 1e-12);
    }

    #[test]
    fn degenerate_forms() {
        let c = classify_degenerate(&windowed::unilateral_shift(2), R, &tol()).unwrap();
        assert_eq!((c.form, c.class), (DegenerateForm::S, ClassTag::C10));
        assert!(c.theta_vanishes);
        let c = classify_degenerate(&windowed::co_shift(1), R, &tol()).unwrap();
        assert_eq!((c.form, c.class), (DegenerateForm::C, ClassTag::C01));
        let p = TabcParams::new(c64(0.4, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), &tol()).unwrap();
        let c = classify_degenerate(&models::make_tabc(&p, &tol()).unwrap(), R, &tol()).unwrap();
        assert_eq!(c.form, DegenerateForm::Sc);
        assert_eq!(c.degree, 0);
        assert!(!c.theta_vanishes);
        let c = classify_degenerate(&tabc(0.8, 0.3), R, &tol()).unwrap();
        assert_eq!((c.form, c.class), (DegenerateForm::Snc, ClassTag::Open));
    }

    #[test]
    fn zero_a_has_two_splittings_and_minimal_extraction() {
        let p = TabcParams::from_gamma(c64(0.0, 0.0), c64(0.6, 0.0), c64(1.0, 0.0), &tol()).unwrap();
        let op = models::make_tabc(&p, &tol()).unwrap();
        let narrow = coordinate_splitting(&op, (0, 0), R, &tol()).unwrap();
        let wide = coordinate_splitting(&op, (0, 1), R, &tol()).unwrap();
        assert!(narrow.is_valid(&tol()) && wide.is_valid(&tol()));
        assert_eq!((narrow.n_block.nrows(), wide.n_block.nrows()), (1, 2));
        assert!(narrow.n_block.norm() < 1e-12 && wide.n_block.norm() < 1e-12);
        let canon = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
        for u in [&narrow, &wide] {
            assert!(u.h1.containment_gap(&canon.h1) < 1e-9);
            assert!(canon.hm1.containment_gap(&u.hm1) < 1e-9);
            assert_eq!(multiplicities(u), multiplicities(&canon));
        }
        let mins = minimal_nilpotents(&op, R, &tol()).unwrap();
        assert_eq!(mins.n0().nrows(), 1);
        let x = injection_intertwiner(&narrow.n_block, &wide.n_block, 3, &tol()).unwrap();
        assert!(x.is_some());
        let err = quasi_affinity_witness(&op, &wide, &canon, &tol()).unwrap_err();
        assert!(
            matches!(err, CanonicalError::HypothesisViolated { dim: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn injection_oracles() {
        let j2 = models::make_jm(2, 1);
        let z1 = ComplexMatrix::zeros(1, 1);
        let z2 = ComplexMatrix::zeros(2, 2);
        let x = injection_intertwiner(&j2, &j2, 1, &tol()).unwrap().unwrap();
        assert!((&x * &j2 - &j2 * &x).norm() < 1e-10);
        assert!(injection_intertwiner(&z1, &z2, 1, &tol()).unwrap().is_some());
        assert!(injection_intertwiner(&j2, &z1, 1, &tol()).unwrap().is_none());
        assert!(injection_intertwiner(&j2, &z2, 1, &tol()).unwrap().is_none());
        let not = ComplexMatrix::identity(2, 2);
        assert!(matches!(
            injection_intertwiner(&not, &z2, 1, &tol()),
            Err(CanonicalError::NotNilpotent { .. })
        ));
    }

    #[test]
    fn monomial_minimal_nilpotents_are_unitarily_equivalent() {
        let (op, _) = ta(3, 3, 2, 5);
        let mins = minimal_nilpotents(&op, R, &tol()).unwrap();
        let t = tol();
        let k = mins.n0().nrows().max(1);
        assert_eq!(
            numlin::rank_sequence(mins.n0(), k, &t),
            numlin::rank_sequence(mins.nstar0(), k, &t)
        );
        let al = jordan_unitary_intertwiner(mins.n0(), mins.nstar0(), &t)
            .unwrap()
            .unwrap();
        assert!(al.residual < 1e-9 && al.unitarity_defect < 1e-9, "{al:?}");
        let w = quasi_affinity_witness(&op, &mins.minimal, &mins.star_minimal, &t).unwrap();
        assert_eq!((w.ker_dim, w.range_codim), (0, 0));
        assert!(w.intertwining_residual < 1e-9, "{}", w.intertwining_residual);
    }

    #[test]
    fn identical_splittings_give_identity_witness() {
        let op = tabc(0.8, 0.3);
        let d = canonical_decomposition(&op, Variant::Canonical, R, &tol()).unwrap();
        let w = quasi_affinity_witness(&op, &d, &d, &tol()).unwrap();
        assert_eq!((w.ker_dim, w.range_codim), (0, 0));
        assert!((&w.y_tilde - ComplexMatrix::identity(1, 1)).norm() < 1e-12);
        assert!(w.intertwining_residual < 1e-12);
    }

    #[test]
    fn unitary_parts() {
        let p = TabcParams::new(c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0), &tol()).unwrap();
        let op = models::make_tabc(&p, &tol()).unwrap();
        assert!(unitary_part_dim(&op, 24, R, &tol()).unwrap() >= 1);
        assert_eq!(unitary_part_dim(&tabc(0.6, 0.4), 24, R, &tol()).unwrap(), 0);
        assert_eq!(unitary_part_dim(&ta(2, 2, 2, 9).0, 24, R, &tol()).unwrap(), 0);
    }

    #[test]
    fn shallow_radius_is_rejected() {
        let op = tabc(0.8, 0.3);
        assert!(matches!(
            canonical_decomposition(&op, Variant::Canonical, 8, &tol()),
            Err(CanonicalError::ExactnessTooShallow { .. })
        ));
    }

    #[test]
    fn report_shape() {
        let d = canonical_decomposition(&tabc(0.8, 0.3), Variant::Canonical, R, &tol()).unwrap();
        let v = serde_json::to_value(d.report()).unwrap();
        assert_eq!(v["variant"], "canonical");
        assert_eq!(v["dims"], serde_json::json!([21, 1, 21]));
        assert_eq!(v["mult_S"], 1);
        assert_eq!(v["exactness_depth"], 21);
    }

    fn fiberwise(index: &FiberIndex, ul: &ComplexMatrix, ur: &ComplexMatrix) -> ComplexMatrix {
        let mut w = ComplexMatrix::zeros(index.dim(), index.dim());
        for n in index.lo()..=index.hi() {
            let r = index.range(n);
            let u = if n < 0 { ul } else { ur };
            if !r.is_empty() {
                w.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(u);
            }
        }
        w
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn tabc_splittings_are_valid(a in 0.05f64..0.95, b in 0.05f64..0.95, phase in 0.0f64..std::f64::consts::TAU) {
            // the extra isometric vector decays like rho^k; the interior must outlast it
            let r = a / b * ((1.0 - b * b) / (1.0 - a * a)).sqrt();
            let rho = r.min(1.0 / r);
            prop_assume!(rho < 0.8);
            let depth = (11.0 * std::f64::consts::LN_10 / -rho.ln()).ceil() as usize;
            let radius = (2 * (depth + 3)).max(R);
            let p = TabcParams::from_gamma(c64(a, 0.0), c64(b, 0.0), c64(phase.cos(), phase.sin()), &tol()).unwrap();
            let op = models::make_tabc(&p, &tol()).unwrap();
            for v in [Variant::Canonical, Variant::StarCanonical] {
                let d = canonical_decomposition(&op, v, radius, &tol()).unwrap();
                prop_assert!(d.is_valid(&tol()), "{:?}", d.checks);
                prop_assert_eq!(multiplicities(&d), (1, 1));
                prop_assert_eq!(d.nilpotent_order, Some(1));
            }
        }

        #[test]
        fn canonical_spaces_follow_fiberwise_unitaries(seed in 0u64..1000) {
            let (op, p) = ta(2, 2, 2, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let ul = numlin::random::unitary(p.left_dim(), &mut rng);
            let ur = numlin::random::unitary(p.right_dim(), &mut rng);
            let conj = op.conjugate_fiberwise(&ul, &ur);
            for v in [Variant::Canonical, Variant::StarCanonical] {
                let d = canonical_decomposition(&op, v, R, &tol()).unwrap();
                let e = canonical_decomposition(&conj, v, R, &tol()).unwrap();
                let w = fiberwise(&d.index, &ul, &ur);
                for (x, y) in [(&d.h1, &e.h1), (&d.h0, &e.h0), (&d.hm1, &e.hm1)] {
                    let moved = Subspace::from_orthonormal(&w * x.frame(), 1e-9).unwrap();
                    prop_assert!(same(&moved, y));
                }
            }
        }
    }
}
