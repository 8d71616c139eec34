//! Operators on a two-sided sequence of fibers that act as the identity shift
//! `L_n -> L_{n+1}` everywhere except on a finite window of source fibers.
//!
//! Everything is stored structurally: a vector is a finite run of fiber
//! coordinates, an operator is a list of blocks. Applying the operator or its
//! adjoint to a finitely supported vector is exact, which is what makes the
//! defect operators and Taylor coefficients exact further up the stack.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numlin::{self, c64, ComplexMatrix, ComplexVector, MatrixJson, NumError, Tolerance, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("fiber profile has no nonzero fiber")]
    EmptyProfile,
    #[error("window [{lo}, {hi}] is empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("block {from} -> {to} has shape {rows}x{cols}, fibers need {want_rows}x{want_cols}")]
    BlockShape {
        from: i64,
        to: i64,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("block source fiber {from} lies outside the window [{lo}, {hi}]")]
    SourceOutsideWindow { from: i64, lo: i64, hi: i64 },
    #[error("identity shift from fiber {from} is ill-defined: dim L_{from} = {d0}, dim L_{next} = {d1}", next = from + 1)]
    ShiftMismatch { from: i64, d0: usize, d1: usize },
    #[error("operator is not a contraction (defect gram has eigenvalue {min_eig:.3e})")]
    NotContraction { min_eig: f64 },
    #[error("truncation radius {got} is too small, need at least {need}")]
    RadiusTooSmall { need: usize, got: usize },
    #[error("vector does not match the fiber dimensions at fiber {fiber}")]
    VectorShape { fiber: i64 },
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Fiber dimensions: `left` for `n <= -1`, `right` for `n >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberProfile {
    pub left: usize,
    pub right: usize,
}

impl FiberProfile {
    pub fn new(left: usize, right: usize) -> Self {
        Self { left, right }
    }

    pub fn scalar() -> Self {
        Self { left: 1, right: 1 }
    }
}

/// Contiguous run of fibers `lo..=hi` flattened into one coordinate vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiberIndex {
    lo: i64,
    hi: i64,
    offsets: Vec<usize>,
}

impl FiberIndex {
    pub fn new(op: &WindowedShiftOperator, lo: i64, hi: i64) -> Self {
        let mut offsets = vec![0];
        if hi >= lo {
            for n in lo..=hi {
                let last = *offsets.last().unwrap();
                offsets.push(last + op.fiber_dim(n));
            }
        }
        Self { lo, hi, offsets }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.lo && n <= self.hi
    }

    /// Coordinate range of fiber `n`; empty when `n` is outside the run.
    pub fn range(&self, n: i64) -> Range<usize> {
        if !self.contains(n) {
            return 0..0;
        }
        let i = (n - self.lo) as usize;
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Fiber owning flat coordinate `k`.
    pub fn fiber_of(&self, k: usize) -> Option<i64> {
        if k >= self.dim() {
            return None;
        }
        let i = self.offsets.partition_point(|&o| o <= k) - 1;
        Some(self.lo + i as i64)
    }

    pub fn flatten(&self, x: &WindowVector) -> ComplexVector {
        let mut out = ComplexVector::zeros(self.dim());
        for (n, v) in x.iter() {
            let r = self.range(n);
            if r.len() == v.len() && !r.is_empty() {
                out.rows_mut(r.start, r.len()).copy_from(v);
            }
        }
        out
    }

    pub fn unflatten(&self, flat: &ComplexVector) -> WindowVector {
        let coords = (self.lo..=self.hi)
            .map(|n| {
                let r = self.range(n);
                flat.rows(r.start, r.len()).into_owned()
            })
            .collect();
        WindowVector { lo: self.lo, coords }
    }

    pub fn unflatten_columns(&self, m: &ComplexMatrix) -> Vec<WindowVector> {
        m.column_iter().map(|c| self.unflatten(&c.into_owned())).collect()
    }

    pub fn basis_vector(&self, k: usize) -> WindowVector {
        let mut v = ComplexVector::zeros(self.dim());
        v[k] = c64(1.0, 0.0);
        self.unflatten(&v)
    }
}

/// A finitely supported vector: `coords[i]` lives in fiber `lo + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVector {
    pub lo: i64,
    pub coords: Vec<ComplexVector>,
}

impl WindowVector {
    pub fn empty() -> Self {
        Self {
            lo: 0,
            coords: Vec::new(),
        }
    }

    /// Unit vector `e_i` of fiber `n`.
    pub fn unit(op: &WindowedShiftOperator, n: i64, i: usize) -> Self {
        let mut v = ComplexVector::zeros(op.fiber_dim(n));
        v[i] = c64(1.0, 0.0);
        Self { lo: n, coords: vec![v] }
    }

    pub fn single(n: i64, v: ComplexVector) -> Self {
        Self { lo: n, coords: vec![v] }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coords.len() as i64 - 1
    }

    pub fn fiber(&self, n: i64) -> Option<&ComplexVector> {
        if n < self.lo {
            return None;
        }
        self.coords.get((n - self.lo) as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &ComplexVector)> {
        self.coords
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.lo + i as i64, v))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coords.iter().map(|v| v.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &WindowVector) -> C64 {
        let mut acc = c64(0.0, 0.0);
        for (n, v) in self.iter() {
            if let Some(w) = other.fiber(n) {
                if w.len() == v.len() {
                    acc += v.dotc(w);
                }
            }
        }
        acc
    }

    pub fn scale(&self, s: C64) -> WindowVector {
        WindowVector {
            lo: self.lo,
            coords: self.coords.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &WindowVector) -> WindowVector {
        let mut acc = Accumulator::default();
        acc.add_vector(self, c64(1.0, 0.0));
        acc.add_vector(other, s);
        acc.finish()
    }

    /// Restriction to fibers `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> WindowVector {
        let mut acc = Accumulator::default();
        for (n, v) in self.iter() {
            if n >= lo && n <= hi {
                acc.add(n, v, c64(1.0, 0.0));
            }
        }
        acc.finish()
    }

    /// Largest coordinate modulus in fibers outside `lo..=hi`.
    pub fn leak_outside(&self, lo: i64, hi: i64) -> f64 {
        self.iter()
            .filter(|(n, _)| *n < lo || *n > hi)
            .flat_map(|(_, v)| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct Accumulator {
    fibers: BTreeMap<i64, ComplexVector>,
}

impl Accumulator {
    fn add(&mut self, n: i64, v: &ComplexVector, s: C64) {
        match self.fibers.get_mut(&n) {
            Some(acc) => *acc += v * s,
            None => {
                self.fibers.insert(n, v * s);
            }
        }
    }

    fn add_vector(&mut self, x: &WindowVector, s: C64) {
        for (n, v) in x.iter() {
            self.add(n, v, s);
        }
    }

    fn finish_with(self, dim: impl Fn(i64) -> usize) -> WindowVector {
        let (Some(&lo), Some(&hi)) = (self.fibers.keys().next(), self.fibers.keys().next_back()) else {
            return WindowVector::empty();
        };
        let mut fibers = self.fibers;
        let coords = (lo..=hi)
            .map(|n| fibers.remove(&n).unwrap_or_else(|| ComplexVector::zeros(dim(n))))
            .collect();
        WindowVector { lo, coords }
    }

    fn finish(self) -> WindowVector {
        // gaps only arise between fibers both present in the inputs, whose
        // dimension we know from a neighbour of the same side; callers with
        // gaps of unknown dimension use finish_with
        let dims: BTreeMap<i64, usize> = self.fibers.iter().map(|(&n, v)| (n, v.len())).collect();
        self.finish_with(|n| dims.range(..=n).next_back().map(|(_, &d)| d).unwrap_or(0))
    }
}

/// One explicit block `matrix: L_from -> L_to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub from: i64,
    pub to: i64,
    pub matrix: ComplexMatrix,
}

/// Shift operator modified on the window `[lo, hi]` of source fibers.
///
/// Inside the window a fiber is mapped only by its explicit blocks (a fiber
/// without blocks is mapped to zero). Outside, `L_n -> L_{n+1}` is the
/// identity.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedShiftOperator {
    profile: FiberProfile,
    lo: i64,
    hi: i64,
    blocks: Vec<Block>,
    overrides: BTreeMap<i64, usize>,
    max_jump: i64,
}

impl WindowedShiftOperator {
    pub fn new(profile: FiberProfile, window: (i64, i64), blocks: Vec<Block>) -> Result<Self, WindowError> {
        Self::with_fiber_dims(profile, window, blocks, BTreeMap::new())
    }

    /// Like [`new`](Self::new) but with per-fiber dimension overrides, used for
    /// finite-dimensional operators (profile `(0, 0)` plus a few fibers).
    pub fn with_fiber_dims(
        profile: FiberProfile,
        window: (i64, i64),
        mut blocks: Vec<Block>,
        overrides: BTreeMap<i64, usize>,
    ) -> Result<Self, WindowError> {
        let (lo, hi) = window;
        if hi < lo {
            return Err(WindowError::EmptyWindow { lo, hi });
        }
        if profile.left == 0 && profile.right == 0 && overrides.values().all(|&d| d == 0) {
            return Err(WindowError::EmptyProfile);
        }
        blocks.sort_by_key(|b| (b.from, b.to));
        let mut op = Self {
            profile,
            lo,
            hi,
            blocks,
            overrides,
            max_jump: 0,
        };
        for b in &op.blocks {
            numlin::ensure_finite(&b.matrix)?;
            if b.from < lo || b.from > hi {
                return Err(WindowError::SourceOutsideWindow { from: b.from, lo, hi });
            }
            let (want_rows, want_cols) = (op.fiber_dim(b.to), op.fiber_dim(b.from));
            if b.matrix.shape() != (want_rows, want_cols) {
                return Err(WindowError::BlockShape {
                    from: b.from,
                    to: b.to,
                    rows: b.matrix.nrows(),
                    cols: b.matrix.ncols(),
                    want_rows,
                    want_cols,
                });
            }
        }
        op.max_jump = op.blocks.iter().map(|b| (b.to - b.from - 1).abs()).max().unwrap_or(0);
        // the identity shift is only defined where neighbouring fibers agree;
        // dimensions can change only at -1/0 and around overrides
        let mut suspects: Vec<i64> = vec![-1];
        for &k in op.overrides.keys() {
            suspects.extend([k - 1, k]);
        }
        for n in suspects {
            if !op.in_window(n) && op.fiber_dim(n) != op.fiber_dim(n + 1) {
                return Err(WindowError::ShiftMismatch {
                    from: n,
                    d0: op.fiber_dim(n),
                    d1: op.fiber_dim(n + 1),
                });
            }
        }
        Ok(op)
    }

    pub fn profile(&self) -> FiberProfile {
        self.profile
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn overrides(&self) -> &BTreeMap<i64, usize> {
        &self.overrides
    }

    /// Largest deviation `|to - from - 1|` of a block from the plain shift.
    pub fn max_jump(&self) -> i64 {
        self.max_jump
    }

    /// How far one application can move support: `1 + max_jump`.
    pub fn reach(&self) -> i64 {
        1 + self.max_jump
    }

    pub fn fiber_dim(&self, n: i64) -> usize {
        if let Some(&d) = self.overrides.get(&n) {
            return d;
        }
        if n >= 0 {
            self.profile.right
        } else {
            self.profile.left
        }
    }

    pub fn in_window(&self, n: i64) -> bool {
        n >= self.lo && n <= self.hi
    }

    fn targets(&self) -> impl Iterator<Item = i64> + '_ {
        self.blocks.iter().map(|b| b.to)
    }

    fn check_vector(&self, x: &WindowVector) -> Result<(), WindowError> {
        for (n, v) in x.iter() {
            if v.len() != self.fiber_dim(n) {
                return Err(WindowError::VectorShape { fiber: n });
            }
        }
        Ok(())
    }

    /// Exact image `T x`.
    pub fn apply(&self, x: &WindowVector) -> WindowVector {
        debug_assert!(self.check_vector(x).is_ok());
        let mut acc = Accumulator::default();
        let one = c64(1.0, 0.0);
        for (n, v) in x.iter() {
            if self.in_window(n) {
                for b in self.blocks.iter().filter(|b| b.from == n) {
                    acc.add(b.to, &(&b.matrix * v), one);
                }
            } else {
                acc.add(n + 1, v, one);
            }
        }
        acc.finish_with(|n| self.fiber_dim(n))
    }

    /// Exact image `T* x`.
    pub fn adjoint_apply(&self, x: &WindowVector) -> WindowVector {
        debug_assert!(self.check_vector(x).is_ok());
        let mut acc = Accumulator::default();
        let one = c64(1.0, 0.0);
        for (k, w) in x.iter() {
            for b in self.blocks.iter().filter(|b| b.to == k) {
                acc.add(b.from, &(b.matrix.adjoint() * w), one);
            }
            if !self.in_window(k - 1) {
                acc.add(k - 1, w, one);
            }
        }
        acc.finish_with(|n| self.fiber_dim(n))
    }

    pub fn try_apply(&self, x: &WindowVector) -> Result<WindowVector, WindowError> {
        self.check_vector(x)?;
        Ok(self.apply(x))
    }

    pub fn try_adjoint_apply(&self, x: &WindowVector) -> Result<WindowVector, WindowError> {
        self.check_vector(x)?;
        Ok(self.adjoint_apply(x))
    }

    /// Fibers on which `I - T*T` can be nonzero: the window, plus shifted
    /// fibers whose image collides with a block target.
    fn gram_support(&self) -> (i64, i64) {
        let mut lo = self.lo;
        let mut hi = self.hi;
        for t in self.targets() {
            let n = t - 1;
            if !self.in_window(n) {
                lo = lo.min(n);
                hi = hi.max(n);
            }
        }
        (lo, hi)
    }

    /// Fibers on which `I - TT*` can be nonzero: block targets, plus the
    /// fibers right after window sources (whose shift preimage was replaced).
    fn cogram_support(&self) -> (i64, i64) {
        let mut lo = self.lo + 1;
        let mut hi = self.hi + 1;
        for t in self.targets() {
            lo = lo.min(t);
            hi = hi.max(t);
        }
        (lo, hi)
    }

    fn local_gram(&self, lo: i64, hi: i64, adjoint: bool) -> DefectBlock {
        let index = FiberIndex::new(self, lo, hi);
        let images: Vec<WindowVector> = (0..index.dim())
            .map(|k| {
                let e = index.basis_vector(k);
                if adjoint {
                    self.adjoint_apply(&e)
                } else {
                    self.apply(&e)
                }
            })
            .collect();
        let d = index.dim();
        let mut gram = ComplexMatrix::identity(d, d);
        for i in 0..d {
            for j in i..d {
                let g = images[i].inner(&images[j]);
                gram[(i, j)] -= g;
                if i != j {
                    gram[(j, i)] -= g.conj();
                }
            }
        }
        DefectBlock { index, gram }
    }

    /// Finite blocks of `I - T*T` and `I - TT*` with their fiber supports.
    pub fn defect_grams(&self, tol: &Tolerance) -> Result<(DefectBlock, DefectBlock), WindowError> {
        let (lo, hi) = self.gram_support();
        let g = self.local_gram(lo, hi, false);
        let (lo, hi) = self.cogram_support();
        let gs = self.local_gram(lo, hi, true);
        for block in [&g, &gs] {
            let (vals, _) = numlin::hermitian_eigen(&block.gram);
            if let Some(&min_eig) = vals.first() {
                if min_eig < -2.0 * tol.eq_tol {
                    return Err(WindowError::NotContraction { min_eig });
                }
            }
        }
        Ok((g, gs))
    }

    /// Dense compression to fibers `-radius..=radius`.
    pub fn truncate(&self, radius: usize) -> Result<Truncation, WindowError> {
        let r = radius as i64;
        let need = (self.hi - self.lo + self.max_jump + 2)
            .max(self.hi + self.reach() + 1)
            .max(1 - self.lo + self.reach())
            .max(0) as usize;
        if radius < need {
            return Err(WindowError::RadiusTooSmall { need, got: radius });
        }
        let index = FiberIndex::new(self, -r, r);
        let d = index.dim();
        let mut matrix = ComplexMatrix::zeros(d, d);
        for k in 0..d {
            let img = self.apply(&index.basis_vector(k));
            for (n, v) in img.iter() {
                let rg = index.range(n);
                if rg.len() == v.len() {
                    for (i, z) in rg.zip(v.iter()) {
                        matrix[(i, k)] = *z;
                    }
                }
            }
        }
        let up = self.blocks.iter().map(|b| b.to - b.from).max().unwrap_or(1).max(1);
        let down = self.blocks.iter().map(|b| b.from - b.to).max().unwrap_or(0).max(0);
        Ok(Truncation {
            matrix,
            index,
            up,
            down,
        })
    }

    /// `R T* R` with `R: L_n -> L_{-1-n}` the fiber reflection. Canonical
    /// subspaces of the result reflect to the star-canonical ones of `self`.
    pub fn adjoint_flip(&self) -> WindowedShiftOperator {
        let flip = |n: i64| -1 - n;
        let (slo, shi) = self.cogram_support();
        let lo = flip(shi);
        let hi = flip(slo);
        let mut blocks = Vec::new();
        for t in slo..=shi {
            for b in self.blocks.iter().filter(|b| b.to == t) {
                blocks.push(Block {
                    from: flip(t),
                    to: flip(b.from),
                    matrix: b.matrix.adjoint(),
                });
            }
            if !self.in_window(t - 1) {
                let d = self.fiber_dim(t);
                blocks.push(Block {
                    from: flip(t),
                    to: flip(t - 1),
                    matrix: ComplexMatrix::identity(d, d),
                });
            }
        }
        let overrides = self.overrides.iter().map(|(&k, &d)| (flip(k), d)).collect();
        let profile = FiberProfile {
            left: self.profile.right,
            right: self.profile.left,
        };
        WindowedShiftOperator::with_fiber_dims(profile, (lo, hi), blocks, overrides)
            .expect("reflection of a valid operator is valid")
    }

    /// Conjugation `W T W*` by fiberwise unitaries: `u_left` on every fiber
    /// `n <= -1`, `u_right` on every fiber `n >= 0`. Requires no overrides.
    pub fn conjugate_fiberwise(&self, u_left: &ComplexMatrix, u_right: &ComplexMatrix) -> WindowedShiftOperator {
        let u = |n: i64| if n >= 0 { u_right } else { u_left };
        let blocks = self
            .blocks
            .iter()
            .map(|b| Block {
                from: b.from,
                to: b.to,
                matrix: u(b.to) * &b.matrix * u(b.from).adjoint(),
            })
            .collect();
        WindowedShiftOperator::with_fiber_dims(self.profile, (self.lo, self.hi), blocks, self.overrides.clone())
            .expect("conjugation preserves shapes")
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            profile: ProfileJson {
                left: self.profile.left,
                right: self.profile.right,
            },
            window: [self.lo, self.hi],
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockJson {
                    from: b.from,
                    to: b.to,
                    matrix: MatrixJson::from(&b.matrix),
                })
                .collect(),
            fiber_dims: self.overrides.iter().map(|(&k, &d)| (k, d)).collect(),
        }
    }

    pub fn from_json(j: OperatorJson) -> Result<Self, WindowError> {
        let blocks = j
            .blocks
            .into_iter()
            .map(|b| {
                Ok(Block {
                    from: b.from,
                    to: b.to,
                    matrix: ComplexMatrix::try_from(b.matrix)?,
                })
            })
            .collect::<Result<Vec<_>, NumError>>()?;
        Self::with_fiber_dims(
            FiberProfile::new(j.profile.left, j.profile.right),
            (j.window[0], j.window[1]),
            blocks,
            j.fiber_dims.into_iter().collect(),
        )
    }
}

/// Finite block of a defect gram on the fibers `index.lo()..=index.hi()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectBlock {
    pub index: FiberIndex,
    pub gram: ComplexMatrix,
}

impl DefectBlock {
    pub fn support(&self) -> (i64, i64) {
        (self.index.lo(), self.index.hi())
    }
}

/// Dense compression of an operator to fibers `-radius..=radius`.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub matrix: ComplexMatrix,
    pub index: FiberIndex,
    up: i64,
    down: i64,
}

impl Truncation {
    /// Number of powers `k` for which `matrix^k x` equals `T^k x` for every
    /// `x` supported in fibers `lo..=hi`.
    pub fn exact_depth(&self, lo: i64, hi: i64) -> usize {
        let top = (self.index.hi() - hi) / self.up;
        let bottom = if self.down > 0 {
            (lo - self.index.lo()) / self.down
        } else {
            i64::MAX
        };
        top.min(bottom).max(0) as usize
    }

    /// Same for powers of the adjoint.
    pub fn adjoint_exact_depth(&self, lo: i64, hi: i64) -> usize {
        let bottom = (lo - self.index.lo()) / self.up;
        let top = if self.down > 0 {
            (self.index.hi() - hi) / self.down
        } else {
            i64::MAX
        };
        top.min(bottom).max(0) as usize
    }

    /// Fibers whose coordinates sit at least `margin` fibers from both edges.
    pub fn interior(&self, margin: i64) -> (i64, i64) {
        (self.index.lo() + margin, self.index.hi() - margin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileJson {
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub from: i64,
    pub to: i64,
    pub matrix: MatrixJson,
}

/// Operator wire format; `fiber_dims` lists `[fiber, dim]` overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub profile: ProfileJson,
    pub window: [i64; 2],
    pub blocks: Vec<BlockJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fiber_dims: Vec<(i64, usize)>,
}

/// The bilateral shift on scalar fibers, with a trivial window.
pub fn bilateral_shift() -> WindowedShiftOperator {
    WindowedShiftOperator::new(
        FiberProfile::scalar(),
        (-1, -1),
        vec![Block {
            from: -1,
            to: 0,
            matrix: ComplexMatrix::identity(1, 1),
        }],
    )
    .expect("valid")
}

/// Unilateral shift of multiplicity `mult` on fibers `n >= 0`.
pub fn unilateral_shift(mult: usize) -> WindowedShiftOperator {
    WindowedShiftOperator::new(FiberProfile::new(0, mult), (-1, -1), Vec::new()).expect("valid")
}

/// Co-shift of multiplicity `mult` on fibers `n <= -1`; fiber `-1` is killed.
pub fn co_shift(mult: usize) -> WindowedShiftOperator {
    WindowedShiftOperator::new(FiberProfile::new(mult, 0), (-1, -1), Vec::new()).expect("valid")
}

/// Random contractions for tests and sweeps.
pub mod random {
    use super::{Block, FiberIndex, FiberProfile, WindowedShiftOperator};
    use crate::numlin::{self, c64, random::gaussian};
    use rand::Rng;

    /// Window `[lo, hi]` mapped densely into fibers `lo+1..=hi+1` by a random
    /// matrix of norm `norm`. These fibers receive nothing from the shift
    /// part, so the operator is a contraction whenever `norm <= 1`.
    pub fn contraction<R: Rng + ?Sized>(
        profile: FiberProfile,
        window: (i64, i64),
        norm: f64,
        rng: &mut R,
    ) -> WindowedShiftOperator {
        let (lo, hi) = window;
        let shape = WindowedShiftOperator::new(profile, window, Vec::new()).expect("profile and window are valid");
        let src = FiberIndex::new(&shape, lo, hi);
        let dst = FiberIndex::new(&shape, lo + 1, hi + 1);
        let mut w = gaussian(dst.dim(), src.dim(), rng);
        let s = numlin::op_norm(&w);
        if s > 0.0 {
            w *= c64(norm / s, 0.0);
        }
        let mut blocks = Vec::new();
        for from in lo..=hi {
            for to in lo + 1..=hi + 1 {
                let (r, c) = (dst.range(to), src.range(from));
                blocks.push(Block {
                    from,
                    to,
                    matrix: w.view((r.start, c.start), (r.len(), c.len())).into_owned(),
                });
            }
        }
        WindowedShiftOperator::new(profile, window, blocks).expect("shapes match")
    }
}
