//! Characteristic functions of contractions with polynomial characteristic
//! functions, computed exactly on windowed shift operators.
//!
//! The operators live on a two-sided sequence space of finite-dimensional
//! fibers. Outside a finite window they act as the identity shift from one
//! fiber to the next, so defect operators have finite rank and every Taylor
//! coefficient of the characteristic function comes from propagating
//! finitely supported vectors.

pub mod canonical;
pub mod charfn;
pub mod coincide;
pub mod models;
pub mod numlin;
pub mod windowed;

pub use canonical::{
    canonical_decomposition, classify_degenerate, coordinate_splitting, injection_intertwiner, isometric_subspace,
    jordan_unitary_intertwiner, minimal_nilpotents, multiplicities, quasi_affinity_witness, unitary_part_dim,
    CanonicalDecomposition, CanonicalError, ClassTag, Classification, DegenerateForm, Exactness, MinimalSplittings,
    QuasiAffinityWitness, Side, Variant,
};
pub use charfn::{
    defect_data, in_disk_spectrum, poly_degree, theta_at, theta_coeffs, CharFnError, DefectData, DefectSide, Degree,
    MatrixPolynomial,
};
pub use coincide::{
    coincide_general, coincide_monomial, coincide_scalar, CoincideError, CoincidenceCertificate, Outcome,
};
pub use models::{
    is_purely_contractive, make_jm, make_ta, make_ta_star, make_tabc, realize_degree_one, DegreeOnePoly, ModelError,
    ModelWarning, MonomialParams, PurityCertificate, Realization, TabcParams,
};
pub use numlin::{ComplexMatrix, NumError, Subspace, Tolerance, C64};
pub use windowed::{Block, FiberIndex, FiberProfile, WindowError, WindowVector, WindowedShiftOperator};
