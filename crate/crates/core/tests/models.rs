//! Characteristic functions of the model operators against closed forms and
//! against a brute-force resolvent computed from exact Gram matrices.

use std::f64::consts::PI;

use ctrfn_core::charfn::{self, Degree, MatrixPolynomial};
use ctrfn_core::coincide::{coincide_monomial, coincide_scalar};
use ctrfn_core::models::{self, DegreeOnePoly, MonomialParams, Realization, TabcParams};
use ctrfn_core::numlin::{self, c64, ComplexMatrix, Tolerance, C64};
use ctrfn_core::windowed::{FiberIndex, WindowVector, WindowedShiftOperator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn cis(t: f64) -> C64 {
    c64(t.cos(), t.sin())
}

fn sorted_svals(m: &ComplexMatrix) -> Vec<f64> {
    let mut s = numlin::singular_values(m);
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Orthonormal eigenvectors of `I - X*X` with positive eigenvalue, where
/// `X` is `T` or `T*` and the Gram is exact because images are not truncated.
fn defect_frame(op: &WindowedShiftOperator, lo: i64, hi: i64, adjoint: bool) -> Vec<(WindowVector, f64)> {
    let index = FiberIndex::new(op, lo, hi);
    let basis: Vec<WindowVector> = (0..index.dim()).map(|k| index.basis_vector(k)).collect();
    let images: Vec<WindowVector> = basis
        .iter()
        .map(|e| if adjoint { op.adjoint_apply(e) } else { op.apply(e) })
        .collect();
    let n = basis.len();
    let d = ComplexMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        c64(id, 0.0) - images[i].inner(&images[j])
    });
    let (vals, vecs) = numlin::hermitian_eigen(&d);
    vals.iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-10)
        .map(|(k, &l)| (index.unflatten(&vecs.column(k).into_owned()), l.sqrt()))
        .collect()
}

/// `Θ(z)` from `-T + z D_{T*} Σ z^k T*^k D_T` summed until the tail is negligible.
fn brute_theta(op: &WindowedShiftOperator, z: C64, lo: i64, hi: i64) -> ComplexMatrix {
    let f = defect_frame(op, lo, hi, false);
    let g = defect_frame(op, lo, hi, true);
    let mut m = ComplexMatrix::zeros(g.len(), f.len());
    for (j, (fj, lj)) in f.iter().enumerate() {
        let tf = op.apply(fj);
        let mut acc = WindowVector::empty();
        let mut v = fj.scale(c64(*lj, 0.0));
        let mut zk = c64(1.0, 0.0);
        while zk.norm() > 1e-17 {
            acc = acc.axpy(zk, &v);
            v = op.adjoint_apply(&v);
            zk *= z;
        }
        for (i, (gi, mi)) in g.iter().enumerate() {
            m[(i, j)] = -gi.inner(&tf) + z * *mi * gi.inner(&acc);
        }
    }
    m
}

fn tabc(a: C64, b: C64, gamma: C64) -> (TabcParams, WindowedShiftOperator) {
    let p = TabcParams::from_gamma(a, b, gamma, &tol()).unwrap();
    let op = models::make_tabc(&p, &tol()).unwrap();
    (p, op)
}

#[test]
fn tabc_theta_matches_brute_force_resolvent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..12 {
        let a = cis(rng.random_range(0.0..2.0 * PI)) * rng.random_range(0.05..0.95);
        let b = cis(rng.random_range(0.0..2.0 * PI)) * rng.random_range(0.05..0.95);
        let unimodular = rng.random_bool(0.5);
        let rg = if unimodular { 1.0 } else { rng.random_range(0.0..0.99) };
        let (p, op) = tabc(a, b, cis(rng.random_range(0.0..2.0 * PI)) * rg);
        let z = cis(rng.random_range(0.0..2.0 * PI)) * rng.random_range(0.0..0.6);
        let brute = sorted_svals(&brute_theta(&op, z, -4, 4));
        let fast = sorted_svals(&charfn::theta_at(&op, z, 32, &tol()).unwrap());
        assert_eq!(brute.len(), fast.len());
        for (x, y) in brute.iter().zip(&fast) {
            assert!((x - y).abs() < 1e-10, "{brute:?} vs {fast:?}");
        }
        if unimodular {
            assert_eq!(fast.len(), 1);
            assert!((fast[0] - (p.a * p.b + p.c * z).norm()).abs() < 1e-10);
        } else {
            assert_eq!(fast.len(), 2);
        }
    }
}

#[test]
fn monomial_theta_matches_brute_force_resolvent() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (rows, cols, m) in [(1, 1, 1), (2, 1, 2), (2, 3, 3), (3, 3, 2)] {
        let s: Vec<f64> = (0..rows.min(cols)).map(|_| rng.random_range(0.1..0.9)).collect();
        let a = numlin::random::with_singular_values(rows, cols, &s, &mut rng);
        let p = MonomialParams::new(a.clone(), m, &tol()).unwrap();
        let op = models::make_ta(&p, &tol()).unwrap();
        let z = c64(0.31, -0.22);
        let brute = brute_theta(&op, z, -2 * m as i64 - 2, 2 * m as i64 + 2);
        let fast = charfn::theta_at(&op, z, 32, &tol()).unwrap();
        let expected: Vec<f64> = sorted_svals(&(a * z.powu(m as u32)));
        let (b, f) = (sorted_svals(&brute), sorted_svals(&fast));
        assert_eq!(b.len(), expected.len());
        for k in 0..expected.len() {
            assert!((b[k] - expected[k]).abs() < 1e-10, "{b:?} vs {expected:?}");
            assert!((f[k] - expected[k]).abs() < 1e-10, "{f:?} vs {expected:?}");
        }
    }
}

#[test]
fn jordan_block_has_theta_z_to_the_m_times_unitary() {
    for (m, dim) in [(1, 1), (3, 1), (2, 3)] {
        let op = models::jordan_operator(m, dim).unwrap();
        assert_eq!(charfn::poly_degree(&op, 16, &tol()).unwrap(), Degree::Exact(m));
        let theta = charfn::theta_coeffs(&op, 16, &tol()).unwrap();
        let top = theta.coeff(m);
        let defect = numlin::op_norm(&(top.adjoint() * &top - numlin::identity(dim)));
        assert!(defect < 1e-12);
        for k in 0..m {
            assert!(numlin::op_norm(&theta.coeff(k)) < 1e-12);
        }
    }
}

#[test]
fn defect_dims_match_exact_gram_ranks() {
    let cases = [
        (c64(0.5, 0.0), c64(0.5, 0.0), c64(0.3, 0.0)),
        (c64(0.0, 0.7), c64(0.2, 0.0), c64(0.0, 1.0)),
        (c64(0.9, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)),
    ];
    for (a, b, gamma) in cases {
        let (_, op) = tabc(a, b, gamma);
        let data = charfn::defect_data(&op, &tol()).unwrap();
        assert_eq!(data.dt.dim(), defect_frame(&op, -5, 5, false).len());
        assert_eq!(data.dt_star.dim(), defect_frame(&op, -5, 5, true).len());
    }
}

#[test]
fn monomial_and_its_flip_share_the_characteristic_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = numlin::random::with_singular_values(3, 2, &[0.8, 0.4], &mut rng);
    let p = MonomialParams::new(a.clone(), 3, &tol()).unwrap();
    let target = MatrixPolynomial::monomial(3, &a);
    for op in [
        models::make_ta(&p, &tol()).unwrap(),
        models::make_ta_star(&p, &tol()).unwrap(),
    ] {
        let theta = charfn::theta_coeffs(&op, 16, &tol()).unwrap();
        assert!(coincide_monomial(&theta, &target, &tol()).unwrap().is_certified());
    }
}

#[test]
fn realizer_reproduces_requested_polynomial() {
    let cases = [
        (c64(0.5, 0.0), c64(0.5, 0.0)),
        (c64(0.0, 0.2), c64(-0.3, 0.4)),
        (c64(0.0, 0.0), c64(0.7, 0.0)),
        (c64(0.6, 0.0), c64(0.0, 0.0)),
    ];
    for (alpha, beta) in cases {
        let poly = DegreeOnePoly::new(alpha, beta);
        let real = models::realize_degree_one(&poly, &tol()).unwrap();
        let Realization::Tabc(p) = &real else {
            panic!("interior case routed to J_1")
        };
        assert!((p.a * p.b - alpha).norm() < 1e-12);
        let op = real.operator(&tol()).unwrap();
        let theta = charfn::theta_coeffs(&op, 8, &tol()).unwrap();
        let out = coincide_scalar(&theta, &poly.polynomial(), &tol()).unwrap();
        assert!(out.is_certified(), "{alpha} {beta}: {out:?}");
    }
    let edge = models::realize_degree_one(&DegreeOnePoly::new(c64(0.0, 0.0), c64(0.0, 1.0)), &tol()).unwrap();
    assert!(matches!(edge, Realization::Jordan { m: 1, dim: 1, .. }));
    assert!(models::realize_degree_one(&DegreeOnePoly::new(c64(0.6, 0.0), c64(0.6, 0.0)), &tol()).is_err());
}

#[test]
fn theta_at_agrees_with_the_coefficients() {
    let (_, op) = tabc(c64(0.3, 0.4), c64(0.0, -0.6), c64(0.5, 0.5));
    let theta = charfn::theta_coeffs(&op, 16, &tol()).unwrap();
    for k in 0..8 {
        let z = cis(k as f64) * 0.7;
        let direct = charfn::theta_at(&op, z, 32, &tol()).unwrap();
        assert!(numlin::op_norm(&(direct - theta.eval(z))) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tabc_theta_modulus_is_ab_plus_cz(
        ra in 0.0f64..0.99, ta in 0.0..2.0 * PI,
        rb in 0.0f64..0.99, tb in 0.0..2.0 * PI,
        tg in 0.0..2.0 * PI,
        rz in 0.0f64..0.95, tz in 0.0..2.0 * PI,
    ) {
        let (p, op) = tabc(cis(ta) * ra, cis(tb) * rb, cis(tg));
        let z = cis(tz) * rz;
        let theta = charfn::theta_at(&op, z, 16, &tol()).unwrap();
        prop_assert_eq!(theta.shape(), (1, 1));
        prop_assert!((theta[(0, 0)].norm() - (p.a * p.b + p.c * z).norm()).abs() < 1e-10);
        prop_assert!(charfn::poly_degree(&op, 16, &tol()).unwrap().exact().unwrap() <= 1);
    }

    #[test]
    fn theta_is_contractive_on_the_disk(seed in 0u64..1000, rz in 0.0f64..0.99, tz in 0.0..2.0 * PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let profile = ctrfn_core::FiberProfile::new(rng.random_range(1..3), rng.random_range(1..3));
        let op = ctrfn_core::windowed::random::contraction(profile, (-1, 1), rng.random_range(0.1..1.0), &mut rng);
        let theta = charfn::theta_at(&op, cis(tz) * rz, 64, &tol()).unwrap();
        prop_assert!(numlin::op_norm(&theta) <= 1.0 + 1e-10);
    }
}
