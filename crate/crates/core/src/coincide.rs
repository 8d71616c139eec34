//! Coincidence of matrix polynomials: unitaries `τ`, `τ*` with
//! `τ* P(z) = Q(z) τ` for every `z`, checked coefficientwise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::charfn::MatrixPolynomial;
use crate::numlin::{self, c64, random, ComplexMatrix, MatrixJson, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoincideError {
    #[error("expected scalar polynomials, got {0}")]
    NotScalar(String),
    #[error("expected monomials, got {0}")]
    NotMonomial(String),
    #[error("monomial degrees differ: {p} vs {q}")]
    DegreeMismatch { p: usize, q: usize },
}

/// Unitaries with `τ* P_k = Q_k τ`; `residual` is `max_k ‖τ* P_k - Q_k τ‖_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCertificate {
    pub tau: ComplexMatrix,
    pub tau_star: ComplexMatrix,
    pub residual: f64,
}

impl CoincidenceCertificate {
    /// The certificate for `(Q, P)`.
    pub fn inverse(&self) -> Self {
        Self {
            tau: self.tau.adjoint(),
            tau_star: self.tau_star.adjoint(),
            residual: self.residual,
        }
    }

    /// Largest deviation of `τ` or `τ*` from being unitary.
    pub fn unitarity_defect(&self) -> f64 {
        let dev = |u: &ComplexMatrix| numlin::frobenius(&(u.adjoint() * u - numlin::identity(u.ncols())));
        dev(&self.tau).max(dev(&self.tau_star))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Certified(CoincidenceCertificate),
    /// Proven not to coincide, with the violated invariant.
    Rejected(String),
    /// The search found nothing; this is not a proof of non-coincidence.
    NoCertificate {
        best_residual: f64,
    },
}

impl Outcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, Outcome::Certified(_))
    }

    pub fn certificate(&self) -> Option<&CoincidenceCertificate> {
        match self {
            Outcome::Certified(c) => Some(c),
            _ => None,
        }
    }

    /// `{"coincide": true|false|"no-certificate", "residual", "tau", "tau_star"}`.
    pub fn to_json(&self) -> Value {
        match self {
            Outcome::Certified(c) => json!({
                "coincide": true,
                "residual": c.residual,
                "tau": MatrixJson::from(&c.tau),
                "tau_star": MatrixJson::from(&c.tau_star),
            }),
            Outcome::Rejected(reason) => json!({
                "coincide": false,
                "residual": Value::Null,
                "tau": Value::Null,
                "tau_star": Value::Null,
                "reason": reason,
            }),
            Outcome::NoCertificate { best_residual } => json!({
                "coincide": "no-certificate",
                "residual": best_residual,
                "tau": Value::Null,
                "tau_star": Value::Null,
            }),
        }
    }
}

/// `max_k ‖τ* P_k - Q_k τ‖_F` over the union of both coefficient ranges.
pub fn residual(p: &MatrixPolynomial, q: &MatrixPolynomial, tau: &ComplexMatrix, tau_star: &ComplexMatrix) -> f64 {
    let n = p.coeffs().len().max(q.coeffs().len());
    (0..n)
        .map(|k| numlin::frobenius(&(tau_star * p.coeff(k) - q.coeff(k) * tau)))
        .fold(0.0, f64::max)
}

fn settle(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    tau: ComplexMatrix,
    tau_star: ComplexMatrix,
    tol: &Tolerance,
) -> Outcome {
    let r = residual(p, q, &tau, &tau_star);
    if r <= tol.eq_tol {
        Outcome::Certified(CoincidenceCertificate {
            tau,
            tau_star,
            residual: r,
        })
    } else {
        Outcome::Rejected(format!("aligned residual {r:.3e} exceeds {:.1e}", tol.eq_tol))
    }
}

/// Scalar polynomials coincide iff `Q_k = λ P_k` for one unimodular `λ`.
pub fn coincide_scalar(p: &MatrixPolynomial, q: &MatrixPolynomial, tol: &Tolerance) -> Result<Outcome, CoincideError> {
    for (name, x) in [("P", p), ("Q", q)] {
        if x.dom() != 1 || x.cod() != 1 {
            return Err(CoincideError::NotScalar(format!("{name} is {}x{}", x.cod(), x.dom())));
        }
    }
    let n = p.coeffs().len().max(q.coeffs().len());
    let pk: Vec<_> = (0..n).map(|k| p.coeff(k)[(0, 0)]).collect();
    let qk: Vec<_> = (0..n).map(|k| q.coeff(k)[(0, 0)]).collect();
    let k = (0..n).max_by(|&i, &j| (pk[i].norm() + qk[i].norm()).total_cmp(&(pk[j].norm() + qk[j].norm())));
    let k = k.expect("polynomials have at least one coefficient");
    let lambda = if pk[k].norm() > 0.0 && qk[k].norm() > 0.0 {
        let l = qk[k] / pk[k];
        l / l.norm()
    } else {
        c64(1.0, 0.0)
    };
    let tau = numlin::identity(1);
    let tau_star = ComplexMatrix::from_element(1, 1, lambda);
    Ok(settle(p, q, tau, tau_star, tol))
}

fn monomial_index(p: &MatrixPolynomial, tol: &Tolerance) -> Result<Option<usize>, CoincideError> {
    let s = p.support(tol.rank_tol);
    match s.len() {
        0 => Ok(None),
        1 => Ok(Some(s[0])),
        _ => Err(CoincideError::NotMonomial(format!("nonzero coefficients at {s:?}"))),
    }
}

fn singular_values_match(a: &ComplexMatrix, b: &ComplexMatrix, cut: f64) -> Result<(), String> {
    let (sa, sb) = (numlin::singular_values(a), numlin::singular_values(b));
    let n = sa.len().max(sb.len());
    for i in 0..n {
        let (x, y) = (sa.get(i).copied().unwrap_or(0.0), sb.get(i).copied().unwrap_or(0.0));
        if (x - y).abs() > cut {
            return Err(format!("singular value {i} differs: {x:.6e} vs {y:.6e}"));
        }
    }
    Ok(())
}

/// `A z^k` and `B z^k` coincide iff `A` and `B` have the same shape and
/// singular values; the unitaries come from aligning full SVDs.
pub fn coincide_monomial(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    tol: &Tolerance,
) -> Result<Outcome, CoincideError> {
    let (kp, kq) = (monomial_index(p, tol)?, monomial_index(q, tol)?);
    if let (Some(a), Some(b)) = (kp, kq) {
        if a != b {
            return Err(CoincideError::DegreeMismatch { p: a, q: b });
        }
    }
    if (p.dom(), p.cod()) != (q.dom(), q.cod()) {
        return Ok(Outcome::Rejected(format!(
            "dimensions differ: {}x{} vs {}x{}",
            p.cod(),
            p.dom(),
            q.cod(),
            q.dom()
        )));
    }
    let k = kp.or(kq).unwrap_or(0);
    let (a, b) = (p.coeff(k), q.coeff(k));
    if let Err(why) = singular_values_match(&a, &b, tol.eq_tol) {
        return Ok(Outcome::Rejected(why));
    }
    let (ua, _, va) = numlin::full_svd(&a);
    let (ub, _, vb) = numlin::full_svd(&b);
    let tau = &vb * va.adjoint();
    let tau_star = &ub * ua.adjoint();
    Ok(settle(p, q, tau, tau_star, tol))
}

/// Invariant checks that prove non-coincidence.
fn fast_reject(p: &MatrixPolynomial, q: &MatrixPolynomial, tol: &Tolerance) -> Option<String> {
    if (p.dom(), p.cod()) != (q.dom(), q.cod()) {
        return Some(format!(
            "dimensions differ: {}x{} vs {}x{}",
            p.cod(),
            p.dom(),
            q.cod(),
            q.dom()
        ));
    }
    let (dp, dq) = (
        p.trimmed(tol.rank_tol).len_degree(),
        q.trimmed(tol.rank_tol).len_degree(),
    );
    if dp != dq {
        return Some(format!("degrees differ: {dp} vs {dq}"));
    }
    for k in 0..=dp {
        if let Err(why) = singular_values_match(&p.coeff(k), &q.coeff(k), tol.eq_tol) {
            return Some(format!("coefficient {k}: {why}"));
        }
    }
    None
}

/// Alternating Procrustes from a fixed `τ`; returns the final pair and residual.
fn alternate(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    mut tau: ComplexMatrix,
    iters: usize,
) -> (ComplexMatrix, ComplexMatrix, f64) {
    let n = p.coeffs().len().max(q.coeffs().len());
    let mut best = f64::INFINITY;
    let mut tau_star = numlin::identity(p.cod());
    for _ in 0..iters {
        let mut m = ComplexMatrix::zeros(q.cod(), p.cod());
        for k in 0..n {
            m += q.coeff(k) * &tau * p.coeff(k).adjoint();
        }
        tau_star = numlin::procrustes_unitary(&m);
        let mut w = ComplexMatrix::zeros(q.dom(), p.dom());
        for k in 0..n {
            w += q.coeff(k).adjoint() * &tau_star * p.coeff(k);
        }
        tau = numlin::procrustes_unitary(&w);
        let r = residual(p, q, &tau, &tau_star);
        if r >= best - 1e-15 {
            best = best.min(r);
            break;
        }
        best = r;
    }
    (tau, tau_star, best)
}

/// Heuristic search for a certificate. Certificates are sound; a
/// `NoCertificate` outcome is inconclusive. Starts are drawn from `seed`.
pub fn coincide_general(
    p: &MatrixPolynomial,
    q: &MatrixPolynomial,
    restarts: usize,
    seed: u64,
    tol: &Tolerance,
) -> Outcome {
    if let Some(why) = fast_reject(p, q, tol) {
        return Outcome::Rejected(why);
    }
    if p.dom() == 0 || p.cod() == 0 {
        return settle(p, q, numlin::identity(p.dom()), numlin::identity(p.cod()), tol);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.coeffs().len();
    let mut best = f64::INFINITY;
    for attempt in 0..restarts.max(1) {
        let start = if attempt == 0 {
            // align the SVDs of one random combination Σ w_k P_k and Σ w_k Q_k
            let w = random::gaussian(n, 1, &mut rng);
            let mut cp = ComplexMatrix::zeros(p.cod(), p.dom());
            let mut cq = ComplexMatrix::zeros(q.cod(), q.dom());
            for k in 0..n {
                cp += p.coeff(k) * w[k];
                cq += q.coeff(k) * w[k];
            }
            let (_, _, vp) = numlin::full_svd(&cp);
            let (_, _, vq) = numlin::full_svd(&cq);
            vq * vp.adjoint()
        } else {
            random::unitary(p.dom(), &mut rng)
        };
        let (tau, tau_star, r) = alternate(p, q, start, 2000);
        if r <= tol.eq_tol {
            return Outcome::Certified(CoincidenceCertificate {
                tau,
                tau_star,
                residual: r,
            });
        }
        best = best.min(r);
    }
    Outcome::NoCertificate { best_residual: best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::C64;
    use proptest::prelude::*;
    use rand::Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn r(x: f64) -> C64 {
        c64(x, 0.0)
    }

    fn conjugated(p: &MatrixPolynomial, u: &ComplexMatrix, v: &ComplexMatrix) -> MatrixPolynomial {
        let cs = p.coeffs().iter().map(|c| u * c * v.adjoint()).collect();
        MatrixPolynomial::new(cs, p.dom(), p.cod()).unwrap()
    }

    fn random_poly(rng: &mut ChaCha8Rng, deg: usize, dom: usize, cod: usize) -> MatrixPolynomial {
        let cs = (0..=deg).map(|_| random::gaussian(cod, dom, rng) * r(0.3)).collect();
        MatrixPolynomial::new(cs, dom, cod).unwrap()
    }

    #[test]
    fn scalar_identity_and_phase() {
        let p = MatrixPolynomial::scalar(&[r(-0.3), c64(0.2, 0.4)]);
        let c = coincide_scalar(&p, &p, &tol()).unwrap();
        assert!(c.certificate().unwrap().residual < 1e-15);
        let th = c64(0.0, 1.3).exp();
        let q = MatrixPolynomial::scalar(&[r(-0.3) * th, c64(0.2, 0.4) * th]);
        let c = coincide_scalar(&p, &q, &tol()).unwrap();
        let cert = c.certificate().unwrap();
        assert!(cert.residual < 1e-12);
        assert!((cert.tau_star[(0, 0)] / cert.tau[(0, 0)] - th).norm() < 1e-12);
    }

    #[test]
    fn scalar_moduli_are_invariants() {
        let p = MatrixPolynomial::scalar(&[r(0.3), r(0.5)]);
        let q = MatrixPolynomial::scalar(&[r(0.3), r(0.6)]);
        assert!(matches!(coincide_scalar(&p, &q, &tol()).unwrap(), Outcome::Rejected(_)));
        // equal moduli but a relative phase between the coefficients
        let q = MatrixPolynomial::scalar(&[r(-0.3), r(0.5)]);
        assert!(matches!(coincide_scalar(&p, &q, &tol()).unwrap(), Outcome::Rejected(_)));
        let m = MatrixPolynomial::new(vec![ComplexMatrix::zeros(2, 1)], 1, 2).unwrap();
        assert!(coincide_scalar(&p, &m, &tol()).is_err());
    }

    #[test]
    fn monomial_construct_then_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (rows, cols) in [(2, 2), (3, 2), (2, 4)] {
            let a = random::gaussian(rows, cols, &mut rng);
            let u = random::unitary(rows, &mut rng);
            let v = random::unitary(cols, &mut rng);
            let p = MatrixPolynomial::monomial(2, &a);
            let q = MatrixPolynomial::monomial(2, &(&u * &a * v.adjoint()));
            let c = coincide_monomial(&p, &q, &tol()).unwrap();
            let cert = c.certificate().expect("certified");
            assert!(cert.residual < 1e-10);
            assert!(cert.unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn monomial_degenerate_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random::with_singular_values(3, 3, &[0.5, 0.5, 0.0], &mut rng);
        let b = random::with_singular_values(3, 3, &[0.5, 0.5, 0.0], &mut rng);
        let c = coincide_monomial(
            &MatrixPolynomial::monomial(1, &a),
            &MatrixPolynomial::monomial(1, &b),
            &tol(),
        )
        .unwrap();
        assert!(c.certificate().unwrap().residual < 1e-10);
    }

    #[test]
    fn monomial_rejections() {
        let diag = |x: &[f64]| {
            ComplexMatrix::from_diagonal(&crate::numlin::ComplexVector::from_iterator(
                x.len(),
                x.iter().map(|&v| r(v)),
            ))
        };
        let p = MatrixPolynomial::monomial(1, &diag(&[0.5, 0.3]));
        let q = MatrixPolynomial::monomial(1, &diag(&[0.5, 0.2]));
        assert!(matches!(
            coincide_monomial(&p, &q, &tol()).unwrap(),
            Outcome::Rejected(_)
        ));
        let q = MatrixPolynomial::monomial(1, &diag(&[0.5, 0.3, 0.0]));
        assert!(matches!(
            coincide_monomial(&p, &q, &tol()).unwrap(),
            Outcome::Rejected(_)
        ));
        let q = MatrixPolynomial::monomial(2, &diag(&[0.5, 0.3]));
        assert_eq!(
            coincide_monomial(&p, &q, &tol()),
            Err(CoincideError::DegreeMismatch { p: 1, q: 2 })
        );
    }

    #[test]
    fn general_construct_then_verify() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (deg, dom, cod) in [(1, 2, 2), (2, 3, 2), (3, 2, 3)] {
            let p = random_poly(&mut rng, deg, dom, cod);
            let u = random::unitary(cod, &mut rng);
            let v = random::unitary(dom, &mut rng);
            let q = conjugated(&p, &u, &v);
            let out = coincide_general(&p, &q, 20, 1, &tol());
            let cert = out.certificate().expect("certified");
            assert!(cert.residual < 1e-8);
            assert!(cert.unitarity_defect() < 1e-9);
            let back = cert.inverse();
            assert!(residual(&q, &p, &back.tau, &back.tau_star) < 1e-8);
        }
    }

    #[test]
    fn general_fast_rejections() {
        let p = MatrixPolynomial::scalar(&[r(0.2), r(0.3)]);
        let q = MatrixPolynomial::scalar(&[r(0.2), r(0.3), r(0.1)]);
        assert!(matches!(coincide_general(&p, &q, 5, 0, &tol()), Outcome::Rejected(_)));
        let a = ComplexMatrix::from_diagonal_element(2, 2, r(0.5));
        let p = MatrixPolynomial::new(vec![a.clone(), a.clone()], 2, 2).unwrap();
        let q = MatrixPolynomial::new(vec![a.clone(), a * r(0.9)], 2, 2).unwrap();
        assert!(matches!(coincide_general(&p, &q, 5, 0, &tol()), Outcome::Rejected(_)));
    }

    #[test]
    fn report_json_shapes() {
        let p = MatrixPolynomial::scalar(&[r(0.2)]);
        let v = coincide_scalar(&p, &p, &tol()).unwrap().to_json();
        assert_eq!(v["coincide"], json!(true));
        assert_eq!(v["tau"]["rows"], json!(1));
        let v = Outcome::NoCertificate { best_residual: 0.5 }.to_json();
        assert_eq!(v["coincide"], json!("no-certificate"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn scalar_and_general_agree(seed in any::<u64>(), positive in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_poly(&mut rng, 1, 1, 1);
            let q = if positive {
                let th = c64(0.0, rng.random_range(0.0..6.3)).exp();
                MatrixPolynomial::scalar(&[p.coeff(0)[(0, 0)] * th, p.coeff(1)[(0, 0)] * th])
            } else {
                random_poly(&mut rng, 1, 1, 1)
            };
            let s = coincide_scalar(&p, &q, &tol()).unwrap().is_certified();
            let g = coincide_general(&p, &q, 5, seed, &tol()).is_certified();
            prop_assert_eq!(s, g);
            prop_assert_eq!(s, positive);
        }

        #[test]
        fn certificates_respect_invariants(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_poly(&mut rng, 2, 2, 2);
            let q = conjugated(&p, &random::unitary(2, &mut rng), &random::unitary(2, &mut rng));
            if let Outcome::Certified(c) = coincide_general(&p, &q, 20, seed, &tol()) {
                prop_assert!(c.unitarity_defect() <= 1e-9);
                prop_assert!(c.residual <= 1e-9);
                for k in 0..3 {
                    let (a, b) = (numlin::singular_values(&p.coeff(k)), numlin::singular_values(&q.coeff(k)));
                    for (x, y) in a.iter().zip(&b) {
                        prop_assert!((x - y).abs() <= 1e-8);
                    }
                }
            } else {
                prop_assert!(false, "no certificate for a conjugated pair");
            }
            let c = coincide_general(&p, &p, 1, seed, &tol());
            prop_assert!(c.certificate().map(|c| c.residual < 1e-12).unwrap_or(false));
        }
    }
}
