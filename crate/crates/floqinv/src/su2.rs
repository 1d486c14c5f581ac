//! Exact two-level analysis of the end-of-pulse propagator.
//!
//! Any V ∈ U(2) factors as
//!
//! ```text
//! V = e^{iχ} [  e^{iΔ1} cos δ    e^{iΔ2} sin δ ]
//!             [ −e^{−iΔ2} sin δ  e^{−iΔ1} cos δ ]
//! ```
//!
//! Only δ moves population; the remaining parameters are phases. Population
//! inversion requires δ to be an odd multiple of π/2, which forces the
//! eigenvalues to ±i·e^{iχ} and the eigenvector matrix to a balanced rotation
//! with all entries of modulus 1/√2 — the latter is the sufficient criterion,
//! since the quasienergy spacing alone is also produced by the Δ1 = π/2
//! family that transfers only half the population.
//!
//! Branch conventions for decomposition: χ ∈ (−π/2, π/2] from arg(det V)/2,
//! δ ∈ [0, π/2], Δ1 and Δ2 in (−π, π]. The winding count of δ (how many
//! inversions occurred during the pulse) is not recoverable from V alone.

use crate::linalg::{self, CMatrix, CVector, C64};
use crate::propagation::PropagatorMatrix;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Unitarity slack accepted by analysis entry points.
pub const UNITARY_TOL: f64 = 1e-8;
/// Eigenvalue gap below which eigenvector gauge fixing is refused.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Entry modulus below which a phase is conventionally set to zero.
const PHASE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum Su2Error {
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
    #[error("eigenvalues coincide within {DEGENERACY_TOL:e}; eigenvector gauge undefined")]
    DegenerateEigenvectors,
    #[error("|a|² + |b|² = {norm_sq} is not 1 within 1e-10")]
    NormViolation { norm_sq: f64 },
}

/// The (χ, Δ1, Δ2, δ) parameters of a 2×2 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Params {
    pub chi: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta: f64,
}

/// Eigenvalues (unit modulus) and normalized eigenvectors (columns) of a
/// 2×2 unitary. Column order follows the principal branch of the
/// characteristic-polynomial square root.
#[derive(Debug, Clone)]
pub struct Eigensystem2 {
    pub zeta1: C64,
    pub zeta2: C64,
    pub vectors: CMatrix,
}

/// Outcome of the δ-angle necessary test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiAngleCheck {
    pub is_pi: bool,
    /// Index k of the nearest δ = (2k+1)π/2 when `is_pi`.
    pub k: Option<i64>,
}

/// Outcome of the eigenvector-shape sufficient test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientPiCheck {
    pub is_pi_rotation: bool,
    /// Off-diagonal phase α of the balanced rotation, when it applies.
    pub alpha: Option<f64>,
}

fn require_unitary_2(v: &PropagatorMatrix) -> Result<&CMatrix, Su2Error> {
    assert_eq!(v.dim(), 2, "two-level analysis requires a 2x2 propagator");
    let defect = v.unitarity_error();
    if defect > UNITARY_TOL {
        return Err(Su2Error::NotUnitary { defect });
    }
    Ok(v.matrix())
}

/// Build the matrix of the parametrization; unitary by construction.
pub fn compose_su2(p: &Su2Params) -> PropagatorMatrix {
    let (c, s) = (p.delta.cos(), p.delta.sin());
    let pre = C64::from_polar(1.0, p.chi);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            pre * C64::from_polar(c, p.delta1),
            pre * C64::from_polar(s, p.delta2),
            pre * C64::from_polar(s, -p.delta2) * (-1.0),
            pre * C64::from_polar(c, -p.delta1),
        ],
    );
    PropagatorMatrix::from_matrix(m, 0.0, 0.0)
}

/// Extract (χ, Δ1, Δ2, δ) under the documented branch conventions.
pub fn decompose_su2(v: &PropagatorMatrix) -> Result<Su2Params, Su2Error> {
    let m = require_unitary_2(v)?;
    let delta = m[(0, 1)].norm().atan2(m[(0, 0)].norm());
    let chi = linalg::wrap_angle(m.determinant().arg()) / 2.0;
    let delta1 = if m[(0, 0)].norm() > PHASE_FLOOR {
        linalg::wrap_angle(m[(0, 0)].arg() - chi)
    } else {
        0.0
    };
    let delta2 = if m[(0, 1)].norm() > PHASE_FLOOR {
        linalg::wrap_angle(m[(0, 1)].arg() - chi)
    } else {
        0.0
    };
    Ok(Su2Params {
        chi,
        delta1,
        delta2,
        delta,
    })
}

/// Distance of δ to the nearest odd multiple of π/2, with the inversion
/// count k recovered; 2k+1 counts the inversions during the pulse.
pub fn pi_angle_check(delta: f64, tol: f64) -> PiAngleCheck {
    let k = ((delta / FRAC_PI_2 - 1.0) / 2.0).round();
    let nearest = (2.0 * k + 1.0) * FRAC_PI_2;
    if (delta - nearest).abs() < tol {
        PiAngleCheck {
            is_pi: true,
            k: Some(k as i64),
        }
    } else {
        PiAngleCheck { is_pi: false, k: None }
    }
}

/// Eigenvalues and eigenvectors from the characteristic polynomial.
///
/// At population inversion the spectrum is ζ = ±i·e^{iχ} (symmetric about
/// the origin), which is what drives the quasienergy-spacing criterion.
pub fn eigensystem_2ls(v: &PropagatorMatrix) -> Result<Eigensystem2, Su2Error> {
    let m = require_unitary_2(v)?;
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m.determinant();
    let s = (tr * tr - det * 4.0).sqrt();
    let mut zeta1 = (tr + s) * 0.5;
    let mut zeta2 = (tr - s) * 0.5;
    zeta1 /= zeta1.norm();
    zeta2 /= zeta2.norm();

    let mut vectors = CMatrix::zeros(2, 2);
    for (col, zeta) in [(0usize, zeta1), (1usize, zeta2)] {
        let cand_a = CVector::from_vec(vec![m[(0, 1)], zeta - m[(0, 0)]]);
        let cand_b = CVector::from_vec(vec![zeta - m[(1, 1)], m[(1, 0)]]);
        let (na, nb) = (cand_a.norm(), cand_b.norm());
        let vec = if na.max(nb) < PHASE_FLOOR {
            // Scalar matrix: any orthonormal pair is an eigenbasis.
            let mut e = CVector::zeros(2);
            e[col] = C64::new(1.0, 0.0);
            e
        } else if na >= nb {
            cand_a / C64::new(na, 0.0)
        } else {
            cand_b / C64::new(nb, 0.0)
        };
        vectors.set_column(col, &vec);
    }
    Ok(Eigensystem2 {
        zeta1,
        zeta2,
        vectors,
    })
}

/// Sufficient criterion: after gauge fixing, PI demands every eigenvector
/// entry to have modulus 1/√2. Returns the off-diagonal phase α when the
/// shape matches. The quasienergy-spacing test alone is only necessary.
pub fn sufficient_pi_check(eig: &Eigensystem2, tol: f64) -> Result<SufficientPiCheck, Su2Error> {
    if (eig.zeta1 - eig.zeta2).norm() < DEGENERACY_TOL {
        return Err(Su2Error::DegenerateEigenvectors);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut balanced = true;
    for col in 0..2 {
        let gauged = linalg::gauge_first_nonzero(&eig.vectors.column(col).into_owned());
        for row in 0..2 {
            if (gauged[row].norm() - inv_sqrt2).abs() > tol {
                balanced = false;
            }
        }
    }
    if !balanced {
        return Ok(SufficientPiCheck {
            is_pi_rotation: false,
            alpha: None,
        });
    }

    // α comes from the eigenvector of the +i·e^{iχ} eigenvalue; the ratio of
    // its components is gauge invariant.
    let chi = linalg::wrap_angle((eig.zeta1 * eig.zeta2).arg()) / 2.0;
    let rot = C64::from_polar(1.0, -chi);
    let plus_col = if (eig.zeta1 * rot).im >= 0.0 { 0 } else { 1 };
    let ratio = eig.vectors[(1, plus_col)] / eig.vectors[(0, plus_col)];
    Ok(SufficientPiCheck {
        is_pi_rotation: true,
        alpha: Some(-ratio.arg()),
    })
}

/// Phase-selective inversion target for Δ2 at k = 0, reduced to (−π, π]:
/// Δ2 = χ − β + π.
pub fn pspi_delta2(chi: f64, beta: f64) -> f64 {
    linalg::wrap_angle(chi - beta + PI)
}

/// Solve the phase-selective control relations
/// a = e^{i(χ+Δ1)} cos δ, b = −e^{i(χ−Δ2)} sin δ
/// for (δ, Δ1, Δ2) given the target amplitudes and χ. Phases whose moduli
/// vanish are conventionally zero.
pub fn pspc_targets(a: C64, b: C64, chi: f64) -> Result<Su2Params, Su2Error> {
    let norm_sq = a.norm_sqr() + b.norm_sqr();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Su2Error::NormViolation { norm_sq });
    }
    let delta = b.norm().atan2(a.norm());
    let delta1 = if a.norm() > PHASE_FLOOR {
        linalg::wrap_angle(a.arg() - chi)
    } else {
        0.0
    };
    let delta2 = if b.norm() > PHASE_FLOOR {
        linalg::wrap_angle(chi - (-b).arg())
    } else {
        0.0
    };
    Ok(Su2Params {
        chi,
        delta1,
        delta2,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn identity_prop() -> PropagatorMatrix {
        PropagatorMatrix::from_matrix(CMatrix::identity(2, 2), 0.0, 0.0)
    }

    fn antidiag_pi(chi: f64, delta2: f64) -> PropagatorMatrix {
        compose_su2(&Su2Params {
            chi,
            delta1: 0.0,
            delta2,
            delta: FRAC_PI_2,
        })
    }

    fn random_unitary_2(rng: &mut ChaCha8Rng) -> PropagatorMatrix {
        let m = CMatrix::from_fn(2, 2, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let qr = m.qr();
        let mut u = qr.q();
        let r = qr.r();
        for j in 0..2 {
            let ph = r[(j, j)] / r[(j, j)].norm();
            for i in 0..2 {
                u[(i, j)] *= ph;
            }
        }
        PropagatorMatrix::from_matrix(u, 0.0, 0.0)
    }

    #[test]
    fn decompose_identity() {
        let p = decompose_su2(&identity_prop()).unwrap();
        assert_eq!(p.delta, 0.0);
        assert_eq!(p.chi, 0.0);
        assert_eq!(p.delta1, 0.0);
        assert_eq!(p.delta2, 0.0);
    }

    #[test]
    fn decompose_real_pi_rotation() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let p = decompose_su2(&PropagatorMatrix::from_matrix(m, 0.0, 0.0)).unwrap();
        assert!((p.delta - FRAC_PI_2).abs() < 1e-15);
        assert!(p.chi.abs() < 1e-15);
        assert!(p.delta2.abs() < 1e-15);
    }

    #[test]
    fn decompose_rejects_non_unitary() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        let err = decompose_su2(&PropagatorMatrix::from_matrix(m, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Su2Error::NotUnitary { .. }));
    }

    #[test]
    fn compose_identity_and_moduli() {
        let id = compose_su2(&Su2Params {
            chi: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            delta: 0.0,
        });
        assert!(max_abs_diff(id.matrix(), &CMatrix::identity(2, 2)) < 1e-15);

        let v = compose_su2(&Su2Params {
            chi: std::f64::consts::FRAC_PI_4,
            delta1: 0.3,
            delta2: -0.2,
            delta: 0.7,
        });
        assert!((v.matrix()[(0, 0)].norm() - 0.7f64.cos()).abs() < 1e-15);
        assert!((v.matrix()[(0, 1)].norm() - 0.7f64.sin()).abs() < 1e-15);
        assert!(v.unitarity_error() < 1e-15);
    }

    #[test]
    fn delta1_irrelevant_at_pi_angle() {
        // Azimuth degeneracy: at δ = π/2 the matrix does not depend on Δ1.
        let base = antidiag_pi(0.3, -0.8);
        for d1 in [0.0, 1.1, -2.4, 3.0] {
            let v = compose_su2(&Su2Params {
                chi: 0.3,
                delta1: d1,
                delta2: -0.8,
                delta: FRAC_PI_2,
            });
            assert!(max_abs_diff(v.matrix(), base.matrix()) < 1e-15);
        }
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        assert!(max_abs_diff(antidiag_pi(0.0, 0.0).matrix(), &expected) < 1e-15);
    }

    #[test]
    fn pi_angle_examples() {
        let c = pi_angle_check(FRAC_PI_2, 1e-6);
        assert_eq!(c, PiAngleCheck { is_pi: true, k: Some(0) });
        let c = pi_angle_check(3.0 * FRAC_PI_2, 1e-6);
        assert_eq!(c, PiAngleCheck { is_pi: true, k: Some(1) });
        let c = pi_angle_check(PI / 3.0, 1e-6);
        assert!(!c.is_pi);
    }

    #[test]
    fn eigensystem_of_scalar_matrix() {
        let eig = eigensystem_2ls(&identity_prop()).unwrap();
        assert!((eig.zeta1 - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((eig.zeta2 - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(linalg::unitarity_error(&eig.vectors) < 1e-12);
    }

    #[test]
    fn eigensystem_pi_closed_form() {
        // At δ = π/2 the spectrum is ±i·e^{iχ} (symmetric about 0); the
        // eigenvalue product equals det V = e^{2iχ}.
        let chi = 0.4;
        let v = antidiag_pi(chi, 0.1);
        let eig = eigensystem_2ls(&v).unwrap();
        let plus = C64::new(0.0, 1.0) * C64::from_polar(1.0, chi);
        let minus = -plus;
        let d1 = (eig.zeta1 - plus).norm().min((eig.zeta1 - minus).norm());
        let d2 = (eig.zeta2 - plus).norm().min((eig.zeta2 - minus).norm());
        assert!(d1 < 1e-12 && d2 < 1e-12, "zetas {} {}", eig.zeta1, eig.zeta2);
        assert!((eig.zeta1 + eig.zeta2).norm() < 1e-12);
    }

    #[test]
    fn eigensystem_matches_general_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..60 {
            let v = random_unitary_2(&mut rng);
            let eig = eigensystem_2ls(&v).unwrap();
            for (zeta, col) in [(eig.zeta1, 0), (eig.zeta2, 1)] {
                assert!((zeta.norm() - 1.0).abs() < 1e-10);
                let vec = eig.vectors.column(col).into_owned();
                let resid = (v.matrix() * &vec - &vec * zeta).norm();
                assert!(resid < 1e-9, "residual {resid:e}");
            }
            // Independent route: Cayley-transform eigendecomposition.
            let (oracle, _) = linalg::eig_unitary(v.matrix());
            let d11 = (eig.zeta1 - oracle[0]).norm() + (eig.zeta2 - oracle[1]).norm();
            let d12 = (eig.zeta1 - oracle[1]).norm() + (eig.zeta2 - oracle[0]).norm();
            assert!(d11.min(d12) < 1e-9);
        }
    }

    #[test]
    fn eigenvector_ratio_cross_check() {
        // The component ratio of an eigenvector satisfies
        // c = (ζ e^{−iχ} − e^{iΔ1} cos δ) / (e^{iΔ2} sin δ).
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..40 {
            let p = Su2Params {
                chi: rng.random_range(-1.5..1.5),
                delta1: rng.random_range(-3.0..3.0),
                delta2: rng.random_range(-3.0..3.0),
                delta: rng.random_range(0.2..1.4),
            };
            let v = compose_su2(&p);
            let eig = eigensystem_2ls(&v).unwrap();
            for (zeta, col) in [(eig.zeta1, 0), (eig.zeta2, 1)] {
                let ratio = eig.vectors[(1, col)] / eig.vectors[(0, col)];
                let expected = (zeta * C64::from_polar(1.0, -p.chi)
                    - C64::from_polar(p.delta.cos(), p.delta1))
                    / C64::from_polar(p.delta.sin(), p.delta2);
                assert!((ratio - expected).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn sufficient_check_accepts_pi_rotation() {
        let check = sufficient_pi_check(&eigensystem_2ls(&antidiag_pi(0.0, 0.0)).unwrap(), 1e-9)
            .unwrap();
        assert!(check.is_pi_rotation);
        assert!((check.alpha.unwrap() - (-FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn sufficient_check_rejects_delta1_family() {
        // Δ1 = π/2 with δ = π/4 satisfies the spacing criterion yet moves
        // only half the population; the eigenvector shape says no.
        let v = compose_su2(&Su2Params {
            chi: 0.0,
            delta1: FRAC_PI_2,
            delta2: 0.0,
            delta: std::f64::consts::FRAC_PI_4,
        });
        let eig = eigensystem_2ls(&v).unwrap();
        assert!((eig.zeta1 + eig.zeta2).norm() < 1e-12, "spacing still a ±pair");
        assert!((v.matrix()[(1, 0)].norm_sqr() - 0.5).abs() < 1e-12);
        let check = sufficient_pi_check(&eig, 1e-6).unwrap();
        assert!(!check.is_pi_rotation);
    }

    #[test]
    fn sufficient_check_degenerate_error() {
        let err = sufficient_pi_check(&eigensystem_2ls(&identity_prop()).unwrap(), 1e-9)
            .unwrap_err();
        assert!(matches!(err, Su2Error::DegenerateEigenvectors));
    }

    #[test]
    fn pspi_delta2_examples() {
        assert!((pspi_delta2(0.0, 0.0) - PI).abs() < 1e-15);
        assert!((pspi_delta2(-5.0, 0.0) - (PI - 5.0)).abs() < 1e-12);
        assert!(pspi_delta2(0.0, PI).abs() < 1e-15);
    }

    #[test]
    fn pspc_target_examples() {
        let p = pspc_targets(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 0.0).unwrap();
        assert!(p.delta.abs() < 1e-15 && p.delta1.abs() < 1e-15 && p.delta2.abs() < 1e-15);

        let p = pspc_targets(C64::new(0.0, 0.0), C64::new(-1.0, 0.0), 0.0).unwrap();
        assert!((p.delta - FRAC_PI_2).abs() < 1e-15);
        assert!(p.delta2.abs() < 1e-15);

        let a = C64::from_polar(0.7f64.cos(), 0.5);
        let b = -C64::from_polar(0.7f64.sin(), -0.2);
        let p = pspc_targets(a, b, 0.0).unwrap();
        assert!((p.delta - 0.7).abs() < 1e-12);
        assert!((p.delta1 - 0.5).abs() < 1e-12);
        assert!((p.delta2 - 0.2).abs() < 1e-12);

        let err = pspc_targets(C64::new(1.0, 0.0), C64::new(0.5, 0.0), 0.0).unwrap_err();
        assert!(matches!(err, Su2Error::NormViolation { .. }));
    }

    #[test]
    fn eigenvalue_product_equals_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let v = random_unitary_2(&mut rng);
            let eig = eigensystem_2ls(&v).unwrap();
            let p = decompose_su2(&v).unwrap();
            let det = C64::from_polar(1.0, 2.0 * p.chi);
            assert!((eig.zeta1 * eig.zeta2 - det).norm() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        // Matrix-level round trip on unitary input.
        #[test]
        fn compose_decompose_round_trip(
            chi in -1.5f64..1.5,
            d1 in -3.1f64..3.1,
            d2 in -3.1f64..3.1,
            delta in 0.0f64..FRAC_PI_2,
        ) {
            let p = Su2Params { chi, delta1: d1, delta2: d2, delta };
            let v = compose_su2(&p);
            let q = decompose_su2(&v).unwrap();
            let v2 = compose_su2(&q);
            prop_assert!(max_abs_diff(v.matrix(), v2.matrix()) < 1e-12);
        }

        // Parameter-level round trip on the canonical branch domain.
        #[test]
        fn decompose_is_canonical(
            chi in -1.5f64..=1.5,
            d1 in -3.1f64..3.1,
            d2 in -3.1f64..3.1,
            delta in 0.05f64..1.5,
        ) {
            let p = Su2Params { chi, delta1: d1, delta2: d2, delta };
            let q = decompose_su2(&compose_su2(&p)).unwrap();
            prop_assert!((q.chi - chi).abs() < 1e-12);
            prop_assert!((q.delta - delta).abs() < 1e-12);
            prop_assert!(linalg::circle_distance(q.delta1, d1) < 1e-11);
            prop_assert!(linalg::circle_distance(q.delta2, d2) < 1e-11);
        }
    }
}
