//! Monodromy-based Floquet analysis.
//!
//! The pulse of duration T is treated as one period of an auxiliary periodic
//! field, so the end-of-pulse propagator V = U(T, 0) is a monodromy matrix
//! and its eigenphases define quasienergies ω_j in the first zone [0, ω₀),
//! ω₀ = 2π/T. Conventions: V = Θ·diag(e^{−iω_j T})·Θ†, so free evolution
//! gives ω_j = ε_j mod ω₀. Population inversion between levels i and f
//! requires (ω_f − ω_i)·T to sit at an odd multiple of π — a necessary
//! condition only; pair it with [`crate::su2::sufficient_pi_check`].

use crate::linalg::{self, CMatrix, C64};
use crate::model::StateVector;
use crate::propagation::PropagatorMatrix;
use std::f64::consts::{PI, TAU};

/// Quasienergies in the first Floquet zone plus the eigenvector matrix,
/// columns assigned to bare levels by greedy maximum overlap.
#[derive(Debug, Clone)]
pub struct FloquetSpectrum {
    quasienergies: Vec<f64>,
    theta: CMatrix,
    period: f64,
}

impl FloquetSpectrum {
    /// ω_j, indexed by bare level.
    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    /// Eigenvector matrix Θ (columns follow the level assignment).
    pub fn theta(&self) -> &CMatrix {
        &self.theta
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Zone width ω₀ = 2π/T.
    pub fn zone_width(&self) -> f64 {
        TAU / self.period
    }

    /// Zone fractions q_j = ω_j/ω₀ ∈ [0, 1).
    pub fn fractions(&self) -> Vec<f64> {
        let w0 = self.zone_width();
        self.quasienergies.iter().map(|w| w / w0).collect()
    }

    /// Θ·diag(e^{−iω_j T})·Θ†.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.theta.nrows();
        let mut scaled = self.theta.clone();
        for j in 0..n {
            let ph = C64::from_polar(1.0, -self.quasienergies[j] * self.period);
            for i in 0..n {
                scaled[(i, j)] *= ph;
            }
        }
        scaled * self.theta.adjoint()
    }
}

/// Greedy maximum-|overlap| assignment of eigenvector columns to bare
/// levels; ties break toward the lowest level, then the lowest column.
fn assign_columns(q: &CMatrix) -> Vec<usize> {
    let n = q.nrows();
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; n];
    let mut perm = vec![0usize; n];
    for _ in 0..n {
        let mut best = (-1.0, 0usize, 0usize);
        for j in 0..n {
            if row_done[j] {
                continue;
            }
            for k in 0..n {
                if col_done[k] {
                    continue;
                }
                let mag = q[(j, k)].norm();
                if mag > best.0 {
                    best = (mag, j, k);
                }
            }
        }
        let (_, j, k) = best;
        row_done[j] = true;
        col_done[k] = true;
        perm[j] = k;
    }
    perm
}

/// Extract the Floquet spectrum of a monodromy matrix over period T.
pub fn floquet_spectrum(v: &PropagatorMatrix, period: f64) -> FloquetSpectrum {
    assert!(period > 0.0, "Floquet analysis requires a positive period");
    let n = v.dim();
    let (zetas, q) = linalg::eig_unitary(v.matrix());
    let w0 = TAU / period;
    let omegas: Vec<f64> = zetas
        .iter()
        .map(|z| ((-z.arg()) / period).rem_euclid(w0))
        .collect();

    let perm = assign_columns(&q);
    let mut theta = CMatrix::zeros(n, n);
    let mut quasienergies = vec![0.0; n];
    for level in 0..n {
        theta.set_column(level, &q.column(perm[level]));
        quasienergies[level] = omegas[perm[level]];
    }
    FloquetSpectrum {
        quasienergies,
        theta,
        period,
    }
}

/// Result of the quasienergy-spacing test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionCheck {
    pub satisfied: bool,
    /// Index of the nearest odd multiple (2n+1)π of the spacing angle.
    pub n: i64,
    /// Circle distance of (ω_f − ω_i)T to the nearest odd multiple of π.
    pub residual: f64,
}

/// Necessary inversion criterion: (ω_f − ω_i)·T at an odd multiple of π,
/// measured on the circle of phases mod 2π.
pub fn inversion_criterion(
    spec: &FloquetSpectrum,
    level_i: usize,
    level_f: usize,
    tol: f64,
) -> CriterionCheck {
    assert_ne!(level_i, level_f, "criterion needs two distinct levels");
    let x = (spec.quasienergies()[level_f] - spec.quasienergies()[level_i]) * spec.period();
    spacing_criterion(x, tol)
}

/// The same test on a raw spacing angle x = Δω·T.
pub fn spacing_criterion(x: f64, tol: f64) -> CriterionCheck {
    let r = linalg::wrap_angle(x - PI);
    let n = (((x - r) / PI - 1.0) / 2.0).round() as i64;
    CriterionCheck {
        satisfied: r.abs() < tol,
        n,
        residual: r.abs(),
    }
}

/// The monodromy orbit [ψ, Vψ, …, V^{m−1}ψ].
pub fn orbit(v: &PropagatorMatrix, psi0: &StateVector, m: usize) -> Vec<StateVector> {
    assert!(m >= 1, "orbit length must be at least 1");
    let mut out = Vec::with_capacity(m);
    let mut cur = psi0.clone();
    for _ in 0..m {
        let next = v.apply(&cur);
        out.push(cur);
        cur = next;
    }
    out
}

/// Classification of the zone fractions q_j as a common rational grid or
/// (numerically) irrational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RationalClass {
    /// All q_j ≈ n_j/m with the smallest common denominator m; the orbit
    /// closes after m pulses.
    Rational { m: u64, numerators: Vec<u64> },
    /// No common denominator ≤ m_max approximates every q_j within tol.
    Irrational,
}

/// Smallest common denominator m ≤ m_max with |q_j − n_j/m| < tol for all j.
pub fn rational_approx(spec: &FloquetSpectrum, m_max: u64, tol: f64) -> RationalClass {
    assert!(m_max >= 1);
    let fractions = spec.fractions();
    for m in 1..=m_max {
        let mut numerators = Vec::with_capacity(fractions.len());
        let mut ok = true;
        for &q in &fractions {
            let n = (q * m as f64).round();
            if (q - n / m as f64).abs() < tol {
                numerators.push(n as u64);
            } else {
                ok = false;
                break;
            }
        }
        if ok {
            return RationalClass::Rational { m, numerators };
        }
    }
    RationalClass::Irrational
}
