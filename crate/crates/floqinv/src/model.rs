//! Domain types: N-level systems, driving pulses, and state vectors.
//!
//! Units follow ħ = 1 throughout: energies and carrier frequencies are
//! angular frequencies, time is inverse angular frequency, and the field
//! amplitude carries whatever units make μ·E an angular frequency. All types
//! are immutable once validated and can be shared freely across threads.

use crate::linalg::{CMatrix, CVector, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Hermiticity slack accepted when validating a dipole matrix.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Norm slack accepted when constructing a state vector.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dipole matrix is not Hermitian (max deviation {max_dev:.3e})")]
    HermiticityViolation { max_dev: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },
    #[error("state vector norm² = {norm_sq} is not 1 within {NORM_TOL:e}")]
    NormViolation { norm_sq: f64 },
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
}

/// An N-level system: bare energies ε_j and the dipole matrix μ_jk.
///
/// The instantaneous Hamiltonian is H_jk(t) = ε_j δ_jk − μ_jk E(t); diagonal
/// dipole entries are permanent moments. Construction validates Hermiticity
/// of μ and finiteness of every entry.
#[derive(Debug, Clone)]
pub struct NLevelSystem {
    energies: Vec<f64>,
    dipole: CMatrix,
}

impl NLevelSystem {
    pub fn new(energies: Vec<f64>, dipole: CMatrix) -> Result<Self, ModelError> {
        let n = energies.len();
        if n < 2 {
            return Err(ModelError::DimensionMismatch { expected: 2, got: n });
        }
        if dipole.nrows() != n || dipole.ncols() != n {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: dipole.nrows().max(dipole.ncols()),
            });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(ModelError::NonFinite { what: "energies" });
        }
        if dipole.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ModelError::NonFinite { what: "dipole" });
        }
        let mut max_dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                max_dev = max_dev.max((dipole[(i, j)] - dipole[(j, i)].conj()).norm());
            }
        }
        if max_dev > HERMITICITY_TOL {
            return Err(ModelError::HermiticityViolation { max_dev });
        }
        Ok(Self { energies, dipole })
    }

    /// Convenience constructor for real dipole matrices given row-major.
    pub fn from_real(energies: Vec<f64>, dipole_rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = energies.len();
        if dipole_rows.len() != n || dipole_rows.iter().any(|r| r.len() != n) {
            return Err(ModelError::DimensionMismatch {
                expected: n,
                got: dipole_rows.len(),
            });
        }
        let dipole = CMatrix::from_fn(n, n, |i, j| C64::new(dipole_rows[i][j], 0.0));
        Self::new(energies, dipole)
    }

    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dipole(&self) -> &CMatrix {
        &self.dipole
    }

    /// Σ_j ε_j, the field-independent part of tr H.
    pub fn energy_trace(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Σ_j μ_jj (real by Hermiticity), the field-coupled part of tr H.
    pub fn dipole_trace(&self) -> f64 {
        (0..self.n_levels()).map(|j| self.dipole[(j, j)].re).sum()
    }
}

/// Supported pulse families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    /// Constant envelope over the support.
    Rectangular,
    /// Gaussian envelope centred at T/2 with σ = T/8 (truncated at ±4σ).
    GaussianCosine,
    /// sin²(πt/T) envelope.
    Sin2Cosine,
    /// Field values on a uniform grid, linearly interpolated, zero endpoints.
    Sampled,
}

/// A finite-support driving field E(t), identically zero outside [0, T].
///
/// Analytic kinds evaluate envelope(t)·cos(ω_c t + φ); the sampled kind
/// stores the full field directly (its carrier metadata is not used in
/// evaluation). `duration == 0` is permitted as a degenerate, everywhere-zero
/// pulse.
#[derive(Debug, Clone)]
pub struct PulseShape {
    kind: PulseKind,
    amplitude: f64,
    carrier: f64,
    carrier_phase: f64,
    duration: f64,
    samples: Vec<f64>,
}

impl PulseShape {
    pub fn rectangular(
        amplitude: f64,
        carrier: f64,
        carrier_phase: f64,
        duration: f64,
    ) -> Result<Self, ModelError> {
        Self::analytic(PulseKind::Rectangular, amplitude, carrier, carrier_phase, duration)
    }

    pub fn gaussian(
        amplitude: f64,
        carrier: f64,
        carrier_phase: f64,
        duration: f64,
    ) -> Result<Self, ModelError> {
        Self::analytic(PulseKind::GaussianCosine, amplitude, carrier, carrier_phase, duration)
    }

    pub fn sin2(
        amplitude: f64,
        carrier: f64,
        carrier_phase: f64,
        duration: f64,
    ) -> Result<Self, ModelError> {
        Self::analytic(PulseKind::Sin2Cosine, amplitude, carrier, carrier_phase, duration)
    }

    fn analytic(
        kind: PulseKind,
        amplitude: f64,
        carrier: f64,
        carrier_phase: f64,
        duration: f64,
    ) -> Result<Self, ModelError> {
        if !(amplitude.is_finite() && carrier.is_finite() && carrier_phase.is_finite()) {
            return Err(ModelError::NonFinite { what: "pulse parameters" });
        }
        if !duration.is_finite() || duration < 0.0 {
            return Err(ModelError::InvalidPulse(format!(
                "duration must be finite and ≥ 0, got {duration}"
            )));
        }
        if carrier < 0.0 {
            return Err(ModelError::InvalidPulse(format!(
                "carrier must be ≥ 0, got {carrier}"
            )));
        }
        Ok(Self {
            kind,
            amplitude,
            carrier,
            carrier_phase,
            duration,
            samples: Vec::new(),
        })
    }

    /// Sampled field on a uniform grid over [0, T]. Endpoints are pinned to
    /// zero so the finite-support contract is exact.
    pub fn sampled(samples: Vec<f64>, duration: f64) -> Result<Self, ModelError> {
        if samples.len() < 2 {
            return Err(ModelError::InvalidPulse(format!(
                "sampled pulse needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(ModelError::NonFinite { what: "samples" });
        }
        if !duration.is_finite() || duration < 0.0 {
            return Err(ModelError::InvalidPulse(format!(
                "duration must be finite and ≥ 0, got {duration}"
            )));
        }
        let mut samples = samples;
        *samples.first_mut().unwrap() = 0.0;
        *samples.last_mut().unwrap() = 0.0;
        Ok(Self {
            kind: PulseKind::Sampled,
            amplitude: 1.0,
            carrier: 0.0,
            carrier_phase: 0.0,
            duration,
            samples,
        })
    }

    pub fn kind(&self) -> PulseKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn carrier_phase(&self) -> f64 {
        self.carrier_phase
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Return a copy with one scalar parameter replaced (used by the control
    /// module's parameter templates).
    pub fn with(&self, param: crate::control::PulseParam, value: f64) -> Result<Self, ModelError> {
        use crate::control::PulseParam;
        let mut p = self.clone();
        match param {
            PulseParam::Amplitude => p.amplitude = value,
            PulseParam::Carrier => {
                if value < 0.0 {
                    return Err(ModelError::InvalidPulse("carrier must be ≥ 0".into()));
                }
                p.carrier = value;
            }
            PulseParam::CarrierPhase => p.carrier_phase = value,
            PulseParam::Duration => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(ModelError::InvalidPulse("duration must be ≥ 0".into()));
                }
                p.duration = value;
            }
            PulseParam::Sample(idx) => {
                if p.kind != PulseKind::Sampled {
                    return Err(ModelError::InvalidPulse(
                        "sample parameters require a sampled pulse".into(),
                    ));
                }
                if idx == 0 || idx + 1 >= p.samples.len() {
                    return Err(ModelError::InvalidPulse(format!(
                        "sample index {idx} outside tunable interior"
                    )));
                }
                p.samples[idx] = value;
            }
        }
        Ok(p)
    }

    /// Envelope A(t) for analytic kinds; `None` for sampled pulses, whose
    /// stored values are the full field.
    pub fn envelope(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t > self.duration {
            return Some(0.0).filter(|_| self.kind != PulseKind::Sampled);
        }
        match self.kind {
            PulseKind::Rectangular => Some(self.amplitude),
            PulseKind::GaussianCosine => {
                let sigma = self.duration / 8.0;
                if sigma == 0.0 {
                    return Some(0.0);
                }
                let x = (t - 0.5 * self.duration) / sigma;
                Some(self.amplitude * (-0.5 * x * x).exp())
            }
            PulseKind::Sin2Cosine => {
                if self.duration == 0.0 {
                    return Some(0.0);
                }
                let s = (PI * t / self.duration).sin();
                Some(self.amplitude * s * s)
            }
            PulseKind::Sampled => None,
        }
    }

    /// Field value E(t); exactly 0 outside [0, T].
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration || self.duration == 0.0 {
            return 0.0;
        }
        match self.kind {
            PulseKind::Sampled => {
                let n = self.samples.len();
                if self.duration == 0.0 {
                    return 0.0;
                }
                let x = t / self.duration * ((n - 1) as f64);
                let i = (x.floor() as usize).min(n - 2);
                let frac = x - i as f64;
                self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
            }
            _ => {
                let env = self.envelope(t).unwrap_or(0.0);
                env * (self.carrier * t + self.carrier_phase).cos()
            }
        }
    }

    /// Field of the auxiliary periodic continuation, E(t mod T).
    pub fn eval_periodic(&self, t: f64) -> f64 {
        if self.duration == 0.0 {
            return 0.0;
        }
        self.eval(t.rem_euclid(self.duration))
    }
}

/// Normalized complex state vector.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Construct, enforcing ‖ψ‖² = 1 within [`NORM_TOL`].
    pub fn new(amplitudes: CVector) -> Result<Self, ModelError> {
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(ModelError::NonFinite { what: "amplitudes" });
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(ModelError::NormViolation { norm_sq });
        }
        Ok(Self { amplitudes })
    }

    /// Construct without the norm check (internal propagation results whose
    /// norm is guaranteed by unitarity).
    pub(crate) fn new_unchecked(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// Basis state e_j of an n-level system.
    pub fn basis(n: usize, j: usize) -> Self {
        assert!(j < n, "basis index out of range");
        let mut v = CVector::zeros(n);
        v[j] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn from_components(re: &[f64], im: &[f64]) -> Result<Self, ModelError> {
        if re.len() != im.len() {
            return Err(ModelError::DimensionMismatch {
                expected: re.len(),
                got: im.len(),
            });
        }
        let v = CVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]));
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Populations |ψ_j|².
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// ⟨self|other⟩ (conjugate-linear in self).
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(other.amplitudes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_level() -> NLevelSystem {
        NLevelSystem::from_real(vec![0.0, 1.0], &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn accepts_hermitian_dipole() {
        two_level();
    }

    #[test]
    fn rejects_non_hermitian_dipole() {
        let err = NLevelSystem::from_real(vec![0.0, 1.0], &[vec![0.0, 1.0], vec![0.5, 0.0]])
            .unwrap_err();
        assert!(matches!(err, ModelError::HermiticityViolation { .. }));
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let dipole = CMatrix::zeros(3, 3);
        let err = NLevelSystem::new(vec![0.0, 1.0], dipole).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { .. }));
    }

    #[test]
    fn rectangular_midpoint_value() {
        let p = PulseShape::rectangular(0.1, 0.0, 0.0, 10.0).unwrap();
        assert_eq!(p.eval(5.0), 0.1);
    }

    #[test]
    fn zero_outside_support() {
        let p = PulseShape::rectangular(0.1, 0.0, 0.0, 10.0).unwrap();
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(10.0 + 1e-12), 0.0);
    }

    #[test]
    fn sin2_closed_form_at_half_support() {
        let p = PulseShape::sin2(0.2, 1.0, 0.0, 100.0).unwrap();
        let expected = 0.2 * (50.0f64).cos();
        assert!((p.eval(50.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn sampled_pins_endpoints_and_interpolates() {
        let p = PulseShape::sampled(vec![5.0, 1.0, -1.0, 5.0], 3.0).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(3.0), 0.0);
        assert!((p.eval(1.5) - 0.0).abs() < 1e-15);
        assert!((p.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((p.eval(1.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_duration_pulse_is_zero() {
        let p = PulseShape::rectangular(0.3, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 0.0);
    }

    #[test]
    fn periodic_continuation_repeats() {
        let p = PulseShape::sin2(0.2, 1.3, 0.4, 7.0).unwrap();
        for &t in &[0.5, 3.2, 6.9] {
            assert!((p.eval_periodic(t + 7.0) - p.eval(t)).abs() < 1e-12);
            assert!((p.eval_periodic(t + 21.0) - p.eval(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn state_norm_enforced() {
        let bad = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.1, 0.0)]);
        assert!(matches!(
            StateVector::new(bad),
            Err(ModelError::NormViolation { .. })
        ));
        StateVector::basis(3, 1);
    }

    proptest! {
        // Finite support holds exactly for every kind, for any t outside [0, T].
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn field_support_is_exact(
            offset in prop::num::f64::POSITIVE.prop_filter("finite", |x| x.is_finite() && *x > 1e-12),
            before in proptest::bool::ANY,
            kind in 0usize..4,
        ) {
            let t_len = 10.0;
            let p = match kind {
                0 => PulseShape::rectangular(0.5, 1.0, 0.2, t_len).unwrap(),
                1 => PulseShape::gaussian(0.5, 1.0, 0.2, t_len).unwrap(),
                2 => PulseShape::sin2(0.5, 1.0, 0.2, t_len).unwrap(),
                _ => PulseShape::sampled(vec![0.0, 1.0, 0.5, 0.0], t_len).unwrap(),
            };
            let t = if before { -offset } else { t_len + offset };
            prop_assert_eq!(p.eval(t), 0.0);
        }
    }
}
