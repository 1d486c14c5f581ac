//! Unitary integration of the time-dependent Schrödinger equation.
//!
//! The stepper is a fourth-order commutator-free Magnus scheme: each step is
//! a product of two exponentials of Hermitian combinations of H sampled at
//! the Gauss–Legendre nodes, so every step is exactly unitary and the
//! propagator stays on U(N) to machine precision. Step size is controlled by
//! comparing a full step against two half steps, with the local error budget
//! proportional to the step's share of the whole interval; the `tol` of
//! [`IntegratorConfig`] is therefore a bound on the accumulated error of the
//! full propagation, not a per-step quantity.
//!
//! Integration restarts at envelope breakpoints (pulse start/end, period
//! boundaries of the periodic continuation) so steps never straddle a field
//! discontinuity.

use crate::linalg::{self, CMatrix, CVector, C64};
use crate::model::{NLevelSystem, PulseShape, StateVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("step limit exceeded at t = {t_reached} after {steps} steps")]
    StepLimitExceeded { t_reached: f64, steps: usize },
    #[error("invalid integrator config: {0}")]
    InvalidConfig(String),
}

/// Integrator settings. `tol` is the relative accuracy target for the whole
/// requested interval; `step_init = 0` lets the stepper pick a starting size.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig {
    pub step_init: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step_init: 0.0,
            tol: 1e-10,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), PropagationError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(PropagationError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_steps == 0 {
            return Err(PropagationError::InvalidConfig("max_steps must be > 0".into()));
        }
        Ok(())
    }
}

/// Propagator U(t1, t0) over a time interval.
#[derive(Debug, Clone)]
pub struct PropagatorMatrix {
    entries: CMatrix,
    t0: f64,
    t1: f64,
}

impl PropagatorMatrix {
    pub fn identity(n: usize, t: f64) -> Self {
        Self {
            entries: CMatrix::identity(n, n),
            t0: t,
            t1: t,
        }
    }

    /// Wrap an explicitly constructed matrix (not validated here; analysis
    /// entry points check unitarity where their contracts require it).
    pub fn from_matrix(entries: CMatrix, t0: f64, t1: f64) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "propagator must be square");
        Self { entries, t0, t1 }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// Transported duration t1 − t0.
    pub fn span(&self) -> f64 {
        self.t1 - self.t0
    }

    /// ‖U†U − I‖_max.
    pub fn unitarity_error(&self) -> f64 {
        linalg::unitarity_error(&self.entries)
    }

    /// Apply to a state: ψ ↦ Uψ.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector::new_unchecked(&self.entries * psi.amplitudes())
    }
}

/// H_jk(t) = ε_j δ_jk − μ_jk E(t).
pub fn hamiltonian_at(system: &NLevelSystem, pulse: &PulseShape, t: f64) -> CMatrix {
    hamiltonian_from_field(system, pulse.eval(t))
}

fn hamiltonian_from_field(system: &NLevelSystem, field: f64) -> CMatrix {
    let n = system.n_levels();
    let mut h = system.dipole().map(|mu| mu * (-field));
    for j in 0..n {
        h[(j, j)] += C64::new(system.energies()[j], 0.0);
    }
    h
}

// Gauss–Legendre nodes (1/2 ∓ √3/6) of the CF4 scheme.
const GAUSS_C1: f64 = 0.5 - 0.288_675_134_594_812_9;
const GAUSS_C2: f64 = 0.5 + 0.288_675_134_594_812_9;

#[inline]
fn cf4_weights() -> (f64, f64) {
    let s = 3.0_f64.sqrt() / 6.0;
    (0.25 - s, 0.25 + s)
}

/// One CF4 step U(t+h, t) for the Hamiltonian closure `h_of_t`.
fn cf4_step<F: Fn(f64) -> CMatrix>(h_of_t: &F, t: f64, h: f64) -> CMatrix {
    let (a1, a2) = cf4_weights();
    let h1 = h_of_t(t + GAUSS_C1 * h);
    let h2 = h_of_t(t + GAUSS_C2 * h);
    let first =
        linalg::herm_exp_neg_i(&(linalg::scale(&h1, a2 * h) + linalg::scale(&h2, a1 * h)));
    let second =
        linalg::herm_exp_neg_i(&(linalg::scale(&h1, a1 * h) + linalg::scale(&h2, a2 * h)));
    second * first
}

/// Integrate over one smooth segment, accumulating into `u`.
fn integrate_segment<F, O>(
    h_of_t: &F,
    a: f64,
    b: f64,
    span_total: f64,
    cfg: &IntegratorConfig,
    u: &mut CMatrix,
    h_try: &mut f64,
    steps: &mut usize,
    observer: &mut O,
) -> Result<(), PropagationError>
where
    F: Fn(f64) -> CMatrix,
    O: FnMut(f64, &CMatrix),
{
    let dir = if b >= a { 1.0 } else { -1.0 };
    let seg_len = (b - a).abs();
    if seg_len == 0.0 {
        return Ok(());
    }
    let h_floor = 1e-14 * span_total;
    let mut t = a;
    loop {
        let remaining = (b - t).abs();
        if remaining <= h_floor {
            break;
        }
        let h_mag = h_try.min(remaining).max(h_floor);
        let h = dir * h_mag;

        let full = cf4_step(h_of_t, t, h);
        let half1 = cf4_step(h_of_t, t, 0.5 * h);
        let half2 = cf4_step(h_of_t, t + 0.5 * h, 0.5 * h);
        let composite = half2 * half1;
        let err = linalg::max_abs_diff(&full, &composite);
        // The proportional budget keeps the accumulated error at cfg.tol;
        // the floor stops it from dropping below fp roundoff on very long
        // intervals, where the comparison would never pass.
        let allow = (cfg.tol * (h_mag / span_total)).max(1e-15);

        *steps += 1;
        if *steps > cfg.max_steps {
            return Err(PropagationError::StepLimitExceeded {
                t_reached: t,
                steps: *steps,
            });
        }

        let ratio = if err > 0.0 { allow / err } else { 16.0 };
        let scale = (0.9 * ratio.powf(0.25)).clamp(0.2, 4.0);
        if err <= allow {
            *u = composite * &*u;
            t += h;
            observer(t, u);
            *h_try = (h_mag * scale).min(span_total);
        } else {
            *h_try = (h_mag * scale).max(h_floor);
            if *h_try <= h_floor {
                return Err(PropagationError::StepLimitExceeded {
                    t_reached: t,
                    steps: *steps,
                });
            }
        }
    }
    Ok(())
}

/// Integrate U(t1, t0) for an arbitrary Hamiltonian closure, restarting at
/// the given breakpoints. `span_hint`, when positive, sets the span against
/// which the error budget is measured (used when a caller composes several
/// sub-propagations and wants a shared budget).
fn integrate_matrix<F, O>(
    h_of_t: &F,
    dim: usize,
    t0: f64,
    t1: f64,
    breakpoints: &[f64],
    span_hint: f64,
    cfg: &IntegratorConfig,
    observer: &mut O,
) -> Result<CMatrix, PropagationError>
where
    F: Fn(f64) -> CMatrix,
    O: FnMut(f64, &CMatrix),
{
    cfg.validate()?;
    let mut u = CMatrix::identity(dim, dim);
    if t0 == t1 {
        return Ok(u);
    }
    let span_total = if span_hint > 0.0 {
        span_hint
    } else {
        (t1 - t0).abs()
    };

    // Segment boundaries: requested endpoints plus interior breakpoints,
    // ordered along the direction of integration.
    let forward = t1 > t0;
    let (lo, hi) = if forward { (t0, t1) } else { (t1, t0) };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > lo + 1e-14 * span_total && c < hi - 1e-14 * span_total)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * span_total);
    if !forward {
        cuts.reverse();
    }

    let mut h_try = if cfg.step_init > 0.0 {
        cfg.step_init
    } else {
        span_total / 64.0
    };
    let mut steps = 0usize;
    let mut t_cur = t0;
    for &c in cuts.iter().chain(std::iter::once(&t1)) {
        integrate_segment(
            h_of_t, t_cur, c, span_total, cfg, &mut u, &mut h_try, &mut steps, observer,
        )?;
        t_cur = c;
    }
    Ok(u)
}

fn pulse_breakpoints(pulse: &PulseShape) -> Vec<f64> {
    vec![0.0, pulse.duration()]
}

/// Propagator U(t1, t0) for the driven system. Backward transport
/// (t1 < t0) is supported and returns the inverse-path propagator.
pub fn propagator_over(
    system: &NLevelSystem,
    pulse: &PulseShape,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<PropagatorMatrix, PropagationError> {
    let h = |t: f64| hamiltonian_at(system, pulse, t);
    let u = integrate_matrix(
        &h,
        system.n_levels(),
        t0,
        t1,
        &pulse_breakpoints(pulse),
        0.0,
        cfg,
        &mut |_, _| {},
    )?;
    Ok(PropagatorMatrix {
        entries: u,
        t0,
        t1,
    })
}

/// Propagator for the auxiliary periodic continuation of the pulse,
/// E_p(t) = E(t mod T), with restarts at every period boundary.
pub fn propagator_periodic_over(
    system: &NLevelSystem,
    pulse: &PulseShape,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<PropagatorMatrix, PropagationError> {
    let period = pulse.duration();
    let h = |t: f64| hamiltonian_from_field(system, pulse.eval_periodic(t));
    let mut cuts = Vec::new();
    if period > 0.0 {
        let (lo, hi) = if t1 >= t0 { (t0, t1) } else { (t1, t0) };
        let mut k = (lo / period).floor();
        while k * period <= hi {
            cuts.push(k * period);
            k += 1.0;
        }
    }
    let u = integrate_matrix(
        &h,
        system.n_levels(),
        t0,
        t1,
        &cuts,
        0.0,
        cfg,
        &mut |_, _| {},
    )?;
    Ok(PropagatorMatrix {
        entries: u,
        t0,
        t1,
    })
}

/// Propagator computed against a caller-supplied error span, so several
/// sub-interval propagations can share one accuracy budget.
pub(crate) fn propagator_with_span(
    system: &NLevelSystem,
    field: impl Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    span_hint: f64,
    cfg: &IntegratorConfig,
) -> Result<PropagatorMatrix, PropagationError> {
    let h = move |t: f64| hamiltonian_from_field(system, field(t));
    let u = integrate_matrix(
        &h,
        system.n_levels(),
        t0,
        t1,
        &[],
        span_hint,
        cfg,
        &mut |_, _| {},
    )?;
    Ok(PropagatorMatrix {
        entries: u,
        t0,
        t1,
    })
}

/// ψ(t1) from ψ(t0); the norm is preserved by the unitary stepper.
pub fn propagate_state(
    system: &NLevelSystem,
    pulse: &PulseShape,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<StateVector, PropagationError> {
    let u = propagator_over(system, pulse, t0, t1, cfg)?;
    Ok(u.apply(psi0))
}

/// One trajectory row per accepted step.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub psi: CVector,
}

/// Propagate and record the state after every accepted step (the initial
/// state is the first row).
pub fn propagate_with_trajectory(
    system: &NLevelSystem,
    pulse: &PulseShape,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<(StateVector, Vec<TrajectorySample>), PropagationError> {
    let h = |t: f64| hamiltonian_at(system, pulse, t);
    let mut samples = vec![TrajectorySample {
        t: t0,
        psi: psi0.amplitudes().clone(),
    }];
    let psi0_vec = psi0.amplitudes().clone();
    let u = integrate_matrix(
        &h,
        system.n_levels(),
        t0,
        t1,
        &pulse_breakpoints(pulse),
        0.0,
        cfg,
        &mut |t, u: &CMatrix| {
            samples.push(TrajectorySample {
                t,
                psi: u * &psi0_vec,
            });
        },
    )?;
    Ok((StateVector::new_unchecked(&u * &psi0_vec), samples))
}

/// Wronskian phase χ = −(1/2)∫₀ᵀ tr H(t) dt.
///
/// tr H separates into the constant Σε and −(Σμ_jj)·∫E, so only the scalar
/// field needs quadrature (adaptive composite Simpson with doubling).
pub fn global_phase_chi(system: &NLevelSystem, pulse: &PulseShape, _cfg: &IntegratorConfig) -> f64 {
    let t_total = pulse.duration();
    let field_integral = integrate_field(pulse, 0.0, t_total);
    -0.5 * (system.energy_trace() * t_total - system.dipole_trace() * field_integral)
}

/// ∫_a^b E(t) dt by composite Simpson, doubling the grid until two
/// refinements agree to 1e-13 (relative).
pub fn integrate_field(pulse: &PulseShape, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let simpson = |n: usize| -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = pulse.eval(a) + pulse.eval(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pulse.eval(a + i as f64 * h);
        }
        acc * h / 3.0
    };
    let mut n = 256;
    let mut prev = simpson(n);
    loop {
        n *= 2;
        let cur = simpson(n);
        if (cur - prev).abs() <= 1e-13 * cur.abs().max(1.0) || n >= 1 << 22 {
            return cur;
        }
        prev = cur;
    }
}
