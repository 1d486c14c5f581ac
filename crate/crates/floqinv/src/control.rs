//! Pulse-parameter search (placeholder while the module is built).

/// A tunable scalar of a pulse template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseParam {
    Amplitude,
    Carrier,
    CarrierPhase,
    Duration,
    Sample(usize),
}
