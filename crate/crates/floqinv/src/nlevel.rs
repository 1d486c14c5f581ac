//! N-level transfer classification and the effective two-level reduction.
//!
//! Transfers are graded in four classes: PI/PSPI for orthogonal initial and
//! final vectors (populations only / full wavefunction including phase), and
//! PC/PSPC for the non-orthogonal control scenario. A rotation built from
//! the pair maps it onto the first two basis directions; the end-of-pulse
//! propagator is effectively two-level when the rotated matrix is block
//! diagonal with a 2×2 block, which [`block_residual`] quantifies.
//! [`condition_count`] tabulates how many real pulse parameters each goal
//! pins down as a function of N.

use crate::floquet::{self, CriterionCheck};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::model::StateVector;
use crate::propagation::PropagatorMatrix;
use thiserror::Error;

/// Overlap proximity below which two unit vectors are considered parallel
/// and no rotation frame is built.
pub const PARALLEL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NLevelError {
    #[error("initial and final vectors are parallel; no transfer plane exists")]
    ParallelVectors,
    #[error("condition counting needs N ≥ 2, got {n}")]
    DomainError { n: usize },
}

/// Classification of a transfer ψi → ψf under a propagator V.
#[derive(Debug, Clone)]
pub struct TransferReport {
    /// |(Vψi)_j|², sums to 1.
    pub populations_final: Vec<f64>,
    /// |⟨ψf, Vψi⟩|.
    pub fidelity_pspi: f64,
    /// max_j ||(Vψi)_j|² − |ψf_j|²|.
    pub pop_residual: f64,
    /// min_φ ‖Vψi − e^{iφ}ψf‖, attained at `global_phase`.
    pub phase_residual: f64,
    /// The optimizing global phase φ.
    pub global_phase: f64,
    /// |⟨ψi, ψf⟩| < tol.
    pub orthogonal: bool,
    pub pi: bool,
    pub pspi: bool,
    pub pc: bool,
    pub pspc: bool,
    /// Quasienergy-spacing test on the effective pair in the rotated frame
    /// (absent for parallel pairs or propagators without a time span).
    pub criterion: Option<CriterionCheck>,
    /// Off-block coupling of the rotated propagator (absent for parallel
    /// pairs).
    pub block_residual: Option<f64>,
}

/// Classify the transfer. `tol` grades every residual; when `phase_lock`
/// carries a declared target phase β, the phase-selective flags additionally
/// require the optimizing global phase to equal β on the circle.
pub fn classify_transfer(
    v: &PropagatorMatrix,
    psi_i: &StateVector,
    psi_f: &StateVector,
    tol: f64,
    phase_lock: Option<f64>,
) -> TransferReport {
    let psi_t = v.apply(psi_i);
    let populations_final = psi_t.populations();
    let target_pops = psi_f.populations();
    let pop_residual = populations_final
        .iter()
        .zip(&target_pops)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));

    let overlap_ft = psi_f.overlap(&psi_t);
    let fidelity_pspi = overlap_ft.norm();
    let global_phase = overlap_ft.arg();
    let shifted = psi_t.amplitudes() - psi_f.amplitudes() * C64::from_polar(1.0, global_phase);
    let phase_residual = shifted.norm();

    let pair_overlap = psi_i.overlap(psi_f).norm();
    let orthogonal = pair_overlap < tol;
    let phase_ok = phase_residual < tol
        && phase_lock.is_none_or(|beta| linalg::circle_distance(global_phase, beta) < tol);

    let (mut criterion, mut block) = (None, None);
    if 1.0 - pair_overlap >= PARALLEL_TOL {
        let r = build_rotation(psi_i, psi_f).expect("non-parallel pair");
        block = Some(block_residual(v, &r));
        if v.span() > 0.0 {
            let rotated =
                PropagatorMatrix::from_matrix(&r * v.matrix() * r.adjoint(), v.t0(), v.t1());
            let spec = floquet::floquet_spectrum(&rotated, v.span());
            criterion = Some(floquet::inversion_criterion(&spec, 0, 1, tol));
        }
    }

    TransferReport {
        populations_final,
        fidelity_pspi,
        pop_residual,
        phase_residual,
        global_phase,
        orthogonal,
        pi: orthogonal && pop_residual < tol,
        pspi: orthogonal && phase_ok,
        pc: !orthogonal && pop_residual < tol,
        pspc: !orthogonal && phase_ok,
        criterion,
        block_residual: block,
    }
}

/// Unitary R mapping ψi to e₁ and ψf into span{e₁, e₂} (exactly e₂ for an
/// orthogonal pair). Rows beyond the transfer plane come from Gram–Schmidt
/// over the standard basis, each gauged to a real-positive leading
/// component.
pub fn build_rotation(psi_i: &StateVector, psi_f: &StateVector) -> Result<CMatrix, NLevelError> {
    let n = psi_i.dim();
    assert_eq!(n, psi_f.dim(), "state dimensions must agree");
    let overlap = psi_i.overlap(psi_f);
    if 1.0 - overlap.norm() < PARALLEL_TOL {
        return Err(NLevelError::ParallelVectors);
    }
    let v1 = psi_i.amplitudes().clone();
    let mut w = psi_f.amplitudes().clone();
    w -= &v1 * overlap;
    let v2 = &w / C64::new(w.norm(), 0.0);
    let basis = linalg::complete_orthonormal_basis(&[v1, v2], n);

    let mut r = CMatrix::zeros(n, n);
    for (row, b) in basis.iter().enumerate() {
        for col in 0..n {
            r[(row, col)] = b[col].conj();
        }
    }
    Ok(r)
}

/// Max-norm of the entries of R·V·R† coupling the {1,2} block to {3..N}.
/// Zero means the rotated propagator is block diagonal with a 2×2 transfer
/// block; by unitarity a vanishing column residual forces the matching row
/// residual to vanish too.
pub fn block_residual(v: &PropagatorMatrix, r: &CMatrix) -> f64 {
    let n = v.dim();
    let w = r * v.matrix() * r.adjoint();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let off_block = (j < 2) != (k < 2);
            if off_block {
                worst = worst.max(w[(j, k)].norm());
            }
        }
    }
    worst
}

/// Column/row sparsity of a transfer i → f: the largest |V_{l,i}| with
/// l ≠ f, and the largest |V_{f,k}| with k ≠ i. For a unitary V the second
/// is bounded by the first (orthonormality of columns), which is the
/// structural corollary behind the effective two-level block.
pub fn column_sparsity_residuals(v: &PropagatorMatrix, i: usize, f: usize) -> (f64, f64) {
    let m = v.matrix();
    let n = v.dim();
    let mut col = 0.0f64;
    let mut row = 0.0f64;
    for l in 0..n {
        if l != f {
            col = col.max(m[(l, i)].norm());
        }
        if l != i {
            row = row.max(m[(f, l)].norm());
        }
    }
    (col, row)
}

/// Control goals whose real-parameter condition counts are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountScenario {
    /// Full final wavefunction, any pair.
    PspcControl,
    /// Final populations only, any pair.
    PcControl,
    /// Effective 2LS + phase-selective inversion, orthogonal pair.
    PspiEff2lsOrtho,
    /// Effective 2LS + population inversion, orthogonal pair.
    PiEff2lsOrtho,
    /// Effective 2LS + phase-selective control, non-orthogonal pair.
    PspcEff2lsNonortho,
    /// Effective 2LS + population control, non-orthogonal pair.
    PcEff2lsNonortho,
}

impl CountScenario {
    pub const ALL: [CountScenario; 6] = [
        CountScenario::PspcControl,
        CountScenario::PcControl,
        CountScenario::PspiEff2lsOrtho,
        CountScenario::PiEff2lsOrtho,
        CountScenario::PspcEff2lsNonortho,
        CountScenario::PcEff2lsNonortho,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            CountScenario::PspcControl => "PSPC",
            CountScenario::PcControl => "PC",
            CountScenario::PspiEff2lsOrtho => "PSPI-eff2ls-ortho",
            CountScenario::PiEff2lsOrtho => "PI-eff2ls-ortho",
            CountScenario::PspcEff2lsNonortho => "PSPC-eff2ls-nonortho",
            CountScenario::PcEff2lsNonortho => "PC-eff2ls-nonortho",
        }
    }
}

/// Literal condition-count table for N = 2..=10, columns in
/// [`CountScenario::ALL`] order. Counting formulas are asserted against this
/// data in the test suite so transcription errors fail loudly.
pub const CONDITION_TABLE: [[u64; 6]; 9] = [
    [4, 2, 3, 2, 4, 2],
    [6, 3, 9, 4, 9, 9],
    [8, 4, 13, 6, 16, 16],
    [10, 5, 17, 8, 25, 25],
    [12, 6, 21, 10, 36, 34],
    [14, 7, 25, 12, 44, 42],
    [16, 8, 29, 14, 52, 50],
    [18, 9, 33, 16, 60, 58],
    [20, 10, 37, 18, 68, 66],
];

/// A condition count together with the raw formula value. The two disagree
/// only at (N = 2, PSPI effective 2LS): the table reports 3 where the capped
/// formula min(4N−3, N²) gives 4 — the tabulated value wins and the
/// mismatch is flagged rather than resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionCount {
    /// Table-consistent number of real conditions.
    pub count: u64,
    /// Raw formula value.
    pub formula_count: u64,
    /// True where the table and the formula disagree.
    pub table_formula_mismatch: bool,
}

fn count_formula(n: u64, scenario: CountScenario) -> u64 {
    let n_sq = n * n;
    match scenario {
        CountScenario::PspcControl => 2 * n,
        CountScenario::PcControl => n,
        CountScenario::PspiEff2lsOrtho => (4 * n - 3).min(n_sq),
        CountScenario::PiEff2lsOrtho => 2 * n - 2,
        CountScenario::PspcEff2lsNonortho => (8 * n - 12).min(n_sq),
        CountScenario::PcEff2lsNonortho => (8 * n - 14).min(n_sq),
    }
}

/// Number of real pulse-parameter conditions for the goal at N levels.
pub fn condition_count(n: usize, scenario: CountScenario) -> Result<ConditionCount, NLevelError> {
    if n < 2 {
        return Err(NLevelError::DomainError { n });
    }
    let formula_count = count_formula(n as u64, scenario);
    let mismatch = n == 2 && scenario == CountScenario::PspiEff2lsOrtho;
    let count = if mismatch { 3 } else { formula_count };
    Ok(ConditionCount {
        count,
        formula_count,
        table_formula_mismatch: mismatch,
    })
}
