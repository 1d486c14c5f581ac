//! Small-matrix complex linear algebra shared by the physics modules.
//!
//! Matrices here are dense `nalgebra` types over `Complex64`; every routine
//! assumes dimensions small enough (N ≲ 10) that cubic-cost algorithms are
//! free. Unitary eigendecomposition goes through a Cayley transform so the
//! problem is always a Hermitian one, which keeps eigenvectors orthonormal to
//! machine precision even for (near-)degenerate spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Elementwise real scaling (nalgebra's complex matrices only take complex
/// scalars directly).
pub fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-norm of the elementwise difference.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// ‖U†U − I‖_max.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let mut g = u.adjoint() * u;
    for j in 0..n {
        g[(j, j)] -= C64::new(1.0, 0.0);
    }
    max_abs(&g)
}

/// Reduce an angle to the half-open interval (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Distance on the phase circle between `x` and `y` (both radians).
pub fn circle_distance(x: f64, y: f64) -> f64 {
    wrap_angle(x - y).abs()
}

/// exp(−i M) for Hermitian `M`, exactly unitary up to roundoff.
///
/// N = 2 uses the Pauli closed form; larger matrices go through a Hermitian
/// eigendecomposition.
pub fn herm_exp_neg_i(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    if n == 2 {
        return herm_exp_neg_i_2(m);
    }
    let eig = m.clone().symmetric_eigen();
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::from_polar(1.0, -l))
        .collect();
    let mut scaled = eig.eigenvectors.clone();
    for (j, ph) in phases.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0); // keep column view alive
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * eig.eigenvectors.adjoint()
}

fn herm_exp_neg_i_2(m: &CMatrix) -> CMatrix {
    // M = a·I + b·σ with a, b_z real and b_± carried by the off-diagonal.
    let a = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let bz = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let m01 = m[(0, 1)];
    let r = (bz * bz + m01.norm_sqr()).sqrt();
    let (c, sinc) = if r < 1e-300 {
        (1.0, 1.0)
    } else {
        (r.cos(), r.sin() / r)
    };
    let phase = C64::from_polar(1.0, -a);
    let i_sinc = C64::new(0.0, -sinc);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            phase * (C64::new(c, 0.0) + i_sinc * bz),
            phase * i_sinc * m01,
            phase * i_sinc * m01.conj(),
            phase * (C64::new(c, 0.0) - i_sinc * bz),
        ],
    )
}

/// Eigendecomposition of a unitary matrix.
///
/// Returns unit-modulus eigenvalues and an orthonormal eigenvector matrix
/// (columns), ordered by ascending Cayley coordinate. The matrix is first
/// rotated by a scalar phase that pushes its spectrum away from −1, then
/// K = i(I−W)(I+W)⁻¹ is diagonalized; K is Hermitian with eigenvalues
/// tan(θ/2), a strictly monotone function of the eigenphase, so distinct
/// eigenvalues of V never collide in K.
pub fn eig_unitary(v: &CMatrix) -> (Vec<C64>, CMatrix) {
    let n = v.nrows();
    assert_eq!(n, v.ncols(), "square matrix required");

    // Scalar rotation maximizing |det(I + e^{iφ}V)| over a fixed grid keeps
    // the Cayley transform well conditioned.
    let mut best_phi = 0.0;
    let mut best_det = -1.0;
    for k in 0..128 {
        let phi = TAU * (k as f64) / 128.0;
        let rot = C64::from_polar(1.0, phi);
        let mut m = v.map(|z| z * rot);
        for j in 0..n {
            m[(j, j)] += C64::new(1.0, 0.0);
        }
        let d = m.determinant().norm();
        if d > best_det {
            best_det = d;
            best_phi = phi;
        }
    }

    let rot = C64::from_polar(1.0, best_phi);
    let w = v.map(|z| z * rot);
    let mut i_plus_w = w.clone();
    let mut i_minus_w = -w;
    for j in 0..n {
        i_plus_w[(j, j)] += C64::new(1.0, 0.0);
        i_minus_w[(j, j)] += C64::new(1.0, 0.0);
    }
    let inv = i_plus_w
        .try_inverse()
        .expect("I + e^{iφ}V singular despite phase search");
    let mut k_mat = (i_minus_w * inv).map(|z| z * C64::new(0.0, 1.0));
    // Symmetrize to kill roundoff skew before the Hermitian solver.
    let k_adj = k_mat.adjoint();
    k_mat = (k_mat + k_adj).map(|z| z * 0.5);

    let eig = k_mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("non-finite eigenvalue")
    });

    let mut vectors = CMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        let q = eig.eigenvectors.column(src);
        let z: C64 = (q.adjoint() * v * q)[(0, 0)];
        values.push(z / z.norm());
    }
    (values, vectors)
}

/// ‖V·Q − Q·diag(ζ)‖_max for a candidate eigendecomposition.
pub fn spectral_residual(v: &CMatrix, zetas: &[C64], q: &CMatrix) -> f64 {
    let n = v.nrows();
    let mut rhs = q.clone();
    for j in 0..n {
        for i in 0..n {
            rhs[(i, j)] *= zetas[j];
        }
    }
    max_abs_diff(&(v * q), &rhs)
}

/// Multiply a vector by the phase that makes its first component of
/// appreciable modulus real positive.
pub fn gauge_first_nonzero(v: &CVector) -> CVector {
    let norm = v.norm();
    let tol = 1e-12 * norm.max(1.0);
    for x in v.iter() {
        if x.norm() > tol {
            let ph = x.conj() / x.norm();
            return v.map(|z| z * ph);
        }
    }
    v.clone()
}

/// Extend an orthonormal set to a full orthonormal basis of C^n.
///
/// Completion vectors come from Gram–Schmidt over the standard basis in
/// index order, skipping seeds that are nearly dependent, and each completed
/// vector is gauged to a real-positive leading component.
pub fn complete_orthonormal_basis(given: &[CVector], n: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = given.to_vec();
    let mut seed = 0;
    while basis.len() < n {
        assert!(seed < n, "ran out of seed vectors completing a basis");
        let mut cand = CVector::zeros(n);
        cand[seed] = C64::new(1.0, 0.0);
        seed += 1;
        for b in &basis {
            let overlap: C64 = b.dotc(&cand);
            cand -= b * overlap;
        }
        let norm = cand.norm();
        if norm < 1e-6 {
            continue;
        }
        // Second orthogonalization pass tightens the result near dependence.
        cand /= C64::new(norm, 0.0);
        for b in &basis {
            let overlap: C64 = b.dotc(&cand);
            cand -= b * overlap;
        }
        cand /= C64::new(cand.norm(), 0.0);
        basis.push(gauge_first_nonzero(&cand));
    }
    basis
}
