//! Small dense interior-point solvers for the two convex subproblems.
//!
//! * [`sdp`]: Hermitian matrices with a fixed diagonal, a linear objective and
//!   "quadratic form ≥ t" cuts; primal-dual HKM direction with Mehrotra
//!   predictor-corrector.
//! * [`qcqp`]: linear objective under convex quadratic inequalities; primal-dual
//!   slack formulation with Mehrotra steps.
//!
//! Both are sized for tens of variables and a few hundred constraints. They
//! are dense and single-threaded.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub mod qcqp;
pub mod sdp;

/// One row of an interior-point iterate log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRecord {
    pub iter: usize,
    pub objective: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
}

/// Optimality residuals at a returned point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    /// Worst violation of the problem's own constraints.
    pub primal_residual: f64,
    /// Worst violation of the stationarity conditions.
    pub dual_residual: f64,
    /// Complementarity `⟨multipliers, slacks⟩`, which equals the duality gap.
    pub complementarity: f64,
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending. Equal eigenvalues
/// keep the eigensolver's order, so the leading pair is deterministic.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Largest `t ≤ 1` keeping `v + t·dv` componentwise nonnegative, scaled by `tau`
/// when the boundary binds.
pub(crate) fn max_step_vec(v: &[f64], dv: &[f64], tau: f64) -> f64 {
    let mut t = f64::INFINITY;
    for (x, d) in v.iter().zip(dv) {
        if *d < 0.0 {
            t = t.min(-x / d);
        }
    }
    if t.is_finite() {
        (tau * t).min(1.0)
    } else {
        1.0
    }
}
