//! Convex QCQP with a linear objective:
//!
//! ```text
//! minimize    cᵀx
//! subject to  ½ xᵀ P_i x + q_iᵀ x + r_i ≤ 0,   P_i ⪰ 0
//! ```
//!
//! Primal-dual interior point on `f_i(x) + s_i = 0`, `s, λ ≥ 0`, started from
//! an arbitrary (possibly infeasible) `x`. Each Newton system is reduced to
//! `(Σ λ_i P_i + Jᵀ S⁻¹ Λ J) Δx = rhs` and solved by Cholesky; steps use the
//! Mehrotra predictor-corrector with a common primal/dual step length.
//! Near the floating-point floor the residuals stop improving and further
//! steps can wreck the multipliers, so the iterate with the smallest scaled KKT
//! merit is kept and returned.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{max_step_vec, IterateRecord, KktReport};
use crate::{Error, Result};

/// Iterations without a new best merit before giving up.
const STALL_ITERS: usize = 15;

/// `½ xᵀ P x + qᵀ x + r ≤ 0`; `p = None` for an affine constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConstraint {
    pub p: Option<DMatrix<f64>>,
    pub q: DVector<f64>,
    pub r: f64,
}

impl QuadConstraint {
    pub fn affine(q: DVector<f64>, r: f64) -> Self {
        Self { p: None, q, r }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let lin = self.q.dot(x) + self.r;
        match &self.p {
            Some(p) => 0.5 * x.dot(&(p * x)) + lin,
            None => lin,
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.p {
            Some(p) => p * x + &self.q,
            None => self.q.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qcqp {
    pub c: DVector<f64>,
    pub constraints: Vec<QuadConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcqpSettings {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for QcqpSettings {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub multipliers: Vec<f64>,
    pub kkt: KktReport,
    pub converged: bool,
    pub iterations: usize,
    pub log: Vec<IterateRecord>,
}

pub fn solve_qcqp(problem: &Qcqp, x0: &DVector<f64>, settings: &QcqpSettings) -> Result<QcqpSolution> {
    let n = problem.c.len();
    let m = problem.constraints.len();
    if x0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: x0.len() });
    }
    if let Some(bad) = problem
        .constraints
        .iter()
        .find(|k| k.q.len() != n || k.p.as_ref().is_some_and(|p| p.nrows() != n || p.ncols() != n))
    {
        return Err(Error::LengthMismatch { expected: n, got: bad.q.len() });
    }
    if m == 0 {
        return if problem.c.amax() == 0.0 {
            Ok(QcqpSolution {
                x: x0.clone(),
                objective: 0.0,
                multipliers: Vec::new(),
                kkt: KktReport::default(),
                converged: true,
                iterations: 0,
                log: Vec::new(),
            })
        } else {
            Err(Error::Solver("unconstrained linear objective is unbounded".into()))
        };
    }

    let mut x = x0.clone();
    let f0: Vec<f64> = problem.constraints.iter().map(|k| k.value(&x)).collect();
    let mut s = DVector::from_fn(m, |i, _| (-f0[i]).max(1.0));
    let mut lam = DVector::from_element(m, 1.0);
    let c_scale = 1.0 + problem.c.amax();
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut best = (f64::INFINITY, x.clone(), lam.clone());
    let mut since_best = 0;

    for iter in 0..=settings.max_iters {
        let f = DVector::from_iterator(m, problem.constraints.iter().map(|k| k.value(&x)));
        let jac = DMatrix::from_fn(m, n, |_, _| 0.0);
        let mut jac = jac;
        for (i, k) in problem.constraints.iter().enumerate() {
            jac.set_row(i, &k.gradient(&x).transpose());
        }
        let rd = &problem.c + jac.transpose() * &lam;
        let rp = &f + &s;
        let mu = s.dot(&lam) / m as f64;
        let objective = problem.c.dot(&x);
        log.push(IterateRecord { iter, objective, primal_res: rp.amax(), dual_res: rd.amax(), gap: s.dot(&lam) });
        iterations = iter;
        // Feasibility is absolute: constraint values carry no natural scale.
        let merit = (rd.amax() / c_scale).max(rp.amax()).max(mu / (1.0 + objective.abs()));
        if merit < best.0 {
            best = (merit, x.clone(), lam.clone());
            since_best = 0;
        } else {
            since_best += 1;
        }
        if merit <= settings.tol {
            converged = true;
            break;
        }
        if iter == settings.max_iters || since_best >= STALL_ITERS {
            break;
        }

        let mut kmat = DMatrix::zeros(n, n);
        for (i, k) in problem.constraints.iter().enumerate() {
            if let Some(p) = &k.p {
                kmat += p * lam[i];
            }
        }
        let d = lam.component_div(&s);
        let mut dj = jac.clone();
        for (mut row, &di) in dj.row_iter_mut().zip(d.iter()) {
            row *= di;
        }
        kmat += jac.transpose() * dj;
        let reg = 1e-13 * kmat.diagonal().amax().max(1e-300);
        for i in 0..n {
            kmat[(i, i)] += reg;
        }
        let Some(chol) = Cholesky::new(kmat) else { break };

        // rc is the complementarity residual λ∘s − target.
        let direction = |rc: &DVector<f64>| {
            let inner = lam.component_mul(&rp) - rc;
            let rhs = -&rd - jac.transpose() * inner.component_div(&s);
            let dx = chol.solve(&rhs);
            let jdx = &jac * &dx;
            let dlam = d.component_mul(&(&jdx + &rp)) - rc.component_div(&s);
            let ds = -&rp - jdx;
            (dx, ds, dlam)
        };
        let step = |ds: &DVector<f64>, dl: &DVector<f64>, tau: f64| {
            max_step_vec(s.as_slice(), ds.as_slice(), tau).min(max_step_vec(lam.as_slice(), dl.as_slice(), tau))
        };

        let rc_aff = lam.component_mul(&s);
        let (_, ds_a, dl_a) = direction(&rc_aff);
        let a_aff = step(&ds_a, &dl_a, 1.0);
        let mu_aff = (&s + &ds_a * a_aff).dot(&(&lam + &dl_a * a_aff)) / m as f64;
        let q = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = q * q * q;
        let rc = DVector::from_fn(m, |i, _| lam[i] * s[i] + ds_a[i] * dl_a[i] - sigma * mu);
        let (dx, ds, dl) = direction(&rc);
        let alpha = step(&ds, &dl, 0.95);
        if alpha == 0.0 {
            break;
        }
        x += dx * alpha;
        s += ds * alpha;
        lam += dl * alpha;
    }

    let (_, x, lam) = best;
    let f: Vec<f64> = problem.constraints.iter().map(|k| k.value(&x)).collect();
    let mut rd = problem.c.clone();
    for (k, l) in problem.constraints.iter().zip(lam.iter()) {
        rd += k.gradient(&x) * *l;
    }
    let kkt = KktReport {
        primal_residual: f.iter().fold(0.0f64, |a, &v| a.max(v)),
        dual_residual: rd.amax(),
        complementarity: f.iter().zip(lam.iter()).map(|(fi, l)| (fi * l).abs()).sum(),
    };
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Solver("QCQP iterate diverged".into()));
    }
    Ok(QcqpSolution {
        objective: problem.c.dot(&x),
        x,
        multipliers: lam.iter().copied().collect(),
        kkt,
        converged,
        iterations,
        log,
    })
}
