//! Fixed-diagonal Hermitian SDP:
//!
//! ```text
//! maximize    Re Tr(C W) + t
//! subject to  aₗᴴ W aₗ ≥ t        for every cut aₗ
//!             diag(W) = d,  W ⪰ 0
//! ```
//!
//! `W` is parametrized by its strictly upper triangle, `W(x) = diag(d) +
//! Σ x_k B_k` with `B = E_ij + E_ji` and `B = iE_ij − iE_ji`, which makes the
//! problem an LMI in `(x, t)`. The LMI is treated as the dual of a standard
//! primal-dual pair whose primal variables are a PSD multiplier `X` for `W ⪰ 0`
//! and nonnegative multipliers `z` for the cuts. Iterates keep `W(x) ≻ 0`
//! exactly and drive the multiplier residual and complementarity to zero.
//!
//! Because every `B_k` is a sum of two matrix units, the Schur complement
//! `Re Tr(B_k X B_l W⁻¹)` costs O(1) per entry.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::{hermitian_eigen, max_step_vec, IterateRecord, KktReport};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy)]
pub struct FixedDiagonalSdp<'a> {
    pub diagonal: &'a [f64],
    /// Hermitian cost matrix `C`.
    pub cost: &'a DMatrix<Complex64>,
    pub cuts: &'a [Vec<Complex64>],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub max_iters: usize,
    /// Relative tolerance on the multiplier residual and the duality gap.
    pub tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { max_iters: 100, tol: 1e-9 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub w: DMatrix<Complex64>,
    /// `min_l aₗᴴ W aₗ`.
    pub t: f64,
    /// `Re Tr(C W) + t`.
    pub objective: f64,
    /// Multiplier of `W ⪰ 0`.
    pub w_multiplier: DMatrix<Complex64>,
    /// Multipliers of the cuts; they sum to one at optimality.
    pub cut_multipliers: Vec<f64>,
    pub kkt: KktReport,
    pub converged: bool,
    pub iterations: usize,
    pub log: Vec<IterateRecord>,
}

/// The two matrix units `(row, col, coefficient)` making up basis element `k`.
#[inline]
fn terms(pairs: &[(usize, usize)], k: usize) -> [(usize, usize, Complex64); 2] {
    let (i, j) = pairs[k / 2];
    if k % 2 == 0 {
        [(i, j, ONE), (j, i, ONE)]
    } else {
        [(i, j, I), (j, i, -I)]
    }
}

struct Structure<'a> {
    p: &'a FixedDiagonalSdp<'a>,
    pairs: Vec<(usize, usize)>,
    nx: usize,
    g: DMatrix<f64>,
    h: DVector<f64>,
    b: DVector<f64>,
}

impl Structure<'_> {
    fn n(&self) -> usize {
        self.p.diagonal.len()
    }

    fn w_of(&self, y: &DVector<f64>) -> DMatrix<Complex64> {
        let n = self.n();
        let mut w =
            DMatrix::from_fn(
                n,
                n,
                |r, c| if r == c { Complex64::from(self.p.diagonal[r]) } else { Complex64::from(0.0) },
            );
        self.add_offdiag(&mut w, y);
        w
    }

    fn add_offdiag(&self, w: &mut DMatrix<Complex64>, y: &DVector<f64>) {
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            let v = Complex64::new(y[2 * p], y[2 * p + 1]);
            w[(i, j)] += v;
            w[(j, i)] += v.conj();
        }
    }

    /// `(−Re Tr(B_k Y))_k`, with a zero entry for `t`.
    fn apply_a(&self, y: &DMatrix<Complex64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nx + 1);
        for k in 0..self.nx {
            let s: Complex64 = terms(&self.pairs, k).iter().map(|&(a, b, c)| c * y[(b, a)]).sum();
            out[k] = -s.re;
        }
        out
    }

    fn schur(&self, x: &DMatrix<Complex64>, winv: &DMatrix<Complex64>, d: &DVector<f64>) -> DMatrix<f64> {
        let ny = self.nx + 1;
        let mut m = DMatrix::zeros(ny, ny);
        for k in 0..self.nx {
            let tk = terms(&self.pairs, k);
            for l in k..self.nx {
                let tl = terms(&self.pairs, l);
                let mut v = 0.0;
                for &(a, b, c1) in &tk {
                    for &(c, dd, c2) in &tl {
                        v += (c1 * c2 * x[(b, c)] * winv[(dd, a)]).re;
                    }
                }
                m[(k, l)] = v;
                m[(l, k)] = v;
            }
        }
        let mut dg = self.g.clone();
        for (mut row, &dl) in dg.row_iter_mut().zip(d.iter()) {
            row *= dl;
        }
        m += self.g.transpose() * dg;
        m
    }
}

fn re_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // Re Tr(A B) for Hermitian A, B.
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

fn hermitize(m: &mut DMatrix<Complex64>) {
    let adj = m.adjoint();
    *m += adj;
    *m *= Complex64::from(0.5);
}

/// Largest `t ≤ 1` keeping `m + t·dm ⪰ 0`, scaled by `tau` when binding.
fn max_step_psd(m: &DMatrix<Complex64>, dm: &DMatrix<Complex64>, tau: f64) -> f64 {
    let Some(chol) = Cholesky::new(m.clone()) else {
        return 0.0;
    };
    let l = chol.l();
    let Some(y) = l.solve_lower_triangular(dm) else {
        return 0.0;
    };
    let Some(z) = l.solve_lower_triangular(&y.adjoint()) else {
        return 0.0;
    };
    let (vals, _) = hermitian_eigen(&z);
    let lmin = vals.last().copied().unwrap_or(0.0);
    if lmin < 0.0 {
        (tau * (-1.0 / lmin)).min(1.0)
    } else {
        1.0
    }
}

struct Direction {
    dy: DVector<f64>,
    dw: DMatrix<Complex64>,
    ds: DVector<f64>,
    dx: DMatrix<Complex64>,
    dz: DVector<f64>,
}

pub fn solve_fixed_diagonal_sdp(problem: &FixedDiagonalSdp, settings: &SdpSettings) -> Result<SdpSolution> {
    let n = problem.diagonal.len();
    if n == 0 {
        return Err(Error::ZeroCount);
    }
    if problem.cuts.is_empty() {
        return Err(Error::Solver("no cut constraints; the problem is unbounded".into()));
    }
    if problem.cost.nrows() != n || problem.cost.ncols() != n {
        return Err(Error::LengthMismatch { expected: n, got: problem.cost.nrows() });
    }
    if let Some(a) = problem.cuts.iter().find(|a| a.len() != n) {
        return Err(Error::LengthMismatch { expected: n, got: a.len() });
    }
    if problem.diagonal.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Solver("fixed diagonal must be positive".into()));
    }

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let nx = 2 * pairs.len();
    let ny = nx + 1;
    let m = problem.cuts.len();
    let mut g = DMatrix::zeros(m, ny);
    let mut h = DVector::zeros(m);
    for (l, a) in problem.cuts.iter().enumerate() {
        h[l] = a.iter().zip(problem.diagonal).map(|(ai, di)| di * ai.norm_sqr()).sum();
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let t = a[i].conj() * a[j];
            g[(l, 2 * p)] = -2.0 * t.re;
            g[(l, 2 * p + 1)] = 2.0 * t.im;
        }
        g[(l, nx)] = 1.0;
    }
    let mut b = DVector::zeros(ny);
    for (p, &(i, j)) in pairs.iter().enumerate() {
        b[2 * p] = 2.0 * problem.cost[(i, j)].re;
        b[2 * p + 1] = 2.0 * problem.cost[(i, j)].im;
    }
    b[nx] = 1.0;
    let st = Structure { p: problem, pairs, nx, g, h, b };
    let base_obj: f64 = (0..n).map(|i| problem.cost[(i, i)].re * problem.diagonal[i]).sum();
    let b_scale = 1.0 + st.b.amax();

    let mut y = DVector::zeros(ny);
    y[nx] = st.h.min() - 1.0;
    let mut x = DMatrix::<Complex64>::identity(n, n);
    let mut z = DVector::from_element(m, 1.0 / m as f64);
    let mut log = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let nm = (n + m) as f64;

    for iter in 0..=settings.max_iters {
        let w = st.w_of(&y);
        let s = &st.h - &st.g * &y;
        let rp = &st.b - st.apply_a(&x) - st.g.transpose() * &z;
        let gap = re_inner(&x, &w) + z.dot(&s);
        let obj = base_obj + st.b.dot(&y);
        let dual_res = rp.amax();
        log.push(IterateRecord { iter, objective: obj, primal_res: 0.0, dual_res, gap });
        iterations = iter;
        if dual_res <= settings.tol * b_scale && gap <= settings.tol * (1.0 + obj.abs()) {
            converged = true;
            break;
        }
        if iter == settings.max_iters {
            break;
        }
        let Some(wchol) = Cholesky::new(w.clone()) else { break };
        let winv = wchol.inverse();
        let d = z.component_div(&s);
        let mut schur = st.schur(&x, &winv, &d);
        let reg = 1e-14 * schur.diagonal().amax().max(1.0);
        let chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                for i in 0..ny {
                    schur[(i, i)] += reg;
                }
                match Cholesky::new(schur) {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let mu = gap / nm;

        let direction = |q_mat: &DMatrix<Complex64>, q_vec: &DVector<f64>| -> Direction {
            let rhs = &rp - st.apply_a(q_mat) - st.g.transpose() * q_vec;
            let dy = chol.solve(&rhs);
            let mut dw = DMatrix::zeros(n, n);
            st.add_offdiag(&mut dw, &dy);
            let gdy = &st.g * &dy;
            let ds = -&gdy;
            let mut dx = q_mat - &x * &dw * &winv;
            hermitize(&mut dx);
            let dz = q_vec + d.component_mul(&gdy);
            Direction { dy, dw, ds, dx, dz }
        };
        let steps = |dir: &Direction, tau: f64| -> (f64, f64) {
            let ap = max_step_psd(&x, &dir.dx, tau).min(max_step_vec(z.as_slice(), dir.dz.as_slice(), tau));
            let ad = max_step_psd(&w, &dir.dw, tau).min(max_step_vec(s.as_slice(), dir.ds.as_slice(), tau));
            (ap, ad)
        };

        let pred = direction(&(-&x), &(-&z));
        let (ap, ad) = steps(&pred, 1.0);
        let x_aff = &x + &pred.dx * Complex64::from(ap);
        let w_aff = &w + &pred.dw * Complex64::from(ad);
        let z_aff = &z + &pred.dz * ap;
        let s_aff = &s + &pred.ds * ad;
        let mu_aff = (re_inner(&x_aff, &w_aff) + z_aff.dot(&s_aff)) / nm;
        let q = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = q * q * q;

        let mut q_mat = &winv * Complex64::from(sigma * mu) - &x - &pred.dx * &pred.dw * &winv;
        let q_vec = DVector::from_fn(m, |l, _| (sigma * mu - pred.dz[l] * pred.ds[l]) / s[l] - z[l]);
        // Only the Hermitian part of the corrector enters the multiplier update.
        hermitize(&mut q_mat);
        let corr = direction(&q_mat, &q_vec);
        let (ap, ad) = steps(&corr, 0.95);
        if ap == 0.0 && ad == 0.0 {
            break;
        }
        x += &corr.dx * Complex64::from(ap);
        hermitize(&mut x);
        z += &corr.dz * ap;
        y += &corr.dy * ad;
    }

    let w = st.w_of(&y);
    let quad = |a: &[Complex64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (a[i].conj() * w[(i, j)] * a[j]).re;
            }
        }
        acc
    };
    let t = problem.cuts.iter().map(|a| quad(a)).fold(f64::INFINITY, f64::min);
    let objective = base_obj + st.b.rows(0, nx).dot(&y.rows(0, nx)) + t;
    let s = &st.h - &st.g * &y;
    let rp = &st.b - st.apply_a(&x) - st.g.transpose() * &z;
    let w_min = hermitian_eigen(&w).0.last().copied().unwrap_or(0.0);
    let x_min = hermitian_eigen(&x).0.last().copied().unwrap_or(0.0);
    let kkt = KktReport {
        primal_residual: (-w_min).max(0.0),
        dual_residual: rp.amax().max(-x_min).max(-z.min()).max(0.0),
        complementarity: (re_inner(&x, &w) + z.dot(&s)).abs(),
    };
    if !objective.is_finite() {
        return Err(Error::Solver(format!("SDP diverged after {iterations} iterations")));
    }
    Ok(SdpSolution {
        w,
        t,
        objective,
        w_multiplier: x,
        cut_multipliers: z.iter().copied().collect(),
        kkt,
        converged,
        iterations,
        log,
    })
}
