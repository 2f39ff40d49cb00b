//! GMRES for the outer systems and preconditioned conjugate gradients for
//! the symmetric positive definite Gram systems.
//!
//! Both solvers are serial apart from the operator applications and use a
//! fixed summation order, so repeated solves give identical iterates.

use std::fmt::Write as _;
use std::time::Instant;

use num_traits::{Float, FromPrimitive, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{InnerStats, LinearOperator, Preconditioner, SparseMatrix, Symmetry};
use crate::scalar::{axpy, dot, norm, Scalar};

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    /// The right-hand side was zero; the solution is zero.
    ZeroRhs,
    MaxIterations,
    Stagnated,
}

/// Convergence record of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual after each iteration (preconditioned residual for
    /// preconditioned GMRES).
    pub history: Vec<f64>,
    /// True relative residual `‖b − Ax‖ / ‖b‖` of the returned iterate.
    pub achieved: f64,
    pub wall_time: f64,
    pub matvecs: usize,
    /// Inner solves performed by the operator during this solve.
    pub inner: Option<InnerStats>,
    pub termination: Termination,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::Converged | Termination::ZeroRhs)
    }

    /// Mean inner iterations per outer operator application.
    pub fn inner_per_matvec(&self) -> Option<f64> {
        self.inner
            .map(|s| if self.matvecs == 0 { 0.0 } else { s.iterations as f64 / self.matvecs as f64 })
    }

    /// `iteration,residual` lines, iterations counted from 1.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for (i, r) in self.history.iter().enumerate() {
            writeln!(out, "{},{:.17e}", i + 1, r).expect("write to string");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Relative residual target, in (0, 1).
    pub tol: f64,
    pub max_iter: usize,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
    /// Stop when the residual fell by less than 0.1 % over this many
    /// iterations.
    pub stagnation_window: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-4,
            max_iter: 1000,
            restart: None,
            stagnation_window: 200,
        }
    }
}

struct Counted<'a, S: Scalar, O: LinearOperator<S> + ?Sized> {
    op: &'a O,
    matvecs: usize,
    _s: std::marker::PhantomData<S>,
}

impl<S: Scalar, O: LinearOperator<S> + ?Sized> Counted<'_, S, O> {
    fn apply(&mut self, x: &[S]) -> Result<Vec<S>> {
        self.matvecs += 1;
        self.op.apply(x)
    }
}

fn to_f64<R: ToPrimitive>(r: R) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn from_f64<R: FromPrimitive>(v: f64) -> R {
    R::from_f64(v).expect("representable")
}

fn validate_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1) (got {tol})")));
    }
    Ok(())
}

/// Left-preconditioned GMRES from a zero initial guess.
///
/// Convergence is declared on the true residual, recomputed after every
/// cycle; if the preconditioned estimate was met but the true residual was
/// not, iteration continues with a tightened internal target. Running out of
/// iterations or stagnating returns the current iterate with the matching
/// [`Termination`].
pub fn gmres<S, O>(
    op: &O,
    rhs: &[S],
    cfg: &GmresConfig,
    precond: Option<&dyn Preconditioner<S>>,
) -> Result<(Vec<S>, SolveReport)>
where
    S: Scalar,
    O: LinearOperator<S> + ?Sized,
{
    validate_tol(cfg.tol)?;
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let start = Instant::now();
    let inner_start = op.inner_stats();
    let mut a = Counted {
        op,
        matvecs: 0,
        _s: std::marker::PhantomData,
    };
    let pre = |v: Vec<S>| match precond {
        Some(p) => p.precondition(&v),
        None => v,
    };
    let finish = |a: &Counted<S, O>, x: Vec<S>, iterations, history, achieved, termination| {
        let report = SolveReport {
            iterations,
            history,
            achieved,
            wall_time: start.elapsed().as_secs_f64(),
            matvecs: a.matvecs,
            inner: op.inner_stats().zip(inner_start).map(|(now, then)| now.since(&then)),
            termination,
        };
        Ok((x, report))
    };

    let mut x = vec![S::zero(); n];
    let b_norm = norm(rhs);
    if b_norm == S::Real::zero() {
        return finish(&a, x, 0, Vec::new(), 0.0, Termination::ZeroRhs);
    }
    let pb_norm = to_f64(norm(&pre(rhs.to_vec())));
    let b_norm = to_f64(b_norm);

    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut target = cfg.tol;
    let mut r = rhs.to_vec();
    let mut true_res = 1.0;

    while iterations < cfg.max_iter {
        let z = pre(r.clone());
        let beta = to_f64(norm(&z));
        if beta == 0.0 {
            break;
        }
        let m = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter - iterations).max(1);
        let mut basis: Vec<Vec<S>> = Vec::with_capacity(m + 1);
        basis.push(z.iter().map(|v| v.mul_real(from_f64(1.0 / beta))).collect());
        // Columns of the Hessenberg matrix after rotation, each of length j + 2.
        let mut h: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut cs: Vec<S::Real> = Vec::with_capacity(m);
        let mut sn: Vec<S> = Vec::with_capacity(m);
        let mut g = vec![S::zero(); m + 1];
        g[0] = S::from_real(from_f64(beta));
        let mut steps = 0;

        for j in 0..m {
            let mut w = pre(a.apply(&basis[j])?);
            let mut col = vec![S::zero(); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                axpy(-hij, v, &mut w);
                col[i] = hij;
            }
            let h_next = norm(&w);
            col[j + 1] = S::from_real(h_next);
            for i in 0..j {
                let (c, s) = (cs[i], sn[i]);
                let (a0, a1) = (col[i], col[i + 1]);
                col[i] = a0.mul_real(c) + s * a1;
                col[i + 1] = a1.mul_real(c) - s.conj() * a0;
            }
            let (c, s, rho) = givens(col[j], col[j + 1]);
            col[j] = rho;
            col[j + 1] = S::zero();
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s.conj() * g[j];
            g[j] = g[j].mul_real(c);
            h.push(col);
            steps = j + 1;
            iterations += 1;

            let estimate = to_f64(g[j + 1].abs_sq().sqrt()) / pb_norm;
            history.push(estimate);
            let breakdown = to_f64(h_next) <= 1e-14 * beta;
            if estimate <= target || breakdown || iterations >= cfg.max_iter {
                break;
            }
            if stagnated(&history, cfg.stagnation_window) {
                break;
            }
            let inv = from_f64::<S::Real>(1.0) / h_next;
            w.iter_mut().for_each(|v| *v = v.mul_real(inv));
            basis.push(w);
        }

        // Back substitution on the rotated Hessenberg system.
        let mut y = vec![S::zero(); steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[k][i] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            axpy(*yk, &basis[k], &mut x);
        }

        let ax = a.apply(&x)?;
        r = rhs.iter().zip(&ax).map(|(b, v)| *b - *v).collect();
        true_res = to_f64(norm(&r)) / b_norm;
        if true_res <= cfg.tol {
            return finish(&a, x, iterations, history, true_res, Termination::Converged);
        }
        if stagnated(&history, cfg.stagnation_window) {
            return finish(&a, x, iterations, history, true_res, Termination::Stagnated);
        }
        let last = history.last().copied().unwrap_or(1.0);
        if last <= target {
            target = (target * 0.5 * cfg.tol / true_res).max(f64::EPSILON);
        }
    }
    finish(&a, x, iterations, history, true_res, Termination::MaxIterations)
}

fn stagnated(history: &[f64], window: usize) -> bool {
    let n = history.len();
    window > 0 && n > window && history[n - 1] > 0.999 * history[n - 1 - window]
}

/// Complex Givens rotation zeroing `b` in `(a, b)`: returns `(c, s, ρ)` with
/// `[c, s; −s̄, c]·[a; b] = [ρ; 0]` and real `c`.
fn givens<S: Scalar>(a: S, b: S) -> (S::Real, S, S) {
    let zero = S::Real::zero();
    let one = S::Real::one();
    let b_abs = b.abs_sq().sqrt();
    if b_abs == zero {
        return (one, S::zero(), a);
    }
    let a_abs = a.abs_sq().sqrt();
    if a_abs == zero {
        return (zero, b.conj().mul_real(one / b_abs), S::from_real(b_abs));
    }
    let r = a_abs.hypot(b_abs);
    let c = a_abs / r;
    let phase = a.mul_real(one / a_abs);
    let s = phase * b.conj().mul_real(one / r);
    (c, s, phase.mul_real(r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Jacobi (diagonal) preconditioning.
    pub jacobi: bool,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            tol: 1e-5,
            max_iter: 500,
            jacobi: true,
        }
    }
}

/// Preconditioned conjugate gradients for a real symmetric positive definite
/// sparse matrix and a real or complex right-hand side, from a zero guess.
///
/// Non-positive curvature `pᴴAp ≤ 0` (or a non-positive diagonal under
/// Jacobi) is reported as [`Error::NotPositiveDefinite`].
pub fn cg<R, S>(a: &SparseMatrix<R>, rhs: &[S], cfg: &CgConfig) -> Result<(Vec<S>, SolveReport)>
where
    R: Scalar<Real = R> + Float + FromPrimitive + std::fmt::LowerExp,
    S: Scalar<Real = R>,
{
    validate_tol(cfg.tol)?;
    if a.symmetry() != Symmetry::Symmetric {
        return Err(Error::InvalidArgument("conjugate gradients need a symmetric matrix".into()));
    }
    let n = a.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let start = Instant::now();
    let inv_diag: Vec<R> = if cfg.jacobi {
        let mut out = Vec::with_capacity(n);
        for d in a.diagonal() {
            if !(d > R::zero()) {
                return Err(Error::NotPositiveDefinite {
                    curvature: to_f64(d),
                    iteration: 0,
                });
            }
            out.push(R::one() / d);
        }
        out
    } else {
        vec![R::one(); n]
    };

    let mut x = vec![S::zero(); n];
    let b_norm = to_f64(norm(rhs));
    let report = |iterations, history: Vec<f64>, achieved, matvecs, termination| SolveReport {
        iterations,
        history,
        achieved,
        wall_time: start.elapsed().as_secs_f64(),
        matvecs,
        inner: None,
        termination,
    };
    if b_norm == 0.0 {
        return Ok((x, report(0, Vec::new(), 0.0, 0, Termination::ZeroRhs)));
    }

    // The Jacobi diagonal is real, so rᴴz = Σ d|r|². Each iteration makes
    // three fused passes: Ap with pᴴAp, the x/r/z updates with both norms,
    // and the direction update.
    let mut r = rhs.to_vec();
    let mut z: Vec<S> = r.iter().zip(&inv_diag).map(|(v, d)| v.mul_real(*d)).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&inv_diag).fold(R::zero(), |acc, (v, d)| acc + v.abs_sq() * *d);
    let mut history = Vec::new();
    let mut ap = vec![S::zero(); n];
    let mut res = 1.0;
    for it in 0..cfg.max_iter {
        let curvature = a.mul_vec_into_dot(&p, &mut ap);
        if !(curvature > R::zero()) {
            return Err(Error::NotPositiveDefinite {
                curvature: to_f64(curvature),
                iteration: it,
            });
        }
        let alpha = rz / curvature;
        let mut rr = R::zero();
        let mut rz_next = R::zero();
        for i in 0..n {
            x[i] += p[i].mul_real(alpha);
            r[i] -= ap[i].mul_real(alpha);
            let sq = r[i].abs_sq();
            rr += sq;
            rz_next += sq * inv_diag[i];
            z[i] = r[i].mul_real(inv_diag[i]);
        }
        res = to_f64(rr.sqrt()) / b_norm;
        history.push(res);
        if res <= cfg.tol {
            return Ok((x, report(it + 1, history, res, it + 1, Termination::Converged)));
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = *zi + pi.mul_real(beta);
        }
    }
    Ok((x, report(cfg.max_iter, history, res, cfg.max_iter, Termination::MaxIterations)))
}
