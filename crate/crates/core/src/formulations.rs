//! The five integral-equation systems built from the assembled matrices.
//!
//! All operators act on RWG coefficient vectors and implement
//! [`LinearOperator`]. Each builder also returns an [`Rhs`] describing how
//! the tested incident fields combine into the right-hand side.
//!
//! | kind    | operator                                         | unknowns |
//! |---------|--------------------------------------------------|----------|
//! | EFIE    | `jk₀Z₀ T`                                        | `i`      |
//! | MFIE    | `½A′ + K_n×β`                                    | `i`      |
//! | CFIE    | `[c·jk₀Z₀T + (1−c)·Z₀·(½A′ + K_n×β)] / (jk₀Z₀)`  | `i`      |
//! | CSIE-JM | `[[jk₀Z₀T, −½A + K], [−αZ₀A, A′]]`               | `(i, v)` |
//! | CSIE-J  | `αZ₀(−½A + K)A′⁻¹A + jk₀Z₀T`                     | `i`      |

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::basis::RwgBasis;
use crate::constants::convention::{CSIE_RESIDUE, MFIE_RESIDUE};
use crate::context::PhysicalContext;
use crate::error::{Error, Result};
use crate::excitation::{rhs_efie, rhs_mfie, PlaneWave};
use crate::krylov::{cg, gmres, CgConfig, GmresConfig, SolveReport, Termination};
use crate::linalg::{DiagonalPreconditioner, InnerStats, LinearOperator, Preconditioner};
use crate::operators::{assemble, OperatorSet, QuadratureConfig, Request};
use crate::quadrature::RuleOrder;
use crate::{Complex, DenseComplexMatrix, SparseRealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulationKind {
    Efie,
    Mfie,
    Cfie,
    CsieJm,
    CsieJ,
}

impl FormulationKind {
    pub const ALL: [FormulationKind; 5] = [
        FormulationKind::Efie,
        FormulationKind::Mfie,
        FormulationKind::Cfie,
        FormulationKind::CsieJm,
        FormulationKind::CsieJ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormulationKind::Efie => "efie",
            FormulationKind::Mfie => "mfie",
            FormulationKind::Cfie => "cfie",
            FormulationKind::CsieJm => "csie-jm",
            FormulationKind::CsieJ => "csie-j",
        }
    }

    /// Whether the formulation carries a magnetic current.
    pub fn has_magnetic_current(self) -> bool {
        matches!(self, FormulationKind::CsieJm | FormulationKind::CsieJ)
    }

    /// Operator matrices the formulation needs.
    pub fn request(self) -> Request {
        Request {
            t: self != FormulationKind::Mfie,
            k: self.has_magnetic_current(),
            k_nxb: matches!(self, FormulationKind::Mfie | FormulationKind::Cfie),
        }
    }
}

impl fmt::Display for FormulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FormulationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        FormulationKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown formulation '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulationConfig {
    pub kind: FormulationKind,
    /// Combined-source weighting `α` (dimensionless).
    pub alpha: f64,
    /// CFIE combination parameter in [0, 1]; 1 is pure EFIE.
    pub cfie_comb: f64,
    /// Solve CSIE-JM for `v′ = v/Z₀` instead of `v`.
    pub jm_weighting: bool,
    /// Relative residual of the inner Gram solves.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl Default for FormulationConfig {
    fn default() -> Self {
        FormulationConfig {
            kind: FormulationKind::CsieJ,
            alpha: 1.0,
            cfie_comb: 0.5,
            jm_weighting: false,
            inner_tol: 1e-5,
            inner_max_iter: 500,
        }
    }
}

impl FormulationConfig {
    pub fn new(kind: FormulationKind) -> Self {
        FormulationConfig {
            kind,
            ..Default::default()
        }
    }

    fn inner_cg(&self, tol: f64) -> CgConfig {
        CgConfig {
            tol,
            max_iter: self.inner_max_iter,
            jacobi: true,
        }
    }
}

/// Right-hand side `s_e·e + s_h·h`, followed by `padding` zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rhs {
    pub e_scale: Complex,
    pub h_scale: Complex,
    pub padding: usize,
}

impl Rhs {
    fn electric(scale: Complex) -> Self {
        Rhs {
            e_scale: scale,
            h_scale: Complex::new(0.0, 0.0),
            padding: 0,
        }
    }

    pub fn needs_e(&self) -> bool {
        self.e_scale != Complex::new(0.0, 0.0)
    }

    pub fn needs_h(&self) -> bool {
        self.h_scale != Complex::new(0.0, 0.0)
    }

    /// Combines precomputed tested fields; a field whose scale is zero may be
    /// omitted.
    pub fn combine(&self, e: Option<&[Complex]>, h: Option<&[Complex]>) -> Result<Vec<Complex>> {
        let n = e.or(h).map(<[Complex]>::len).ok_or_else(|| {
            Error::InvalidArgument("right-hand side needs at least one tested field".into())
        })?;
        let mut out = vec![Complex::new(0.0, 0.0); n + self.padding];
        for (scale, field, name) in [(self.e_scale, e, "e"), (self.h_scale, h, "h")] {
            if scale == Complex::new(0.0, 0.0) {
                continue;
            }
            let field = field.ok_or_else(|| Error::InvalidArgument(format!("tested field {name} is required")))?;
            if field.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: field.len(),
                });
            }
            for (o, f) in out.iter_mut().zip(field) {
                *o += scale * f;
            }
        }
        Ok(out)
    }

    pub fn build(&self, basis: &RwgBasis, pw: &PlaneWave, ctx: &PhysicalContext, rule: RuleOrder) -> Vec<Complex> {
        let e = self.needs_e().then(|| rhs_efie(basis, pw, ctx, rule));
        let h = self.needs_h().then(|| rhs_mfie(basis, pw, ctx, rule));
        self.combine(e.as_deref(), h.as_deref()).expect("fields match the scales")
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn jkz(ctx: &PhysicalContext) -> Complex {
    Complex::new(0.0, ctx.k0 * ctx.z0)
}

fn scaled(v: &mut [Complex], s: Complex) {
    v.iter_mut().for_each(|x| *x *= s);
}

fn add_into(acc: &mut [Complex], other: &[Complex]) {
    acc.iter_mut().zip(other).for_each(|(a, b)| *a += b);
}

fn real_sparse_times(m: &SparseRealMatrix, x: &[Complex]) -> Vec<Complex> {
    m.mul_vec(x)
}

/// `(c·A + K) x` for the sparse real `A` and dense `K`.
fn residue_plus_k(c: f64, a: &SparseRealMatrix, k: &DenseComplexMatrix, x: &[Complex]) -> Vec<Complex> {
    let mut out = k.matvec(x);
    for (o, v) in out.iter_mut().zip(real_sparse_times(a, x)) {
        *o += v * c;
    }
    out
}

/// `x ↦ jk₀Z₀ T x`
#[derive(Debug, Clone, Copy)]
pub struct EfieOperator<'a> {
    t: &'a DenseComplexMatrix,
    factor: Complex,
}

pub fn build_efie<'a>(t: &'a DenseComplexMatrix, ctx: &PhysicalContext) -> (EfieOperator<'a>, Rhs) {
    (EfieOperator { t, factor: jkz(ctx) }, Rhs::electric(Complex::new(1.0, 0.0)))
}

impl LinearOperator<Complex> for EfieOperator<'_> {
    fn dim(&self) -> usize {
        self.t.rows()
    }

    fn apply(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        check_dim(self.dim(), x.len())?;
        let mut y = self.t.matvec(x);
        scaled(&mut y, self.factor);
        Ok(y)
    }

    fn to_dense(&self) -> Result<DenseComplexMatrix> {
        Ok(self.t.scaled(self.factor))
    }
}

impl EfieOperator<'_> {
    pub fn diagonal(&self) -> Vec<Complex> {
        self.t.diagonal().into_iter().map(|d| d * self.factor).collect()
    }
}

/// `x ↦ (½A′ + K_n×β) x`
#[derive(Debug, Clone, Copy)]
pub struct MfieOperator<'a> {
    a_prime: &'a SparseRealMatrix,
    k_nxb: &'a DenseComplexMatrix,
}

pub fn build_mfie<'a>(
    a_prime: &'a SparseRealMatrix,
    k_nxb: &'a DenseComplexMatrix,
    _ctx: &PhysicalContext,
) -> (MfieOperator<'a>, Rhs) {
    (
        MfieOperator { a_prime, k_nxb },
        Rhs {
            e_scale: Complex::new(0.0, 0.0),
            h_scale: Complex::new(1.0, 0.0),
            padding: 0,
        },
    )
}

impl LinearOperator<Complex> for MfieOperator<'_> {
    fn dim(&self) -> usize {
        self.k_nxb.rows()
    }

    fn apply(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        check_dim(self.dim(), x.len())?;
        Ok(residue_plus_k(MFIE_RESIDUE, self.a_prime, self.k_nxb, x))
    }
}

impl MfieOperator<'_> {
    pub fn diagonal(&self) -> Vec<Complex> {
        self.k_nxb
            .diagonal()
            .into_iter()
            .zip(self.a_prime.diagonal())
            .map(|(k, a)| k + a * MFIE_RESIDUE)
            .collect()
    }
}

/// `x ↦ [c·EFIE(x) + (1 − c)·Z₀·MFIE(x)] / (jk₀Z₀)`
#[derive(Debug, Clone, Copy)]
pub struct CfieOperator<'a> {
    efie: EfieOperator<'a>,
    mfie: MfieOperator<'a>,
    e_weight: Complex,
    h_weight: Complex,
}

pub fn build_cfie<'a>(
    efie: EfieOperator<'a>,
    mfie: MfieOperator<'a>,
    comb: f64,
    ctx: &PhysicalContext,
) -> Result<(CfieOperator<'a>, Rhs)> {
    if !(0.0..=1.0).contains(&comb) {
        return Err(Error::InvalidArgument(format!("CFIE combination must lie in [0, 1] (got {comb})")));
    }
    check_dim(efie.dim(), mfie.dim())?;
    let norm = jkz(ctx).inv();
    let e_weight = norm * comb;
    let h_weight = norm * ((1.0 - comb) * ctx.z0);
    Ok((
        CfieOperator {
            efie,
            mfie,
            e_weight,
            h_weight,
        },
        Rhs {
            e_scale: e_weight,
            h_scale: h_weight,
            padding: 0,
        },
    ))
}

impl LinearOperator<Complex> for CfieOperator<'_> {
    fn dim(&self) -> usize {
        self.efie.dim()
    }

    fn apply(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        check_dim(self.dim(), x.len())?;
        let zero = Complex::new(0.0, 0.0);
        let mut y = vec![zero; x.len()];
        if self.e_weight != zero {
            let mut e = self.efie.apply(x)?;
            scaled(&mut e, self.e_weight);
            add_into(&mut y, &e);
        }
        if self.h_weight != zero {
            let mut h = self.mfie.apply(x)?;
            scaled(&mut h, self.h_weight);
            add_into(&mut y, &h);
        }
        Ok(y)
    }
}

impl CfieOperator<'_> {
    pub fn diagonal(&self) -> Vec<Complex> {
        self.efie
            .diagonal()
            .into_iter()
            .zip(self.mfie.diagonal())
            .map(|(e, h)| e * self.e_weight + h * self.h_weight)
            .collect()
    }
}

/// Saddle-point system on `(i, v)`, or `(i, v′)` with `v = Z₀ v′` when
/// weighted.
#[derive(Debug, Clone, Copy)]
pub struct CsieJmOperator<'a> {
    t: &'a DenseComplexMatrix,
    k: &'a DenseComplexMatrix,
    a: &'a SparseRealMatrix,
    a_prime: &'a SparseRealMatrix,
    jkz: Complex,
    alpha_z0: f64,
    /// Scale of the magnetic unknown: 1, or Z₀ when weighted.
    v_scale: f64,
}

pub fn build_csie_jm<'a>(
    t: &'a DenseComplexMatrix,
    k: &'a DenseComplexMatrix,
    a: &'a SparseRealMatrix,
    a_prime: &'a SparseRealMatrix,
    cfg: &FormulationConfig,
    ctx: &PhysicalContext,
) -> Result<(CsieJmOperator<'a>, Rhs)> {
    if !(cfg.alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("α must be positive (got {})", cfg.alpha)));
    }
    let n = t.rows();
    for d in [k.rows(), a.dim(), a_prime.dim()] {
        check_dim(n, d)?;
    }
    Ok((
        CsieJmOperator {
            t,
            k,
            a,
            a_prime,
            jkz: jkz(ctx),
            alpha_z0: cfg.alpha * ctx.z0,
            v_scale: if cfg.jm_weighting { ctx.z0 } else { 1.0 },
        },
        Rhs {
            padding: n,
            ..Rhs::electric(Complex::new(1.0, 0.0))
        },
    ))
}

impl LinearOperator<Complex> for CsieJmOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.t.rows()
    }

    fn apply(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        check_dim(self.dim(), x.len())?;
        let n = self.t.rows();
        let (i, v) = x.split_at(n);
        let mut top = self.t.matvec(i);
        scaled(&mut top, self.jkz);
        let mut kv = residue_plus_k(CSIE_RESIDUE, self.a, self.k, v);
        scaled(&mut kv, Complex::new(self.v_scale, 0.0));
        add_into(&mut top, &kv);

        let ai = real_sparse_times(self.a, i);
        let apv = real_sparse_times(self.a_prime, v);
        top.extend(apv.iter().zip(&ai).map(|(p, q)| p * self.v_scale - q * self.alpha_z0));
        Ok(top)
    }
}

impl CsieJmOperator<'_> {
    /// Electric and (physical) magnetic coefficients from a solution vector.
    pub fn split(&self, x: &[Complex]) -> (Vec<Complex>, Vec<Complex>) {
        let n = self.t.rows();
        let i = x[..n].to_vec();
        let v = x[n..].iter().map(|z| z * self.v_scale).collect();
        (i, v)
    }

    /// Diagonal of the block operator (the `A` diagonal vanishes).
    pub fn diagonal(&self) -> Vec<Complex> {
        let mut d: Vec<Complex> = self.t.diagonal().into_iter().map(|x| x * self.jkz).collect();
        d.extend(self.a_prime.diagonal().into_iter().map(|x| Complex::new(x * self.v_scale, 0.0)));
        d
    }
}

/// `x ↦ αZ₀(−½A + K) y + jk₀Z₀ T x` with `A′y = A x` solved by
/// Jacobi-preconditioned CG on every application.
#[derive(Debug)]
pub struct CsieJOperator<'a> {
    t: &'a DenseComplexMatrix,
    k: &'a DenseComplexMatrix,
    a: &'a SparseRealMatrix,
    a_prime: &'a SparseRealMatrix,
    jkz: Complex,
    alpha_z0: f64,
    inner: CgConfig,
    solves: AtomicUsize,
    iterations: AtomicUsize,
}

pub fn build_csie_j<'a>(
    t: &'a DenseComplexMatrix,
    k: &'a DenseComplexMatrix,
    a: &'a SparseRealMatrix,
    a_prime: &'a SparseRealMatrix,
    cfg: &FormulationConfig,
    ctx: &PhysicalContext,
) -> Result<(CsieJOperator<'a>, Rhs)> {
    if !(cfg.alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("α must be non-negative (got {})", cfg.alpha)));
    }
    let n = t.rows();
    for d in [k.rows(), a.dim(), a_prime.dim()] {
        check_dim(n, d)?;
    }
    Ok((
        CsieJOperator {
            t,
            k,
            a,
            a_prime,
            jkz: jkz(ctx),
            alpha_z0: cfg.alpha * ctx.z0,
            inner: cfg.inner_cg(cfg.inner_tol),
            solves: AtomicUsize::new(0),
            iterations: AtomicUsize::new(0),
        },
        Rhs::electric(Complex::new(1.0, 0.0)),
    ))
}

/// `A′⁻¹ b` by CG; a zero `b` returns zero without iterating.
fn gram_solve(a_prime: &SparseRealMatrix, b: &[Complex], cfg: &CgConfig) -> Result<(Vec<Complex>, SolveReport)> {
    let (y, report) = cg(a_prime, b, cfg)?;
    match report.termination {
        Termination::Converged | Termination::ZeroRhs => Ok((y, report)),
        _ => Err(Error::InnerSolveFailed {
            tol: cfg.tol,
            achieved: report.achieved,
            iterations: report.iterations,
        }),
    }
}

impl LinearOperator<Complex> for CsieJOperator<'_> {
    fn dim(&self) -> usize {
        self.t.rows()
    }

    fn apply(&self, x: &[Complex]) -> Result<Vec<Complex>> {
        check_dim(self.dim(), x.len())?;
        let mut out = self.t.matvec(x);
        scaled(&mut out, self.jkz);
        if self.alpha_z0 == 0.0 {
            return Ok(out);
        }
        let ax = real_sparse_times(self.a, x);
        let (y, report) = gram_solve(self.a_prime, &ax, &self.inner)?;
        if report.termination == Termination::ZeroRhs {
            return Ok(out);
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.iterations.fetch_add(report.iterations, Ordering::Relaxed);
        let mut m = residue_plus_k(CSIE_RESIDUE, self.a, self.k, &y);
        scaled(&mut m, Complex::new(self.alpha_z0, 0.0));
        add_into(&mut out, &m);
        Ok(out)
    }

    fn inner_stats(&self) -> Option<InnerStats> {
        Some(InnerStats {
            solves: self.solves.load(Ordering::Relaxed),
            iterations: self.iterations.load(Ordering::Relaxed),
        })
    }
}

impl CsieJOperator<'_> {
    /// The operator with `A′⁻¹` from a dense LU factorisation instead of CG.
    pub fn exact_dense(&self) -> Result<DenseComplexMatrix> {
        let n = self.dim();
        let mut out = self.t.scaled(self.jkz);
        if self.alpha_z0 == 0.0 {
            return Ok(out);
        }
        let lu = self.a_prime.to_dense().to_nalgebra().lu();
        let a_dense = self.a.to_dense().to_nalgebra();
        let pa = lu.solve(&a_dense).ok_or(Error::Singular)?;
        let mut residue = self.k.clone();
        for i in 0..n {
            for (j, v) in self.a.row_entries(i) {
                residue.as_mut_slice()[i * n + j] += v * CSIE_RESIDUE;
            }
        }
        let pa = DenseComplexMatrix::from_fn(n, n, |i, j| Complex::new(pa[(i, j)], 0.0));
        let m = residue.matmul(&pa)?;
        out = out.add_scaled(Complex::new(self.alpha_z0, 0.0), &m)?;
        Ok(out)
    }

    pub fn alpha_z0(&self) -> f64 {
        self.alpha_z0
    }
}

/// `v = αZ₀ A′⁻¹ A i`, solved to a tenth of the inner tolerance.
pub fn recover_magnetic(
    i: &[Complex],
    a: &SparseRealMatrix,
    a_prime: &SparseRealMatrix,
    cfg: &FormulationConfig,
    ctx: &PhysicalContext,
) -> Result<Vec<Complex>> {
    check_dim(a.dim(), i.len())?;
    let mut b = real_sparse_times(a, i);
    scaled(&mut b, Complex::new(cfg.alpha * ctx.z0, 0.0));
    Ok(gram_solve(a_prime, &b, &cfg.inner_cg(cfg.inner_tol / 10.0))?.0)
}

/// `D = jk₀Z₀ diag(T)`.
pub fn build_diag_precond(t: &DenseComplexMatrix, ctx: &PhysicalContext) -> Result<DiagonalPreconditioner<Complex>> {
    DiagonalPreconditioner::new(t.diagonal().into_iter().map(|d| d * jkz(ctx)).collect())
}

/// `D = jk₀Z₀ diag(T) − αZ₀ diag(A diag(A′)⁻¹ A)`.
pub fn build_csie_diag_precond(
    t: &DenseComplexMatrix,
    a: &SparseRealMatrix,
    a_prime: &SparseRealMatrix,
    cfg: &FormulationConfig,
    ctx: &PhysicalContext,
) -> Result<DiagonalPreconditioner<Complex>> {
    let n = t.rows();
    check_dim(n, a.dim())?;
    check_dim(n, a_prime.dim())?;
    let dp = a_prime.diagonal();
    let diag: Vec<Complex> = t
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(m, tmm)| {
            let ada: f64 = a.row_entries(m).map(|(k, amk)| amk * a.get(k, m) / dp[k]).sum();
            tmm * jkz(ctx) - cfg.alpha * ctx.z0 * ada
        })
        .collect();
    DiagonalPreconditioner::new(diag)
}

/// Operator matrices for one mesh and frequency. Matrices a formulation
/// does not need may be absent.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub t: Option<DenseComplexMatrix>,
    pub k: Option<DenseComplexMatrix>,
    pub k_nxb: Option<DenseComplexMatrix>,
    pub a: SparseRealMatrix,
    pub a_prime: SparseRealMatrix,
}

impl SystemMatrices {
    /// Assembles everything the listed formulations need.
    pub fn assemble(
        basis: &RwgBasis,
        ctx: &PhysicalContext,
        quad: &QuadratureConfig,
        kinds: &[FormulationKind],
    ) -> Result<Self> {
        let request = kinds.iter().fold(
            Request {
                t: false,
                k: false,
                k_nxb: false,
            },
            |acc, k| {
                let r = k.request();
                Request {
                    t: acc.t || r.t,
                    k: acc.k || r.k,
                    k_nxb: acc.k_nxb || r.k_nxb,
                }
            },
        );
        Ok(Self::from_operators(basis, assemble(basis, ctx.k0, quad, request)?))
    }

    pub fn from_operators(basis: &RwgBasis, ops: OperatorSet) -> Self {
        SystemMatrices {
            t: ops.t,
            k: ops.k,
            k_nxb: ops.k_nxb,
            a: basis.gram_a(),
            a_prime: basis.gram_a_prime(),
        }
    }

    fn need<'a>(m: &'a Option<DenseComplexMatrix>, name: &str) -> Result<&'a DenseComplexMatrix> {
        m.as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("matrix {name} was not assembled")))
    }
}

/// Diagonal preconditioning of the outer solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    #[default]
    None,
    /// Diagonal of the system operator; for CSIE-J only its EFIE part.
    Diagonal,
    /// CSIE-J only: EFIE diagonal plus the approximate magnetic-current term.
    CsieDiagonal,
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(PreconditionerKind::None),
            "diagonal" | "jacobi" => Ok(PreconditionerKind::Diagonal),
            "csie-diagonal" => Ok(PreconditionerKind::CsieDiagonal),
            _ => Err(Error::InvalidArgument(format!("unknown preconditioner '{s}'"))),
        }
    }
}

/// Solved current coefficients.
#[derive(Debug, Clone)]
pub struct Solution {
    pub kind: FormulationKind,
    pub electric: Vec<Complex>,
    /// Magnetic coefficients (combined-source kinds only).
    pub magnetic: Option<Vec<Complex>>,
    pub report: SolveReport,
}

/// Tested incident fields `e` and `h`; either may be absent when unused.
#[derive(Debug, Clone, Default)]
pub struct TestedFields {
    pub e: Option<Vec<Complex>>,
    pub h: Option<Vec<Complex>>,
}

impl TestedFields {
    /// Tests both fields of `pw` on `basis`.
    pub fn new(basis: &RwgBasis, pw: &PlaneWave, ctx: &PhysicalContext, rule: RuleOrder) -> Self {
        TestedFields {
            e: Some(rhs_efie(basis, pw, ctx, rule)),
            h: Some(rhs_mfie(basis, pw, ctx, rule)),
        }
    }
}

/// Builds the system for `cfg.kind`, solves it with GMRES and recovers the
/// currents.
pub fn solve(
    cfg: &FormulationConfig,
    mats: &SystemMatrices,
    fields: &TestedFields,
    ctx: &PhysicalContext,
    solver: &GmresConfig,
    precond: PreconditionerKind,
) -> Result<Solution> {
    let combine = |rhs: Rhs| rhs.combine(fields.e.as_deref(), fields.h.as_deref());
    let run = |op: &dyn LinearOperator<Complex>, b: &[Complex], diag: Option<Vec<Complex>>| {
        let pre = diag.map(DiagonalPreconditioner::new).transpose()?;
        gmres(op, b, solver, pre.as_ref().map(|p| p as &dyn Preconditioner<Complex>))
    };
    if precond == PreconditionerKind::CsieDiagonal && cfg.kind != FormulationKind::CsieJ {
        return Err(Error::InvalidArgument("csie-diagonal preconditioning applies to CSIE-J only".into()));
    }
    let wants = precond != PreconditionerKind::None;
    let (electric, magnetic, report) = match cfg.kind {
        FormulationKind::Efie => {
            let (op, rhs) = build_efie(SystemMatrices::need(&mats.t, "T")?, ctx);
            let (x, rep) = run(&op, &combine(rhs)?, wants.then(|| op.diagonal()))?;
            (x, None, rep)
        }
        FormulationKind::Mfie => {
            let (op, rhs) = build_mfie(&mats.a_prime, SystemMatrices::need(&mats.k_nxb, "K_nxb")?, ctx);
            let (x, rep) = run(&op, &combine(rhs)?, wants.then(|| op.diagonal()))?;
            (x, None, rep)
        }
        FormulationKind::Cfie => {
            let (efie, _) = build_efie(SystemMatrices::need(&mats.t, "T")?, ctx);
            let (mfie, _) = build_mfie(&mats.a_prime, SystemMatrices::need(&mats.k_nxb, "K_nxb")?, ctx);
            let (op, rhs) = build_cfie(efie, mfie, cfg.cfie_comb, ctx)?;
            let (x, rep) = run(&op, &combine(rhs)?, wants.then(|| op.diagonal()))?;
            (x, None, rep)
        }
        FormulationKind::CsieJm => {
            let t = SystemMatrices::need(&mats.t, "T")?;
            let k = SystemMatrices::need(&mats.k, "K")?;
            let (op, rhs) = build_csie_jm(t, k, &mats.a, &mats.a_prime, cfg, ctx)?;
            let (x, rep) = run(&op, &combine(rhs)?, wants.then(|| op.diagonal()))?;
            let (i, v) = op.split(&x);
            (i, Some(v), rep)
        }
        FormulationKind::CsieJ => {
            let t = SystemMatrices::need(&mats.t, "T")?;
            let k = SystemMatrices::need(&mats.k, "K")?;
            let (op, rhs) = build_csie_j(t, k, &mats.a, &mats.a_prime, cfg, ctx)?;
            let pre = match precond {
                PreconditionerKind::None => None,
                PreconditionerKind::Diagonal => Some(build_diag_precond(t, ctx)?),
                PreconditionerKind::CsieDiagonal => Some(build_csie_diag_precond(t, &mats.a, &mats.a_prime, cfg, ctx)?),
            };
            let (i, rep) = gmres(
                &op,
                &combine(rhs)?,
                solver,
                pre.as_ref().map(|p| p as &dyn Preconditioner<Complex>),
            )?;
            let v = recover_magnetic(&i, &mats.a, &mats.a_prime, cfg, ctx)?;
            (i, Some(v), rep)
        }
    };
    Ok(Solution {
        kind: cfg.kind,
        electric,
        magnetic,
        report,
    })
}
