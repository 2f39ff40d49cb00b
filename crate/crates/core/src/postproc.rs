//! Far fields, bistatic RCS, the Mie-series reference, error metrics and
//! matrix diagnostics.
//!
//! Far fields are `r`-normalised: the scattered field is
//! `E(r) ≈ F(r̂) e^{−jk₀r} / r` and [`FarFieldSet`] stores `F_θ`, `F_φ`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::basis::RwgBasis;
use crate::context::PhysicalContext;
use crate::error::{Error, Result};
use crate::excitation::PlaneWave;
use crate::quadrature::RuleOrder;
use crate::{CVec3, Complex, DenseComplexMatrix, Vec3};

/// Description of the run a far field came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FarFieldMeta {
    pub formulation: String,
    pub alpha: Option<f64>,
    pub frequency: f64,
    pub mesh_id: String,
    pub unknowns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldSet {
    /// `(θ, φ)` in radians.
    pub directions: Vec<(f64, f64)>,
    pub e_theta: Vec<Complex>,
    pub e_phi: Vec<Complex>,
    pub meta: FarFieldMeta,
}

impl FarFieldSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// `theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi\n");
        for ((&(t, p), et), ep) in self.directions.iter().zip(&self.e_theta).zip(&self.e_phi) {
            writeln!(
                out,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e}",
                fmt_angle(t),
                fmt_angle(p),
                et.re,
                et.im,
                ep.re,
                ep.im
            )
            .expect("write to string");
        }
        out
    }

    /// Entrywise `a·self + b·other` on the same grid.
    pub fn combine(&self, a: Complex, other: &FarFieldSet, b: Complex) -> Result<FarFieldSet> {
        same_grid(self, other)?;
        let lin = |x: &[Complex], y: &[Complex]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Ok(FarFieldSet {
            directions: self.directions.clone(),
            e_theta: lin(&self.e_theta, &other.e_theta),
            e_phi: lin(&self.e_phi, &other.e_phi),
            meta: self.meta.clone(),
        })
    }
}

fn fmt_angle(rad: f64) -> String {
    let deg = rad.to_degrees();
    let rounded = (deg * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Uniform `(θ, φ)` grid with `step_deg` spacing: each pole once, and
/// `360/step` azimuths on every interior latitude. A 10° step gives 614
/// directions.
pub fn direction_grid(step_deg: f64) -> Result<Vec<(f64, f64)>> {
    let n_theta = (180.0 / step_deg).round() as usize;
    let n_phi = (360.0 / step_deg).round() as usize;
    if !(step_deg > 0.0) || n_theta < 2 || (n_theta as f64 * step_deg - 180.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("grid step must divide 180° (got {step_deg})")));
    }
    let mut out = vec![(0.0, 0.0)];
    for it in 1..n_theta {
        let theta = (it as f64 * step_deg).to_radians();
        for ip in 0..n_phi {
            out.push((theta, (ip as f64 * step_deg).to_radians()));
        }
    }
    out.push((PI, 0.0));
    Ok(out)
}

/// Directions in a constant-φ plane, θ from 0 to 180° inclusive.
pub fn elevation_cut(phi_deg: f64, step_deg: f64) -> Vec<(f64, f64)> {
    let n = (180.0 / step_deg).round() as usize;
    (0..=n)
        .map(|i| ((i as f64 * step_deg).to_radians(), phi_deg.to_radians()))
        .collect()
}

fn spherical_frame(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vec3::new(st * cp, st * sp, ct),
        Vec3::new(ct * cp, ct * sp, -st),
        Vec3::new(-sp, cp, 0.0),
    )
}

fn cdot(a: &Vec3, b: &CVec3) -> Complex {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

/// Radiated far field of the electric and (optionally) magnetic surface
/// currents with RWG coefficients `i` and `v`, using three quadrature points
/// per triangle:
///
/// `F = −jk₀Z₀/(4π) [N − r̂(r̂·N)] + jk₀/(4π) r̂ × L`,
/// `N = ∫ J e^{jk₀ r̂·r′}`, `L = ∫ M e^{jk₀ r̂·r′}`.
pub fn far_field(
    basis: &RwgBasis,
    i: &[Complex],
    v: Option<&[Complex]>,
    ctx: &PhysicalContext,
    directions: &[(f64, f64)],
) -> Result<FarFieldSet> {
    let n = basis.len();
    if i.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: i.len(),
        });
    }
    if let Some(v) = v {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if directions.is_empty() {
        return Err(Error::InvalidArgument("direction list is empty".into()));
    }
    let rule = RuleOrder::P3.rule();
    // Current samples (point, J·w, M·w).
    let mut samples: Vec<(Vec3, CVec3, CVec3)> = Vec::new();
    for t in 0..basis.mesh().num_triangles() {
        let lf = basis.local(t);
        for (r, w) in basis.quadrature_points(t, &rule) {
            let mut j = CVec3::zeros();
            let mut m = CVec3::zeros();
            for k in 0..3 {
                let beta = lf.value(k, &r) * w;
                let idx = lf.index[k];
                j += beta.map(|x| i[idx] * x);
                if let Some(v) = v {
                    m += beta.map(|x| v[idx] * x);
                }
            }
            samples.push((r, j, m));
        }
    }

    let k0 = ctx.k0;
    let ce = Complex::new(0.0, -k0 * ctx.z0 / (4.0 * PI));
    let cm = Complex::new(0.0, k0 / (4.0 * PI));
    let mut e_theta = Vec::with_capacity(directions.len());
    let mut e_phi = Vec::with_capacity(directions.len());
    for &(theta, phi) in directions {
        let (r_hat, t_hat, p_hat) = spherical_frame(theta, phi);
        let mut big_n = CVec3::zeros();
        let mut big_l = CVec3::zeros();
        for (r, j, m) in &samples {
            let phase = Complex::new(0.0, k0 * r_hat.dot(r)).exp();
            big_n += j * phase;
            if v.is_some() {
                big_l += m * phase;
            }
        }
        // Transverse part of N in θ̂/φ̂ components; r̂ × L = (−L_φ) θ̂ + L_θ φ̂.
        let (n_t, n_p) = (cdot(&t_hat, &big_n), cdot(&p_hat, &big_n));
        let (l_t, l_p) = (cdot(&t_hat, &big_l), cdot(&p_hat, &big_l));
        e_theta.push(ce * n_t - cm * l_p);
        e_phi.push(ce * n_p + cm * l_t);
    }
    Ok(FarFieldSet {
        directions: directions.to_vec(),
        e_theta,
        e_phi,
        meta: FarFieldMeta {
            frequency: ctx.frequency,
            unknowns: n,
            ..Default::default()
        },
    })
}

/// Bistatic RCS `10 log₁₀(4π|F|²/|E₀|²)` in dBsm per direction.
pub fn bistatic_rcs(ff: &FarFieldSet, pw: &PlaneWave) -> Result<Vec<f64>> {
    let e0 = pw.amplitude().norm_sqr();
    if e0 == 0.0 {
        return Err(Error::InvalidArgument("incident amplitude is zero".into()));
    }
    Ok(ff
        .e_theta
        .iter()
        .zip(&ff.e_phi)
        .map(|(t, p)| 10.0 * (4.0 * PI * (t.norm_sqr() + p.norm_sqr()) / e0).log10())
        .collect())
}

/// `theta_deg,phi_deg,sigma_dbsm`
pub fn rcs_csv(ff: &FarFieldSet, sigma_dbsm: &[f64]) -> String {
    let mut out = String::from("theta_deg,phi_deg,sigma_dbsm\n");
    for (&(t, p), s) in ff.directions.iter().zip(sigma_dbsm) {
        writeln!(out, "{},{},{:.12e}", fmt_angle(t), fmt_angle(p), s).expect("write to string");
    }
    out
}

fn same_grid(a: &FarFieldSet, b: &FarFieldSet) -> Result<()> {
    let same = a.directions.len() == b.directions.len()
        && a
            .directions
            .iter()
            .zip(&b.directions)
            .all(|(x, y)| (x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12);
    if !same {
        return Err(Error::InvalidArgument("far fields are sampled on different direction grids".into()));
    }
    Ok(())
}

/// Floor reported for identical far fields.
pub const ERROR_FLOOR_DB: f64 = -200.0;

/// `20 log₁₀(‖test − ref‖₂ / ‖ref‖₂)` over all directions and both
/// polarisations.
pub fn farfield_error_db(test: &FarFieldSet, reference: &FarFieldSet) -> Result<f64> {
    same_grid(test, reference)?;
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (a, b) in test.e_theta.iter().chain(&test.e_phi).zip(reference.e_theta.iter().chain(&reference.e_phi)) {
        diff += (a - b).norm_sqr();
        norm += b.norm_sqr();
    }
    if norm == 0.0 {
        return Err(Error::InvalidArgument("reference far field is zero".into()));
    }
    if diff == 0.0 {
        return Ok(ERROR_FLOOR_DB);
    }
    Ok((10.0 * (diff / norm).log10()).max(ERROR_FLOOR_DB))
}

/// Spherical Bessel functions `j_0..=j_nmax` at `x > 0` by downward
/// recurrence, normalised with `j_0` or `j_1`.
pub fn spherical_jn(nmax: usize, x: f64) -> Vec<f64> {
    assert!(x > 0.0, "spherical_jn needs x > 0");
    let start = nmax + 20 + (x.abs() as usize) + (2.0 * x.sqrt()) as usize;
    let mut out = vec![0.0; nmax + 1];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    for n in (0..=start).rev() {
        // j_{n-1} = (2n+1)/x j_n − j_{n+1}
        if n <= nmax {
            out[n] = j;
        }
        if n == 0 {
            break;
        }
        let jm1 = (2 * n + 1) as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            let s = 1e-250;
            j *= s;
            jp1 *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let scale = if j0.abs() >= j1.abs() || nmax == 0 {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Spherical Bessel functions of the second kind by upward recurrence.
pub fn spherical_yn(nmax: usize, x: f64) -> Vec<f64> {
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-c / x);
    if nmax >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

/// Mie coefficients `(a_n, b_n)`, `n = 1..=nmax`, of a conducting sphere
/// with size parameter `x = k₀a` (Bohren–Huffman convention).
pub fn mie_coefficients(x: f64, nmax: usize) -> Vec<(Complex, Complex)> {
    let j = spherical_jn(nmax, x);
    let y = spherical_yn(nmax, x);
    let psi = |n: usize| x * j[n];
    let xi = |n: usize| Complex::new(x * j[n], x * y[n]);
    (1..=nmax)
        .map(|n| {
            let nf = n as f64;
            let dpsi = psi(n - 1) - nf * psi(n) / x;
            let dxi = xi(n - 1) - xi(n) * (nf / x);
            (Complex::new(dpsi, 0.0) / dxi, Complex::new(psi(n), 0.0) / xi(n))
        })
        .collect()
}

/// Series truncation `⌈x + 4x^{1/3} + 2⌉`.
pub fn mie_order(x: f64) -> usize {
    (x + 4.0 * x.cbrt() + 2.0).ceil() as usize
}

/// Amplitude functions `S₁(θ)`, `S₂(θ)`.
fn mie_amplitudes(coef: &[(Complex, Complex)], theta: f64) -> (Complex, Complex) {
    let mu = theta.cos();
    let (mut pi_prev, mut pi_n) = (0.0, 1.0);
    let mut s1 = Complex::new(0.0, 0.0);
    let mut s2 = Complex::new(0.0, 0.0);
    for (k, (a, b)) in coef.iter().enumerate() {
        let n = (k + 1) as f64;
        let tau = n * mu * pi_n - (n + 1.0) * pi_prev;
        let f = (2.0 * n + 1.0) / (n * (n + 1.0));
        s1 += (a * pi_n + b * tau) * f;
        s2 += (a * tau + b * pi_n) * f;
        let next = ((2.0 * n + 1.0) * mu * pi_n - (n + 1.0) * pi_prev) / n;
        pi_prev = pi_n;
        pi_n = next;
    }
    (s1, s2)
}

/// Extinction and scattering cross sections from the series (m²).
pub fn mie_cross_sections(diameter: f64, k0: f64) -> (f64, f64) {
    let x = k0 * diameter / 2.0;
    let coef = mie_coefficients(x, mie_order(x));
    let (mut ext, mut sca) = (0.0, 0.0);
    for (k, (a, b)) in coef.iter().enumerate() {
        let w = (2 * k + 3) as f64;
        ext += w * (a + b).re;
        sca += w * (a.norm_sqr() + b.norm_sqr());
    }
    let f = 2.0 * PI / (k0 * k0);
    (f * ext, f * sca)
}

/// Mie far field of a conducting sphere of `diameter` centred at the origin
/// under `pw`, truncated at [`mie_order`] unless `nmax` is given.
pub fn mie_far_field_with_order(
    diameter: f64,
    ctx: &PhysicalContext,
    pw: &PlaneWave,
    directions: &[(f64, f64)],
    nmax: Option<usize>,
) -> FarFieldSet {
    let k0 = ctx.k0;
    let x = k0 * diameter / 2.0;
    let coef = mie_coefficients(x, nmax.unwrap_or_else(|| mie_order(x)));
    // Plane-wave frame: z' = k̂, x' = p̂, y' = k̂ × p̂.
    let ez = pw.direction();
    let ex = pw.polarization();
    let ey = ez.cross(&ex);
    let e0 = pw.amplitude();
    let mut e_theta = Vec::with_capacity(directions.len());
    let mut e_phi = Vec::with_capacity(directions.len());
    for &(theta, phi) in directions {
        let (r_hat, t_hat, p_hat) = spherical_frame(theta, phi);
        let (cx, cy, cz) = (r_hat.dot(&ex), r_hat.dot(&ey), r_hat.dot(&ez));
        let tl = cz.clamp(-1.0, 1.0).acos();
        let pl = cy.atan2(cx);
        let (s1, s2) = mie_amplitudes(&coef, tl);
        let (sp, cp) = pl.sin_cos();
        let pre = e0 * Complex::new(0.0, -1.0 / k0);
        let f_tl = pre * s2.conj() * cp;
        let f_pl = -pre * s1.conj() * sp;
        // Local unit vectors of the plane-wave frame, expressed globally.
        let (stl, ctl) = tl.sin_cos();
        let tl_hat = ex * (ctl * cp) + ey * (ctl * sp) - ez * stl;
        let pl_hat = -ex * sp + ey * cp;
        let f = tl_hat.map(|c| f_tl * c) + pl_hat.map(|c| f_pl * c);
        e_theta.push(cdot(&t_hat, &f));
        e_phi.push(cdot(&p_hat, &f));
    }
    FarFieldSet {
        directions: directions.to_vec(),
        e_theta,
        e_phi,
        meta: FarFieldMeta {
            formulation: "mie".into(),
            frequency: ctx.frequency,
            ..Default::default()
        },
    }
}

pub fn mie_far_field(diameter: f64, ctx: &PhysicalContext, pw: &PlaneWave, directions: &[(f64, f64)]) -> FarFieldSet {
    mie_far_field_with_order(diameter, ctx, pw, directions, None)
}

/// Singular values sorted descending and normalised to `σ_max = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub values: Vec<f64>,
    /// `σ_max / σ_min`; infinite for a numerically singular matrix.
    pub condition: f64,
    pub size: usize,
}

impl SpectrumReport {
    /// `index,sigma_normalized`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sigma_normalized\n");
        for (i, s) in self.values.iter().enumerate() {
            writeln!(out, "{i},{s:.17e}").expect("write to string");
        }
        out
    }

    /// Value at the fractional position `q ∈ [0, 1]` of the spectrum.
    pub fn at_fraction(&self, q: f64) -> f64 {
        let idx = ((self.values.len() - 1) as f64 * q).round() as usize;
        self.values[idx]
    }
}

fn singular_values(m: &DenseComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() || m.rows() == 0 {
        return Err(Error::InvalidArgument("singular values need a non-empty square matrix".into()));
    }
    if !m.all_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let svd = m.to_nalgebra().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

fn condition_of(s: &[f64]) -> f64 {
    let (max, min) = (s[0], s[s.len() - 1]);
    if max == 0.0 || min <= max * f64::EPSILON * s.len() as f64 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Full-SVD spectral condition number.
pub fn condition_number(m: &DenseComplexMatrix) -> Result<f64> {
    Ok(condition_of(&singular_values(m)?))
}

pub fn singular_spectrum(m: &DenseComplexMatrix) -> Result<SpectrumReport> {
    let s = singular_values(m)?;
    if s[0] == 0.0 {
        return Err(Error::Singular);
    }
    let condition = condition_of(&s);
    let max = s[0];
    Ok(SpectrumReport {
        values: s.iter().map(|v| v / max).collect(),
        condition,
        size: m.rows(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityModeKind {
    /// Roots of `j_n(x)`.
    Te,
    /// Roots of `d/dx [x j_n(x)]`.
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode {
    pub kind: CavityModeKind,
    pub order: usize,
    /// Root `x = k a`.
    pub root: f64,
    /// Resonance frequency (Hz).
    pub frequency: f64,
}

/// The first `count` distinct interior resonances of a spherical cavity of
/// `diameter`, sorted by frequency. Degenerate modes appear once per
/// `(kind, order, root)`.
pub fn cavity_resonances(diameter: f64, count: usize) -> Vec<CavityMode> {
    let radius = diameter / 2.0;
    let mut x_max = 10.0;
    loop {
        let mut modes = Vec::new();
        let mut order = 1;
        // j_n has no roots below about n + 1.
        while (order as f64) < x_max {
            for kind in [CavityModeKind::Te, CavityModeKind::Tm] {
                let f = |x: f64| {
                    let j = spherical_jn(order, x);
                    match kind {
                        CavityModeKind::Te => j[order],
                        // (x j_n)' = x j_{n-1} − n j_n
                        CavityModeKind::Tm => x * j[order - 1] - order as f64 * j[order],
                    }
                };
                for root in bracket_roots(&f, 0.5, x_max, 0.01) {
                    modes.push(CavityMode {
                        kind,
                        order,
                        root,
                        frequency: root * crate::constants::C0 / (2.0 * PI * radius),
                    });
                }
            }
            order += 1;
        }
        modes.sort_by(|a, b| a.root.total_cmp(&b.root));
        if modes.len() >= count {
            modes.truncate(count);
            return modes;
        }
        x_max *= 2.0;
    }
}

fn bracket_roots(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(f, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    roots
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while (b - a) > 1e-12 * b.abs() {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
