use std::f64::consts::PI;

use csie_core::basis::RwgBasis;
use csie_core::constants::C0;
use csie_core::excitation::{PlaneWave, Polarization};
use csie_core::formulations::{solve, FormulationConfig, FormulationKind, PreconditionerKind, SystemMatrices, TestedFields};
use csie_core::krylov::GmresConfig;
use csie_core::mesh::gen_icosphere;
use csie_core::operators::QuadratureConfig;
use csie_core::postproc::*;
use csie_core::quadrature::{gauss_legendre, RuleOrder};
use csie_core::{Complex, DenseComplexMatrix, PhysicalContext};
use proptest::prelude::*;

fn ctx(k0: f64) -> PhysicalContext {
    PhysicalContext::from_wavenumber(k0).unwrap()
}

/// `−(4π/k) Im(p̂ · F(k̂)) / E₀`, valid for the e^{+jωt} convention.
fn extinction_from_forward(ff: &FarFieldSet, k0: f64) -> f64 {
    -(4.0 * PI / k0) * ff.e_theta[0].im
}

/// `∫ |F|² dΩ` by a Gauss product rule.
fn scattered_power(field: impl Fn(&[(f64, f64)]) -> FarFieldSet, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    for (xi, wi) in x.iter().zip(&w) {
        let theta = PI * (xi + 1.0) / 2.0;
        for j in 0..2 * n {
            dirs.push((theta, 2.0 * PI * j as f64 / (2 * n) as f64));
            weights.push(wi * PI / 2.0 * theta.sin() * 2.0 * PI / (2 * n) as f64);
        }
    }
    let ff = field(&dirs);
    ff.e_theta
        .iter()
        .zip(&ff.e_phi)
        .zip(&weights)
        .map(|((t, p), w)| w * (t.norm_sqr() + p.norm_sqr()))
        .sum()
}

#[test]
fn standard_grid_has_614_directions() {
    let g = direction_grid(10.0).unwrap();
    assert_eq!(g.len(), 614);
    assert_eq!(g[0], (0.0, 0.0));
    assert_eq!(*g.last().unwrap(), (PI, 0.0));
    assert_eq!(g.iter().filter(|d| d.0 == 0.0).count(), 1);
    assert!(direction_grid(7.0).is_err());
    assert!(direction_grid(0.0).is_err());
    assert_eq!(elevation_cut(90.0, 5.0).len(), 37);
}

#[test]
fn spherical_bessel_functions_match_closed_forms() {
    for x in [0.05, 0.7, 2.7437, 9.0, 31.0] {
        let j = spherical_jn(30, x);
        let y = spherical_yn(30, x);
        let (s, c) = x.sin_cos();
        let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
        let y2 = -(3.0 / (x * x) - 1.0) * c / x - 3.0 * s / (x * x);
        assert!((j[2] - j2).abs() <= 1e-12 * (1.0 + j2.abs()), "x = {x}");
        assert!((y[2] - y2).abs() <= 1e-9 * y2.abs(), "x = {x}");
        // Cross product j_n y_{n−1} − j_{n−1} y_n = 1/x²
        for n in 1..=(x as usize).min(30) {
            let w = j[n] * y[n - 1] - j[n - 1] * y[n];
            assert!((w * x * x - 1.0).abs() < 1e-9, "x = {x}, n = {n}");
        }
    }
}

#[test]
fn rayleigh_limit_of_the_mie_series() {
    // Small sphere: electric and magnetic dipoles add to ½k²a³ forward and
    // 3/2·k²a³ backward.
    let (a, k0) = (0.01, 1.0);
    let c = ctx(k0);
    let ff = mie_far_field(2.0 * a, &c, &PlaneWave::axial(), &[(0.0, 0.0), (PI, 0.0)]);
    let base = k0 * k0 * a.powi(3);
    assert!((ff.e_theta[0] - Complex::new(0.5 * base, 0.0)).norm() < 1e-3 * base);
    // θ̂ at the south pole (φ = 0) is −x̂.
    assert!((ff.e_theta[1] - Complex::new(-1.5 * base, 0.0)).norm() < 1e-3 * base);
    let sigma = bistatic_rcs(&ff, &PlaneWave::axial()).unwrap();
    let rayleigh = 9.0 * PI * a * a * (k0 * a).powi(4);
    assert!((sigma[1] - 10.0 * rayleigh.log10()).abs() < 0.01);
}

#[test]
fn large_sphere_backscatter_approaches_geometric_optics() {
    let a = 1.0;
    let c = ctx(30.0);
    let ff = mie_far_field(2.0 * a, &c, &PlaneWave::axial(), &[(PI, 0.0)]);
    let sigma = 4.0 * PI * (ff.e_theta[0].norm_sqr() + ff.e_phi[0].norm_sqr());
    assert!((sigma / (PI * a * a) - 1.0).abs() < 0.1, "{sigma}");
}

#[test]
fn mie_series_satisfies_the_optical_theorem() {
    for ka in [0.3, 1.6, 2.7437, 6.0] {
        let k0 = 2.0;
        let d = ka;
        let c = ctx(k0);
        let pw = PlaneWave::axial();
        let (ext, sca) = mie_cross_sections(d, k0);
        assert!((ext - sca).abs() <= 1e-10 * ext, "ka = {ka}");
        let fwd = mie_far_field(d, &c, &pw, &[(0.0, 0.0)]);
        assert!((extinction_from_forward(&fwd, k0) - ext).abs() <= 1e-10 * ext);
        let power = scattered_power(|dirs| mie_far_field(d, &c, &pw, dirs), 40);
        assert!((power - sca).abs() <= 1e-8 * sca, "ka = {ka}: {power} vs {sca}");
    }
}

#[test]
fn truncation_order_is_converged() {
    let c = ctx(3.2);
    let pw = PlaneWave::from_angles(30.0, 20.0, Polarization::Phi, 1.0);
    let dirs = direction_grid(10.0).unwrap();
    let base = mie_far_field(1.0, &c, &pw, &dirs);
    let more = mie_far_field_with_order(1.0, &c, &pw, &dirs, Some(mie_order(1.6) + 5));
    // A relative change of 1e-10 is −200 dB.
    assert!(farfield_error_db(&more, &base).unwrap() <= -200.0 + 1e-9);
}

#[test]
fn error_metric() {
    let c = ctx(1.0);
    let dirs = direction_grid(30.0).unwrap();
    let reference = mie_far_field(1.0, &c, &PlaneWave::axial(), &dirs);
    assert_eq!(farfield_error_db(&reference, &reference).unwrap(), ERROR_FLOOR_DB);
    let scaled = reference.combine(Complex::new(1.1, 0.0), &reference, Complex::new(0.0, 0.0)).unwrap();
    assert!((farfield_error_db(&scaled, &reference).unwrap() + 20.0).abs() < 1e-9);
    let other = mie_far_field(1.0, &c, &PlaneWave::axial(), &direction_grid(10.0).unwrap());
    assert!(farfield_error_db(&other, &reference).is_err());
    let zero = reference.combine(Complex::new(0.0, 0.0), &reference, Complex::new(0.0, 0.0)).unwrap();
    assert!(farfield_error_db(&reference, &zero).is_err());
}

#[test]
fn rcs_needs_an_incident_amplitude() {
    let c = ctx(1.0);
    let dirs = [(0.5, 0.5)];
    let pw = PlaneWave::axial();
    let ff = mie_far_field(1.0, &c, &pw, &dirs);
    let sigma = bistatic_rcs(&ff, &pw).unwrap();
    let expect = 10.0 * (4.0 * PI * (ff.e_theta[0].norm_sqr() + ff.e_phi[0].norm_sqr())).log10();
    assert!((sigma[0] - expect).abs() < 1e-12);
    let dark = pw.with_amplitude(Complex::new(0.0, 0.0));
    assert!(bistatic_rcs(&ff, &dark).is_err());
    // Doubling the amplitude doubles the field but leaves σ unchanged.
    let bright = pw.with_amplitude(Complex::new(0.0, 2.0));
    let ff2 = mie_far_field(1.0, &c, &bright, &dirs);
    assert!((bistatic_rcs(&ff2, &bright).unwrap()[0] - sigma[0]).abs() < 1e-10);
    assert!(rcs_csv(&ff, &sigma).starts_with("theta_deg,phi_deg,sigma_dbsm\n"));
}

#[test]
fn far_field_csv_layout() {
    let c = ctx(1.0);
    let dirs = direction_grid(90.0).unwrap();
    let ff = mie_far_field(1.0, &c, &PlaneWave::axial(), &dirs);
    let csv = ff.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "theta_deg,phi_deg,re_Etheta,im_Etheta,re_Ephi,im_Ephi");
    assert_eq!(lines.len(), 1 + dirs.len());
    assert!(lines[2].starts_with("90,0,"));
    assert!(lines[3].starts_with("90,90,"));
}

#[test]
fn condition_number_and_spectrum() {
    let d = DenseComplexMatrix::from_diagonal(&[Complex::new(1.0, 0.0), Complex::new(0.0, -2.0), Complex::new(4.0, 0.0)]);
    assert!((condition_number(&d).unwrap() - 4.0).abs() < 1e-12);
    let s = singular_spectrum(&d).unwrap();
    assert_eq!(s.values.len(), 3);
    assert!((s.values[0] - 1.0).abs() < 1e-15);
    assert!((s.values[2] - 0.25).abs() < 1e-12);
    assert!(s.to_csv().starts_with("index,sigma_normalized\n0,"));
    let singular = DenseComplexMatrix::from_diagonal(&[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
    assert_eq!(condition_number(&singular).unwrap(), f64::INFINITY);
    assert!(condition_number(&DenseComplexMatrix::zeros(2, 3)).is_err());
    assert!(singular_spectrum(&DenseComplexMatrix::zeros(2, 2)).is_err());
}

#[test]
fn cavity_resonances_of_a_unit_sphere() {
    // Roots of (x j_n)′ and j_n in ascending order.
    let expect = [
        (CavityModeKind::Tm, 1, 2.743707),
        (CavityModeKind::Tm, 2, 3.870239),
        (CavityModeKind::Te, 1, 4.493409),
        (CavityModeKind::Tm, 3, 4.973420),
        (CavityModeKind::Te, 2, 5.763459),
    ];
    let modes = cavity_resonances(1.0, 5);
    assert_eq!(modes.len(), 5);
    for (m, (kind, order, root)) in modes.iter().zip(expect) {
        assert_eq!((m.kind, m.order), (kind, order));
        assert!((m.root - root).abs() < 1e-6, "{m:?}");
        assert!((m.frequency - m.root * C0 / PI).abs() < 1e-6 * m.frequency);
    }
    let j = spherical_jn(1, modes[2].root);
    assert!(j[1].abs() < 1e-10);
    let half = cavity_resonances(0.5, 1);
    assert!((half[0].frequency / modes[0].frequency - 2.0).abs() < 1e-9);
}

#[test]
fn moment_method_far_field_matches_mie() {
    let c = ctx(3.2);
    let basis = RwgBasis::new(&gen_icosphere(1.0, 2).unwrap()).unwrap();
    let kinds = [FormulationKind::Efie];
    let mats = SystemMatrices::assemble(&basis, &c, &QuadratureConfig::default(), &kinds).unwrap();
    let pw = PlaneWave::axial();
    let fields = TestedFields::new(&basis, &pw, &c, RuleOrder::P7);
    let cfg = FormulationConfig::new(FormulationKind::Efie);
    let sol = solve(&cfg, &mats, &fields, &c, &GmresConfig::default(), PreconditionerKind::None).unwrap();
    let dirs = direction_grid(10.0).unwrap();
    let ff = far_field(&basis, &sol.electric, None, &c, &dirs).unwrap();
    let mie = mie_far_field(1.0, &c, &pw, &dirs);
    assert!(farfield_error_db(&ff, &mie).unwrap() < -28.0);

    // Energy balance of the numerical solution.
    let power = scattered_power(|d| far_field(&basis, &sol.electric, None, &c, d).unwrap(), 24);
    let ext = extinction_from_forward(&ff, c.k0);
    assert!((power - ext).abs() < 0.02 * ext, "{power} vs {ext}");

    // A zero magnetic current changes nothing; dimensions are checked.
    let zeros = vec![Complex::new(0.0, 0.0); basis.len()];
    let with_m = far_field(&basis, &sol.electric, Some(&zeros), &c, &dirs).unwrap();
    assert_eq!(farfield_error_db(&with_m, &ff).unwrap(), ERROR_FLOOR_DB);
    assert!(far_field(&basis, &sol.electric[1..], None, &c, &dirs).is_err());
    assert!(far_field(&basis, &sol.electric, None, &c, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mie_field_is_covariant_under_rotation_about_the_axis(psi in 0.0f64..360.0, theta in 5.0f64..175.0, phi in 0.0f64..360.0) {
        // Rotating the incident polarisation by ψ about z rotates the
        // scattered pattern by ψ; θ/φ components are unchanged.
        let c = ctx(3.2);
        let pw0 = PlaneWave::from_angles(0.0, 0.0, Polarization::Theta, 1.0);
        let pw1 = PlaneWave::from_angles(0.0, psi, Polarization::Theta, 1.0);
        let d0 = [(theta.to_radians(), phi.to_radians())];
        let d1 = [(theta.to_radians(), (phi + psi).to_radians())];
        let f0 = mie_far_field(1.0, &c, &pw0, &d0);
        let f1 = mie_far_field(1.0, &c, &pw1, &d1);
        prop_assert!((f0.e_theta[0] - f1.e_theta[0]).norm() < 1e-12);
        prop_assert!((f0.e_phi[0] - f1.e_phi[0]).norm() < 1e-12);
    }
}

#[test]
fn rayleigh_scaling_over_an_octave() {
    let c = ctx(1.0);
    let back = |d: f64| {
        let ff = mie_far_field(d, &c, &PlaneWave::axial(), &[(PI, 0.0)]);
        ff.e_theta[0].norm_sqr() + ff.e_phi[0].norm_sqr()
    };
    // ka = 0.1 → 0.2
    let ratio = back(0.4) / back(0.2);
    let expect = 2f64.powi(6);
    assert!((ratio / expect - 1.0).abs() < 0.02 * 4.0, "{ratio}");
    // Per unit area (σ/πa²) the growth is (ka)⁴.
    assert!(((ratio / 4.0) / 16.0 - 1.0).abs() < 0.08);
}

#[test]
fn trivial_spectra() {
    let one = Complex::new(1.0, 0.0);
    assert!((condition_number(&DenseComplexMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
    let d = DenseComplexMatrix::from_diagonal(&[one * 10.0, one]);
    assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
    // A unitary matrix: every normalised singular value is 1.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = DenseComplexMatrix::from_row_major(2, 2, vec![one * s, Complex::new(0.0, s), Complex::new(0.0, s), one * s]).unwrap();
    let spec = singular_spectrum(&u).unwrap();
    assert!(spec.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    let m = DenseComplexMatrix::from_fn(5, 5, |i, j| Complex::new((i * 5 + j) as f64 % 3.0 + if i == j { 4.0 } else { 0.0 }, 0.5));
    let spec = singular_spectrum(&m).unwrap();
    assert!((condition_number(&m).unwrap() - spec.values[0] / spec.values[4]).abs() < 1e-9 * spec.condition);
    assert!(spec.values.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn resonances_increase_and_interlace() {
    let modes = cavity_resonances(1.0, 20);
    assert!(modes.windows(2).all(|w| w[0].frequency < w[1].frequency));
    // For each order the TM and TE roots alternate, TM first.
    for order in 1..=3 {
        let kinds: Vec<CavityModeKind> = modes.iter().filter(|m| m.order == order).map(|m| m.kind).collect();
        for (i, k) in kinds.iter().enumerate() {
            let expect = if i % 2 == 0 { CavityModeKind::Tm } else { CavityModeKind::Te };
            assert_eq!(*k, expect, "order {order}");
        }
    }
}

#[test]
fn far_field_of_currents_is_linear() {
    let c = ctx(2.0);
    let basis = RwgBasis::new(&gen_icosphere(1.0, 1).unwrap()).unwrap();
    let n = basis.len();
    let dirs = direction_grid(30.0).unwrap();
    let zeros = vec![Complex::new(0.0, 0.0); n];
    let ff0 = far_field(&basis, &zeros, Some(&zeros), &c, &dirs).unwrap();
    assert!(ff0.e_theta.iter().chain(&ff0.e_phi).all(|z| z.norm() == 0.0));

    let wave = |s: f64| -> Vec<Complex> { (0..n).map(|k| Complex::new((k as f64 * s).sin(), (k as f64 * s).cos())).collect() };
    let (i1, v1, i2, v2) = (wave(0.3), wave(1.7), wave(2.2), wave(0.9));
    let (a, b) = (Complex::new(0.7, -0.2), Complex::new(-1.3, 0.4));
    let mix = |x: &[Complex], y: &[Complex]| -> Vec<Complex> { x.iter().zip(y).map(|(p, q)| a * p + b * q).collect() };
    let f1 = far_field(&basis, &i1, Some(&v1), &c, &dirs).unwrap();
    let f2 = far_field(&basis, &i2, Some(&v2), &c, &dirs).unwrap();
    let combined = far_field(&basis, &mix(&i1, &i2), Some(&mix(&v1, &v2)), &c, &dirs).unwrap();
    let expect = f1.combine(a, &f2, b).unwrap();
    assert!(farfield_error_db(&combined, &expect).unwrap() < -250.0f64.max(ERROR_FLOOR_DB) + 60.0);
}

#[test]
fn combined_source_far_fields_agree_on_the_cube() {
    use csie_core::mesh::gen_cube;
    let c = ctx(PI);
    let basis = RwgBasis::new(&gen_cube(1.0, 1).unwrap()).unwrap();
    let kinds = [FormulationKind::CsieJ, FormulationKind::CsieJm];
    let mats = SystemMatrices::assemble(&basis, &c, &QuadratureConfig::default(), &kinds).unwrap();
    let fields = TestedFields::new(&basis, &PlaneWave::axial(), &c, RuleOrder::P7);
    let solver = GmresConfig::default();
    let dirs = direction_grid(10.0).unwrap();
    let ff = |kind| {
        let sol = solve(&FormulationConfig::new(kind), &mats, &fields, &c, &solver, PreconditionerKind::None).unwrap();
        far_field(&basis, &sol.electric, sol.magnetic.as_deref(), &c, &dirs).unwrap()
    };
    let (j, jm) = (ff(FormulationKind::CsieJ), ff(FormulationKind::CsieJm));
    // 10 × the outer tolerance, in dB.
    assert!(farfield_error_db(&j, &jm).unwrap() <= 20.0 * (10.0 * solver.tol).log10());
}

#[test]
fn block_system_spectrum_has_twice_the_length() {
    use csie_core::formulations::build_csie_jm;
    use csie_core::linalg::LinearOperator;
    use csie_core::mesh::gen_cube;
    let c = ctx(PI);
    let basis = RwgBasis::new(&gen_cube(1.0, 1).unwrap()).unwrap();
    let mats = SystemMatrices::assemble(&basis, &c, &QuadratureConfig::default(), &[FormulationKind::CsieJm]).unwrap();
    let cfg = FormulationConfig::new(FormulationKind::CsieJm);
    let (op, _) = build_csie_jm(mats.t.as_ref().unwrap(), mats.k.as_ref().unwrap(), &mats.a, &mats.a_prime, &cfg, &c).unwrap();
    let spec = singular_spectrum(&op.to_dense().unwrap()).unwrap();
    assert_eq!(spec.values.len(), 2 * basis.len());
    assert!(spec.condition.is_finite() && spec.condition >= 1.0);
}
