//! Free-space Green's function `G₀ = exp(−jk₀R) / (4πR)` and the smooth
//! remainders left after subtracting its static Taylor terms.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Complex, Vec3};

const FOUR_PI: f64 = 4.0 * PI;

/// `G₀(r, r′)`; coincident points are rejected.
pub fn greens(r: &Vec3, rp: &Vec3, k0: f64) -> Result<Complex> {
    let big_r = (r - rp).norm();
    if big_r == 0.0 {
        return Err(Error::InvalidArgument("Green's function at coincident points".into()));
    }
    Ok(greens_at(big_r, k0))
}

#[inline]
pub fn greens_at(big_r: f64, k0: f64) -> Complex {
    Complex::from_polar(1.0 / (FOUR_PI * big_r), -k0 * big_r)
}

/// `dG₀/dR`; `∇_r G₀ = dG₀/dR · (r − r′)/R`.
#[inline]
pub fn greens_derivative(big_r: f64, k0: f64) -> Complex {
    let x = k0 * big_r;
    -Complex::new(1.0, x) * Complex::from_polar(1.0 / (FOUR_PI * big_r * big_r), -x)
}

/// Below this `k₀R` the remainders are summed as power series.
const SERIES_LIMIT: f64 = 0.5;
const SERIES_TERMS: usize = 16;

/// `G₀ − 1/(4πR)` (order 1) or `G₀ − 1/(4πR) + k₀²R/(8π)` (order 2).
/// Bounded and finite at `R = 0`.
#[inline]
pub fn greens_remainder(big_r: f64, k0: f64, order: u8) -> Complex {
    let x = k0 * big_r;
    if x < SERIES_LIMIT {
        // (e^{−jx} − 1)/(4πR) = k/(4π) Σ_{m≥1} (−j)^m x^{m−1}/m!
        let mut sum = Complex::new(0.0, 0.0);
        // p = (−j)^m x^{m−1} / m!, starting at m = 1; order 2 drops the m = 2 term.
        let mut p = Complex::new(0.0, -1.0);
        for m in 1..=SERIES_TERMS {
            if !(order >= 2 && m == 2) {
                sum += p;
            }
            p *= Complex::new(0.0, -x) / ((m + 1) as f64);
        }
        sum * (k0 / FOUR_PI)
    } else {
        let mut g = (Complex::from_polar(1.0, -x) - 1.0) / (FOUR_PI * big_r);
        if order >= 2 {
            g += k0 * k0 * big_r / (2.0 * FOUR_PI);
        }
        g
    }
}

/// `dG₀/dR + 1/(4πR²)` (order 1) or additionally `+ k₀²/(8π)` (order 2).
#[inline]
pub fn greens_derivative_remainder(big_r: f64, k0: f64, order: u8) -> Complex {
    let x = k0 * big_r;
    if x < SERIES_LIMIT {
        // [1 − (1 + jx)e^{−jx}]/(4πR²) = k²/(4π) Σ_{m≥2} (−j)^m (m−1)/m! x^{m−2}
        let first = if order >= 2 { 3 } else { 2 };
        let mut sum = Complex::new(0.0, 0.0);
        // p = (−j)^m x^{m−2} / m!, starting at m = 2
        let mut p = Complex::new(-0.5, 0.0);
        for m in 2..=(SERIES_TERMS + 1) {
            if m >= first {
                sum += p * (m as f64 - 1.0);
            }
            p *= Complex::new(0.0, -x) / ((m + 1) as f64);
        }
        sum * (k0 * k0 / FOUR_PI)
    } else {
        let mut g = greens_derivative(big_r, k0) + 1.0 / (FOUR_PI * big_r * big_r);
        if order >= 2 {
            g += k0 * k0 / (2.0 * FOUR_PI);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_is_static_kernel() {
        for k in [0.1, 1.0, 7.3] {
            let g = greens_at(0.37, k);
            assert!((g.norm() - 1.0 / (FOUR_PI * 0.37)).abs() < 1e-15);
        }
    }

    #[test]
    fn static_limit_is_real() {
        let g = greens(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 2.0), 0.0).unwrap();
        assert_eq!(g, Complex::new(1.0 / (FOUR_PI * 2.0), 0.0));
    }

    #[test]
    fn half_wavelength_phase() {
        let g = greens(&Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0), PI).unwrap();
        assert!((g - Complex::new(-1.0 / FOUR_PI, 0.0)).norm() < 1e-16);
        assert!(greens(&Vec3::zeros(), &Vec3::zeros(), 1.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (r, k, h) = (0.8, 2.5, 1e-6);
        let fd = (greens_at(r + h, k) - greens_at(r - h, k)) / (2.0 * h);
        assert!((fd - greens_derivative(r, k)).norm() < 1e-8);
    }

    #[test]
    fn remainders_continuous_across_series_switch() {
        let k = 3.0;
        for order in [1, 2] {
            let r0 = SERIES_LIMIT / k;
            let below = greens_remainder(r0 * (1.0 - 1e-12), k, order);
            let above = greens_remainder(r0 * (1.0 + 1e-12), k, order);
            assert!((below - above).norm() < 1e-12 * above.norm().max(1.0), "order {order}");
            let below = greens_derivative_remainder(r0 * (1.0 - 1e-12), k, order);
            let above = greens_derivative_remainder(r0 * (1.0 + 1e-12), k, order);
            assert!((below - above).norm() < 1e-11 * above.norm().max(1.0), "order {order}: {below} {above}");
        }
    }

    #[test]
    fn remainder_limits_at_zero() {
        let k = 2.0;
        assert!((greens_remainder(0.0, k, 1) - Complex::new(0.0, -k / FOUR_PI)).norm() < 1e-16);
        assert!((greens_derivative_remainder(0.0, k, 1) - Complex::new(-k * k / (2.0 * FOUR_PI), 0.0)).norm() < 1e-16);
        assert!(greens_derivative_remainder(0.0, k, 2).norm() < 1e-16);
    }
}
