//! Closed-form potential integrals over a flat triangle for constant and
//! linear source densities, evaluated at an arbitrary observation point.
//!
//! For an observation point `r` and a source triangle `S`, [`static_integrals`]
//! returns `∫ R^q`, `∫ (r' − r) R^q` and `∇_r ∫ R^q` for `q = −1` and `q = +1`,
//! where `R = |r − r'|`. The formulas reduce the surface integrals to line
//! integrals along the three edges plus a solid-angle term.

use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticIntegrals {
    /// `∫ 1/R ds'`
    pub inv_r: f64,
    /// `∫ (r' − r)/R ds'`
    pub inv_r_vec: Vec3,
    /// `∇_r ∫ 1/R ds'` (principal value for in-plane points)
    pub inv_r_grad: Vec3,
    /// `∫ R ds'`
    pub r: f64,
    /// `∫ (r' − r) R ds'`
    pub r_vec: Vec3,
    /// `∇_r ∫ R ds'`
    pub r_grad: Vec3,
}

/// Relative height below which the observation point is treated as lying in
/// the source plane.
const PLANE_EPS: f64 = 1e-12;

/// Static integrals of `S = (v0, v1, v2)` with unit normal `normal`
/// (counter-clockwise orientation around `normal`).
pub fn static_integrals(r: &Vec3, corners: &[Vec3; 3], normal: &Vec3) -> StaticIntegrals {
    let scale = (corners[1] - corners[0]).norm().max((corners[2] - corners[0]).norm());
    let mut d = normal.dot(&(r - corners[0]));
    if d.abs() < PLANE_EPS * scale {
        d = 0.0;
    }
    let rho = r - normal * d;
    let d2 = d * d;

    let mut sum_t_f = 0.0;
    let mut sum_t_k1 = 0.0;
    let mut sum_u_f = Vec3::zeros();
    let mut sum_u_k1 = Vec3::zeros();
    let mut sum_u_k3 = Vec3::zeros();

    for i in 0..3 {
        let a = corners[(i + 1) % 3];
        let b = corners[(i + 2) % 3];
        let edge = b - a;
        let len = edge.norm();
        let s = edge / len;
        let u = s.cross(normal);
        let l_plus = (b - rho).dot(&s);
        let l_minus = (a - rho).dot(&s);
        let t = (a - rho).dot(&u);
        let r0_sq = t * t + d2;
        let r_plus = (r - b).norm();
        let r_minus = (r - a).norm();

        let f = edge_log(l_plus, l_minus, r_plus, r_minus, r0_sq);
        // ∫ R dl and ∫ R³ dl along the edge
        let k1 = 0.5 * (r0_sq * f + l_plus * r_plus - l_minus * r_minus);
        let k3 = 0.25 * (3.0 * r0_sq * k1 + l_plus * r_plus.powi(3) - l_minus * r_minus.powi(3));

        sum_t_f += t * f;
        sum_t_k1 += t * k1;
        sum_u_f += u * f;
        sum_u_k1 += u * k1;
        sum_u_k3 += u * k3;
    }

    // d ∫ R⁻³ ds', i.e. the signed solid angle seen from r.
    let omega = if d == 0.0 { 0.0 } else { solid_angle(r, corners).abs() };
    let normal_flux = d.signum() * omega;

    let inv_r = sum_t_f - d.abs() * omega;
    let r_int = (d2 * inv_r + sum_t_k1) / 3.0;

    StaticIntegrals {
        inv_r,
        inv_r_vec: sum_u_k1 - normal * (d * inv_r),
        inv_r_grad: -sum_u_f - normal * normal_flux,
        r: r_int,
        r_vec: sum_u_k3 / 3.0 - normal * (d * r_int),
        r_grad: -sum_u_k1 + normal * (d * inv_r),
    }
}

/// `∫ dl / R` along an edge, `ln((R⁺ + l⁺)/(R⁻ + l⁻))`, in a form free of
/// cancellation on either side of the edge line.
#[inline]
fn edge_log(l_plus: f64, l_minus: f64, r_plus: f64, r_minus: f64, r0_sq: f64) -> f64 {
    if l_minus >= 0.0 {
        ((r_plus + l_plus) / (r_minus + l_minus)).ln()
    } else if l_plus <= 0.0 {
        ((r_minus - l_minus) / (r_plus - l_plus)).ln()
    } else if r0_sq > 0.0 {
        ((r_plus + l_plus) * (r_minus - l_minus) / r0_sq).ln()
    } else {
        // Observation point on the edge itself.
        f64::INFINITY
    }
}

/// Signed solid angle of the triangle seen from `r` (Van Oosterom–Strackee).
pub fn solid_angle(r: &Vec3, corners: &[Vec3; 3]) -> f64 {
    let a = corners[0] - r;
    let b = corners[1] - r;
    let c = corners[2] - r;
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numer = a.dot(&b.cross(&c));
    let denom = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * numer.atan2(denom)
}

/// Euclidean distance from `p` to the segment `a–b`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Euclidean distance from `p` to the closed triangle.
pub fn point_triangle_distance(p: &Vec3, corners: &[Vec3; 3], normal: &Vec3) -> f64 {
    let d = normal.dot(&(p - corners[0]));
    let q = p - normal * d;
    let inside = (0..3).all(|i| {
        let a = corners[i];
        let b = corners[(i + 1) % 3];
        (b - a).cross(&(q - a)).dot(normal) >= 0.0
    });
    if inside {
        d.abs()
    } else {
        point_boundary_distance(p, corners)
    }
}

/// Distance from `p` to the boundary (three edges) of the triangle.
pub fn point_boundary_distance(p: &Vec3, corners: &[Vec3; 3]) -> f64 {
    (0..3)
        .map(|i| point_segment_distance(p, &corners[i], &corners[(i + 1) % 3]))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::collapsed_rule;

    /// Brute-force reference: 4^levels sub-triangles with a 12×12 collapsed rule each.
    fn brute(r: &Vec3, corners: &[Vec3; 3], levels: usize) -> (f64, Vec3, Vec3, f64, Vec3, Vec3) {
        let rule = collapsed_rule(12);
        let mut tris = vec![*corners];
        for _ in 0..levels {
            let mut next = Vec::new();
            for [a, b, c] in tris {
                let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
                next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            tris = next;
        }
        let mut out = (0.0, Vec3::zeros(), Vec3::zeros(), 0.0, Vec3::zeros(), Vec3::zeros());
        for [a, b, c] in tris {
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            for (p, w) in rule.iter() {
                let rp = a * p[0] + b * p[1] + c * p[2];
                let diff = rp - r;
                let big_r = diff.norm();
                let w = w * area;
                out.0 += w / big_r;
                out.1 += diff * (w / big_r);
                out.2 += diff * (w / big_r.powi(3));
                out.3 += w * big_r;
                out.4 += diff * (w * big_r);
                out.5 -= diff * (w / big_r);
            }
        }
        out
    }

    fn triangle() -> ([Vec3; 3], Vec3) {
        let c = [Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.3, 0.1, 0.2), Vec3::new(0.4, 0.9, 0.6)];
        let n = (c[1] - c[0]).cross(&(c[2] - c[0])).normalize();
        (c, n)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-3)
    }

    fn close_vec(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-3)
    }

    #[test]
    fn matches_brute_force_off_plane() {
        let (c, n) = triangle();
        let centroid = (c[0] + c[1] + c[2]) / 3.0;
        let points = [
            centroid + n * 0.5,
            centroid - n * 0.3 + Vec3::new(0.2, 0.1, 0.0),
            c[0] + n * 0.2 + Vec3::new(-0.3, 0.0, 0.1),
            centroid + Vec3::new(2.0, -1.0, 0.5),
            c[1] + (c[2] - c[1]) * 0.5 + n * 0.15,
        ];
        for r in &points {
            let s = static_integrals(r, &c, &n);
            let b = brute(r, &c, 4);
            assert!(close(s.inv_r, b.0, 1e-9), "{} vs {}", s.inv_r, b.0);
            assert!(close_vec(&s.inv_r_vec, &b.1, 1e-9));
            assert!(close_vec(&s.inv_r_grad, &b.2, 1e-8), "{:?} vs {:?}", s.inv_r_grad, b.2);
            assert!(close(s.r, b.3, 1e-10));
            assert!(close_vec(&s.r_vec, &b.4, 1e-10));
            assert!(close_vec(&s.r_grad, &b.5, 1e-10));
        }
    }

    #[test]
    fn in_plane_outside_points() {
        let (c, n) = triangle();
        // Coplanar points outside the triangle, including one on an edge-line extension.
        let ext = c[0] + (c[0] - c[1]) * 0.4;
        let beside = c[1] + (c[2] - c[1]).cross(&n) * 0.3 + (c[2] - c[1]) * 0.2;
        for r in [ext, beside] {
            let s = static_integrals(&r, &c, &n);
            let b = brute(&r, &c, 5);
            assert!(close(s.inv_r, b.0, 1e-7), "{} vs {}", s.inv_r, b.0);
            assert!(close_vec(&s.inv_r_vec, &b.1, 1e-7));
            assert!(close(s.r, b.3, 1e-9));
            assert!(close_vec(&s.r_vec, &b.4, 1e-9));
            // No normal component for coplanar points.
            assert!(s.inv_r_grad.dot(&n).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_at_interior_point() {
        let (c, n) = triangle();
        let r = (c[0] + c[1] + c[2]) / 3.0;
        let s = static_integrals(&r, &c, &n);
        assert!(s.inv_r.is_finite() && s.inv_r > 0.0);
        assert!(s.inv_r_grad.iter().all(|x| x.is_finite()));
        // Just above and below: normal gradient jumps by ±2π.
        let up = static_integrals(&(r + n * 1e-9), &c, &n);
        let down = static_integrals(&(r - n * 1e-9), &c, &n);
        let jump = down.inv_r_grad.dot(&n) - up.inv_r_grad.dot(&n);
        assert!((jump - 4.0 * std::f64::consts::PI).abs() < 1e-6, "{jump}");
        assert!((up.inv_r - s.inv_r).abs() < 1e-7);
    }

    #[test]
    fn potential_of_equilateral_triangle_at_centroid() {
        // Hand-derived: inradius a/(2√3) times 2 ln(2 + √3) per edge, three edges.
        let a = 0.7;
        let c = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(a, 0.0, 0.0), Vec3::new(0.5 * a, 0.5 * 3f64.sqrt() * a, 0.0)];
        let n = Vec3::z();
        let centroid = (c[0] + c[1] + c[2]) / 3.0;
        let s = static_integrals(&centroid, &c, &n);
        let expected = 3f64.sqrt() * a * (2.0 + 3f64.sqrt()).ln();
        assert!((s.inv_r - expected).abs() < 1e-13 * expected, "{} vs {}", s.inv_r, expected);
    }

    #[test]
    fn distances() {
        let c = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let n = Vec3::z();
        assert_eq!(point_triangle_distance(&Vec3::new(0.2, 0.2, 0.5), &c, &n), 0.5);
        assert!((point_triangle_distance(&Vec3::new(-1.0, 0.0, 0.0), &c, &n) - 1.0).abs() < 1e-15);
        assert!((point_boundary_distance(&Vec3::new(0.2, 0.3, 0.0), &c) - 0.2).abs() < 1e-15);
    }
}
