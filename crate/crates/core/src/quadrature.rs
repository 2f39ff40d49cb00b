//! Symmetric quadrature rules on the unit triangle and Gauss–Legendre rules
//! on an interval.

use std::fmt;

/// A triangle rule in barycentric coordinates. Weights sum to one, so the
/// integral over a physical triangle is `area * Σ w_q f(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    degree: usize,
}

/// Point counts of the supported triangle rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleOrder {
    P1,
    P3,
    P6,
    P7,
    P12,
}

impl RuleOrder {
    pub const ALL: [RuleOrder; 5] = [RuleOrder::P1, RuleOrder::P3, RuleOrder::P6, RuleOrder::P7, RuleOrder::P12];

    pub fn from_points(n: usize) -> Option<Self> {
        match n {
            1 => Some(RuleOrder::P1),
            3 => Some(RuleOrder::P3),
            6 => Some(RuleOrder::P6),
            7 => Some(RuleOrder::P7),
            12 => Some(RuleOrder::P12),
            _ => None,
        }
    }

    pub fn points(self) -> usize {
        match self {
            RuleOrder::P1 => 1,
            RuleOrder::P3 => 3,
            RuleOrder::P6 => 6,
            RuleOrder::P7 => 7,
            RuleOrder::P12 => 12,
        }
    }

    pub fn rule(self) -> TriangleRule {
        TriangleRule::new(self)
    }
}

impl fmt::Display for RuleOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.points())
    }
}

fn orbit3(a: f64, b: f64) -> [[f64; 3]; 3] {
    [[a, b, b], [b, a, b], [b, b, a]]
}

fn orbit6(a: f64, b: f64, c: f64) -> [[f64; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

impl TriangleRule {
    pub fn new(order: RuleOrder) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let degree = match order {
            RuleOrder::P1 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(1.0);
                1
            }
            RuleOrder::P3 => {
                points.extend(orbit3(2.0 / 3.0, 1.0 / 6.0));
                weights.extend([1.0 / 3.0; 3]);
                2
            }
            RuleOrder::P6 => {
                let a = 0.445_948_490_915_965;
                let b = 0.091_576_213_509_771;
                points.extend(orbit3(1.0 - 2.0 * a, a));
                weights.extend([0.223_381_589_678_011; 3]);
                points.extend(orbit3(1.0 - 2.0 * b, b));
                weights.extend([0.109_951_743_655_322; 3]);
                4
            }
            RuleOrder::P7 => {
                let s15 = 15f64.sqrt();
                let b1 = (6.0 + s15) / 21.0;
                let b2 = (6.0 - s15) / 21.0;
                points.push([1.0 / 3.0; 3]);
                weights.push(9.0 / 40.0);
                points.extend(orbit3(1.0 - 2.0 * b1, b1));
                weights.extend([(155.0 + s15) / 1200.0; 3]);
                points.extend(orbit3(1.0 - 2.0 * b2, b2));
                weights.extend([(155.0 - s15) / 1200.0; 3]);
                5
            }
            RuleOrder::P12 => {
                let b1 = 0.063_089_014_491_502;
                let b2 = 0.249_286_745_170_910;
                points.extend(orbit3(1.0 - 2.0 * b1, b1));
                weights.extend([0.050_844_906_370_207; 3]);
                points.extend(orbit3(1.0 - 2.0 * b2, b2));
                weights.extend([0.116_786_275_726_379; 3]);
                points.extend(orbit6(0.636_502_499_121_399, 0.310_352_451_033_785, 0.053_145_049_844_816));
                weights.extend([0.082_851_075_618_374; 6]);
                6
            }
        };
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        TriangleRule {
            points,
            weights,
            degree,
        }
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Collapsed-square (Duffy) product rule with `n × n` points on the unit
/// triangle, degree `2n − 2`. Used where a rule of arbitrary order is needed.
pub fn collapsed_rule(n: usize) -> TriangleRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&xi, &wi) in x.iter().zip(&w) {
        let u = 0.5 * (xi + 1.0);
        for (&xj, &wj) in x.iter().zip(&w) {
            let v = 0.5 * (xj + 1.0);
            let a = u;
            let b = (1.0 - u) * v;
            points.push([1.0 - a - b, a, b]);
            // Jacobian (1-u) of the collapse, times 2 for the unit-area normalization.
            weights.push(0.25 * wi * wj * (1.0 - u) * 2.0);
        }
    }
    TriangleRule {
        points,
        weights,
        degree: 2 * n - 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Exact mean of `λ1^i λ2^j` over the triangle.
    fn monomial_mean(i: usize, j: usize) -> f64 {
        2.0 * factorial(i) * factorial(j) / factorial(i + j + 2)
    }

    fn max_error(rule: &TriangleRule, degree: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..=degree {
            let j = degree - i;
            let q: f64 = rule.iter().map(|(p, w)| w * p[1].powi(i as i32) * p[2].powi(j as i32)).sum();
            worst = worst.max((q - monomial_mean(i, j)).abs());
        }
        worst
    }

    #[test]
    fn rules_integrate_their_degree_exactly() {
        for order in RuleOrder::ALL {
            let rule = order.rule();
            assert_eq!(rule.len(), order.points());
            for d in 0..=rule.degree() {
                assert!(max_error(&rule, d) < 2e-15, "{order} points, degree {d}");
            }
            assert!(max_error(&rule, rule.degree() + 1) > 1e-8, "{order} points is not higher order");
        }
    }

    #[test]
    fn barycentric_coordinates_sum_to_one() {
        for order in RuleOrder::ALL {
            for (p, w) in order.rule().iter() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                assert!(w > 0.0);
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn collapsed_rule_degree() {
        let rule = collapsed_rule(6);
        for d in 0..=10 {
            assert!(max_error(&rule, d) < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn unknown_point_count_rejected() {
        assert_eq!(RuleOrder::from_points(4), None);
        assert_eq!(RuleOrder::from_points(12), Some(RuleOrder::P12));
    }
}
