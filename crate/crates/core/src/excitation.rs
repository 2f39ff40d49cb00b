//! Plane-wave illumination and the tested right-hand sides.

use crate::basis::RwgBasis;
use crate::constants::convention::{EFIE_RHS_SIGN, MFIE_RHS_SIGN};
use crate::context::PhysicalContext;
use crate::error::{Error, Result};
use crate::quadrature::RuleOrder;
use crate::{CVec3, Complex, Vec3};

const UNIT_TOLERANCE: f64 = 1e-12;

/// Polarisation reference for plane waves given by spherical angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Theta,
    Phi,
}

/// `E = E₀ p̂ exp(−jk₀ k̂·r)`, `H = k̂ × E / Z₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    direction: Vec3,
    polarization: Vec3,
    amplitude: Complex,
}

impl PlaneWave {
    /// Both vectors must be unit length and mutually orthogonal to 1e-12.
    pub fn new(direction: Vec3, polarization: Vec3, amplitude: Complex) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > UNIT_TOLERANCE || (polarization.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument("plane-wave vectors must be unit length".into()));
        }
        if direction.dot(&polarization).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument("polarisation must be orthogonal to the direction".into()));
        }
        Ok(PlaneWave {
            direction,
            polarization,
            amplitude,
        })
    }

    /// Wave travelling along `(sin θ cos φ, sin θ sin φ, cos θ)` (angles in
    /// degrees), polarised along the local θ̂ or φ̂ of that direction.
    pub fn from_angles(theta_deg: f64, phi_deg: f64, polarization: Polarization, amplitude: f64) -> Self {
        let (st, ct) = theta_deg.to_radians().sin_cos();
        let (sp, cp) = phi_deg.to_radians().sin_cos();
        let direction = Vec3::new(st * cp, st * sp, ct);
        let pol = match polarization {
            Polarization::Theta => Vec3::new(ct * cp, ct * sp, -st),
            Polarization::Phi => Vec3::new(-sp, cp, 0.0),
        };
        PlaneWave {
            direction,
            polarization: pol,
            amplitude: Complex::new(amplitude, 0.0),
        }
    }

    /// Unit-amplitude wave along +z polarised along x.
    pub fn axial() -> Self {
        Self::from_angles(0.0, 0.0, Polarization::Theta, 1.0)
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn polarization(&self) -> Vec3 {
        self.polarization
    }

    pub fn amplitude(&self) -> Complex {
        self.amplitude
    }

    pub fn with_amplitude(mut self, amplitude: Complex) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// The same wave travelling the opposite way (`k̂ → −k̂`).
    pub fn reversed(mut self) -> Self {
        self.direction = -self.direction;
        self
    }
}

/// Incident `(E, H)` at `r`.
pub fn eval_incident(pw: &PlaneWave, ctx: &PhysicalContext, r: &Vec3) -> (CVec3, CVec3) {
    let phase = Complex::new(0.0, -ctx.k0 * pw.direction.dot(r)).exp() * pw.amplitude;
    let e = pw.polarization.map(|x| phase * x);
    let h = pw.direction.cross(&pw.polarization).map(|x| phase * (x / ctx.z0));
    (e, h)
}

/// `e_m = ∫ β_m · E^inc ds`.
pub fn rhs_efie(basis: &RwgBasis, pw: &PlaneWave, ctx: &PhysicalContext, rule: RuleOrder) -> Vec<Complex> {
    tested(basis, rule, EFIE_RHS_SIGN, |_, r| eval_incident(pw, ctx, r).0)
}

/// `h_m = ∫ β_m · (n̂ × H^inc) ds`, the Galerkin-tested form of
/// `J = n̂ × H` that matches the `½A′ + K_n×β` operator.
pub fn rhs_mfie(basis: &RwgBasis, pw: &PlaneWave, ctx: &PhysicalContext, rule: RuleOrder) -> Vec<Complex> {
    let mesh = basis.mesh();
    tested(basis, rule, MFIE_RHS_SIGN, |t, r| {
        let h = eval_incident(pw, ctx, r).1;
        let n = mesh.normal(t).map(|x| Complex::new(x, 0.0));
        n.cross(&h)
    })
}

fn tested(basis: &RwgBasis, rule: RuleOrder, sign: f64, field: impl Fn(usize, &Vec3) -> CVec3) -> Vec<Complex> {
    let rule = rule.rule();
    let mut out = vec![Complex::new(0.0, 0.0); basis.len()];
    for t in 0..basis.mesh().num_triangles() {
        let lf = basis.local(t);
        for (r, w) in basis.quadrature_points(t, &rule) {
            let f = field(t, &r);
            for i in 0..3 {
                let beta = lf.value(i, &r);
                out[lf.index[i]] += (f[0] * beta[0] + f[1] * beta[1] + f[2] * beta[2]) * (w * sign);
            }
        }
    }
    out
}
