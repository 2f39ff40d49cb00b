use crate::constants::{C0, Z0};
use crate::error::{Error, Result};

/// Frequency-dependent physical parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalContext {
    /// Frequency (Hz).
    pub frequency: f64,
    /// Free-space wavenumber `2πf/c₀` (rad/m).
    pub k0: f64,
    /// Wave impedance (Ω).
    pub z0: f64,
    /// Speed of light (m/s).
    pub c0: f64,
}

impl PhysicalContext {
    pub fn from_frequency(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0) || !frequency.is_finite() {
            return Err(Error::InvalidArgument(format!("frequency must be positive (got {frequency})")));
        }
        Ok(PhysicalContext {
            frequency,
            k0: 2.0 * std::f64::consts::PI * frequency / C0,
            z0: Z0,
            c0: C0,
        })
    }

    pub fn from_wavenumber(k0: f64) -> Result<Self> {
        Self::from_frequency(k0 * C0 / (2.0 * std::f64::consts::PI))
    }

    pub fn wavelength(&self) -> f64 {
        self.c0 / self.frequency
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_round_trip() {
        let ctx = PhysicalContext::from_frequency(C0 / 2.0).unwrap();
        assert!((ctx.k0 - std::f64::consts::PI).abs() < 1e-15);
        assert!((ctx.wavelength() - 2.0).abs() < 1e-15);
        let back = PhysicalContext::from_wavenumber(ctx.k0).unwrap();
        assert!((back.frequency - ctx.frequency).abs() / ctx.frequency < 1e-15);
        assert!(PhysicalContext::from_frequency(0.0).is_err());
        assert!(PhysicalContext::from_frequency(-1.0).is_err());
    }
}
