//! Physical constants and the sign conventions shared by assembly and
//! excitation.
//!
//! Time convention is `exp(+jωt)`; the free-space Green's function is
//! `exp(−jk₀R) / (4πR)`.

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

/// Free-space wave impedance (Ω).
pub const Z0: f64 = 376.730_313_668;

/// Sign conventions. Every right-hand side and operator reads these, so a
/// flip here changes both sides together.
pub mod convention {
    /// Sign of the tested incident field: `e_m = +∫ β_m · E^inc`.
    pub const EFIE_RHS_SIGN: f64 = 1.0;
    /// Sign of the tested rotated incident field: `h_m = +∫ β_m · (n̂ × H^inc)`.
    pub const MFIE_RHS_SIGN: f64 = 1.0;
    /// Coefficient of the Gram matrix A in the combined-source EFIE row (−½A + K).
    pub const CSIE_RESIDUE: f64 = -0.5;
    /// Coefficient of the Gram matrix A′ in the MFIE (½A′ + K_n×β).
    pub const MFIE_RESIDUE: f64 = 0.5;
}
