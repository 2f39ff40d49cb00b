//! Integral-operator assembly: the EFIE operator `T` and the rotated-kernel
//! operators `K` of the combined-source and magnetic-field equations.
//!
//! Matrices are assembled without the `jk₀Z₀` and `Z₀` prefactors, which the
//! formulations apply.

mod assembly;
pub mod greens;
pub mod io;
pub mod potentials;

pub use assembly::{assemble, OperatorSet, Request};
pub use greens::greens;

use crate::basis::RwgBasis;
use crate::error::{Error, Result};
use crate::quadrature::RuleOrder;
use crate::DenseComplexMatrix;

/// Testing functions for the rotated-kernel operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Testing {
    /// `K_mn = ∫ β_m · ∫ ∇G × β_n`, used by the combined-source EFIE.
    Beta,
    /// `K_mn = ∫ (n̂ × β_m) · ∫ ∇G × β_n`, the classical MFIE operator.
    NCrossBeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub far_outer: RuleOrder,
    pub far_inner: RuleOrder,
    pub near_outer: RuleOrder,
    pub near_inner: RuleOrder,
    /// Centroid distance, in mean edge lengths, below which a triangle pair
    /// is treated as near.
    pub near_threshold: f64,
    /// Number of static Taylor terms of the kernel handled analytically (1 or 2).
    pub extraction_order: u8,
    /// Maximum depth of the outer-triangle subdivision for near pairs.
    pub near_refinement: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            far_outer: RuleOrder::P3,
            far_inner: RuleOrder::P3,
            near_outer: RuleOrder::P7,
            near_inner: RuleOrder::P7,
            near_threshold: 2.0,
            extraction_order: 2,
            near_refinement: 4,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "near threshold must be non-negative (got {})",
                self.near_threshold
            )));
        }
        if !matches!(self.extraction_order, 1 | 2) {
            return Err(Error::InvalidArgument(format!(
                "extraction order must be 1 or 2 (got {})",
                self.extraction_order
            )));
        }
        Ok(())
    }

    /// Same configuration with the near rules replaced.
    pub fn with_near_rules(mut self, outer: RuleOrder, inner: RuleOrder) -> Self {
        self.near_outer = outer;
        self.near_inner = inner;
        self
    }
}

/// EFIE operator `T_mn = ∬∬ [β_m·β_n − (∇·β_m)(∇′·β_n)/k₀²] G₀ ds′ ds`.
pub fn assemble_t(basis: &RwgBasis, k0: f64, quad: &QuadratureConfig) -> Result<DenseComplexMatrix> {
    let set = assemble(
        basis,
        k0,
        quad,
        Request {
            t: true,
            k: false,
            k_nxb: false,
        },
    )?;
    Ok(set.t.expect("requested"))
}

/// Principal-value rotated-kernel operator with the chosen testing. The
/// residue term (`−½A` or `+½A′`) is not included.
pub fn assemble_k(basis: &RwgBasis, k0: f64, quad: &QuadratureConfig, testing: Testing) -> Result<DenseComplexMatrix> {
    let request = Request {
        t: false,
        k: testing == Testing::Beta,
        k_nxb: testing == Testing::NCrossBeta,
    };
    let set = assemble(basis, k0, quad, request)?;
    Ok(match testing {
        Testing::Beta => set.k,
        Testing::NCrossBeta => set.k_nxb,
    }
    .expect("requested"))
}
