//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

/// Default tolerances. Every run can override them through the scenario
/// configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max entrywise |A - A^dagger| accepted as Hermitian.
    pub herm: f64,
    /// Max |Tr rho - 1| for a valid density matrix.
    pub trace: f64,
    /// Most negative eigenvalue accepted for a valid density matrix.
    pub min_eig: f64,
    /// Max entrywise |U U^dagger - 1| accepted as unitary.
    pub unitary: f64,
    /// Eigenvalues in [-clip, 0) are clipped to zero inside fidelity/entropy.
    pub negativity_clip: f64,
    /// Population allowed in the top two Fock levels.
    pub fock_tail: f64,
    /// Max |Tr rho - 1| tolerated during propagation.
    pub trace_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            trace: 1e-9,
            min_eig: -1e-9,
            unitary: 1e-8,
            negativity_clip: 1e-10,
            fock_tail: 1e-6,
            trace_drift: 1e-8,
        }
    }
}

impl Tolerances {
    /// Every bound tightened by `factor` (> 1 tightens).
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            herm: self.herm / factor,
            trace: self.trace / factor,
            min_eig: self.min_eig / factor,
            unitary: self.unitary / factor,
            negativity_clip: self.negativity_clip / factor,
            fock_tail: self.fock_tail / factor,
            trace_drift: self.trace_drift / factor,
        }
    }
}
