//! Van Vleck propagation, branch fields, and the two-orbit recurrence
//! strength.

mod branches;
mod kernel;

pub use branches::{
    branch_decompose, branch_decompose_components, counter_propagating_split, Branch, BranchLabel, BranchLauncher,
    BranchPoint, BranchSlice, Contribution, SemiclassicalState,
};
pub use kernel::{path_phase, propagate_semiclassical, van_vleck_kernel, KernelValue, SemiclassicalField, MAX_CAUSTIC_FRACTION};

/// `|A1 e^{iS1/ħ} + A2 e^{iS2/ħ}|²`.
pub fn recurrence_strength(a1: f64, s1: f64, a2: f64, s2: f64, hbar: f64) -> f64 {
    a1 * a1 + a2 * a2 + 2.0 * a1 * a2 * ((s1 - s2) / hbar).cos()
}
