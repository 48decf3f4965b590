pub mod bloch;
pub mod flow;
pub mod jet;
pub mod order;
pub mod photon;
pub mod propagator;
pub mod reduced;

pub use bloch::{
    bloch_spin0, bloch_spin0_dense, casimir_balance1, casimir_defect, first_order, maxwell_cross_check, order1_pure_field,
    spin_correction1, tangent0, tangent_derivatives, tangent_fd_residual, FirstOrder, MaxwellReport, SpinTriple,
};
pub use flow::{chi_flow, FlowCache};
pub use jet::JetSpace;
pub use order::{
    hierarchy, matrix_from_record, matrix_record, order0, order_j, solve_jets, HierarchyMeta, HierarchyResult, JetSolution,
    MatrixRecord,
};
pub use photon::{free_e_dot_s, photon_rate_expansion, photon_rate_from, PhotonRateExpansion};
pub use propagator::{propagator_g, propagator_g_dense, PropagatorState};
pub use reduced::ReducedBasis;

#[cfg(test)]
mod tests;
