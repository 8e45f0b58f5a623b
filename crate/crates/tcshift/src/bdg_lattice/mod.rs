//! Discrete-torus Bogoliubov-de Gennes engine: one-body and pairing
//! operators, Gibbs states, free energies, relative entropy, and the
//! checks of the semiclassical expansion and the trial-state witness.

mod grid;
mod operators;
pub mod random;
mod semiclassics;
mod state;
mod system;
mod witness;

pub use grid::TorusGrid;
pub use operators::{
    assemble_h, assemble_hdelta, assemble_ktaw, conjugate_field, conjugate_fields, conjugate_operator,
    make_symmetrized_pair, particle_hole, GapOperator, OneBody,
};
pub use semiclassics::{
    alpha_delta_deviation, leading_profile, loglog_slope, semiclassical_residual, AlphaDeviationRecord, ExpansionIntegrals,
    FieldMoments, SemiclassicalRecord,
};
pub use state::{gibbs_state, klein_gap, relative_entropy, spectrum_defect, BdGState, StateDefects, StateSource};
pub use system::{
    bcs_free_energy, h1_norm_sq, key_identity_residual, trace_norm, FreeEnergyBreakdown, InteractionTable,
    KeyIdentityRecord, Lattice, LatticeSystem, PairKernel,
};
pub use witness::{PSI_TRUNCATION, trial_state_tc_witness, GainSample, WitnessRecord, WitnessScan, SHIFT_TOLERANCE, THETA_POINTS};
