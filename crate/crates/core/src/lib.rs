//! Phase programming for photonic meshes built from symmetric Mach-Zehnder
//! interferometers (sMZIs).
//!
//! * [`reck`] and [`clements`] compile a target unitary into sMZI phase tables
//!   for the triangular and rectangular topologies.
//! * [`relocation`] moves the mid-circuit residual phases of the rectangular
//!   scheme onto edge waveguides, where they cost no extra length.
//! * [`alternating`] and [`optimize`] cover alternating splitter/phase-layer
//!   circuits, which are programmed numerically and tolerate imbalanced
//!   beam-splitters better.
//! * [`sweep`] runs the imbalance-robustness experiment across schemes.
//!
//! Mode indices in the public API are 1-based, top mode first. Circuit columns
//! are listed input side first.

pub mod alternating;
pub mod clements;
mod elimination;
pub mod mesh;
pub mod numeric;
pub mod optimize;
pub mod par;
pub mod reck;
pub mod relocation;
pub mod sweep;

pub use elimination::{DecompositionError, EliminationStep, Side};
pub use numeric::{
    arg0, global_phase_distance, haar_random_unitary, wrap_phase, Block2, ComplexMat, NumericError,
    UnitaryMatrix,
};
pub use par::Execution;
