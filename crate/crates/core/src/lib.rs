//! Hamilton-Killing flows on the phase-space bundle of probability
//! distributions, and their equivalence with Schrödinger evolution.
//!
//! Real coordinates are `X = (rho, pi)` with `rho` on the open simplex and `pi`
//! the conjugate phases. [`geometry`] holds the metric, symplectic form and
//! complex structure, [`flows`] the Hamiltonian functions and the
//! implicit-midpoint integrator, [`hilbert`] the complex chart and exact
//! propagation, and [`diagnostics`] the numerical property checks.

mod error;

pub mod diagnostics;
pub mod flows;
pub mod geometry;
pub mod hilbert;
pub mod sampling;

pub use error::{Error, Result};

pub use diagnostics::{
    ab_independence_sweep, classify_flow, convergence_study, default_metric_families, default_sample_points,
    fs_consistency, lie_derivative, lie_derivative_metric, lie_derivative_symplectic, step_map_symplecticity_defect,
    CheckRecord, ConvergenceRow, ConvergenceTable, DiagnosticsReport, FdScheme, FdSettings, FlowClassification,
    FsConsistency, FsRatio, InducedFixture, PropertyCheck,
};
pub use flows::{
    eval_hamiltonian, gauge_canonicalize, gauge_shift, hamiltonian_vector_field, integrate_midpoint,
    poisson_bracket, Coordinate, FnField, HamiltonianSpec, MidpointSettings, NonlinearKind, NonlinearTerm,
    PhaseFunction, PhasePoint, TangentVector, Trajectory, VectorField,
};
pub use geometry::{
    complex_structure, embedding_length, gauge_minimized_length, induced_metric_ts, info_metric,
    phase_space_metric, symplectic_matrix, MetricParams, EPS_FLOOR, NORMALIZATION_TOL,
};
pub use hilbert::{
    from_complex, inner_product, propagate_unitary, superposition, to_complex, ComplexState, HermitianOperator,
    UnitaryPropagator,
};
