//! Grid propagation under fixed corridors and corridor-ensemble density matrices.

mod ensemble;
mod state;
mod stepper;

pub use ensemble::{
    accumulate_density_exact, accumulate_density_mc, accumulate_density_mc_checkpoints,
    accumulate_density_mc_with_threads, sample_corridor_record,
};
pub use state::{DensityMatrix, GaussianPacket, Grid, WaveFunction};
pub use stepper::{
    propagate_corridor, propagate_step, propagator_matrix, propagator_matrix_from, Evolver, Observables,
    Scenario, Workspace, BOUNDARY_MASS_LIMIT, BOUNDARY_POINTS, MAX_MATRIX_GRID,
};
