//! Particle creation from vacuum in a one-dimensional cavity with a
//! resonantly oscillating wall, for a scalar field of mass M. The same
//! equations describe TE-mode photons in a rectangular 3-D cavity, with
//! M fixed by the transverse dimensions.
//!
//! The field is expanded in instantaneous cavity eigenmodes. For every
//! initial mode m the auxiliary functions xi^(m), eta^(m) obey a linear
//! first-order system truncated at the cutoff K. Their values at a
//! snapshot time give the Bogoliubov coefficients and the number of
//! created particles per mode.
//!
//! ```no_run
//! use dce::{particle_spectrum, SimulationConfig};
//!
//! let mut cfg = SimulationConfig::resonant(2.0, 1, 20);
//! cfg.t_max = 2000.0;
//! let spectrum = particle_spectrum(&cfg).unwrap();
//! println!("N_1(2000) = {}", spectrum.at(2000.0)[0]);
//! ```

pub mod analysis;
pub mod bogoliubov;
pub mod error;
pub mod evolution;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod presets;

pub use analysis::{
    convergence_check, coupling_scan, exact_coupling_mass, mass_sweep, sinh_prediction,
    ConvergenceReport, CouplingClass, CouplingEntry, CouplingGraph, MassSweepResult,
};
pub use bogoliubov::{
    bogoliubov_from_state, bogoliubov_residuals, delta_pm, diagonal_defects, particle_numbers,
    particle_spectrum, BogoliubovMatrices, ParticleSpectrum, Residuals,
};
pub use error::{Error, Result};
pub use evolution::{assemble_w, evolve, evolve_with, EvolutionRecord, EvolutionState, ModeSystem};
pub use integrator::Method;
pub use model::{
    aspect_from_mass, coupling_a, coupling_c, coupling_m_matrix, kpar_from_cavity,
    mass_from_aspect, omega_instant, omega_static, wall_position, wall_velocity, Cavity3DSpec,
    CouplingCoefficients, SimulationConfig, SineMotion, Trajectory,
};
pub use oracle::{oracle_deviation, second_order_oracle};
pub use presets::{run_checks, Check, Overrides, Preset};
