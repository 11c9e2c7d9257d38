//! Ergodic capacity of a hovering UAV-to-UAV free-space optical link.
//!
//! The channel combines lognormal turbulence, Gaussian beam-pointing error
//! and angle-of-arrival outage into a composite intensity PDF; the capacity
//! is computed along four mutually validating paths (exact quadrature,
//! high-SNR double-integral oracle, closed form, large-FOV approximation).

pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod output;
pub mod quad;
pub mod specfun;
pub mod sweep;
pub mod validation;

pub use capacity::{
    build_kernel, capacity_closed_form, capacity_exact, capacity_highsnr_oracle,
    capacity_large_fov, dbm_to_watts, evaluate, noise_variance, snr_scale, CapacityReport,
    ClosedFormParts, HighSnrKernel, NoiseModel, OracleCapacity,
};
pub use channel::{
    derive_constants, h_weight, hbar_bounds, outage_convergence, outage_mass, ChannelPdf,
    DerivedChannelConstants, LinkParameters,
};
pub use config::{ConfigBuilder, Scenario};
pub use error::{Error, Result};
pub use sweep::{
    argmax_1d, grid_sweep, path_bits, penalty_of_worst_case_design, ArgmaxResult, CapacityPath,
    PenaltyReport, SweepResult, SweepRow, SweepSpec, SweptParameter,
};
