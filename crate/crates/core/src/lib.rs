//! Steady-state radiative transport with internal measurements.
//!
//! The crate synthesizes deposited-energy data H(x) = ∫σ_a u dv for the
//! boundary-value transport problem, evaluates the singular components of
//! the albedo kernel, and reconstructs optical coefficients from them.
//!
//! | module | contents |
//! |---|---|
//! | [`geometry`] | disk and ball domains, exit times, the incoming set Γ₋ |
//! | [`medium`] | σ, σ_s, k fields, Henyey–Greenstein kernel, attenuation E |
//! | [`hgmodel`] | the map h(g) = σ_g/σ_s and its inverse |
//! | [`kernels`] | ballistic profile η, single and double scattering kernels α₁, α₂ |
//! | [`transport`] | planar Neumann-series forward solver and energy maps |
//! | [`singularity`] | near-ray probes of α₁ and asymptotic fits |
//! | [`reconstruct`] | σ_a, σ, σ_g and g reconstruction pipelines |
//! | [`diffusion`] | diffusive-regime recovery of σ_a |
//! | [`harness`] | numerical checks of the stability inequalities |
//! | [`io`] | PGRID and CSV files, experiment configs, the CLI driver |
//!
//! Each capability has a runnable example:
//!
//! ```text
//! cargo run --release --example hg_inversion
//! cargo run --release --example kernel_profiles
//! cargo run --release --example singular_fit
//! cargo run --release --example ballistic_reconstruction
//! cargo run --release --example symmetric_reconstruction
//! cargo run --release --example anisotropy_pipeline
//! cargo run --release --example forward_beam
//! cargo run --release --example diffusion_recovery
//! cargo run --release --example stability_checks
//! cargo run --release --example run_config
//! ```

pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hgmodel;
pub mod io;
pub mod kernels;
pub mod medium;
pub mod quadrature;
pub mod reconstruct;
pub mod singularity;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{BoundaryPair, Dimension, DomainGeometry, Point, Vector};
pub use medium::{CoefficientField, OpticalMedium, Phase, SigmaField};
