//! Mirror-oscillator-field (MOF) optomechanics.
//!
//! A mirror's optical response comes from an internal oscillator (the "mirosc") coupled
//! bilinearly to a 1+1-D scalar field. The crate covers single-mirror and two-mirror
//! scattering, delta-potential cavity modes, classical radiation-pressure cooling
//! (averaged and full delay dynamics), lattice time-domain simulation, and export of
//! quantum-Brownian-motion coefficient sets.
//!
//! Units: c = 1 throughout. Everything is generic over the scalar type ([`Real`], i.e.
//! `f32` or `f64`); the generic types default to `f64` and `*32` aliases are provided.

// `!(x > 0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod cooling;
pub mod error;
pub mod params;
pub mod qbm;
pub mod scalar;
pub mod scattering;
pub mod timedomain;

pub use error::{MofError, Result};
pub use num_complex::Complex;
pub use params::{
    bc_gamma, bc_gamma_from_kappa, plasma_frequency, rp_index, DriveParams, MiroscParams, MirrorConfig, OscAmplitude,
    ScatterResult,
};
pub use scalar::Real;

pub type Scalar = f64;
pub type Complex64 = Complex<f64>;
pub type MiroscParams32 = params::MiroscParams<f32>;
pub type MirrorConfig32 = params::MirrorConfig<f32>;
pub type ScatterResult32 = params::ScatterResult<f32>;
pub type DriveParams32 = params::DriveParams<f32>;
pub type CavityConfig32 = cavity::CavityConfig<f32>;
pub type CoolingSetup32 = cooling::CoolingSetup<f32>;
pub type SimState32 = timedomain::SimState<f32>;

/// Crate version, recorded in exported files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
