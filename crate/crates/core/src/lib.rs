//! Synthetic aperture sonar imaging by one-way wave equation migration.
//!
//! The pipeline is: synthesize or load a record ([`forward`], [`io`]),
//! migrate it into an image ([`migrate`]), optionally enhance the detected
//! image ([`enhance`]), and measure focusing against a delay-and-sum
//! reference ([`backprojection`]).
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common double precision instantiations.

pub mod backprojection;
pub mod cli;
pub mod config;
pub mod enhance;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod migrate;
pub mod record;
pub mod scalar;
pub mod scene;
pub mod tridiag;

pub use backprojection::{backproject, psf_metrics, PsfReport};
pub use config::{AngleVariant, EnhanceConfig, Layer, MigrationConfig, PhiVariant, SoundSpeed};
pub use enhance::{enhance, EnhanceReport};
pub use error::{Error, Result};
pub use grid::{Field2D, Grid2D};
pub use migrate::{migrate, migrate_alg1, migrate_alg2, prepare_boundary, BoundarySequence};
pub use record::{SasRecord, Sampling};
pub use scalar::Real;
pub use scene::{Envelope, PulseSpec, Scatterer, ScattererList};
pub use tridiag::{solve_shifted, TridiagSystem};

pub type Field = Field2D<f64>;
pub type Field32 = Field2D<f32>;
pub type Record = SasRecord<f64>;
pub type Record32 = SasRecord<f32>;
pub type MigrationState = migrate::alg1::MigrationState<f64>;
pub type WideState = migrate::wide::WideState<f64>;
