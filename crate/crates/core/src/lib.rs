//! Two-dimensional Fourier quasicrystals and their circle-problem error terms.
//!
//! The crate builds the named constructions as trigonometric systems
//! ([`trigsys`]), enumerates their zero sets in disks ([`zeroset`]), and
//! measures the counting error pointwise, on average and after smoothing
//! ([`counting`], [`smoothing`]) against the spectral side ([`spectral`]).

pub mod bessel;
pub mod cache;
pub mod counting;
pub mod error;
pub mod mollifier;
pub mod numeric;
pub mod smoothing;
pub mod spatial;
pub mod spectral;
pub mod trigsys;
pub mod zeroset;

pub use error::{FqError, Result};
pub use trigsys::{builtin, catalog, catalog_entry, CatalogEntry, FormTag, TrigSystem, Vec2};
