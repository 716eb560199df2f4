//! Quantized electromagnetic modes of homogeneous, non-dispersive
//! bi-anisotropic media and the spontaneous emission of an embedded
//! two-level atom.
//!
//! The crate is organised bottom-up:
//!
//! * [`constitutive`]: material tensors, Onsager checks, metric → medium map;
//! * [`dispersion`]: plane-wave branches and polarization vectors;
//! * [`projection`]: `eps1`-weighted longitudinal/transverse projectors;
//! * [`localfield`]: small-cavity correction tensors and the corrected mode
//!   amplitude at the cavity centre;
//! * [`emission`]: golden-rule decay rate by isofrequency-surface integration;
//! * [`wwsim`]: Weisskopf–Wigner simulation over a discretized mode continuum;
//! * [`cli`]: configuration files, JSON/CSV output and the `aniso` front end.

pub mod cli;
pub mod constitutive;
pub mod dispersion;
pub mod emission;
pub mod error;
pub mod localfield;
pub mod projection;
pub mod quadrature;
pub mod tensor;
pub mod wwsim;

pub use constitutive::{ConstitutiveTensors, PhysicalConstants, SpacetimeMetric};
pub use error::{Error, ErrorClass, Result};
