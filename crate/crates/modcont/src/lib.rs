//! Moduli-of-continuity certification and pseudo-spectral experiments for
//! nonlocal drift-diffusion, Burgers-type and linear Navier–Stokes models.

pub mod config;
pub mod error;
pub mod moduli;
pub mod monitor;
pub mod nonlocal;
pub mod quad;
pub mod spectral;
pub mod verifier;

pub use error::{Error, Result};
