//! Inverse scattering machinery for the Ostrovsky-Vakhnenko equation
//! `u_txx - 3u_x + 3u_x u_xx + u u_xxx = 0`.
//!
//! The crate covers exact multi-loop-soliton solutions from reflectionless
//! scattering data, the long-time asymptotic formulas in the regions
//! `y/t < 0` and `y/t > 0`, direct scattering from initial profiles and a
//! pseudospectral integrator used as an independent oracle.

pub mod conjugation;
pub mod error;
pub mod fourier;
pub mod io;
pub mod linalg;
pub mod local_model;
pub mod ode;
pub mod pde;
pub mod quad;
pub mod scattering;
pub mod soliton;
pub mod special;
pub mod spectral;

pub use error::{OvError, Result};
pub use num_complex::Complex64 as C64;
