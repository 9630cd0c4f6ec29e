//! Analysis on the finite adeles `A_f` and on `A = ℝ × A_f`.
//!
//! The crate is organised bottom-up:
//!
//! * [`primepow`] — the ordered set of prime powers, the bracket `[[·]]` and Φ;
//! * [`adele`] — truncated finite adeles, the norm `‖·‖`, the metric, Haar
//!   volumes and uniform sampling of balls and spheres;
//! * [`radial`] — radial step functions and their exact Fourier transform;
//! * [`heatkernel`] — certified evaluation of the heat kernels;
//! * [`markov`] — transition functions and jump-process simulation;
//! * [`cauchy`] — spectral solvers for the parabolic Cauchy problems.

pub mod adele;
pub mod cauchy;
pub mod error;
pub mod heatkernel;
pub mod markov;
pub mod numeric;
#[doc(hidden)]
pub mod oracle;
pub mod primepow;
pub mod quad;
pub mod radial;
pub mod verify;

pub use error::{Error, Result};
