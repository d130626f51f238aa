//! Swarm alignment dynamics at two scales, and the inverse problem that
//! connects them.
//!
//! The microscopic model is the Cucker-Smale system: N agents whose
//! accelerations are kernel-weighted averages of pairwise velocity
//! differences.  Its hydrodynamic limit is a pressureless Euler system with a
//! non-local alignment source.  When the interaction kernel is the Green's
//! function of a screened Poisson operator, the non-local terms can be
//! replaced by auxiliary elliptic solves, which this crate performs with fast
//! sine transforms.  The [`learning`] module recovers the kernel parameters
//! (k, λ) from an observed density time series by minimizing a summed KL
//! divergence with a damped Newton method.
//!
//! Module map:
//! - [`domain`]: grids and cell-averaged fields on [−L/2, L/2]^d
//! - [`kernels`]: pointwise interaction-function evaluation
//! - [`spectral`]: DST-based elliptic solves and FFT convolution
//! - [`fv`]: Kurganov-Tadmor finite-volume transport
//! - [`macro_solver`]: the coupled hydrodynamic integrator
//! - [`micro`]: the N-body simulator and flocking diagnostics
//! - [`learning`]: KL objective, FD derivatives, damped Newton
//! - [`bench`]: wall-time scaling of the non-local term evaluation

pub mod bench;
pub mod domain;
pub mod error;
pub mod fv;
pub mod kernels;
pub mod learning;
pub mod macro_solver;
pub mod micro;
pub mod spectral;

pub use error::{Error, Result};
