//! Variational splines and bandlimited signal reconstruction on finite
//! combinatorial graphs.
//!
//! The crate centers on the normalized graph Laplacian `L` and its spectral
//! calculus. Around it sit five layers:
//!
//! * [`graph`] — graphs, vertex signals, generators, and the edge-list
//!   interchange format.
//! * [`spectral`] — dense eigendecomposition of `L`, graph Fourier
//!   transforms, fractional operator powers `(eps I + L)^t`, Sobolev-type
//!   norms, and projection onto the bandlimited subspaces `PW_omega`.
//! * [`spline`] — interpolating variational splines: minimal-norm
//!   interpolants built from fundamental solutions of `(eps I + L)^t` and a
//!   Gram solve, together with Lagrangian bases and optimality diagnostics.
//! * [`sampling`] — Poincaré-type constants of vertex sets, closed-form
//!   bounds for segments and rectangles, and uniqueness-set certification
//!   for bandlimited signals.
//! * [`reconstruct`] — iterative recovery of a bandlimited signal from its
//!   values outside a removed set, with per-iteration error bounds driven by
//!   the sampling constants.
//!
//! All dense factorizations (eigendecomposition, Cholesky) are implemented
//! in this crate and are fully deterministic, so every result is a pure
//! function of its inputs — a property the experiment driver relies on for
//! byte-identical reruns.

pub mod graph;
mod linalg;
pub mod reconstruct;
pub mod sampling;
pub mod spectral;
pub mod spline;

pub use graph::{apply_laplacian, dense_laplacian, Graph, GraphError, Signal};
pub use spectral::{SpectralDecomposition, SpectralError};
