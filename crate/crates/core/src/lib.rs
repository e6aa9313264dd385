//! Recovery of functions and shapes from finitely many noisy measurements
//! with nonlinear approximation families.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: exact half-plane / square / convex polygon areas.
//! - [`measurements`]: grids, test shapes, cell averages, noise and error norms.
//! - [`recon`]: piecewise constant and half-plane best-fit reconstructions.
//! - [`stability`]: Monte-Carlo estimates of the stencil stability constants.
//! - [`pbdw`]: linear measurements in a finite-dimensional Hilbert space
//!   (best fit, generalized interpolation, optimal-norm constants).
//! - [`sparse`]: expander measurement matrices, exact small-support
//!   ℓ¹ decoding, instance optimality and null space checks.

pub mod error;
pub mod geometry;
pub mod measurements;
pub mod pbdw;
pub mod recon;
pub mod sparse;
pub mod stability;

pub use error::{Error, Result};
pub use geometry::{area, cell_fraction, clip, crosses_cell, sym_diff_area, Cell, ConvexPolygon, HalfPlane, Point};
pub use measurements::{add_noise, lq_error, lq_error_exact, measure, CellAverageField, Grid, NoiseModel, NormP, Shape, ShapeSpec};
pub use recon::{fit_stencil, piecewise_constant, reconstruct, stencil_averages, CellRecon, Method, NormSpec, Reconstruction, StencilData};
pub use stability::{canonical_pair, estimate_c0, verify_alpha, StabilityEstimate, StabilitySample};
pub use pbdw::{best_fit, generalized_interpolation, mu_stability, norm_constants, riesz_norm, HilbertProblem, NormId, NormTriplet};
pub use sparse::{best_n_term_error, decode, expansion_check, iop_ratio, nsp_sample, rip1_lower, BinarySparseMatrix, ExpansionReport};
