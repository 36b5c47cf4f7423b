//! Real eigenvalue statistics of products of real Ginibre matrices.
//!
//! The crate is organised around five pieces:
//!
//! * [`sampling`]: seedable counter-based streams, Ginibre matrices, uniform
//!   states on S³ and the Schmidt-angle measure `2 cos 2θ`.
//! * [`linalg`]: dense real matrices, real Schur form and certified
//!   real-eigenvalue counting.
//! * [`analytic`]: quadrature and series evaluation of `p_θ`, `p⁽²⁾₂,₂ = π/4`,
//!   the mean co-optimal fraction and truncated hypergeometric sums.
//! * [`montecarlo`]: the parallel, reproducible experiment engine.
//! * [`entanglement`]: the `σ_y ⊗ σ_y` form, concurrence and the co-optimal
//!   pair predicate for real two-qubit states.

pub mod analytic;
pub mod entanglement;
pub mod linalg;
pub mod montecarlo;
pub mod sampling;

pub use linalg::{count_real, eigenvalues, LinalgError, MatrixR, Spectrum};
pub use sampling::{SeedSpec, ThetaPoint};
