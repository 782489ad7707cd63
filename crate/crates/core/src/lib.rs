//! Numerical toolkit for rearrangements and symmetrizations of nonnegative
//! functions on bounded domains, discretized on masked uniform grids.
//!
//! The crate covers four layers:
//!
//! * [`grid`] — masked cell-centered grids, grid functions, finite-difference
//!   gradients, and the CSV interchange format;
//! * [`profile`] / [`rearrange`] — distribution functions, the decreasing
//!   rearrangement u*, Schwarz and Steiner symmetrization, extremal couples
//!   and the chain-rule gradient machinery;
//! * [`inequality`] — verified inequality checks (Hardy–Littlewood, Riesz,
//!   Pólya–Szegő couples, nonlinear and weighted variants, weak-form tests),
//!   each producing a [`inequality::VerificationReport`];
//! * [`pde`] / [`comparison`] — masked Poisson and radial p-Laplacian
//!   Dirichlet solvers plus Talenti-type comparisons between a solution and
//!   the symmetrized problem's solution.
//!
//! Everything is deterministic: fixed summation orders, seeded generators,
//! and no time- or thread-dependent code paths. Tolerances are centralized
//! in [`tol`].

pub mod comparison;
pub mod error;
pub mod fixture;
pub mod fmt;
pub mod grid;
pub mod inequality;
pub mod pde;
pub mod profile;
pub mod rearrange;
pub mod suite;

pub use error::Error;

/// Centralized tolerance and budget constants.
///
/// Every inequality check derives its acceptance tolerance from these; tests
/// pin them so a change here is a deliberate, visible event.
pub mod tol {
    /// Relative tolerance for Hardy–Littlewood: lhs may exceed rhs only by
    /// accumulated rounding of ~M products, far below 1e-12 of the total.
    pub const HL_REL: f64 = 1e-12;

    /// Relative slack when two profile totals must agree (same underlying
    /// measure computed along different arithmetic routes).
    pub const MEASURE_REL: f64 = 1e-9;

    /// Default constant for the Pólya–Szegő couple tolerance
    /// `c1 * h * Lip(u) * Lip(w) * measure`.
    pub const C1_DEFAULT: f64 = 8.0;

    /// Default constant for concentration-comparison tolerance
    /// `c2 * h * row_measure`.
    pub const C2_DEFAULT: f64 = 8.0;

    /// Default constant for pointwise/gradient comparison tolerance
    /// `c3 * h * max(f)`.
    pub const C3_DEFAULT: f64 = 8.0;

    /// Riesz tolerance constant: `RIESZ_C * h * (Lu·|w|₁·|k|∞ + Lw·|u|₁·|k|∞
    /// + Lk·|u|₁·|w|∞)`.
    pub const RIESZ_C: f64 = 4.0;

    /// Cap on per-function active cells for direct Riesz double sums.
    pub const RIESZ_DEFAULT_CAP: usize = 4096;

    /// Relative CG residual target for the masked Poisson solver.
    pub const CG_REL_RESIDUAL: f64 = 1e-10;

    /// Relative slack used when the HL equality hypothesis is tested inside
    /// the couple check: residual ≤ HYP_REL * (1 + rhs).
    pub const HYP_REL: f64 = 1e-8;

    /// Exponent range accepted by the p-Laplacian paths.
    pub const P_MIN: f64 = 1.1;
    /// See [`P_MIN`].
    pub const P_MAX: f64 = 4.0;

    /// Nodes used for radial profiles and measure-coordinate quadrature.
    pub const RADIAL_NODES: usize = 1024;

    /// Gauss–Legendre points per axis for mollifier kernel quadrature.
    pub const KERNEL_GL_NODES: usize = 24;

    /// Pair budget before nested-level checks switch to seeded sampling.
    pub const NESTED_PAIR_BUDGET: usize = 1_000_000;

    /// Seed for the nested-level pair sampler (fixed: determinism).
    pub const NESTED_SEED: u64 = 0x6e65_7374;

    /// Fraction of a cell below which a boundary-arm distance is clamped,
    /// keeping the stencil's condition number bounded.
    pub const MIN_ARM_FRACTION: f64 = 0.01;

    /// Measure-window floor for profile derivatives: max(4·h^dim, total·1e-3).
    pub const DERIV_WINDOW_CELLS: f64 = 4.0;
    /// See [`DERIV_WINDOW_CELLS`].
    pub const DERIV_WINDOW_REL: f64 = 1e-3;
}
