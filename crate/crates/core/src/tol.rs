//! Numerical tolerances shared by the library, the CLI and the test suites.
//!
//! Every threshold that decides pass/fail somewhere lives here so that
//! tests and documentation quote the same number.

/// Relative symmetry defect accepted for [`crate::matfun::SpdMatrix`].
pub const SYMMETRY_REL: f64 = 1e-12;
/// Smallest eigenvalue (relative to the largest) below which a matrix is
/// treated as not positive definite.
pub const PD_REL_FLOOR: f64 = 1e-14;
/// Gram matrices with `λ_min ≤ GRAM_DEGENERATE_REL · trace` are rejected.
pub const GRAM_DEGENERATE_REL: f64 = 1e-12;
/// Default decay margin for the Bass stabilizing gain.
pub const STABILIZING_MARGIN: f64 = 0.05;
/// Relative residual allowed when expanding a kernel in the basis.
pub const EXPANSION_REL: f64 = 1e-8;
/// Scale of the strictness margin: `ε = STRICT_MARGIN_SCALE · (1 + ‖data‖_∞)`.
pub const STRICT_MARGIN_SCALE: f64 = 1e-7;
/// Lower bound imposed on the performance level γ.
pub const GAMMA_FLOOR: f64 = 1e-6;
/// Default SDP feasibility tolerance.
pub const SDP_FEASIBILITY: f64 = 1e-8;
/// Default SDP relative duality gap.
pub const SDP_GAP: f64 = 1e-8;
/// Default iteration cap of the interior-point method.
pub const SDP_ITER_CAP: usize = 200;
/// Independent post-solve check: constraint eigenvalues must stay above
/// `-SDP_RECHECK_FACTOR · tol` (relative to the constraint scale).
pub const SDP_RECHECK_FACTOR: f64 = 10.0;
/// Per-step slack allowed in the γ trace before it counts as an increase.
pub const MONOTONE_SLACK: f64 = 1e-6;
/// Two successive pseudospectral abscissae closer than this are converged.
pub const SPECTRUM_CONVERGENCE: f64 = 1e-4;
/// Relative tolerance of the sampled dissipation inequality.
pub const DISSIPATION_REL: f64 = 1e-4;
/// Floor for the sampled Krasovskii functional.
pub const FUNCTIONAL_FLOOR: f64 = -1e-8;
/// State norm beyond which a simulation is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;
