//! Semidefinite programming backends for problems in the form
//! `min cᵀy s.t. F₀ᵏ + Σ yᵢFᵢᵏ ⪰ 0`.

#[cfg(feature = "clarabel")]
mod clarabel_backend;
mod ipm;

#[cfg(feature = "clarabel")]
pub use clarabel_backend::ClarabelBackend;
pub use ipm::ReferenceIpm;

use std::fmt;

use crate::error::{Error, Result};
use crate::lmi::StandardSdp;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// The matrix inequalities admit no solution.
    Infeasible,
    /// The objective is unbounded below on the feasible set.
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

impl fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::Infeasible => "infeasible",
            SdpStatus::Unbounded => "unbounded",
            SdpStatus::IterationLimit => "iteration limit",
            SdpStatus::NumericalFailure => "numerical failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Threshold on the normalized residual of infeasibility certificates.
    pub tol_infeas: f64,
    pub max_iter: usize,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_feas: tol::SDP_FEASIBILITY,
            tol_gap: tol::SDP_GAP,
            tol_infeas: 1e-8,
            max_iter: tol::SDP_ITER_CAP,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    /// Smallest eigenvalue over all blocks at the returned point.
    pub min_eigenvalue: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    pub objective: f64,
    pub stats: SolveStats,
    /// Backend message or the reason a recheck demoted the status.
    pub message: String,
}

pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, sdp: &StandardSdp, opts: &SolverOptions) -> Result<SdpSolution>;
}

/// Solves and independently rechecks every block's smallest eigenvalue.
///
/// A point reported optimal whose blocks fall below
/// `-SDP_RECHECK_FACTOR · tol_feas · (1 + block scale)` is demoted to
/// [`SdpStatus::NumericalFailure`].
pub fn solve_checked(
    backend: &dyn SdpBackend,
    sdp: &StandardSdp,
    opts: &SolverOptions,
) -> Result<SdpSolution> {
    let mut sol = backend.solve(sdp, opts)?;
    if sol.y.len() != sdp.n_vars {
        return Err(Error::Solver(format!(
            "{} returned {} coordinates, expected {}",
            backend.name(),
            sol.y.len(),
            sdp.n_vars
        )));
    }
    if sol.y.iter().all(|v| v.is_finite()) {
        let eigs = sdp.block_min_eigenvalues(&sol.y);
        let scales = sdp.block_scales();
        sol.stats.min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        sol.objective = sdp.objective_value(&sol.y);
        if sol.status == SdpStatus::Optimal {
            for ((lam, scale), blk) in eigs.iter().zip(&scales).zip(&sdp.blocks) {
                let floor = -tol::SDP_RECHECK_FACTOR * opts.tol_feas * (1.0 + scale);
                if *lam < floor {
                    sol.status = SdpStatus::NumericalFailure;
                    sol.message = format!(
                        "recheck failed on block `{}`: λ_min = {lam:.3e} < {floor:.3e}",
                        blk.label
                    );
                    break;
                }
            }
        }
    } else if sol.status == SdpStatus::Optimal {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "non-finite solution".into();
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Reference,
    Clarabel,
}

impl BackendKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "reference" | "ipm" => Ok(BackendKind::Reference),
            "clarabel" => Ok(BackendKind::Clarabel),
            other => Err(Error::Parameter(format!(
                "unknown SDP backend `{other}` (expected `reference` or `clarabel`)"
            ))),
        }
    }

    pub fn default_kind() -> Self {
        if cfg!(feature = "clarabel") {
            BackendKind::Clarabel
        } else {
            BackendKind::Reference
        }
    }

    pub fn build(self) -> Result<Box<dyn SdpBackend>> {
        match self {
            BackendKind::Reference => Ok(Box::new(ReferenceIpm)),
            #[cfg(feature = "clarabel")]
            BackendKind::Clarabel => Ok(Box::new(ClarabelBackend)),
            #[cfg(not(feature = "clarabel"))]
            BackendKind::Clarabel => Err(Error::Parameter(
                "this build does not include the clarabel backend".into(),
            )),
        }
    }
}

/// Backend named by `DSFC_SDP_BACKEND`, or the default one.
pub fn backend_from_env() -> Result<Box<dyn SdpBackend>> {
    match std::env::var("DSFC_SDP_BACKEND") {
        Ok(name) if !name.trim().is_empty() => BackendKind::parse(&name)?.build(),
        _ => BackendKind::default_kind().build(),
    }
}
