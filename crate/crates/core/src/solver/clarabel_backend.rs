use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{SdpBackend, SdpSolution, SdpStatus, SolveStats, SolverOptions};
use crate::error::{Error, Result};
use crate::lmi::expr::svec_position;
use crate::lmi::StandardSdp;

/// Conic interior-point solver from the `clarabel` crate.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

/// Position of lower-triangle entry `(i, j)` in the column-major upper
/// triangle used by the PSD triangle cone.
fn triu_index(i: usize, j: usize) -> usize {
    // (i, j) with i ≥ j maps to upper entry (j, i): column i, row j.
    i * (i + 1) / 2 + j
}

impl SdpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, sdp: &StandardSdp, opts: &SolverOptions) -> Result<SdpSolution> {
        let start = Instant::now();
        let n = sdp.n_vars;
        // s = b − A y lies in the cone; b = svec(F₀), A = −[svec(Fᵢ)].
        let mut b = Vec::new();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut cones = Vec::new();
        for blk in &sdp.blocks {
            let base = b.len();
            let len = blk.svec_len();
            let map = |k: usize| {
                if blk.size == 1 {
                    base
                } else {
                    let (i, j) = svec_position(blk.size, k);
                    base + triu_index(i, j)
                }
            };
            let mut local = vec![0.0; len];
            for (k, v) in blk.constant.iter().enumerate() {
                local[map(k) - base] = *v;
            }
            b.extend(local);
            for (var, entries) in &blk.coeffs {
                for &(k, v) in entries {
                    cols[*var].push((map(k), -v));
                }
            }
            cones.push(if blk.size == 1 {
                SupportedConeT::NonnegativeConeT(1)
            } else {
                SupportedConeT::PSDTriangleConeT(blk.size)
            });
        }
        let m = b.len();
        let mut colptr = vec![0usize];
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        for col in &mut cols {
            col.sort_by_key(|(r, _)| *r);
            for &(r, v) in col.iter() {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let p = CscMatrix::zeros((n, n));

        let settings = DefaultSettingsBuilder::default()
            .verbose(opts.verbose)
            .max_iter(opts.max_iter as u32)
            .tol_feas(opts.tol_feas)
            .tol_gap_abs(opts.tol_gap)
            .tol_gap_rel(opts.tol_gap)
            .tol_infeas_abs(opts.tol_infeas)
            .tol_infeas_rel(opts.tol_infeas)
            .build()
            .map_err(|e| Error::Solver(format!("clarabel settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &sdp.objective, &a, &b, &cones, settings)
            .map_err(|e| Error::Solver(format!("clarabel setup: {e}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            // Reduced-accuracy points still face the eigenvalue recheck.
            SolverStatus::Solved | SolverStatus::AlmostSolved => SdpStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SdpStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SdpStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => SdpStatus::IterationLimit,
            _ => SdpStatus::NumericalFailure,
        };
        Ok(SdpSolution {
            status,
            y: sol.x.clone(),
            objective: sol.obj_val,
            stats: SolveStats {
                iterations: sol.iterations as usize,
                primal_residual: sol.r_prim,
                dual_residual: sol.r_dual,
                gap: (sol.obj_val - sol.obj_val_dual).abs(),
                min_eigenvalue: f64::NAN,
                seconds: start.elapsed().as_secs_f64(),
            },
            message: format!("{:?}", sol.status),
        })
    }
}
