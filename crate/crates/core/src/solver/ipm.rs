//! Dense primal-dual infeasible interior-point method with the HKM search
//! direction and Mehrotra predictor-corrector steps.
//!
//! The LMI `Z = F₀ + Σ yᵢFᵢ ⪰ 0` is the dual side; the primal is
//! `max −⟨F₀, X⟩ s.t. ⟨Fᵢ, X⟩ = cᵢ, X ⪰ 0`.

use std::time::Instant;

use nalgebra::DVector;

use super::{SdpBackend, SdpSolution, SdpStatus, SolveStats, SolverOptions};
use crate::error::Result;
use crate::lmi::expr::svec_position;
use crate::lmi::StandardSdp;
use crate::matfun::{lambda_min_sym, symmetrize, Matrix};

#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceIpm;

/// Relaxation of the primal residual and gap tolerances accepted after a
/// breakdown.
const REDUCED_ACCURACY: f64 = 1e3;

type Triples = Vec<(usize, usize, f64)>;

struct Block {
    n: usize,
    f0: Matrix,
    coeffs: Vec<(usize, Triples)>,
}

struct Data {
    m: usize,
    c: DVector<f64>,
    blocks: Vec<Block>,
}

impl Data {
    fn new(sdp: &StandardSdp) -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut blocks = Vec::with_capacity(sdp.blocks.len());
        let scales = sdp.block_scales();
        for (blk, scale) in sdp.blocks.iter().zip(scales) {
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let n = blk.size;
            let to_triples = |entries: &mut dyn Iterator<Item = (usize, f64)>| {
                let mut t = Vec::new();
                for (k, v) in entries {
                    let (i, j) = svec_position(n, k);
                    if i == j {
                        t.push((i, i, v * s));
                    } else {
                        t.push((i, j, v * s * h));
                        t.push((j, i, v * s * h));
                    }
                }
                t
            };
            let mut f0 = Matrix::zeros(n, n);
            for (i, j, v) in to_triples(&mut blk.constant.iter().cloned().enumerate()) {
                f0[(i, j)] = v;
            }
            let coeffs = blk
                .coeffs
                .iter()
                .map(|(var, e)| (*var, to_triples(&mut e.iter().cloned())))
                .collect();
            blocks.push(Block { n, f0, coeffs });
        }
        let cmax = sdp.objective.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let cs = if cmax > 0.0 { 1.0 / cmax } else { 1.0 };
        Data {
            m: sdp.n_vars,
            c: DVector::from_iterator(sdp.n_vars, sdp.objective.iter().map(|v| v * cs)),
            blocks,
        }
    }

    /// `(⟨Fᵢ, Hᵢ⟩)ᵢ` summed over blocks.
    fn a_op(&self, hs: &[Matrix]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, h) in self.blocks.iter().zip(hs) {
            for (var, t) in &blk.coeffs {
                out[*var] += t.iter().map(|&(i, j, v)| v * h[(i, j)]).sum::<f64>();
            }
        }
        out
    }

    /// `Σ yᵢFᵢ` per block.
    fn a_adj(&self, y: &DVector<f64>) -> Vec<Matrix> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = Matrix::zeros(blk.n, blk.n);
                for (var, t) in &blk.coeffs {
                    let yi = y[*var];
                    if yi != 0.0 {
                        for &(i, j, v) in t {
                            m[(i, j)] += v * yi;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// Schur complement `Mᵢⱼ = Σ_k ⟨Fᵢ, X Fⱼ Z⁻¹⟩`.
    fn schur(&self, xs: &[Matrix], ws: &[Matrix]) -> Matrix {
        let mut m = Matrix::zeros(self.m, self.m);
        for ((blk, x), w) in self.blocks.iter().zip(xs).zip(ws) {
            let n = blk.n;
            for (a, (j, fj)) in blk.coeffs.iter().enumerate() {
                let mut t = Matrix::zeros(n, n);
                for &(r, c, v) in fj {
                    t.column_mut(c).axpy(v, &x.column(r), 1.0);
                }
                let g = t * w;
                for (i, fi) in blk.coeffs[a..].iter() {
                    let val: f64 = fi.iter().map(|&(r, c, v)| v * g[(r, c)]).sum();
                    m[(*i, *j)] += val;
                    if i != j {
                        m[(*j, *i)] += val;
                    }
                }
            }
        }
        m
    }
}

fn inner(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob(a: &[Matrix]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
}

/// Largest `α` with `X + αD ⪰ 0`, for `X ≻ 0`.
fn max_step(x: &Matrix, d: &Matrix) -> Option<f64> {
    let l = x.clone().cholesky()?.l();
    let a1 = l.solve_lower_triangular(d)?;
    let s = l.solve_lower_triangular(&a1.transpose())?;
    let lam = lambda_min_sym(&symmetrize(&s));
    Some(if lam >= 0.0 { f64::INFINITY } else { -1.0 / lam })
}

fn max_step_all(xs: &[Matrix], ds: &[Matrix]) -> Option<f64> {
    let mut a = f64::INFINITY;
    for (x, d) in xs.iter().zip(ds) {
        a = a.min(max_step(x, d)?);
    }
    Some(a)
}

enum Kind {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

struct Factor {
    m: Matrix,
    kind: Kind,
}

impl Factor {
    fn new(m: Matrix) -> Option<Self> {
        let kind = Self::factor(&m)?;
        Some(Factor { m, kind })
    }

    fn factor(m: &Matrix) -> Option<Kind> {
        if let Some(c) = m.clone().cholesky() {
            return Some(Kind::Chol(c));
        }
        let dmax = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-13 * dmax.max(1e-300);
        }
        if let Some(c) = reg.cholesky() {
            return Some(Kind::Chol(c));
        }
        let lu = m.clone().lu();
        if lu.is_invertible() {
            Some(Kind::Lu(lu))
        } else {
            None
        }
    }

    fn raw_solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        match &self.kind {
            Kind::Chol(c) => Some(c.solve(b)),
            Kind::Lu(l) => l.solve(b),
        }
    }

    /// Solve with two rounds of iterative refinement.
    fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        let mut x = self.raw_solve(b)?;
        for _ in 0..2 {
            let r = b - &self.m * &x;
            x += self.raw_solve(&r)?;
        }
        Some(x)
    }
}

struct Direction {
    dy: DVector<f64>,
    dx: Vec<Matrix>,
    dz: Vec<Matrix>,
}

struct State<'a> {
    data: &'a Data,
    x: Vec<Matrix>,
    z: Vec<Matrix>,
    y: DVector<f64>,
}

impl State<'_> {
    /// HKM direction for the complementarity target `R_c`.
    fn direction(
        &self,
        factor: &Factor,
        ws: &[Matrix],
        rp: &DVector<f64>,
        rd: &[Matrix],
        rc: &[Matrix],
    ) -> Option<Direction> {
        let hs: Vec<Matrix> = self
            .x
            .iter()
            .zip(ws)
            .zip(rd.iter().zip(rc))
            .map(|((x, w), (r, c))| c * w - x - x * r * w)
            .collect();
        let rhs = self.data.a_op(&hs) - rp;
        let dy = factor.solve(&rhs)?;
        let ady = self.data.a_adj(&dy);
        let dz: Vec<Matrix> = rd.iter().zip(&ady).map(|(r, a)| r + a).collect();
        let dx = self
            .x
            .iter()
            .zip(ws)
            .zip(dz.iter().zip(rc))
            .map(|((x, w), (dzk, c))| symmetrize(&(c * w - x - x * dzk * w)))
            .collect();
        if !dy.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some(Direction { dy, dx, dz })
    }
}

impl SdpBackend for ReferenceIpm {
    fn name(&self) -> &'static str {
        "reference"
    }

    fn solve(&self, sdp: &StandardSdp, opts: &SolverOptions) -> Result<SdpSolution> {
        let start = Instant::now();
        let data = Data::new(sdp);
        let m = data.m;
        let n_total: usize = data.blocks.iter().map(|b| b.n).sum();
        let mut stats = SolveStats::default();

        let finish = |status: SdpStatus, y: &DVector<f64>, stats: SolveStats, msg: &str| {
            let mut stats = stats;
            stats.seconds = start.elapsed().as_secs_f64();
            Ok(SdpSolution {
                status,
                y: y.as_slice().to_vec(),
                objective: sdp.objective_value(y.as_slice()),
                stats,
                message: msg.to_string(),
            })
        };

        // Coordinates that appear in no block are pinned at zero; a nonzero
        // cost on one makes the objective unbounded.
        let mut used = vec![false; m];
        for blk in &data.blocks {
            for (v, _) in &blk.coeffs {
                used[*v] = true;
            }
        }
        if (0..m).any(|i| !used[i] && data.c[i] != 0.0) {
            return finish(
                SdpStatus::Unbounded,
                &DVector::zeros(m),
                stats,
                "objective depends on an unconstrained coordinate",
            );
        }

        // Infeasible starting point X = ξI, Z = ηI.
        let mut x = Vec::new();
        let mut z = Vec::new();
        for blk in &data.blocks {
            let n = blk.n as f64;
            let mut xi = 10.0f64.max(n.sqrt());
            let mut eta = xi.max(blk.f0.norm());
            for (var, t) in &blk.coeffs {
                let fnorm = t.iter().map(|(_, _, v)| v * v).sum::<f64>().sqrt();
                xi = xi.max(n * (1.0 + data.c[*var].abs()) / (1.0 + fnorm));
                eta = eta.max(fnorm);
            }
            x.push(Matrix::identity(blk.n, blk.n) * xi);
            z.push(Matrix::identity(blk.n, blk.n) * eta);
        }
        let mut st = State {
            data: &data,
            x,
            z,
            y: DVector::zeros(m),
        };
        let f0s: Vec<Matrix> = data.blocks.iter().map(|b| b.f0.clone()).collect();
        let f0_norm = frob(&f0s);
        let c_norm = data.c.norm();
        let mut stalls = 0;
        // Latest iterate meeting the reduced-accuracy test, returned when the
        // iteration later breaks down.
        let mut fallback: Option<(DVector<f64>, SolveStats)> = None;
        macro_rules! fail {
            ($msg:expr) => {{
                return match fallback.take() {
                    Some((y, s)) => finish(
                        SdpStatus::Optimal,
                        &y,
                        s,
                        &format!("solved to reduced accuracy ({})", $msg),
                    ),
                    None => finish(SdpStatus::NumericalFailure, &st.y, stats, $msg),
                };
            }};
        }

        for iter in 0..opts.max_iter {
            stats.iterations = iter;
            let ax = data.a_op(&st.x);
            let rp = &data.c - &ax;
            let ay = data.a_adj(&st.y);
            let rd: Vec<Matrix> = f0s
                .iter()
                .zip(&ay)
                .zip(&st.z)
                .map(|((f, a), zk)| f + a - zk)
                .collect();
            let xz = inner(&st.x, &st.z);
            let mu = xz / n_total as f64;
            let pobj = data.c.dot(&st.y);
            let f0x = inner(&f0s, &st.x);
            let denom = 1.0 + pobj.abs() + f0x.abs();
            let rd_norm = frob(&rd);
            stats.primal_residual = rp.norm() / (1.0 + c_norm);
            stats.dual_residual = rd_norm / (1.0 + f0_norm);
            stats.gap = ((pobj + f0x).abs() / denom).max(xz / denom);
            if opts.verbose {
                eprintln!(
                    "ipm {iter:>3}  obj {pobj:+.6e}  pinf {:.2e}  dinf {:.2e}  gap {:.2e}",
                    stats.primal_residual, stats.dual_residual, stats.gap
                );
            }
            if stats.primal_residual <= opts.tol_feas
                && stats.dual_residual <= opts.tol_feas
                && stats.gap <= opts.tol_gap
            {
                return finish(SdpStatus::Optimal, &st.y, stats, "converged");
            }
            if stats.primal_residual <= REDUCED_ACCURACY * opts.tol_feas
                && stats.dual_residual <= opts.tol_feas
                && stats.gap <= REDUCED_ACCURACY * opts.tol_gap
            {
                fallback = Some((st.y.clone(), stats.clone()));
            }
            if f0x < 0.0 && ax.norm() / (-f0x) < opts.tol_infeas {
                return finish(
                    SdpStatus::Infeasible,
                    &st.y,
                    stats,
                    "found X ⪰ 0 with ⟨Fᵢ, X⟩ ≈ 0 and ⟨F₀, X⟩ < 0",
                );
            }
            if pobj < 0.0 && (rd_norm + f0_norm) / (-pobj) < opts.tol_infeas {
                return finish(SdpStatus::Unbounded, &st.y, stats, "found an improving ray");
            }

            let ws: Option<Vec<Matrix>> = st
                .z
                .iter()
                .map(|zk| zk.clone().cholesky().map(|c| symmetrize(&c.inverse())))
                .collect();
            let Some(ws) = ws else {
                fail!("Z lost definiteness");
            };
            let mut schur = data.schur(&st.x, &ws);
            for i in (0..m).filter(|i| !used[*i]) {
                schur[(i, i)] = 1.0;
            }
            let Some(factor) = Factor::new(schur) else {
                fail!("singular Schur matrix");
            };

            let zero: Vec<Matrix> = st.x.iter().map(|xk| Matrix::zeros(xk.nrows(), xk.ncols())).collect();
            let Some(pred) = st.direction(&factor, &ws, &rp, &rd, &zero) else {
                fail!("predictor solve failed");
            };
            let (Some(ap), Some(ad)) = (max_step_all(&st.x, &pred.dx), max_step_all(&st.z, &pred.dz))
            else {
                fail!("step length failed");
            };
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let xa: Vec<Matrix> = st.x.iter().zip(&pred.dx).map(|(a, d)| a + d * ap).collect();
            let za: Vec<Matrix> = st.z.iter().zip(&pred.dz).map(|(a, d)| a + d * ad).collect();
            let mu_aff = inner(&xa, &za) / n_total as f64;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            let rc: Vec<Matrix> = pred
                .dx
                .iter()
                .zip(&pred.dz)
                .map(|(dx, dz)| Matrix::identity(dx.nrows(), dx.nrows()) * (sigma * mu) - dx * dz)
                .collect();
            let Some(corr) = st.direction(&factor, &ws, &rp, &rd, &rc) else {
                fail!("corrector solve failed");
            };
            let (Some(ap), Some(ad)) = (max_step_all(&st.x, &corr.dx), max_step_all(&st.z, &corr.dz))
            else {
                fail!("step length failed");
            };
            let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let (ap, ad) = ((gamma * ap).min(1.0), (gamma * ad).min(1.0));
            for (xk, d) in st.x.iter_mut().zip(&corr.dx) {
                *xk += d * ap;
            }
            for (zk, d) in st.z.iter_mut().zip(&corr.dz) {
                *zk += d * ad;
            }
            st.y += &corr.dy * ad;

            if ap.max(ad) < 1e-8 {
                stalls += 1;
                if stalls >= 3 {
                    fail!("step lengths stalled");
                }
            } else {
                stalls = 0;
            }
        }
        stats.iterations = opts.max_iter;
        if fallback.is_some() {
            fail!("iteration cap reached");
        }
        finish(SdpStatus::IterationLimit, &st.y, stats, "iteration cap reached")
    }
}
