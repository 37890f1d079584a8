//! Gain synthesis: predictor seed, two warm-start solves, then proximal
//! inner convex approximation of the bilinear dissipation inequality.

use std::io::Write;

use crate::basis::{build_gram, BasisSpec, GramData};
use crate::error::{Error, Result};
use crate::lmi::{
    self, assemble_fixed, assemble_proximal_step, direct, Anchor, AssembledLmi, AssemblyOptions,
    Certificate, FixedFactor, SupplyEmbedding,
};
use crate::matfun::{self, Matrix};
use crate::model::{build_augmented, AugmentedSystem, ControllerGains, PlantModel, SupplyRate};
use crate::predictor::{predictor_init, PredictorSeed};
use crate::solver::{solve_checked, ReferenceIpm, SdpBackend, SdpSolution, SdpStatus, SolverOptions};

/// Objective of each proximal subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopObjective {
    /// `γ + ρ₁ tr T₁ + ρ₂ tr T₂`.
    #[default]
    GammaPlusProximal,
    /// `ρ₁ tr T₁ + ρ₂ tr T₂` only.
    ProximalOnly,
}

#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub rho1: f64,
    pub rho2: f64,
    /// Relative-change stopping tolerance.
    pub eps: f64,
    pub max_iter: usize,
    /// Controller pole matrix of the predictor seed.
    pub x: Option<Matrix>,
    /// Stabilizing gain of the predictor seed (Bass gain when absent).
    pub k: Option<Matrix>,
    /// Replaces the delay of both plant and basis.
    pub r: Option<f64>,
    pub objective: LoopObjective,
    pub embedding: SupplyEmbedding,
    pub solver: SolverOptions,
    /// Consecutive rejected iterations that abort the loop.
    pub max_rejections: usize,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            rho1: 0.01,
            rho2: 0.01,
            eps: 1e-6,
            max_iter: 100,
            x: None,
            k: None,
            r: None,
            objective: LoopObjective::GammaPlusProximal,
            embedding: SupplyEmbedding::Derived,
            solver: SolverOptions::default(),
            max_rejections: 3,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho1 > 0.0 && self.rho2 > 0.0) {
            return Err(Error::Parameter(format!(
                "proximal weights must be positive, got ρ1={}, ρ2={}",
                self.rho1, self.rho2
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be positive, got {}", self.eps)));
        }
        if let Some(r) = self.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Parameter(format!("r must be positive, got {r}")));
            }
        }
        if self.max_rejections == 0 {
            return Err(Error::Parameter("max_rejections must be at least 1".into()));
        }
        Ok(())
    }

    /// Assembly options with the given weight on γ.
    pub fn assembly(&self, gamma_weight: f64) -> AssemblyOptions {
        AssemblyOptions {
            embedding: self.embedding,
            gamma_weight,
            margin: None,
        }
    }
}

/// Plant, basis and supply with the derived Gram and closed-loop data.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub plant: PlantModel,
    pub spec: BasisSpec,
    pub gram: GramData,
    pub aug: AugmentedSystem,
    pub supply: SupplyRate,
}

impl Prepared {
    pub fn new(
        plant: &PlantModel,
        spec: &BasisSpec,
        supply: &SupplyRate,
        r_override: Option<f64>,
    ) -> Result<Self> {
        let mut plant = plant.clone();
        let mut spec = spec.clone();
        if let Some(r) = r_override {
            plant.r = r;
            spec = BasisSpec::new(spec.pi.clone(), spec.f0.clone(), r)?;
        }
        supply.validate()?;
        let gram = build_gram(&spec, plant.nu())?;
        let aug = build_augmented(&plant, &gram, &spec)?;
        Ok(Prepared {
            plant,
            spec,
            gram,
            aug,
            supply: supply.clone(),
        })
    }

    pub fn strict_margin(&self) -> f64 {
        lmi::assemble::strict_margin(&self.aug, &self.supply)
    }

    pub fn layout(&self) -> crate::model::Layout {
        self.aug.layout
    }
}

/// Point accepted by the loop (or produced by initialization).
#[derive(Debug, Clone)]
pub struct Iterate {
    pub certificate: Certificate,
    /// `[K₁ K₂ K₃]`.
    pub gain: Matrix,
    pub gamma: Option<f64>,
}

impl Iterate {
    pub fn gains(&self, aug: &AugmentedSystem) -> Result<ControllerGains> {
        ControllerGains::from_stacked(&self.gain, aug.layout.nu, aug.layout.d)
    }

    fn anchor(&self) -> Anchor {
        Anchor {
            p: self.certificate.p.clone(),
            q: self.certificate.q.clone(),
            k: self.gain.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlgorithmState {
    pub anchor: Anchor,
    pub current: Iterate,
    pub iteration: usize,
    pub gamma_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct InitReport {
    pub seed: PredictorSeed,
    /// γ after the fixed-gain solve.
    pub gamma0: Option<f64>,
    /// γ after the fixed-(P, Q) resolve.
    pub gamma1: Option<f64>,
    pub step1: Iterate,
    pub step2: Iterate,
}

/// Largest eigenvalue of `Φ̂` and smallest of the functional matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmiCheck {
    pub phi_hat_max: f64,
    pub functional_min: f64,
    pub s_min: f64,
    pub u_min: f64,
    pub margin: f64,
}

impl BmiCheck {
    /// `λ_max(Φ̂) ≤ −ε/2` and the positivity matrices `≥ ε/2`.
    pub fn passes(&self) -> bool {
        let h = 0.5 * self.margin;
        self.phi_hat_max <= -h && self.functional_min >= h && self.s_min >= h && self.u_min >= h
    }
}

/// Evaluates the original bilinear inequality at a point, independently of
/// the expression and compilation layers.
pub fn check_bmi(prep: &Prepared, it: &Iterate, embedding: SupplyEmbedding) -> Result<BmiCheck> {
    let phi_hat = direct::phi_hat(
        &prep.aug,
        &prep.supply,
        &it.certificate,
        &it.gain,
        it.gamma,
        embedding,
    )?;
    let func = direct::functional_matrix(&it.certificate, prep.aug.layout.d)?;
    Ok(BmiCheck {
        phi_hat_max: matfun::lambda_max_sym(&phi_hat),
        functional_min: matfun::lambda_min_sym(&matfun::symmetrize(&func)),
        s_min: matfun::lambda_min_sym(&matfun::symmetrize(&it.certificate.s)),
        u_min: matfun::lambda_min_sym(&matfun::symmetrize(&it.certificate.u)),
        margin: prep.strict_margin(),
    })
}

/// `‖vec(Λ, K) − vec(Λ̃, K̃)‖_∞ / (‖vec(Λ̃, K̃)‖_∞ + 1)` with `Λ = [P Q]`.
pub fn relative_change(new: &Anchor, old: &Anchor) -> f64 {
    let diff = [
        matfun::max_abs(&(&new.p - &old.p)),
        matfun::max_abs(&(&new.q - &old.q)),
        matfun::max_abs(&(&new.k - &old.k)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let base = [
        matfun::max_abs(&old.p),
        matfun::max_abs(&old.q),
        matfun::max_abs(&old.k),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    diff / (base + 1.0)
}

/// Solves with `backend`, retrying with the reference interior-point method
/// when the returned point fails the eigenvalue recheck.
fn solve(backend: &dyn SdpBackend, asm: &AssembledLmi, opts: &SolverOptions) -> Result<SdpSolution> {
    let sdp = lmi::compile(&asm.problem)?;
    let sol = solve_checked(backend, &sdp, opts)?;
    if sol.status != SdpStatus::NumericalFailure || backend.name() == ReferenceIpm.name() {
        return Ok(sol);
    }
    let retry = solve_checked(&ReferenceIpm, &sdp, opts)?;
    Ok(if retry.status == SdpStatus::Optimal { retry } else { sol })
}

fn point(asm: &AssembledLmi, sol: &SdpSolution) -> Result<Iterate> {
    let pt = asm.extract(&sol.y)?;
    let mut certificate = pt.certificate;
    certificate.p = matfun::symmetrize(&certificate.p);
    Ok(Iterate {
        certificate,
        gain: pt.gain,
        gamma: pt.gamma,
    })
}

/// Predictor seed, fixed-gain solve, then fixed-(P, Q) resolve.
pub fn initialize(
    prep: &Prepared,
    cfg: &AlgorithmConfig,
    backend: &dyn SdpBackend,
) -> Result<(AlgorithmState, InitReport)> {
    cfg.validate()?;
    let seed = predictor_init(&prep.plant, &prep.spec, &prep.gram, cfg.k.as_ref(), cfg.x.as_ref())?;
    let opts = cfg.assembly(1.0);

    let asm1 = assemble_fixed(&prep.aug, &prep.supply, &FixedFactor::Gain(seed.gains.stacked()), &opts)?;
    let sol1 = solve(backend, &asm1, &cfg.solver)?;
    if sol1.status != SdpStatus::Optimal {
        return Err(Error::Infeasible(format!(
            "no certificate for the predictor seed ({}: {}); try a richer basis, a smaller r, \
             or a less demanding supply rate",
            sol1.status, sol1.message
        )));
    }
    let step1 = point(&asm1, &sol1)?;

    let asm2 = assemble_fixed(
        &prep.aug,
        &prep.supply,
        &FixedFactor::Certificate {
            p: step1.certificate.p.clone(),
            q: step1.certificate.q.clone(),
        },
        &opts,
    )?;
    let sol2 = solve(backend, &asm2, &cfg.solver)?;
    if sol2.status != SdpStatus::Optimal {
        return Err(Error::Solver(format!(
            "gain resolve with fixed P, Q ended with status {}: {}",
            sol2.status, sol2.message
        )));
    }
    let step2 = point(&asm2, &sol2)?;

    let state = AlgorithmState {
        anchor: step2.anchor(),
        current: step2.clone(),
        iteration: 0,
        gamma_history: step2.gamma.into_iter().collect(),
    };
    Ok((
        state,
        InitReport {
            seed,
            gamma0: step1.gamma,
            gamma1: step2.gamma,
            step1,
            step2,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// γ of the incumbent after this iteration (NaN without a γ role).
    pub gamma: f64,
    pub status: String,
    /// Solver message or rejection reason.
    pub message: String,
    pub accepted: bool,
    pub rel_change: f64,
    /// `λ_max(Φ̂)` of the candidate, NaN when no candidate was produced.
    pub phi_hat_max: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub row: TraceRow,
    /// Candidate accepted as the new incumbent.
    pub accepted: Option<Iterate>,
}

/// Solves a subproblem and checks its point against the bilinear inequality.
/// A point failing the check is re-solved with the reference method.
fn checked_candidate(
    prep: &Prepared,
    cfg: &AlgorithmConfig,
    asm: &AssembledLmi,
    backend: &dyn SdpBackend,
) -> Result<(SdpSolution, Option<(Iterate, BmiCheck)>)> {
    let sol = solve(backend, asm, &cfg.solver)?;
    if sol.status != SdpStatus::Optimal {
        return Ok((sol, None));
    }
    let cand = point(asm, &sol)?;
    let check = check_bmi(prep, &cand, cfg.embedding)?;
    if !check.passes() && backend.name() != ReferenceIpm.name() {
        let retry = solve(&ReferenceIpm, asm, &cfg.solver)?;
        if retry.status == SdpStatus::Optimal {
            let second = point(asm, &retry)?;
            let second_check = check_bmi(prep, &second, cfg.embedding)?;
            if second_check.passes() {
                return Ok((retry, Some((second, second_check))));
            }
        }
    }
    Ok((sol, Some((cand, check))))
}

/// One proximal subproblem around the current anchor.
pub fn iterate(
    state: &mut AlgorithmState,
    prep: &Prepared,
    cfg: &AlgorithmConfig,
    backend: &dyn SdpBackend,
) -> Result<StepOutcome> {
    let weight = match cfg.objective {
        LoopObjective::GammaPlusProximal => 1.0,
        LoopObjective::ProximalOnly => 0.0,
    };
    let asm = assemble_proximal_step(
        &prep.aug,
        &prep.supply,
        &state.anchor,
        (cfg.rho1, cfg.rho2),
        &cfg.assembly(weight),
    )?;
    let (sol, candidate) = checked_candidate(prep, cfg, &asm, backend)?;
    state.iteration += 1;
    let incumbent_gamma = state.current.gamma.unwrap_or(f64::NAN);
    let mut row = TraceRow {
        iteration: state.iteration,
        gamma: incumbent_gamma,
        status: sol.status.to_string(),
        message: sol.message.clone(),
        accepted: false,
        rel_change: f64::NAN,
        phi_hat_max: f64::NAN,
    };
    let Some((cand, check)) = candidate else {
        return Ok(StepOutcome { row, accepted: None });
    };
    row.phi_hat_max = check.phi_hat_max;
    if !check.passes() {
        row.status = "rejected".into();
        row.message = format!(
            "direct check failed: λmax(Φ̂) = {:.3e}, margin {:.3e}",
            check.phi_hat_max, check.margin
        );
        return Ok(StepOutcome { row, accepted: None });
    }
    let new_anchor = cand.anchor();
    row.rel_change = relative_change(&new_anchor, &state.anchor);
    row.accepted = true;
    row.gamma = cand.gamma.unwrap_or(f64::NAN);
    state.anchor = new_anchor;
    state.current = cand.clone();
    if let Some(g) = cand.gamma {
        state.gamma_history.push(g);
    }
    Ok(StepOutcome {
        row,
        accepted: Some(cand),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    IterationCap,
    TooManyRejections,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::IterationCap => "iteration cap",
            StopReason::TooManyRejections => "too many rejected iterations",
        })
    }
}

/// Fixed-gain resolve of the final gains.
#[derive(Debug, Clone)]
pub struct PostCheck {
    pub status: SdpStatus,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub gains: ControllerGains,
    pub certificate: Certificate,
    pub gamma_final: Option<f64>,
    pub init: InitReport,
    pub trace: Vec<TraceRow>,
    /// Every accepted iterate, in order.
    pub accepted: Vec<Iterate>,
    pub stop: StopReason,
    pub post_check: PostCheck,
}

impl SynthesisResult {
    /// `γ` of the initial resolve followed by every accepted iterate.
    pub fn gamma_trace(&self) -> Vec<f64> {
        self.init
            .gamma1
            .into_iter()
            .chain(self.accepted.iter().filter_map(|i| i.gamma))
            .collect()
    }
}

pub fn run(prep: &Prepared, cfg: &AlgorithmConfig, backend: &dyn SdpBackend) -> Result<SynthesisResult> {
    let (mut state, init) = initialize(prep, cfg, backend)?;
    let mut trace = Vec::new();
    let mut accepted = Vec::new();
    let mut rejections = 0;
    let mut stop = StopReason::IterationCap;
    for _ in 0..cfg.max_iter {
        let out = iterate(&mut state, prep, cfg, backend)?;
        let row = out.row.clone();
        trace.push(out.row);
        match out.accepted {
            Some(it) => {
                rejections = 0;
                accepted.push(it);
                if row.rel_change < cfg.eps {
                    stop = StopReason::Converged;
                    break;
                }
            }
            None => {
                rejections += 1;
                if rejections >= cfg.max_rejections {
                    stop = StopReason::TooManyRejections;
                    break;
                }
            }
        }
    }

    let final_it = state.current.clone();
    let (status, certified) = certify(prep, &final_it.gain, cfg, backend)?;
    let post_check = PostCheck {
        status,
        gamma: certified.and_then(|c| c.gamma),
    };
    Ok(SynthesisResult {
        gains: final_it.gains(&prep.aug)?,
        certificate: final_it.certificate.clone(),
        gamma_final: final_it.gamma,
        init,
        trace,
        accepted,
        stop,
        post_check,
    })
}

/// Best certificate (and smallest γ) for a fixed stacked gain `[K₁ K₂ K₃]`.
pub fn certify(
    prep: &Prepared,
    gain: &Matrix,
    cfg: &AlgorithmConfig,
    backend: &dyn SdpBackend,
) -> Result<(SdpStatus, Option<Iterate>)> {
    let asm = assemble_fixed(&prep.aug, &prep.supply, &FixedFactor::Gain(gain.clone()), &cfg.assembly(1.0))?;
    let sol = solve(backend, &asm, &cfg.solver)?;
    if sol.status == SdpStatus::Optimal {
        Ok((sol.status, Some(point(&asm, &sol)?)))
    } else {
        Ok((sol.status, None))
    }
}

/// Writes `iteration,gamma,status,rel_change` rows.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "gamma", "status", "rel_change"])?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.10e}", r.gamma),
            r.status.clone(),
            format!("{:.6e}", r.rel_change),
        ])?;
    }
    w.flush()?;
    Ok(())
}
