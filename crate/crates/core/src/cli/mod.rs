//! `dsfc` command line: synthesis, verification, simulation, the benchmark
//! demo and problem dumps.
//!
//! Exit codes: 0 on success, 1 on infeasibility or a failed verification,
//! 2 on a configuration or usage error.

pub mod config;
pub mod gains;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::demo;
use crate::error::{Error, Result};
use crate::lmi::{assemble_fixed, compile, Certificate, FixedFactor};
use crate::matfun;
use crate::model::{supply_from_template, ControllerGains};
use crate::predictor::predictor_init;
use crate::solver::{backend_from_env, SdpBackend, SdpStatus};
use crate::synthesis::{self, AlgorithmConfig, Prepared, SynthesisResult};
use crate::verify::{
    default_library, dissipation_check, l2_gain_estimate, simulate, spectral_abscissa, ClosedLoop,
    InitialSegment, Signal, SpectrumReport,
};
use config::{load_config, Resolved, VerifyBlock};
use gains::GainsFile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dsfc", version, about = "Dissipative dynamical state feedback for input-delay plants")]
pub struct Cli {
    /// Seed of every stochastic test signal.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full synthesis and write gains, certificate and trace.
    Synthesize {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Characteristic roots, sampled dissipation and empirical L2 gain.
    Verify {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        gains: PathBuf,
        /// JSON report (stdout when absent).
        #[arg(short, long)]
        report: Option<PathBuf>,
        /// Rightmost roots per discretization as CSV.
        #[arg(long)]
        spectrum_csv: Option<PathBuf>,
    },
    /// Simulate the closed loop from rest and write the trajectory as CSV.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        gains: PathBuf,
        #[arg(long)]
        horizon: f64,
        /// zero, step, sine, sine:<omega> or noise:<seed>.
        #[arg(long, default_value = "zero")]
        input: String,
        /// Constant initial segment, comma separated (zero when absent).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reproducible examples.
    Demo {
        #[command(subcommand)]
        which: DemoCommand,
    },
    /// Listing of the fixed-gain problem for the predictor seed (or given gains).
    DumpLmi {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        gains: Option<PathBuf>,
        /// Also write the compiled problem in SDPA sparse format.
        #[arg(long)]
        sdpa: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DemoCommand {
    /// Two-state benchmark plant with r = 1 and the five-function basis.
    PaperExample {
        /// Number of proximal iterations.
        #[arg(long, default_value_t = 100)]
        noi: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return EXIT_OK;
                }
                _ => EXIT_CONFIG,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error that ended a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::Solver(_) => EXIT_FAILED,
        _ => EXIT_CONFIG,
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Synthesize { config, output, trace } => {
            cmd_synthesize(config, output.as_deref(), trace.as_deref(), out, err)
        }
        Command::Verify {
            config,
            gains,
            report,
            spectrum_csv,
        } => cmd_verify(config, gains, report.as_deref(), spectrum_csv.as_deref(), cli.seed, out),
        Command::Simulate {
            config,
            gains,
            horizon,
            input,
            x0,
            output,
        } => cmd_simulate(config, gains, *horizon, input, x0.as_deref(), output.as_deref(), out, err),
        Command::Demo {
            which: DemoCommand::PaperExample { noi, trace, output },
        } => cmd_demo(*noi, trace.as_deref(), output.as_deref(), cli.seed, out),
        Command::DumpLmi { config, gains, sdpa } => cmd_dump(config, gains.as_deref(), sdpa.as_deref(), out),
    }
}

fn resolved(path: &Path) -> Result<(Resolved, Prepared)> {
    let res = load_config(path)?.resolve()?;
    let prep = Prepared::new(&res.plant, &res.spec, &res.supply, None)?;
    Ok((res, prep))
}

fn backend() -> Result<Box<dyn SdpBackend>> {
    backend_from_env().map_err(|e| Error::Usage(format!("DSFC_SDP_BACKEND: {e}")))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?))
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = create(p)?;
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fmt_gamma(g: Option<f64>) -> String {
    g.map_or_else(|| "-".to_string(), |g| format!("{g:.6}"))
}

fn print_summary(res: &SynthesisResult, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "gamma0 (fixed seed gains)    {}", fmt_gamma(res.init.gamma0))?;
    writeln!(out, "gamma1 (fixed P, Q)          {}", fmt_gamma(res.init.gamma1))?;
    writeln!(out, "gamma final                  {}", fmt_gamma(res.gamma_final))?;
    writeln!(
        out,
        "iterations {} (accepted {}), stop: {}",
        res.trace.len(),
        res.accepted.len(),
        res.stop
    )?;
    writeln!(
        out,
        "post-check: {} gamma {}",
        res.post_check.status,
        fmt_gamma(res.post_check.gamma)
    )?;
    Ok(())
}

fn cmd_synthesize(
    config: &Path,
    output: Option<&Path>,
    trace: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let (res, prep) = resolved(config)?;
    let backend = backend()?;
    let result = synthesis::run(&prep, &res.algorithm, backend.as_ref())?;

    let trace_path = trace.map(Path::to_path_buf).or(res.output.trace.as_ref().map(PathBuf::from));
    if let Some(p) = trace_path {
        let mut f = create(&p)?;
        synthesis::write_trace_csv(&result.trace, &mut f)?;
        f.flush()?;
    }
    let gains_path = output.map(Path::to_path_buf).or(res.output.gains.as_ref().map(PathBuf::from));
    let text = GainsFile::from_result(&result).to_json()?;
    match gains_path {
        Some(p) => {
            write_text(Some(&p), &text, out)?;
            print_summary(&result, out)?;
        }
        None => {
            write_text(None, &text, out)?;
            print_summary(&result, err)?;
        }
    }
    if result.post_check.status != SdpStatus::Optimal {
        writeln!(err, "final gains could not be re-certified ({})", result.post_check.status)?;
        return Ok(EXIT_FAILED);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub sizes: Vec<usize>,
    pub abscissae: Vec<f64>,
    pub abscissa: f64,
    pub converged: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DissipationSummary {
    pub horizon: f64,
    pub omega: f64,
    pub gamma: Option<f64>,
    pub worst_margin: f64,
    pub worst_time: f64,
    pub tol_d: f64,
    pub min_functional: f64,
    pub certificate_definite: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct L2Summary {
    pub horizon: f64,
    pub gamma_emp: Option<f64>,
    pub best_input: Option<String>,
    pub bound: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub spectrum: SpectrumSummary,
    pub dissipation: Option<DissipationSummary>,
    pub l2: Option<L2Summary>,
    pub certificate_source: String,
    pub passed: bool,
}

/// Spectrum, dissipation along a sinusoidally forced run from rest and the
/// empirical L2 gain against `l2_slack · γ`.
pub fn verification_report(
    prep: &Prepared,
    vcfg: &VerifyBlock,
    gains: &ControllerGains,
    certificate: Option<(&Certificate, Option<f64>)>,
    step: f64,
    seed: u64,
) -> Result<(VerificationReport, SpectrumReport)> {
    let cl = ClosedLoop::from_gains(&prep.aug, &prep.spec, &prep.gram, gains)?;
    let spec = spectral_abscissa(&cl, &vcfg.n_list)?;
    let spectrum = SpectrumSummary {
        sizes: spec.sizes.clone(),
        abscissae: spec.abscissae.clone(),
        abscissa: spec.estimate,
        converged: spec.converged,
        passed: spec.is_stable(),
    };
    let r = prep.plant.r;

    let dissipation = match certificate {
        Some((cert, gamma)) => {
            let horizon = vcfg.dissipation_horizon * r;
            let w = Signal::Sine {
                amplitude: 1.0,
                omega: vcfg.dissipation_omega,
            };
            let tr = simulate(&cl, &InitialSegment::Zero, &w, horizon, step)?;
            if tr.diverged {
                Some(DissipationSummary {
                    horizon,
                    omega: vcfg.dissipation_omega,
                    gamma,
                    worst_margin: f64::INFINITY,
                    worst_time: tr.horizon(),
                    tol_d: 0.0,
                    min_functional: f64::NAN,
                    certificate_definite: false,
                    passed: false,
                })
            } else {
                let rep = dissipation_check(&tr, cert, &prep.supply, gamma, &cl)?;
                Some(DissipationSummary {
                    horizon,
                    omega: vcfg.dissipation_omega,
                    gamma,
                    worst_margin: rep.worst_margin,
                    worst_time: rep.t[rep.worst_node],
                    tol_d: rep.tol_d,
                    min_functional: rep.min_v,
                    certificate_definite: rep.certificate_definite,
                    passed: rep.passed(),
                })
            }
        }
        None => None,
    };

    let l2 = if prep.supply.gamma_role {
        let horizon = vcfg.l2_horizon * r;
        let est = l2_gain_estimate(&cl, &default_library(seed), horizon, step)?;
        let bound = certificate.and_then(|(_, g)| g).map(|g| vcfg.l2_slack * g);
        let passed = match (est.gamma_emp, bound) {
            (Some(e), Some(b)) => e <= b,
            _ => false,
        };
        Some(L2Summary {
            horizon,
            gamma_emp: est.gamma_emp,
            best_input: est.best_input,
            bound,
            passed,
        })
    } else {
        None
    };

    let passed = spectrum.passed
        && dissipation.as_ref().is_some_and(|d| d.passed)
        && l2.as_ref().is_none_or(|l| l.passed);
    Ok((
        VerificationReport {
            spectrum,
            dissipation,
            l2,
            certificate_source: String::new(),
            passed,
        },
        spec,
    ))
}

fn cmd_verify(
    config: &Path,
    gains_path: &Path,
    report: Option<&Path>,
    spectrum_csv: Option<&Path>,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32> {
    let (res, prep) = resolved(config)?;
    let file = GainsFile::load(gains_path)?;
    let gains = file.gains()?;
    let l = prep.layout();
    gains
        .validate(prep.plant.p(), l.nu, l.d)
        .map_err(|e| Error::config("K", e.to_string()))?;

    let (cert, gamma, source) = match &file.certificate {
        Some(c) => {
            let cert = c.certificate()?;
            cert.check_shapes(l.nu, l.dnu())
                .map_err(|e| Error::config("certificate", e.to_string()))?;
            (Some(cert), file.gamma, "gains file")
        }
        None => {
            let backend = backend()?;
            match synthesis::certify(&prep, &gains.stacked(), &res.algorithm, backend.as_ref())? {
                (_, Some(it)) => (Some(it.certificate), it.gamma, "fixed-gain solve"),
                (_, None) => (None, None, "none (fixed-gain solve failed)"),
            }
        }
    };
    let (mut rep, spec) = verification_report(
        &prep,
        &res.verify,
        &gains,
        cert.as_ref().map(|c| (c, gamma)),
        res.step(),
        seed,
    )?;
    rep.certificate_source = source.to_string();
    if let Some(p) = spectrum_csv {
        let mut f = create(p)?;
        spec.write_csv(&mut f)?;
        f.flush()?;
    }
    let mut text = serde_json::to_string_pretty(&rep)?;
    text.push('\n');
    let report_path = report.map(Path::to_path_buf).or(res.output.report.as_ref().map(PathBuf::from));
    write_text(report_path.as_deref(), &text, out)?;
    if report_path.is_some() {
        writeln!(
            out,
            "abscissa {:.6e}, verification {}",
            rep.spectrum.abscissa,
            if rep.passed { "passed" } else { "FAILED" }
        )?;
    }
    Ok(if rep.passed { EXIT_OK } else { EXIT_FAILED })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: &Path,
    gains_path: &Path,
    horizon: f64,
    input: &str,
    x0: Option<&[f64]>,
    output: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let (res, prep) = resolved(config)?;
    let gains = GainsFile::load(gains_path)?.gains()?;
    let cl = ClosedLoop::from_gains(&prep.aug, &prep.spec, &prep.gram, &gains)
        .map_err(|e| Error::config("K", e.to_string()))?;
    let signal: Signal = input.parse()?;
    let psi = match x0 {
        None => InitialSegment::Zero,
        Some(v) => {
            if v.len() != cl.nu() {
                return Err(Error::Usage(format!(
                    "--x0 has {} entries, the closed-loop state has {}",
                    v.len(),
                    cl.nu()
                )));
            }
            InitialSegment::Constant(matfun::Vector::from_column_slice(v))
        }
    };
    let tr = simulate(&cl, &psi, &signal, horizon, res.step())?;
    let path = output.map(Path::to_path_buf).or(res.output.trajectory.as_ref().map(PathBuf::from));
    match path {
        Some(p) => {
            let mut f = create(&p)?;
            tr.write_csv(&mut f)?;
            f.flush()?;
        }
        None => tr.write_csv(&mut *out)?,
    }
    if tr.diverged {
        writeln!(err, "warning: trajectory diverged at t = {:.4}", tr.horizon())?;
    }
    Ok(EXIT_OK)
}

fn cmd_demo(
    noi: usize,
    trace: Option<&Path>,
    output: Option<&Path>,
    seed: u64,
    out: &mut dyn Write,
) -> Result<i32> {
    let r = demo::DEMO_DELAY;
    let plant = demo::paper_plant(r);
    let spec = demo::paper_basis(r)?;
    let supply = supply_from_template(demo::paper_supply(), plant.m(), plant.q())?;
    let prep = Prepared::new(&plant, &spec, &supply, None)?;
    let cfg = AlgorithmConfig {
        max_iter: noi,
        ..AlgorithmConfig::default()
    };
    let backend = backend()?;
    writeln!(out, "benchmark plant, r = {r}, basis rates {:?}, backend {}", demo::BASIS_RATES, backend.name())?;

    let started = Instant::now();
    let result = synthesis::run(&prep, &cfg, backend.as_ref())?;
    let seed_gains = &result.init.seed;
    writeln!(
        out,
        "predictor seed: K = {:?}, alpha(A+BK) = {:.6}",
        seed_gains.k.as_slice(),
        matfun::spectral_abscissa_of(&(&plant.a + &plant.b * &seed_gains.k))?
    )?;
    writeln!(
        out,
        "gamma0 {}  (reference {})",
        fmt_gamma(result.init.gamma0),
        demo::REFERENCE_GAMMA_INIT[0]
    )?;
    writeln!(
        out,
        "gamma1 {}  (reference {})",
        fmt_gamma(result.init.gamma1),
        demo::REFERENCE_GAMMA_INIT[1]
    )?;
    writeln!(out, "{:>5} {:>12} {:>10} {:>12}", "iter", "gamma", "status", "rel_change")?;
    for row in &result.trace {
        writeln!(
            out,
            "{:>5} {:>12.7} {:>10} {:>12.3e}",
            row.iteration, row.gamma, row.status, row.rel_change
        )?;
    }
    for (k, g_ref) in demo::REFERENCE_GAMMA_TRACE {
        let ours = result
            .trace
            .iter()
            .rev()
            .find(|t| t.accepted && t.iteration <= k)
            .map(|t| t.gamma);
        if k <= noi {
            writeln!(out, "after {k:>3} iterations: gamma {}  (reference {g_ref})", fmt_gamma(ours))?;
        }
    }
    print_summary(&result, out)?;

    let cl = ClosedLoop::from_gains(&prep.aug, &prep.spec, &prep.gram, &result.gains)?;
    let spec_rep = spectral_abscissa(&cl, &crate::verify::DEFAULT_N_LIST)?;
    writeln!(
        out,
        "spectral abscissa of the final loop {:.6} (converged: {})",
        spec_rep.estimate, spec_rep.converged
    )?;
    writeln!(out, "elapsed {:.1} s (seed {seed})", started.elapsed().as_secs_f64())?;

    if let Some(p) = trace {
        let mut f = create(p)?;
        synthesis::write_trace_csv(&result.trace, &mut f)?;
        f.flush()?;
    }
    if let Some(p) = output {
        write_text(Some(p), &GainsFile::from_result(&result).to_json()?, out)?;
    }

    let trace = result.gamma_trace();
    let monotone = trace
        .windows(2)
        .all(|w| w[1] <= w[0] + crate::tol::MONOTONE_SLACK);
    let improved = match (result.gamma_final, result.init.gamma0) {
        (Some(f), Some(g0)) => f < g0,
        _ => false,
    };
    Ok(if monotone && improved && spec_rep.is_stable() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn cmd_dump(config: &Path, gains_path: Option<&Path>, sdpa: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let (res, prep) = resolved(config)?;
    let (gain, origin) = match gains_path {
        Some(p) => (GainsFile::load(p)?.gains()?.stacked(), "gains file"),
        None => {
            let seed = predictor_init(
                &prep.plant,
                &prep.spec,
                &prep.gram,
                res.algorithm.k.as_ref(),
                res.algorithm.x.as_ref(),
            )?;
            (seed.gains.stacked(), "predictor seed")
        }
    };
    let asm = assemble_fixed(&prep.aug, &prep.supply, &FixedFactor::Gain(gain), &res.algorithm.assembly(1.0))?;
    let l = prep.layout();
    writeln!(out, "fixed-gain problem ({origin})")?;
    writeln!(
        out,
        "layout nu={} d={} q={} m={} ell={} blocks {:?}",
        l.nu,
        l.d,
        l.q,
        l.m,
        l.ell(),
        l.sizes()
    )?;
    writeln!(out, "strict margin {:e}", prep.strict_margin())?;
    write!(out, "{}", asm.problem.dump_text())?;
    let sdp = compile(&asm.problem)?;
    write!(out, "{}", sdp.manifest())?;
    if let Some(p) = sdpa {
        write_text(Some(p), &sdp.to_sdpa(), out)?;
    }
    Ok(EXIT_OK)
}
