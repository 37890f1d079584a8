//! Sampled dissipation inequality along a trajectory and empirical L2 gain.

use super::simulate::{kernel_nodes, simpson_weights};
use super::{simulate, ClosedLoop, InitialSegment, Signal, Trajectory};
use crate::error::{Error, Result};
use crate::lmi::{direct, Certificate};
use crate::matfun::{self, Matrix, Vector};
use crate::model::SupplyRate;
use crate::tol;

#[derive(Debug, Clone)]
pub struct DissipationReport {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    /// Central-difference `v̇` (interior nodes; NaN at both ends).
    pub vdot: Vec<f64>,
    pub s: Vec<f64>,
    pub tol_d: f64,
    /// Interior node with the largest `v̇ − s`.
    pub worst_node: usize,
    pub worst_margin: f64,
    pub min_v: f64,
    /// Strict positivity of `[[P, Q], [Qᵀ, R + I⊗S]]`, `S` and `U`.
    pub certificate_definite: bool,
    pub dissipation_ok: bool,
    pub positivity_ok: bool,
}

impl DissipationReport {
    pub fn passed(&self) -> bool {
        self.dissipation_ok && self.positivity_ok
    }
}

/// `v(χ_t)` at every node with `η` and the history integral by Simpson.
pub fn functional_values(traj: &Trajectory, cl: &ClosedLoop, cert: &Certificate) -> Result<Vec<f64>> {
    let nu = cl.nu();
    let d = cl.d();
    cert.check_shapes(nu, d * nu)?;
    let m = traj.steps_per_delay();
    let h = traj.step;
    let w = simpson_weights(m, h);
    let kernel = kernel_nodes(cl, m, h)?;
    let quad = matfun::vcat(&[
        &matfun::hcat(&[&cert.p, &cert.q])?,
        &matfun::hcat(&[&cert.q.transpose(), &cert.r])?,
    ])?;
    let weights: Vec<Matrix> = (0..=m)
        .map(|j| (&cert.s + &cert.u * (j as f64 * h)) * w[j])
        .collect();
    let mut out = Vec::with_capacity(traj.t.len());
    for k in 0..traj.t.len() {
        let mut eta = Vector::zeros(d * nu);
        let mut hist = 0.0;
        for j in 0..=m {
            let x = traj.chi_at(k as isize - (m - j) as isize);
            eta += &kernel[j] * x * w[j];
            hist += x.dot(&(&weights[j] * x));
        }
        let mut xe = Vector::zeros(nu + d * nu);
        xe.rows_mut(0, nu).copy_from(&traj.chi[k]);
        xe.rows_mut(nu, d * nu).copy_from(&eta);
        out.push(xe.dot(&(&quad * &xe)) + hist);
    }
    Ok(out)
}

/// Checks `v̇ − s(z, w) ≤ tol_d` at interior nodes and `v ≥ −1e−8`.
pub fn dissipation_check(
    traj: &Trajectory,
    cert: &Certificate,
    supply: &SupplyRate,
    gamma: Option<f64>,
    cl: &ClosedLoop,
) -> Result<DissipationReport> {
    if traj.horizon() < 2.0 * cl.r * (1.0 - 1e-9) {
        return Err(Error::Parameter(format!(
            "trajectory covers {:.4}, needs at least 2r = {:.4}",
            traj.horizon(),
            2.0 * cl.r
        )));
    }
    let v = functional_values(traj, cl, cert)?;
    let s: Vec<f64> = traj
        .z
        .iter()
        .zip(&traj.w)
        .map(|(z, w)| supply.evaluate(z.as_slice(), w.as_slice(), gamma))
        .collect::<Result<_>>()?;
    let n = v.len();
    let h = traj.step;
    let mut vdot = vec![f64::NAN; n];
    for k in 1..n - 1 {
        vdot[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
    }
    let tol_d = tol::DISSIPATION_REL * (1.0 + s.iter().fold(0.0f64, |a, x| a.max(x.abs())));
    let (worst_node, worst_margin) = (1..n - 1)
        .map(|k| (k, vdot[k] - s[k]))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let min_v = v.iter().cloned().fold(f64::INFINITY, f64::min);

    let nu = cl.nu();
    let func = direct::functional_matrix(cert, cl.d())?;
    let certificate_definite = matfun::lambda_min_sym(&matfun::symmetrize(&func)) > 0.0
        && matfun::lambda_min_sym(&matfun::symmetrize(&cert.s)) > 0.0
        && matfun::lambda_min_sym(&matfun::symmetrize(&cert.u)) > 0.0
        && cert.s.nrows() == nu;

    Ok(DissipationReport {
        t: traj.t.clone(),
        v,
        vdot,
        s,
        tol_d,
        worst_node,
        worst_margin,
        min_v,
        certificate_definite,
        dissipation_ok: worst_margin <= tol_d,
        positivity_ok: min_v >= tol::FUNCTIONAL_FLOOR && certificate_definite,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Estimate {
    /// `max ‖z‖/‖w‖` over the library, absent when a run diverged.
    pub gamma_emp: Option<f64>,
    pub best_input: Option<String>,
    pub ratios: Vec<(String, f64)>,
    pub diverged: bool,
}

fn l2_norm_sq(t: &[f64], xs: &[Vector]) -> f64 {
    t.windows(2)
        .zip(xs.windows(2))
        .map(|(tt, xx)| 0.5 * (tt[1] - tt[0]) * (xx[0].norm_squared() + xx[1].norm_squared()))
        .sum()
}

/// Largest output-to-input L2 ratio over `library` from rest.
pub fn l2_gain_estimate(cl: &ClosedLoop, library: &[Signal], horizon: f64, step: f64) -> Result<L2Estimate> {
    let mut ratios = Vec::with_capacity(library.len());
    for sig in library {
        let tr = simulate(cl, &InitialSegment::Zero, sig, horizon, step)?;
        if tr.diverged {
            return Ok(L2Estimate {
                gamma_emp: None,
                best_input: None,
                ratios,
                diverged: true,
            });
        }
        let wn = l2_norm_sq(&tr.t, &tr.w);
        if wn > 0.0 {
            ratios.push((sig.label(), (l2_norm_sq(&tr.t, &tr.z) / wn).sqrt()));
        }
    }
    let best = ratios
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .cloned();
    Ok(L2Estimate {
        gamma_emp: best.as_ref().map(|b| b.1),
        best_input: best.map(|b| b.0),
        ratios,
        diverged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{supply_from_template, SupplyKind};
    use crate::verify::testing::scalar_loop;
    use crate::verify::default_library;

    fn scalar_cert(p: f64, s: f64, u: f64) -> Certificate {
        let one = |v: f64| Matrix::from_element(1, 1, v);
        Certificate {
            p: one(p),
            q: one(0.0),
            r: one(0.0),
            s: one(s),
            u: one(u),
        }
    }

    #[test]
    fn passthrough_has_unit_gain() {
        let cl = scalar_loop(-1.0, 0.0, 1.0, 0.0, 0.0, 1.0);
        let est = l2_gain_estimate(&cl, &default_library(1), 5.0, 0.01).unwrap();
        assert!((est.gamma_emp.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_lag_gain_approaches_dc_gain() {
        let cl = scalar_loop(-1.0, 0.0, 1.0, 1.0, 1.0, 0.0);
        let step = [Signal::Step { amplitude: 1.0 }];
        let short = l2_gain_estimate(&cl, &step, 5.0, 0.01).unwrap().gamma_emp.unwrap();
        let long = l2_gain_estimate(&cl, &step, 200.0, 0.01).unwrap().gamma_emp.unwrap();
        assert!(short < long && long <= 1.0, "{short} {long}");
        assert!(long > 0.99);
        let all = l2_gain_estimate(&cl, &default_library(4), 50.0, 0.01).unwrap();
        assert!(all.gamma_emp.unwrap() <= 1.0);
    }

    #[test]
    fn unstable_loop_has_no_estimate() {
        let cl = scalar_loop(40.0, 0.0, 0.1, 1.0, 1.0, 0.0);
        let est = l2_gain_estimate(&cl, &[Signal::Step { amplitude: 1.0 }], 10.0, 0.01).unwrap();
        assert!(est.diverged);
        assert!(est.gamma_emp.is_none());
    }

    #[test]
    fn undelayed_lyapunov_certificate_is_dissipative() {
        // ẋ = −x + w, z = x: v = p x² with p = 1 certifies gain 1 with γ = 2
        // (2p(−x + w)x − 2w² + x²/2 ≤ 0 for all x, w).
        let cl = scalar_loop(-1.0, 0.0, 0.5, 1.0, 1.0, 0.0);
        let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
        let tr = simulate(&cl, &InitialSegment::Zero, &Signal::Sine { amplitude: 1.0, omega: 1.3 }, 10.0, 0.005)
            .unwrap();
        let rep = dissipation_check(&tr, &scalar_cert(1.0, 1e-9, 1e-9), &supply, Some(2.0), &cl).unwrap();
        assert!(rep.passed(), "{} > {}", rep.worst_margin, rep.tol_d);
    }

    #[test]
    fn zero_certificate_is_detected() {
        let cl = scalar_loop(-1.0, 0.0, 0.5, 1.0, 1.0, 0.0);
        let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
        let tr = simulate(&cl, &InitialSegment::Zero, &Signal::Step { amplitude: 1.0 }, 2.0, 0.01).unwrap();
        let rep = dissipation_check(&tr, &scalar_cert(0.0, 0.0, 0.0), &supply, Some(0.5), &cl).unwrap();
        assert!(!rep.positivity_ok);
        assert!(!rep.passed());
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let cl = scalar_loop(-1.0, 0.0, 1.0, 1.0, 1.0, 0.0);
        let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
        let tr = simulate(&cl, &InitialSegment::Zero, &Signal::Zero, 1.5, 0.01).unwrap();
        assert!(dissipation_check(&tr, &scalar_cert(1.0, 1.0, 1.0), &supply, Some(1.0), &cl).is_err());
    }
}
