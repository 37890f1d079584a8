//! Method of steps with classical Runge–Kutta on a grid commensurate with
//! the delay.

use std::io::Write;

use super::{ClosedLoop, InitialSegment, Signal};
use crate::error::{Error, Result};
use crate::matfun::{Matrix, Vector};
use crate::tol;

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Nodes `0, h, 2h, …`.
    pub t: Vec<f64>,
    pub chi: Vec<Vector>,
    pub z: Vec<Vector>,
    pub w: Vec<Vector>,
    /// `ψ` at `−r, −r+h, …, 0`.
    pub psi: Vec<Vector>,
    pub step: f64,
    pub r: f64,
    pub diverged: bool,
}

impl Trajectory {
    /// Intervals per delay.
    pub fn steps_per_delay(&self) -> usize {
        self.psi.len() - 1
    }

    /// `χ(t_k)` for `k ≥ −M`, where history indices are negative.
    pub fn chi_at(&self, k: isize) -> &Vector {
        if k >= 0 {
            &self.chi[k as usize]
        } else {
            let m = self.steps_per_delay() as isize;
            &self.psi[(m + k) as usize]
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    /// Largest `‖χ(t)‖₂` on `[t_from, end]`.
    pub fn max_norm_after(&self, t_from: f64) -> f64 {
        self.t
            .iter()
            .zip(&self.chi)
            .filter(|(t, _)| **t >= t_from)
            .map(|(_, x)| x.norm())
            .fold(0.0, f64::max)
    }

    /// Columns `t, chi_*, z_*, w_*`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let nu = self.chi.first().map_or(0, |v| v.len());
        let m = self.z.first().map_or(0, |v| v.len());
        let q = self.w.first().map_or(0, |v| v.len());
        let mut header = vec!["t".to_string()];
        header.extend((0..nu).map(|i| format!("chi_{i}")));
        header.extend((0..m).map(|i| format!("z_{i}")));
        header.extend((0..q).map(|i| format!("w_{i}")));
        w.write_record(&header)?;
        for k in 0..self.t.len() {
            let mut row = vec![format!("{:.10e}", self.t[k])];
            for v in [&self.chi[k], &self.z[k], &self.w[k]] {
                row.extend(v.iter().map(|x| format!("{x:.10e}")));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Two columns `time,value` for one state component.
    pub fn write_state_series<W: Write>(&self, component: usize, out: W) -> Result<()> {
        let nu = self.chi.first().map_or(0, |v| v.len());
        if component >= nu {
            return Err(Error::Usage(format!("state component {component} out of range")));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "value"])?;
        for (t, x) in self.t.iter().zip(&self.chi) {
            w.write_record([format!("{t:.10e}"), format!("{:.10e}", x[component])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Composite Simpson weights for `M` (even) intervals of width `h`.
pub(crate) fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    (0..=m)
        .map(|j| {
            let c = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Grid with an even number of intervals per delay, no coarser than `step`.
pub(crate) fn delay_grid(r: f64, step: f64) -> Result<(usize, f64)> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter(format!("step must be positive, got {step}")));
    }
    if step > r / 10.0 * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "step {step} exceeds r/10 = {}",
            r / 10.0
        )));
    }
    let mut m = (r / step - 1e-9).ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    Ok((m, r / m as f64))
}

struct History<'a> {
    segment: &'a InitialSegment,
    psi: &'a [Vector],
    chi: &'a [Vector],
    m: usize,
    h: f64,
}

impl History<'_> {
    fn node(&self, k: isize) -> &Vector {
        if k >= 0 {
            &self.chi[k as usize]
        } else {
            &self.psi[(self.m as isize + k) as usize]
        }
    }

    /// `ψ` itself before 0, afterwards cubic Lagrange interpolation on a
    /// stencil that stays inside one delay interval.
    fn at(&self, t: f64) -> Vector {
        let x = t / self.h;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            return self.node(nearest as isize).clone();
        }
        if x < 0.0 {
            let nu = self.psi[0].len();
            return self.segment.eval(nu, t).unwrap_or_else(|_| Vector::zeros(nu));
        }
        let m = self.m as isize;
        let lo = (x.floor() as isize).div_euclid(m) * m;
        let hi = (lo + m).min(self.chi.len() as isize - 1);
        let width = (hi - lo + 1).min(4);
        let start = (x.floor() as isize - 1).clamp(lo, hi + 1 - width);
        let mut out = Vector::zeros(self.node(start).len());
        for a in 0..width {
            let ka = start + a;
            let mut l = 1.0;
            for b in 0..width {
                if a != b {
                    let kb = (start + b) as f64;
                    l *= (x - kb) / (ka as f64 - kb);
                }
            }
            out.axpy(l, self.node(ka), 1.0);
        }
        out
    }
}

/// Integrates the closed loop from `ψ` over `[0, horizon]`.
pub fn simulate(
    cl: &ClosedLoop,
    psi: &InitialSegment,
    w: &Signal,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    let (m, h) = delay_grid(cl.r, step)?;
    let nu = cl.nu();
    let wfun = w.sampler(cl.q(), horizon + h);

    let simpson = simpson_weights(m, h);
    let taus: Vec<f64> = (0..=m).map(|j| -cl.r + j as f64 * h).collect();
    let mut dist = Vec::with_capacity(m + 1);
    let mut out_dist = Vec::with_capacity(m + 1);
    for (j, &tau) in taus.iter().enumerate() {
        let f = cl.kernel(tau)?;
        dist.push(&cl.a3 * &f * simpson[j]);
        out_dist.push(&cl.c3 * &f * simpson[j]);
    }

    let psi_nodes: Vec<Vector> = taus
        .iter()
        .map(|&tau| psi.eval(nu, tau))
        .collect::<Result<_>>()?;
    let steps = (horizon / h - 1e-9).ceil() as usize;
    let mut chi = vec![psi_nodes[m].clone()];
    let mut t = vec![0.0];
    let mut diverged = false;

    let rhs = |hist: &History, s: f64, x: &Vector| -> Vector {
        let mut dx = &cl.a0 * x + &cl.a1 * hist.at(s - cl.r) + &cl.dw * wfun(s);
        for (j, tau) in taus.iter().enumerate().take(m) {
            dx += &dist[j] * hist.at(s + tau);
        }
        dx += &dist[m] * x;
        dx
    };

    for n in 0..steps {
        let tn = n as f64 * h;
        let x = chi[n].clone();
        let next = {
            let hist = History {
                segment: psi,
                psi: &psi_nodes,
                chi: &chi,
                m,
                h,
            };
            let k1 = rhs(&hist, tn, &x);
            let k2 = rhs(&hist, tn + 0.5 * h, &(&x + &k1 * (0.5 * h)));
            let k3 = rhs(&hist, tn + 0.5 * h, &(&x + &k2 * (0.5 * h)));
            let k4 = rhs(&hist, tn + h, &(&x + &k3 * h));
            &x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        };
        if next.iter().any(|v| !v.is_finite()) || next.norm() > tol::DIVERGENCE_NORM {
            diverged = true;
            break;
        }
        chi.push(next);
        t.push((n + 1) as f64 * h);
    }

    let mut z = Vec::with_capacity(chi.len());
    let mut wv = Vec::with_capacity(chi.len());
    {
        let hist = History {
            segment: psi,
            psi: &psi_nodes,
            chi: &chi,
            m,
            h,
        };
        for (k, &tk) in t.iter().enumerate() {
            let wk = wfun(tk);
            let mut zk = &cl.c1 * &chi[k] + &cl.c2 * hist.node(k as isize - m as isize) + &cl.d3 * &wk;
            for (j, od) in out_dist.iter().enumerate() {
                zk += od * hist.node(k as isize - (m - j) as isize);
            }
            z.push(zk);
            wv.push(wk);
        }
    }

    Ok(Trajectory {
        t,
        chi,
        z,
        w: wv,
        psi: psi_nodes,
        step: h,
        r: cl.r,
        diverged,
    })
}

/// `F(τ_j)` on the simulation grid of the history window.
pub(crate) fn kernel_nodes(cl: &ClosedLoop, m: usize, h: f64) -> Result<Vec<Matrix>> {
    (0..=m).map(|j| cl.kernel(-cl.r + j as f64 * h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::testing::scalar_loop;

    #[test]
    fn zero_data_stays_at_rest() {
        let cl = scalar_loop(0.3, -1.0, 1.0, 1.0, 1.0, 0.0);
        let tr = simulate(&cl, &InitialSegment::Zero, &Signal::Zero, 3.0, 0.01).unwrap();
        assert!(tr.chi.iter().all(|x| x.norm() == 0.0));
        assert!(tr.z.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn first_interval_of_pure_delay() {
        let cl = scalar_loop(0.0, -1.0, 1.0, 0.0, 1.0, 0.0);
        let psi = InitialSegment::Constant(Vector::from_element(1, 1.0));
        let tr = simulate(&cl, &psi, &Signal::Zero, 1.0, 0.01).unwrap();
        for (t, x) in tr.t.iter().zip(&tr.chi) {
            assert!((x[0] - (1.0 - t)).abs() < 1e-8, "t={t}: {}", x[0]);
        }
        // Second interval: x = ((t − 2)² − 1)/2.
        let tr = simulate(&cl, &psi, &Signal::Zero, 2.0, 0.01).unwrap();
        let last = tr.chi.last().unwrap()[0];
        assert!((last + 0.5).abs() < 1e-8, "{last}");
    }

    #[test]
    fn grid_is_even_and_fine_enough() {
        assert!(delay_grid(1.0, 0.2).is_err());
        let (m, h) = delay_grid(1.0, 0.03).unwrap();
        assert_eq!(m % 2, 0);
        assert!(h <= 0.03);
        assert!((m as f64 * h - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_weights_are_exact_on_cubics() {
        let w = simpson_weights(10, 0.1);
        let s: f64 = w.iter().enumerate().map(|(j, w)| w * (j as f64 * 0.1).powi(3)).sum();
        assert!((s - 0.25).abs() < 1e-14);
    }

    #[test]
    fn divergence_truncates() {
        let cl = scalar_loop(30.0, 0.0, 0.1, 0.0, 1.0, 0.0);
        let psi = InitialSegment::Constant(Vector::from_element(1, 1.0));
        let tr = simulate(&cl, &psi, &Signal::Zero, 10.0, 0.01).unwrap();
        assert!(tr.diverged);
        assert!(tr.horizon() < 10.0);
    }
}
