//! Characteristic roots by Chebyshev collocation of the solution operator's
//! generator on `[−r, 0]`.

use std::io::Write;

use super::ClosedLoop;
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};

pub const DEFAULT_N_LIST: [usize; 3] = [10, 20, 40];

/// Successive abscissae closer than this count as converged.
const CONVERGENCE_TOL: f64 = 1e-4;

/// Rightmost roots kept per discretization.
const ROOTS_KEPT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub sizes: Vec<usize>,
    /// Rightmost `(re, im)` roots per size, by decreasing real part.
    pub rightmost: Vec<Vec<(f64, f64)>>,
    pub abscissae: Vec<f64>,
    /// Abscissa at the largest size.
    pub estimate: f64,
    /// Set when the last two sizes agree within `1e−4`.
    pub converged: bool,
}

impl SpectrumReport {
    /// Converged and negative.
    pub fn is_stable(&self) -> bool {
        self.converged && self.estimate < 0.0
    }

    /// Rows `N,rank,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "rank", "re", "im"])?;
        for (n, roots) in self.sizes.iter().zip(&self.rightmost) {
            for (k, (re, im)) in roots.iter().enumerate() {
                w.write_record([
                    n.to_string(),
                    k.to_string(),
                    format!("{re:.12e}"),
                    format!("{im:.12e}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Differentiation matrix on `x_k = cos(kπ/N)`, `k = 0..N`.
pub(crate) fn cheb_diff(n: usize) -> Matrix {
    let x: Vec<f64> = (0..=n)
        .map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos())
        .collect();
    let c: Vec<f64> = (0..=n)
        .map(|k| {
            let base = if k == 0 || k == n { 2.0 } else { 1.0 };
            if k % 2 == 0 {
                base
            } else {
                -base
            }
        })
        .collect();
    let mut d = Matrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c[i] / c[j] / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Clenshaw–Curtis weights on `x_k = cos(kπ/N)` for `∫_{−1}^{1}`.
pub(crate) fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                let th = std::f64::consts::PI * (i + 1) as f64 / nf;
                *vi -= 2.0 * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            let th = std::f64::consts::PI * (i + 1) as f64 / nf;
            *vi -= (nf * th).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (i, vi) in v.iter_mut().enumerate() {
                let th = std::f64::consts::PI * (i + 1) as f64 / nf;
                *vi -= 2.0 * (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

/// Discretized generator of size `(N+1)ν`.
pub(crate) fn generator(cl: &ClosedLoop, n: usize) -> Result<Matrix> {
    let nu = cl.nu();
    let r = cl.r;
    let d = cheb_diff(n);
    let w = clenshaw_curtis(n);
    let nodes = matfun::chebyshev_points(n + 1, -r, 0.0);
    let mut m = Matrix::zeros((n + 1) * nu, (n + 1) * nu);
    m.view_mut((0, 0), (nu, nu)).copy_from(&cl.a0);
    {
        let mut v = m.view_mut((0, n * nu), (nu, nu));
        v += &cl.a1;
    }
    for (j, &tau) in nodes.iter().enumerate() {
        let blk = &cl.a3 * cl.kernel(tau)? * (0.5 * r * w[j]);
        let mut v = m.view_mut((0, j * nu), (nu, nu));
        v += blk;
    }
    let scale = 2.0 / r;
    for i in 1..=n {
        for j in 0..=n {
            let dij = scale * d[(i, j)];
            if dij != 0.0 {
                for k in 0..nu {
                    m[(i * nu + k, j * nu + k)] = dij;
                }
            }
        }
    }
    Ok(m)
}

/// Rightmost characteristic roots for each `N` in `n_list`.
pub fn spectral_abscissa(cl: &ClosedLoop, n_list: &[usize]) -> Result<SpectrumReport> {
    if n_list.is_empty() {
        return Err(Error::Parameter("empty discretization list".into()));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 5) {
        return Err(Error::Parameter(format!("discretization size {n} is below 5")));
    }
    let mut rightmost = Vec::with_capacity(n_list.len());
    let mut abscissae = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut roots = matfun::eigenvalues(&generator(cl, n)?)?;
        roots.sort_by(|a, b| b.0.total_cmp(&a.0));
        roots.truncate(ROOTS_KEPT);
        abscissae.push(roots[0].0);
        rightmost.push(roots);
    }
    let k = abscissae.len();
    let converged = k >= 2 && (abscissae[k - 1] - abscissae[k - 2]).abs() < CONVERGENCE_TOL;
    Ok(SpectrumReport {
        sizes: n_list.to_vec(),
        rightmost,
        estimate: abscissae[k - 1],
        abscissae,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::testing::scalar_loop;

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        for n in [6, 7, 16] {
            let w = clenshaw_curtis(n);
            let x: Vec<f64> = (0..=n)
                .map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos())
                .collect();
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-14);
            let quad: f64 = w.iter().zip(&x).map(|(w, x)| w * x.powi(4)).sum();
            assert!((quad - 0.4).abs() < 1e-14, "{n}: {quad}");
        }
    }

    #[test]
    fn differentiation_is_exact_on_cubics() {
        let n = 8;
        let d = cheb_diff(n);
        let x: Vec<f64> = (0..=n)
            .map(|k| (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        let f = nalgebra::DVector::from_iterator(n + 1, x.iter().map(|x| x.powi(3) - 2.0 * x));
        let df = &d * f;
        for (k, x) in x.iter().enumerate() {
            assert!((df[k] - (3.0 * x * x - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn undelayed_scalar_root() {
        let cl = scalar_loop(-1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        let rep = spectral_abscissa(&cl, &DEFAULT_N_LIST).unwrap();
        assert!(rep.converged);
        assert!((rep.estimate + 1.0).abs() < 1e-8, "{}", rep.estimate);
    }

    #[test]
    fn rejects_small_sizes() {
        let cl = scalar_loop(-1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
        assert!(spectral_abscissa(&cl, &[4, 10]).is_err());
        assert!(spectral_abscissa(&cl, &[]).is_err());
    }

    #[test]
    fn unconverged_list_is_flagged() {
        let cl = scalar_loop(0.0, -1.0, 1.0, 0.0, 1.0, 0.0);
        let rep = spectral_abscissa(&cl, &[5]).unwrap();
        assert!(!rep.converged);
    }

    /// Newton on `λ + e^{−λ} = 0` in complex arithmetic.
    fn pure_delay_root(mut re: f64, mut im: f64) -> (f64, f64) {
        for _ in 0..50 {
            let e = (-re).exp();
            let (er, ei) = (e * im.cos(), -e * im.sin());
            let (fr, fi) = (re + er, im + ei);
            let (dr, di) = (1.0 - er, -ei);
            let den = dr * dr + di * di;
            re -= (fr * dr + fi * di) / den;
            im -= (fi * dr - fr * di) / den;
        }
        (re, im)
    }

    #[test]
    fn pure_delay_rightmost_pair() {
        let (re, im) = pure_delay_root(-0.3, 1.3);
        assert!((re + 0.318131505).abs() < 1e-8);
        let cl = scalar_loop(0.0, -1.0, 1.0, 0.0, 1.0, 0.0);
        let rep = spectral_abscissa(&cl, &DEFAULT_N_LIST).unwrap();
        assert!(rep.converged);
        assert!((rep.estimate - re).abs() < 1e-6, "{}", rep.estimate);
        let top = rep.rightmost.last().unwrap()[0];
        assert!((top.1.abs() - im).abs() < 1e-6);
    }
}
