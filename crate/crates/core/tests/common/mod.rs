#![allow(dead_code)]

use dsfc::basis::{build_gram, eval_f, BasisSpec};
use dsfc::lmi::expr::{smat, svec};
use dsfc::lmi::{assemble_proximal_step, direct, Anchor, Assignment, AssemblyOptions, Certificate, Slot, SupplyEmbedding};
use dsfc::matfun::{self, Matrix};
use dsfc::model::{supply_from_template, PlantModel, SupplyKind};
use dsfc::solver::SdpBackend;
use dsfc::synthesis::{certify, AlgorithmConfig, Iterate, Prepared};
use nalgebra::Complex;
use rand::Rng;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let l = random_matrix(rng, n, n);
    &l * l.transpose() + Matrix::identity(n, n) * 0.1
}

/// Scalar plant `ẋ = a x + u(t−r) + w`, `z = x + wu·u`, one exponential
/// basis function.
pub fn scalar_toy(a: f64, r: f64, rate: f64, wu: f64) -> Prepared {
    let one = |v: f64| Matrix::from_element(1, 1, v);
    let plant = PlantModel {
        a: one(a),
        b: one(1.0),
        d1: one(1.0),
        c1: Matrix::from_row_slice(1, 2, &[1.0, wu]),
        c2: Matrix::zeros(1, 2),
        c3bar: Matrix::zeros(1, 2),
        d2: one(0.0),
        d3: one(0.0),
        r,
    };
    let spec = BasisSpec::exponentials(&[rate], r).unwrap();
    let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
    Prepared::new(&plant, &spec, &supply, None).unwrap()
}

/// The toy used for the global-optimality comparison.
pub fn oracle_toy() -> Prepared {
    scalar_toy(0.5, 1.0, -0.5, 3.0)
}

fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Largest entrywise gap between the closed-form Gram matrix and adaptive
/// quadrature of `∫ f fᵀ`.
pub fn gram_quadrature_gap(spec: &BasisSpec) -> f64 {
    let exact = matfun::vanloan_gram(&spec.pi, &spec.f0, spec.r).unwrap();
    let d = spec.dim();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let q = adaptive_simpson(
                |t| {
                    let v = spec.eval(t).unwrap();
                    v[i] * v[j]
                },
                -spec.r,
                0.0,
                1e-15,
            );
            worst = worst.max((q - exact.as_matrix()[(i, j)]).abs());
        }
    }
    worst
}

/// Random `C¹` piecewise-cubic Hermite function on `[−r, 0]`.
pub struct HermitePath {
    knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl HermitePath {
    pub fn random<R: Rng>(rng: &mut R, nu: usize, pieces: usize, r: f64) -> Self {
        let knots = (0..=pieces).map(|k| -r + r * k as f64 / pieces as f64).collect();
        let mut draw = || (0..nu).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        let values = (0..=pieces).map(|_| draw()).collect();
        let slopes = (0..=pieces).map(|_| draw()).collect();
        HermitePath { knots, values, slopes }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let k = self
            .knots
            .windows(2)
            .position(|w| t <= w[1])
            .unwrap_or(self.knots.len() - 2);
        let (a, b) = (self.knots[k], self.knots[k + 1]);
        let h = b - a;
        let s = (t - a) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        (0..self.values[k].len())
            .map(|i| {
                h00 * self.values[k][i]
                    + h10 * h * self.slopes[k][i]
                    + h01 * self.values[k + 1][i]
                    + h11 * h * self.slopes[k + 1][i]
            })
            .collect()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
}

/// Composite Simpson nodes and weights aligned with the knots of a path.
pub fn simpson_grid(knots: &[f64], panels_per_piece: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / (2 * panels_per_piece) as f64;
        for j in 0..=2 * panels_per_piece {
            let c = if j == 0 || j == 2 * panels_per_piece {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let t = w[0] + j as f64 * h;
            match out.last_mut() {
                Some(last) if j == 0 && (last.0 - t).abs() < 1e-14 => last.1 += c * h / 3.0,
                _ => out.push((t, c * h / 3.0)),
            }
        }
    }
    out
}

/// `∫ψᵀUψ − ηᵀ(I_d ⊗ U)η` with `η = ∫F(τ)ψ(τ)dτ`, relative to the first term.
pub struct BesselSampler {
    spec: BasisSpec,
    nu: usize,
    pieces: usize,
    grid: Vec<(f64, f64)>,
    kernels: Vec<Matrix>,
}

impl BesselSampler {
    pub fn new(spec: BasisSpec, nu: usize, pieces: usize) -> Self {
        let gram = build_gram(&spec, nu).unwrap();
        let knots: Vec<f64> = (0..=pieces).map(|k| -spec.r + spec.r * k as f64 / pieces as f64).collect();
        let grid = simpson_grid(&knots, 200);
        let kernels = grid.iter().map(|&(t, _)| eval_f(&gram, &spec, t).unwrap()).collect();
        BesselSampler { spec, nu, pieces, grid, kernels }
    }

    pub fn relative_gap<R: Rng>(&self, rng: &mut R) -> f64 {
        let nu = self.nu;
        let d = self.spec.dim();
        let path = HermitePath::random(rng, nu, self.pieces, self.spec.r);
        let u = random_spd(rng, nu);
        let mut lhs = 0.0;
        let mut eta = Matrix::zeros(d * nu, 1);
        for (&(t, w), f) in self.grid.iter().zip(&self.kernels) {
            let psi = Matrix::from_column_slice(nu, 1, &path.eval(t));
            lhs += w * (psi.transpose() * &u * &psi)[(0, 0)];
            eta += f * &psi * w;
        }
        let big_u = matfun::kron(&Matrix::identity(d, d), &u);
        let rhs = (eta.transpose() * big_u * &eta)[(0, 0)];
        (lhs - rhs) / lhs.abs().max(1e-300)
    }
}

/// Worst violation of `e^{sM}e^{tM} = e^{(s+t)M}`, `e^{tM}e^{−tM} = I` and
/// `d/dτ e^{−τA}B = −A e^{−τA}B` for one random `4×4` matrix with `‖M‖ ≤ 2`.
pub fn expm_identity_defects<R: Rng>(rng: &mut R) -> (f64, f64, f64) {
    let raw = random_matrix(rng, 4, 4);
    let m = &raw * (rng.gen_range(0.1..2.0) / raw.norm().max(1e-12));
    let (s, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let es = matfun::expm(&m, s).unwrap();
    let et = matfun::expm(&m, t).unwrap();
    let est = matfun::expm(&m, s + t).unwrap();
    let semigroup = (&es * &et - &est).abs().max() / (1.0 + est.abs().max());
    let inverse = (&et * matfun::expm(&m, -t).unwrap() - Matrix::identity(4, 4)).abs().max();

    let b = random_matrix(rng, 4, 2);
    let tau = rng.gen_range(0.0..1.0);
    let h = 1e-5;
    let g = |x: f64| matfun::expm(&m, -x).unwrap() * &b;
    let fd = (g(tau + h) - g(tau - h)) / (2.0 * h);
    let exact = -&m * g(tau);
    let derivative = (fd - exact).abs().max();
    (semigroup, inverse, derivative)
}

pub fn svec_round_trip_defect<R: Rng>(rng: &mut R, n: usize) -> f64 {
    let m = matfun::symmetrize(&random_matrix(rng, n, n));
    let v = svec(&m);
    let back = smat(n, &v);
    let inner = (m.transpose() * &m).trace();
    let dot: f64 = v.iter().map(|x| x * x).sum();
    (back - &m).abs().max().max((inner - dot).abs())
}

/// Outcome of scanning a grid of `(P, K)` perturbations around a feasible point.
#[derive(Debug, Default)]
pub struct OverestimateScan {
    pub points: usize,
    pub feasible: usize,
    /// Points feasible for the convex bound but not for the original inequality.
    pub violations: usize,
    pub worst_excess: f64,
}

/// Scans an `n×n` grid of `P = P̃ + s E_P`, `K = K̃ + t E_K` with `Z = I/2`.
///
/// Every grid point whose overestimate is `⪯ −εI` must also satisfy
/// `λ_max(Φ̂) ≤ −ε`.
pub fn overestimate_scan<R: Rng>(
    prep: &Prepared,
    center: &Iterate,
    rng: &mut R,
    n: usize,
) -> OverestimateScan {
    let l = prep.aug.layout;
    let nu = l.nu;
    let eps = prep.strict_margin();
    let anchor = Anchor {
        p: center.certificate.p.clone(),
        q: center.certificate.q.clone(),
        k: center.gain.clone(),
    };
    let asm = assemble_proximal_step(&prep.aug, &prep.supply, &anchor, (1.0, 1.0), &AssemblyOptions::default())
        .unwrap();
    let con = asm
        .problem
        .constraints()
        .iter()
        .find(|c| c.label == "overestimate")
        .unwrap()
        .clone();
    let e_p = matfun::symmetrize(&random_matrix(rng, nu, nu));
    let e_k = random_matrix(rng, center.gain.nrows(), center.gain.ncols());
    let e_p = &e_p / e_p.abs().max();
    let e_k = &e_k / e_k.abs().max();

    let eval = |s: f64, t: f64| -> (f64, f64) {
        let cert = Certificate {
            p: &center.certificate.p + &e_p * s,
            ..center.certificate.clone()
        };
        let k = &center.gain + &e_k * t;
        let mut vals = Assignment::new();
        for (slot, m) in [(&asm.cert.p, &cert.p), (&asm.cert.q, &cert.q), (&asm.gain, &k)] {
            if let Slot::Var(v) = slot {
                vals.set(*v, m.clone()).unwrap();
            }
        }
        vals.set(asm.cert.r, cert.r.clone()).unwrap();
        vals.set(asm.cert.s, cert.s.clone()).unwrap();
        vals.set(asm.cert.u, cert.u.clone()).unwrap();
        if let Slot::Var(g) = asm.gamma {
            vals.set(g, Matrix::from_element(1, 1, center.gamma.unwrap())).unwrap();
        }
        vals.set(asm.z.unwrap(), Matrix::identity(nu, nu) * 0.5).unwrap();
        let over = matfun::lambda_max_sym(&matfun::symmetrize(&con.expr.evaluate(&vals).unwrap()));
        let phi = direct::phi_hat(&prep.aug, &prep.supply, &cert, &k, center.gamma, SupplyEmbedding::Derived)
            .unwrap();
        (over, matfun::lambda_max_sym(&phi))
    };

    // Widen the box until its corners leave the feasible set of the bound.
    let mut scale = 1e-3;
    while scale < 1e3 && [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)].iter().all(|&(a, b)| eval(a * scale, b * scale).0 <= -eps) {
        scale *= 2.0;
    }

    let mut out = OverestimateScan::default();
    for i in 0..n {
        for j in 0..n {
            let s = scale * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
            let t = scale * (2.0 * j as f64 / (n - 1) as f64 - 1.0);
            let (over, phi) = eval(s, t);
            out.points += 1;
            if over <= -eps {
                out.feasible += 1;
                let excess = phi + eps;
                if excess > 1e-9 {
                    out.violations += 1;
                }
                out.worst_excess = out.worst_excess.max(excess);
            }
        }
    }
    out
}

/// A strictly feasible point of the fixed-gain problem at the predictor seed,
/// found with a zero objective so that it sits away from the boundary.
pub fn interior_point(prep: &Prepared, backend: &dyn SdpBackend) -> Iterate {
    use dsfc::lmi::{assemble_fixed, compile, FixedFactor};
    use dsfc::predictor::predictor_init;
    use dsfc::solver::{solve_checked, SdpStatus, SolverOptions};
    let seed = predictor_init(&prep.plant, &prep.spec, &prep.gram, None, None).unwrap();
    let opts = AssemblyOptions {
        gamma_weight: 0.0,
        ..Default::default()
    };
    let asm = assemble_fixed(&prep.aug, &prep.supply, &FixedFactor::Gain(seed.gains.stacked()), &opts).unwrap();
    let sol = solve_checked(backend, &compile(&asm.problem).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Optimal);
    let pt = asm.extract(&sol.y).unwrap();
    let mut certificate = pt.certificate;
    certificate.p = matfun::symmetrize(&certificate.p);
    Iterate {
        certificate,
        gain: pt.gain,
        gamma: pt.gamma,
    }
}

/// Smallest certified γ for a fixed stacked gain, `∞` when none exists.
pub fn gamma_of(prep: &Prepared, k: &[f64], backend: &dyn SdpBackend) -> f64 {
    let gain = Matrix::from_row_slice(prep.aug.p, k.len() / prep.aug.p, k);
    match certify(prep, &gain, &AlgorithmConfig::default(), backend) {
        Ok((_, Some(it))) => it.gamma.unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    }
}

/// Global search over the stacked gain: a `3^k` grid around `start`
/// followed by compass refinement down to step `1e−3`.
pub fn grid_oracle(prep: &Prepared, start: &[f64], backend: &dyn SdpBackend) -> (f64, Vec<f64>) {
    let k = start.len();
    let mut best = start.to_vec();
    let mut best_gamma = gamma_of(prep, start, backend);
    for code in 0..3usize.pow(k as u32) {
        let mut c = code;
        let cand: Vec<f64> = start
            .iter()
            .map(|&x| {
                let o = (c % 3) as f64 - 1.0;
                c /= 3;
                x + o * (1.0 + x.abs())
            })
            .collect();
        let g = gamma_of(prep, &cand, backend);
        if g < best_gamma {
            best_gamma = g;
            best = cand;
        }
    }
    let mut step = 0.5;
    while step > 1e-3 {
        let mut improved = false;
        for i in 0..k {
            for sign in [-1.0, 1.0] {
                let mut cand = best.clone();
                cand[i] += sign * step * (1.0 + best[i].abs());
                let g = gamma_of(prep, &cand, backend);
                if g < best_gamma {
                    best_gamma = g;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best_gamma, best)
}

/// Root of `λ + e^{−λ} = 0` by complex Newton from `start`.
pub fn pure_delay_root(start: Complex<f64>) -> Complex<f64> {
    let mut z = start;
    for _ in 0..100 {
        let e = (-z).exp();
        let step = (z + e) / (Complex::new(1.0, 0.0) - e);
        z -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    z
}
