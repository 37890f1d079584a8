//! Plant, supply rate and closed-loop data, plus the coordinate layout
//! `ξ = (χ(t), χ(t−r), η(t), w(t), ζ)` shared by every matrix inequality.

use crate::basis::{self, BasisSpec, GramData};
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};
use crate::tol;

/// Linear plant with a pointwise input delay `r`.
///
/// `ẋ = A x + B u(t−r) + D₁ w`, `z = C₁χ(t) + C₂χ(t−r) + ∫C̃₃(τ)χ(t+τ)dτ + D₃ w`
/// with `χ = (x, u)` and `C̃₃(τ) = C3bar (f(τ) ⊗ I_ν)`. `D₂` enters the
/// controller dynamics as the disturbance seen by the actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: Matrix,
    pub b: Matrix,
    pub d1: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub c3bar: Matrix,
    pub d2: Matrix,
    pub d3: Matrix,
    pub r: f64,
}

impl PlantModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn p(&self) -> usize {
        self.b.ncols()
    }
    pub fn q(&self) -> usize {
        self.d1.ncols()
    }
    pub fn m(&self) -> usize {
        self.c1.nrows()
    }
    pub fn nu(&self) -> usize {
        self.n() + self.p()
    }
}

/// Quadratic supply rate `s(z, w) = zᵀJ̃ᵀJ₁⁻¹J̃z + 2zᵀJ₂w + wᵀJ₃w`.
///
/// When `gamma_role` is set, `j1` and `j3` hold the unit coefficients of the
/// decision variable γ (`J₁ = γ·j1`, `J₃ = γ·j3`).
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyRate {
    pub j1: Matrix,
    pub jtilde: Matrix,
    pub j2: Matrix,
    pub j3: Matrix,
    pub gamma_role: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupplyKind {
    L2Gain,
    Passivity,
    Sector { alpha: f64, beta: f64 },
}

pub fn supply_from_template(kind: SupplyKind, m: usize, q: usize) -> Result<SupplyRate> {
    let im = Matrix::identity(m, m);
    Ok(match kind {
        SupplyKind::L2Gain => SupplyRate {
            j1: -im.clone(),
            jtilde: im,
            j2: Matrix::zeros(m, q),
            j3: Matrix::identity(q, q),
            gamma_role: true,
        },
        SupplyKind::Passivity => {
            if m != q {
                return Err(Error::dim(format!("passivity needs m = q, got m={m}, q={q}")));
            }
            SupplyRate {
                j1: -im.clone(),
                jtilde: Matrix::zeros(m, m),
                j2: im,
                j3: Matrix::zeros(q, q),
                gamma_role: false,
            }
        }
        SupplyKind::Sector { alpha, beta } => {
            if m != q {
                return Err(Error::dim(format!("sector bound needs m = q, got m={m}, q={q}")));
            }
            SupplyRate {
                j1: -im.clone(),
                jtilde: -im.clone(),
                j2: &im * (-0.5 * (alpha + beta)),
                j3: &im * (alpha * beta),
                gamma_role: false,
            }
        }
    })
}

impl SupplyRate {
    pub fn m(&self) -> usize {
        self.j1.nrows()
    }
    pub fn q(&self) -> usize {
        self.j3.nrows()
    }

    /// `(J₁, J₃)` at a given performance level (ignored without a γ role).
    pub fn scaled(&self, gamma: Option<f64>) -> Result<(Matrix, Matrix)> {
        if self.gamma_role {
            let g = gamma.ok_or_else(|| Error::Usage("supply rate needs a value for γ".into()))?;
            Ok((&self.j1 * g, &self.j3 * g))
        } else {
            Ok((self.j1.clone(), self.j3.clone()))
        }
    }

    /// Evaluates `s(z, w)`.
    pub fn evaluate(&self, z: &[f64], w: &[f64], gamma: Option<f64>) -> Result<f64> {
        let (j1, j3) = self.scaled(gamma)?;
        let z = Matrix::from_column_slice(z.len(), 1, z);
        let w = Matrix::from_column_slice(w.len(), 1, w);
        let jz = &self.jtilde * &z;
        let inner = j1
            .clone()
            .lu()
            .solve(&jz)
            .ok_or_else(|| Error::Domain("J₁ is singular".into()))?;
        let val = jz.transpose() * inner + (z.transpose() * &self.j2 * &w) * 2.0
            + w.transpose() * j3 * &w;
        Ok(val[(0, 0)])
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        let q = self.q();
        if self.j1.shape() != (m, m)
            || self.jtilde.shape() != (m, m)
            || self.j2.shape() != (m, q)
            || self.j3.shape() != (q, q)
        {
            return Err(Error::dim("supply rate blocks have inconsistent sizes"));
        }
        if matfun::max_abs(&(&self.j3 - self.j3.transpose())) > 1e-12 * (1.0 + matfun::max_abs(&self.j3)) {
            return Err(Error::Domain("J₃ must be symmetric".into()));
        }
        if matfun::lambda_max_sym(&self.j1) >= 0.0 {
            return Err(Error::Domain("J₁ must be negative definite".into()));
        }
        Ok(())
    }
}

/// Gains of `u̇ = K₁χ(t) + K₂χ(t−r) + ∫K₃F(τ)χ(t+τ)dτ`, with `K₃` in
/// orthonormal-basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    pub k1: Matrix,
    pub k2: Matrix,
    pub k3: Matrix,
}

impl ControllerGains {
    /// `[K₁ K₂ K₃]`.
    pub fn stacked(&self) -> Matrix {
        matfun::hcat(&[&self.k1, &self.k2, &self.k3]).expect("gain blocks share a row count")
    }

    pub fn from_stacked(k: &Matrix, nu: usize, d: usize) -> Result<Self> {
        if k.ncols() != 2 * nu + d * nu {
            return Err(Error::dim(format!(
                "stacked gain has {} columns, expected {}",
                k.ncols(),
                2 * nu + d * nu
            )));
        }
        let p = k.nrows();
        Ok(ControllerGains {
            k1: k.view((0, 0), (p, nu)).into_owned(),
            k2: k.view((0, nu), (p, nu)).into_owned(),
            k3: k.view((0, 2 * nu), (p, d * nu)).into_owned(),
        })
    }

    pub fn validate(&self, p: usize, nu: usize, d: usize) -> Result<()> {
        if self.k1.shape() != (p, nu) || self.k2.shape() != (p, nu) || self.k3.shape() != (p, d * nu) {
            return Err(Error::dim(format!(
                "gains must be K1 {p}x{nu}, K2 {p}x{nu}, K3 {p}x{}",
                d * nu
            )));
        }
        for (name, m) in [("K1", &self.k1), ("K2", &self.k2), ("K3", &self.k3)] {
            matfun::ensure_finite(m, name)?;
        }
        Ok(())
    }
}

/// Offsets of the blocks of `ξ = (χ(t), χ(t−r), η, w, ζ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nu: usize,
    pub d: usize,
    pub q: usize,
    pub m: usize,
}

impl Layout {
    pub fn new(nu: usize, d: usize, q: usize, m: usize) -> Self {
        Layout { nu, d, q, m }
    }
    pub fn dnu(&self) -> usize {
        self.d * self.nu
    }
    pub fn current(&self) -> usize {
        0
    }
    pub fn delayed(&self) -> usize {
        self.nu
    }
    pub fn eta(&self) -> usize {
        2 * self.nu
    }
    pub fn w(&self) -> usize {
        2 * self.nu + self.dnu()
    }
    pub fn zeta(&self) -> usize {
        self.w() + self.q
    }
    /// `ℓ = 2ν + dν + q + m`.
    pub fn ell(&self) -> usize {
        self.zeta() + self.m
    }
    /// Column count of the gain row `[K₁ K₂ K₃]`.
    pub fn gain_cols(&self) -> usize {
        2 * self.nu + self.dnu()
    }
    /// Block sizes in order, for block-structured assembly.
    pub fn sizes(&self) -> [usize; 5] {
        [self.nu, self.nu, self.dnu(), self.q, self.m]
    }
}

/// Closed-loop data in the `ξ` coordinates.
#[derive(Debug, Clone)]
pub struct AugmentedSystem {
    pub layout: Layout,
    pub n: usize,
    pub p: usize,
    /// `𝐀`, `ν × ℓ`.
    pub bb_a: Matrix,
    /// `𝐁 = col(0, I_p)`, `ν × p`.
    pub bb_b: Matrix,
    /// `Σ = [C₁ C₂ C₃ D₃]`, `m × (2ν + dν + q)`.
    pub sigma: Matrix,
    /// Orthonormal output coefficients `C₃ = C3bar (√F⁻¹ ⊗ I_ν)`.
    pub c3: Matrix,
    pub f0: Matrix,
    pub fmr: Matrix,
    pub pi_hat: Matrix,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub name: &'static str,
    pub message: String,
    pub fatal: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PlantReport {
    pub diagnostics: Vec<Diagnostic>,
    /// Spectral abscissa of `A + BK` for the probe gain, when one was found.
    pub probe_abscissa: Option<f64>,
}

impl PlantReport {
    pub fn is_ok(&self) -> bool {
        !self.diagnostics.iter().any(|d| d.fatal)
    }

    pub fn has(&self, name: &str) -> bool {
        self.diagnostics.iter().any(|d| d.name == name)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            let msg = self
                .diagnostics
                .iter()
                .filter(|d| d.fatal)
                .map(|d| format!("{}: {}", d.name, d.message))
                .collect::<Vec<_>>()
                .join("; ");
            Err(Error::config("plant", msg))
        }
    }
}

pub fn validate_plant(plant: &PlantModel, spec: &BasisSpec) -> PlantReport {
    let mut report = PlantReport::default();
    let mut fatal = |name: &'static str, message: String| {
        report.diagnostics.push(Diagnostic {
            name,
            message,
            fatal: true,
        })
    };
    let (n, p, q, m) = (plant.n(), plant.p(), plant.q(), plant.m());
    let nu = n + p;
    let d = spec.dim();
    let expect: [(&'static str, &Matrix, (usize, usize)); 8] = [
        ("A", &plant.a, (n, n)),
        ("B", &plant.b, (n, p)),
        ("D1", &plant.d1, (n, q)),
        ("C1", &plant.c1, (m, nu)),
        ("C2", &plant.c2, (m, nu)),
        ("C3bar", &plant.c3bar, (m, d * nu)),
        ("D2", &plant.d2, (p, q)),
        ("D3", &plant.d3, (m, q)),
    ];
    let mut dims_ok = true;
    for (name, mat, shape) in expect {
        if mat.shape() != shape {
            dims_ok = false;
            fatal(
                "dimension",
                format!(
                    "{name} is {}x{}, expected {}x{}",
                    mat.nrows(),
                    mat.ncols(),
                    shape.0,
                    shape.1
                ),
            );
        } else if mat.iter().any(|v| !v.is_finite()) {
            dims_ok = false;
            fatal("finite", format!("{name} has non-finite entries"));
        }
    }
    if n == 0 || p == 0 {
        dims_ok = false;
        fatal("dimension", "state and input dimensions must be positive".into());
    }
    if !(plant.r > 0.0 && plant.r.is_finite()) {
        fatal("delay", format!("r must be positive, got {}", plant.r));
    }
    if (plant.r - spec.r).abs() > 1e-12 * plant.r.abs().max(1.0) {
        fatal(
            "delay",
            format!("plant delay {} differs from basis support {}", plant.r, spec.r),
        );
    }
    if dims_ok {
        match matfun::is_stabilizable(&plant.a, &plant.b) {
            Ok(true) => {
                report.probe_abscissa = matfun::stabilizing_gain(&plant.a, &plant.b, tol::STABILIZING_MARGIN)
                    .ok()
                    .and_then(|k| matfun::spectral_abscissa_of(&(&plant.a + &plant.b * k)).ok());
            }
            Ok(false) => fatal(
                "stabilizability",
                "(A, B) is not stabilizable: an eigenvalue with Re ≥ 0 is uncontrollable".into(),
            ),
            Err(e) => fatal("stabilizability", e.to_string()),
        }
    }
    report
}

pub fn build_augmented(plant: &PlantModel, g: &GramData, spec: &BasisSpec) -> Result<AugmentedSystem> {
    validate_plant(plant, spec).into_result()?;
    let (n, p, q, m) = (plant.n(), plant.p(), plant.q(), plant.m());
    let nu = n + p;
    if g.nu != nu {
        return Err(Error::dim(format!("Gram data built for ν={}, plant has ν={nu}", g.nu)));
    }
    let layout = Layout::new(nu, spec.dim(), q, m);
    let ell = layout.ell();

    let mut bb_a = Matrix::zeros(nu, ell);
    bb_a.view_mut((0, layout.current()), (n, n)).copy_from(&plant.a);
    bb_a.view_mut((0, layout.delayed() + n), (n, p)).copy_from(&plant.b);
    bb_a.view_mut((0, layout.w()), (n, q)).copy_from(&plant.d1);
    bb_a.view_mut((n, layout.w()), (p, q)).copy_from(&plant.d2);

    let mut bb_b = Matrix::zeros(nu, p);
    bb_b.view_mut((n, 0), (p, p)).fill_with_identity();

    let c3 = basis::orthonormalize_coeffs(&plant.c3bar, g)?;
    let sigma = matfun::hcat(&[&plant.c1, &plant.c2, &c3, &plant.d3])?;

    Ok(AugmentedSystem {
        layout,
        n,
        p,
        bb_a,
        bb_b,
        sigma,
        c3,
        f0: basis::eval_f(g, spec, 0.0)?,
        fmr: basis::eval_f(g, spec, -spec.r)?,
        pi_hat: g.pi_hat.clone(),
        r: plant.r,
    })
}

impl AugmentedSystem {
    /// Largest absolute entry over the constant data entering the inequalities.
    pub fn data_scale(&self) -> f64 {
        [&self.bb_a, &self.sigma, &self.f0, &self.fmr, &self.pi_hat]
            .iter()
            .map(|m| matfun::max_abs(m))
            .fold(0.0, f64::max)
    }

    /// `[K₁ K₂ K₃ 0_{p×(q+m)}]`, the gain padded to `ℓ` columns.
    pub fn padded_gain(&self, k: &Matrix) -> Result<Matrix> {
        let l = self.layout;
        if k.shape() != (self.p, l.gain_cols()) {
            return Err(Error::dim(format!(
                "stacked gain must be {}x{}, got {}x{}",
                self.p,
                l.gain_cols(),
                k.nrows(),
                k.ncols()
            )));
        }
        let mut out = Matrix::zeros(self.p, l.ell());
        out.view_mut((0, 0), (self.p, l.gain_cols())).copy_from(k);
        Ok(out)
    }
}
