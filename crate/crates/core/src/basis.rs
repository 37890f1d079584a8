//! Exponential basis `f(τ) = e^{Πτ} f₀` on `[-r, 0]`, its Gram matrix and the
//! orthonormalized quantities derived from it.

use crate::error::{Error, Result};
use crate::matfun::{self, kron, Matrix, SpdMatrix, Vector};
use crate::tol;

/// Generator, initial value and support of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    pub pi: Matrix,
    pub f0: Vector,
    pub r: f64,
}

impl BasisSpec {
    pub fn new(pi: Matrix, f0: Vector, r: f64) -> Result<Self> {
        if !pi.is_square() {
            return Err(Error::dim(format!(
                "basis generator must be square, got {}x{}",
                pi.nrows(),
                pi.ncols()
            )));
        }
        if f0.len() != pi.nrows() {
            return Err(Error::dim(format!(
                "basis initial value has {} entries, generator is {}x{}",
                f0.len(),
                pi.nrows(),
                pi.ncols()
            )));
        }
        if pi.nrows() == 0 {
            return Err(Error::dim("basis dimension must be at least 1"));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("delay must be positive and finite, got {r}")));
        }
        matfun::ensure_finite(&pi, "basis generator")?;
        Ok(BasisSpec { pi, f0, r })
    }

    /// Diagonal generator with all-ones initial value: `f_i(τ) = e^{λ_i τ}`.
    pub fn exponentials(rates: &[f64], r: f64) -> Result<Self> {
        let pi = Matrix::from_diagonal(&Vector::from_row_slice(rates));
        BasisSpec::new(pi, Vector::from_element(rates.len(), 1.0), r)
    }

    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    /// `f(τ) = e^{Πτ} f₀`.
    pub fn eval(&self, tau: f64) -> Result<Vector> {
        Ok(matfun::expm(&self.pi, tau)? * &self.f0)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        let slack = 1e-12 * self.r;
        if tau < -self.r - slack || tau > slack || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "τ = {tau} is outside [-{}, 0]",
                self.r
            )));
        }
        Ok(())
    }
}

/// Gram matrix of the basis and the orthonormalizing factors.
#[derive(Debug, Clone)]
pub struct GramData {
    /// `F⁻¹ = ∫ f fᵀ`.
    pub finv: SpdMatrix,
    pub f: SpdMatrix,
    pub sqrt_f: SpdMatrix,
    pub sqrt_finv: SpdMatrix,
    /// `(√F Π √F⁻¹) ⊗ I_ν`.
    pub pi_hat: Matrix,
    pub nu: usize,
    /// `‖√F F⁻¹ √F − I‖_∞`, the orthonormality defect of `g = √F f`.
    pub orthonormality_defect: f64,
}

impl GramData {
    pub fn dim(&self) -> usize {
        self.finv.dim()
    }
}

pub fn build_gram(spec: &BasisSpec, nu: usize) -> Result<GramData> {
    if nu == 0 {
        return Err(Error::dim("ν must be positive"));
    }
    let finv = matfun::vanloan_gram(&spec.pi, &spec.f0, spec.r)?;
    let f = finv.inverse()?;
    let sqrt_f = matfun::sqrtm_spd(&f)?;
    let sqrt_finv = sqrt_f.inverse()?;
    let pi_small = sqrt_f.as_matrix() * &spec.pi * sqrt_finv.as_matrix();
    let pi_hat = kron(&pi_small, &Matrix::identity(nu, nu));
    let d = spec.dim();
    let gram_g = sqrt_f.as_matrix() * finv.as_matrix() * sqrt_f.as_matrix();
    let orthonormality_defect = matfun::norm_inf(&(gram_g - Matrix::identity(d, d)));
    Ok(GramData {
        finv,
        f,
        sqrt_f,
        sqrt_finv,
        pi_hat,
        nu,
        orthonormality_defect,
    })
}

/// `F(τ) = (√F f(τ)) ⊗ I_ν`, a `dν × ν` matrix.
pub fn eval_f(g: &GramData, spec: &BasisSpec, tau: f64) -> Result<Matrix> {
    spec.check_tau(tau)?;
    let col = g.sqrt_f.as_matrix() * spec.eval(tau)?;
    Ok(kron(&Matrix::from_column_slice(col.len(), 1, col.as_slice()), &Matrix::identity(g.nu, g.nu)))
}

/// Plain-basis expansion of `τ ↦ M e^{-Aτ} B`.
#[derive(Debug, Clone)]
pub struct Expansion {
    /// `p̃ × dp` coefficients `Ḡ` with `M e^{-Aτ}B = Ḡ (f(τ) ⊗ I_p)`.
    pub coeff: Matrix,
    /// Max absolute reconstruction error over the dense check grid.
    pub residual: f64,
}

/// Fits `M e^{-Aτ} B = Ḡ (f(τ) ⊗ I_p)` by collocation at `d` Chebyshev
/// points of `[-r, 0]` and checks the fit on `10d` equispaced points.
pub fn expand_in_basis(m: &Matrix, a: &Matrix, b: &Matrix, spec: &BasisSpec) -> Result<Expansion> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n || m.ncols() != n {
        return Err(Error::dim(format!(
            "expansion needs M p̃×n, A n×n, B n×p (M {}x{}, A {}x{}, B {}x{})",
            m.nrows(),
            m.ncols(),
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let d = spec.dim();
    let (rows, p) = (m.nrows(), b.ncols());
    let kernel = |tau: f64| -> Result<Matrix> { Ok(m * matfun::expm(a, -tau)? * b) };

    let nodes = matfun::chebyshev_points(d, -spec.r, 0.0);
    let mut vand = Matrix::zeros(d, d);
    let mut targets = Vec::with_capacity(d);
    for (k, &tau) in nodes.iter().enumerate() {
        let f = spec.eval(tau)?;
        vand.row_mut(k).copy_from(&f.transpose());
        targets.push(kernel(tau)?);
    }
    let lu = vand.lu();
    let mut coeff = Matrix::zeros(rows, d * p);
    for i in 0..rows {
        for j in 0..p {
            let rhs = Vector::from_iterator(d, targets.iter().map(|t| t[(i, j)]));
            let c = lu.solve(&rhs).ok_or_else(|| {
                Error::DegenerateBasis("collocation matrix is singular".into())
            })?;
            for (blk, v) in c.iter().enumerate() {
                coeff[(i, blk * p + j)] = *v;
            }
        }
    }

    let checks = 10 * d;
    let mut residual = 0f64;
    let mut scale = 0f64;
    for k in 0..checks {
        let tau = -spec.r * k as f64 / (checks - 1).max(1) as f64;
        let target = kernel(tau)?;
        let f = spec.eval(tau)?;
        let fk = kron(&Matrix::from_column_slice(d, 1, f.as_slice()), &Matrix::identity(p, p));
        let recon = &coeff * fk;
        residual = residual.max((recon - &target).abs().max());
        scale = scale.max(target.abs().max());
    }
    if residual > tol::EXPANSION_REL * (1.0 + scale) {
        return Err(Error::BasisInsufficient(format!(
            "residual {residual:.3e} exceeds {:.3e}; enlarge Π/f₀ so that the basis covers every mode of A",
            tol::EXPANSION_REL * (1.0 + scale)
        )));
    }
    Ok(Expansion { coeff, residual })
}

/// `plain · (√F⁻¹ ⊗ I_ν)`, so that `plain (f ⊗ I) = result (√F f ⊗ I)`.
pub fn orthonormalize_coeffs(plain: &Matrix, g: &GramData) -> Result<Matrix> {
    let d = g.dim();
    if plain.ncols() != d * g.nu {
        return Err(Error::dim(format!(
            "coefficients have {} columns, expected dν = {}",
            plain.ncols(),
            d * g.nu
        )));
    }
    Ok(plain * kron(g.sqrt_finv.as_matrix(), &Matrix::identity(g.nu, g.nu)))
}

/// Inverse of [`orthonormalize_coeffs`].
pub fn plain_coeffs(ortho: &Matrix, g: &GramData) -> Result<Matrix> {
    let d = g.dim();
    if ortho.ncols() != d * g.nu {
        return Err(Error::dim("coefficient column count must be dν"));
    }
    Ok(ortho * kron(g.sqrt_f.as_matrix(), &Matrix::identity(g.nu, g.nu)))
}
