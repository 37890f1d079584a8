//! Predictor-based feasible starting gains for the dynamical controller.
//!
//! For `A + BK` Hurwitz and `X` Hurwitz, the controller
//! `u̇ = (KB + X)u + (KA − XK)(e^{Ar}x + ∫e^{-Aτ}Bu(t+τ)dτ)` assigns the
//! closed-loop spectrum `eig(A + BK) ∪ eig(X)`. Expanding the integral kernel
//! in the basis gives gains of the general form `(K₁, K₂, K₃)`.

use crate::basis::{self, BasisSpec, GramData};
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};
use crate::model::{ControllerGains, PlantModel};
use crate::tol;

/// Default controller pole matrix `X = -0.1·I_p`.
pub const DEFAULT_X_SCALE: f64 = -0.1;

#[derive(Debug, Clone)]
pub struct PredictorSeed {
    pub k: Matrix,
    pub x: Matrix,
    pub gains: ControllerGains,
    /// `Γ` in orthonormal coordinates (equal to `gains.k3`).
    pub gamma: Matrix,
    pub exp_ar: Matrix,
    pub expansion_residual: f64,
}

pub fn predictor_init(
    plant: &PlantModel,
    spec: &BasisSpec,
    g: &GramData,
    k: Option<&Matrix>,
    x: Option<&Matrix>,
) -> Result<PredictorSeed> {
    crate::model::validate_plant(plant, spec).into_result()?;
    let (n, p) = (plant.n(), plant.p());
    let nu = n + p;
    if g.nu != nu {
        return Err(Error::dim("Gram data ν does not match the plant"));
    }

    let k = match k {
        Some(k) => {
            matfun::check_stabilizing(&plant.a, &plant.b, k, 0.0)?;
            k.clone()
        }
        None => match matfun::stabilizing_gain(&plant.a, &plant.b, tol::STABILIZING_MARGIN) {
            Ok(k) => k,
            Err(Error::Stabilizability(_)) if matfun::spectral_abscissa_of(&plant.a)? < 0.0 => Matrix::zeros(p, n),
            Err(Error::Stabilizability(msg)) => {
                return Err(Error::Stabilizability(format!(
                    "{msg}; the plant is not controllable, supply a stabilizing K"
                )))
            }
            Err(e) => return Err(e),
        },
    };
    let x = match x {
        Some(x) => {
            if x.shape() != (p, p) {
                return Err(Error::dim(format!("X must be {p}x{p}")));
            }
            let alpha = matfun::spectral_abscissa_of(x)?;
            if alpha >= 0.0 {
                return Err(Error::Parameter(format!(
                    "X must be Hurwitz (spectral abscissa {alpha})"
                )));
            }
            x.clone()
        }
        None => Matrix::identity(p, p) * DEFAULT_X_SCALE,
    };

    let exp_ar = matfun::expm(&plant.a, plant.r)?;
    let ka_xk = &k * &plant.a - &x * &k;
    let k1 = matfun::hcat(&[&(&ka_xk * &exp_ar), &(&k * &plant.b + &x)])?;
    let k2 = Matrix::zeros(p, nu);

    // The x-columns of [0, (KA − XK)e^{-Aτ}B] vanish; only the u-columns are expanded.
    let expansion = basis::expand_in_basis(&ka_xk, &plant.a, &plant.b, spec).map_err(|e| match e {
        Error::BasisInsufficient(msg) => Error::BasisInsufficient(format!(
            "(KA − XK)e^{{-Aτ}}B is not representable: {msg}"
        )),
        other => other,
    })?;
    let d = spec.dim();
    let mut plain = Matrix::zeros(p, d * nu);
    for blk in 0..d {
        plain
            .view_mut((0, blk * nu + n), (p, p))
            .copy_from(&expansion.coeff.view((0, blk * p), (p, p)));
    }
    let gamma = basis::orthonormalize_coeffs(&plain, g)?;

    Ok(PredictorSeed {
        k,
        x,
        gains: ControllerGains {
            k1,
            k2,
            k3: gamma.clone(),
        },
        gamma,
        exp_ar,
        expansion_residual: expansion.residual,
    })
}
