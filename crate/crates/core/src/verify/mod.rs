//! Independent checks of a controller: characteristic roots, time-domain
//! simulation, the sampled dissipation inequality and an empirical L2 gain.

mod checks;
mod signal;
mod simulate;
mod spectrum;

pub use checks::{dissipation_check, functional_values, l2_gain_estimate, DissipationReport, L2Estimate};
pub use signal::{default_library, InitialSegment, Signal};
pub use simulate::{simulate, Trajectory};
pub use spectrum::{spectral_abscissa, SpectrumReport, DEFAULT_N_LIST};

use crate::basis::{eval_f, BasisSpec, GramData};
use crate::error::{Error, Result};
use crate::matfun::Matrix;
use crate::model::{AugmentedSystem, ControllerGains};

/// `χ̇ = A₀χ(t) + A₁χ(t−r) + ∫A₃F(τ)χ(t+τ)dτ + D_w w`,
/// `z = C₁χ(t) + C₂χ(t−r) + ∫C₃F(τ)χ(t+τ)dτ + D₃w`.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a0: Matrix,
    pub a1: Matrix,
    /// `ν × dν`.
    pub a3: Matrix,
    /// `ν × q`.
    pub dw: Matrix,
    pub c1: Matrix,
    pub c2: Matrix,
    pub c3: Matrix,
    pub d3: Matrix,
    pub r: f64,
    spec: BasisSpec,
    gram: GramData,
}

impl ClosedLoop {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a0: Matrix,
        a1: Matrix,
        a3: Matrix,
        dw: Matrix,
        c1: Matrix,
        c2: Matrix,
        c3: Matrix,
        d3: Matrix,
        spec: BasisSpec,
        gram: GramData,
    ) -> Result<Self> {
        let nu = a0.nrows();
        let d = spec.dim();
        let q = dw.ncols();
        let m = c1.nrows();
        let shapes = [
            ("A0", &a0, (nu, nu)),
            ("A1", &a1, (nu, nu)),
            ("A3", &a3, (nu, d * nu)),
            ("Dw", &dw, (nu, q)),
            ("C1", &c1, (m, nu)),
            ("C2", &c2, (m, nu)),
            ("C3", &c3, (m, d * nu)),
            ("D3", &d3, (m, q)),
        ];
        for (name, mat, shape) in shapes {
            if mat.shape() != shape {
                return Err(Error::dim(format!(
                    "{name} is {}x{}, expected {}x{}",
                    mat.nrows(),
                    mat.ncols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        if gram.nu != nu {
            return Err(Error::dim("Gram data ν does not match the closed loop"));
        }
        Ok(ClosedLoop {
            a0,
            a1,
            a3,
            dw,
            c1,
            c2,
            c3,
            d3,
            r: spec.r,
            spec,
            gram,
        })
    }

    /// Closed loop of the augmented system under `gains`.
    pub fn from_gains(
        aug: &AugmentedSystem,
        spec: &BasisSpec,
        gram: &GramData,
        gains: &ControllerGains,
    ) -> Result<Self> {
        let l = aug.layout;
        gains.validate(aug.p, l.nu, l.d)?;
        let closed = &aug.bb_a + &aug.bb_b * aug.padded_gain(&gains.stacked())?;
        let nu = l.nu;
        let cols = |m: &Matrix, c: usize, w: usize| m.columns(c, w).into_owned();
        ClosedLoop::new(
            cols(&closed, l.current(), nu),
            cols(&closed, l.delayed(), nu),
            cols(&closed, l.eta(), l.dnu()),
            cols(&closed, l.w(), l.q),
            cols(&aug.sigma, l.current(), nu),
            cols(&aug.sigma, l.delayed(), nu),
            cols(&aug.sigma, l.eta(), l.dnu()),
            cols(&aug.sigma, l.w(), l.q),
            spec.clone(),
            gram.clone(),
        )
    }

    pub fn nu(&self) -> usize {
        self.a0.nrows()
    }
    pub fn d(&self) -> usize {
        self.spec.dim()
    }
    /// Disturbance dimension.
    pub fn q(&self) -> usize {
        self.dw.ncols()
    }
    /// Output dimension.
    pub fn m(&self) -> usize {
        self.c1.nrows()
    }

    /// `F(τ)`, `dν × ν`.
    pub fn kernel(&self, tau: f64) -> Result<Matrix> {
        eval_f(&self.gram, &self.spec, tau.clamp(-self.r, 0.0))
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_gram;
    use crate::demo::{paper_basis, paper_plant};
    use crate::model::build_augmented;
    use crate::predictor::predictor_init;

    #[test]
    fn closed_loop_blocks_follow_the_controller_structure() {
        let plant = paper_plant(1.0);
        let spec = paper_basis(1.0).unwrap();
        let g = build_gram(&spec, 3).unwrap();
        let aug = build_augmented(&plant, &g, &spec).unwrap();
        let seed = predictor_init(&plant, &spec, &g, None, None).unwrap();
        let cl = ClosedLoop::from_gains(&aug, &spec, &g, &seed.gains).unwrap();
        let n = plant.n();
        assert_eq!(cl.a0.view((0, 0), (n, n)), plant.a.view((0, 0), (n, n)));
        assert_eq!(cl.a0.view((n, 0), (1, 3)), seed.gains.k1.view((0, 0), (1, 3)));
        assert_eq!(cl.a1.view((0, n), (n, 1)), plant.b.view((0, 0), (n, 1)));
        assert_eq!(cl.a1.view((n, 0), (1, 3)), seed.gains.k2.view((0, 0), (1, 3)));
        assert!(cl.a3.rows(0, n).iter().all(|v| *v == 0.0));
        assert_eq!(cl.a3.rows(n, 1), seed.gains.k3.rows(0, 1));
        assert_eq!(cl.dw.rows(0, n), plant.d1.rows(0, n));
        assert_eq!(cl.kernel(0.0).unwrap().shape(), (15, 3));
    }
}
