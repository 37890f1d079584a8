//! The two-state benchmark plant with an unstable mode at 0.1, its
//! exponential basis and its reference γ values.

use crate::basis::BasisSpec;
use crate::error::Result;
use crate::matfun::Matrix;
use crate::model::{PlantModel, SupplyKind};

/// Delay used by the demo.
pub const DEMO_DELAY: f64 = 1.0;

/// Reference γ after the two warm-start solves.
pub const REFERENCE_GAMMA_INIT: [f64; 2] = [0.49425, 0.49227];

/// Reference (iterations, γ) pairs of the proximal loop.
pub const REFERENCE_GAMMA_TRACE: [(usize, f64); 4] =
    [(100, 0.481), (200, 0.4714), (300, 0.46398), (400, 0.45749)];

/// Basis rates: `1, e^τ, e^{2τ}, e^{3τ}, e^{-0.1τ}`.
pub const BASIS_RATES: [f64; 5] = [0.0, 1.0, 2.0, 3.0, -0.1];

pub fn paper_plant(r: f64) -> PlantModel {
    let mut c3bar = Matrix::zeros(2, 15);
    // f = 1
    c3bar[(0, 0)] = 0.2;
    c3bar[(0, 1)] = 0.1;
    c3bar[(1, 0)] = -0.2;
    c3bar[(1, 1)] = 0.3;
    // f = e^τ
    c3bar[(0, 3)] = 0.1;
    // f = e^{2τ}
    c3bar[(1, 7)] = 0.14;
    // f = e^{3τ}
    c3bar[(0, 11)] = 0.12;
    c3bar[(1, 11)] = 0.11;
    PlantModel {
        a: Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.1]),
        b: Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
        d1: Matrix::from_column_slice(2, 1, &[0.1, -0.1]),
        c1: Matrix::from_row_slice(2, 3, &[-0.3, 0.4, 0.1, -0.3, 0.1, -0.1]),
        c2: Matrix::from_row_slice(2, 3, &[0.0, 0.2, 0.0, -0.2, 0.1, 0.0]),
        c3bar,
        d2: Matrix::from_element(1, 1, 0.12),
        d3: Matrix::from_column_slice(2, 1, &[0.14, 0.1]),
        r,
    }
}

pub fn paper_basis(r: f64) -> Result<BasisSpec> {
    BasisSpec::exponentials(&BASIS_RATES, r)
}

pub fn paper_supply() -> SupplyKind {
    SupplyKind::L2Gain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_gram;
    use crate::matfun::Vector;

    #[test]
    fn output_kernel_matches_closed_form() {
        let plant = paper_plant(1.0);
        let spec = paper_basis(1.0).unwrap();
        let g = build_gram(&spec, 3).unwrap();
        for tau in [-1.0f64, -0.4, 0.0] {
            let f = spec.eval(tau).unwrap();
            let fk = crate::matfun::kron(
                &Matrix::from_column_slice(5, 1, f.as_slice()),
                &Matrix::identity(3, 3),
            );
            let c3 = &plant.c3bar * fk;
            let (e1, e2, e3) = (tau.exp(), (2.0 * tau).exp(), (3.0 * tau).exp());
            let expected = Matrix::from_row_slice(
                2,
                3,
                &[0.2 + 0.1 * e1, 0.1, 0.12 * e3, -0.2, 0.3 + 0.14 * e2, 0.11 * e3],
            );
            assert!((c3 - expected).abs().max() < 1e-14);
        }
        assert_eq!(g.nu, 3);
        assert_eq!(spec.f0, Vector::from_element(5, 1.0));
    }
}
