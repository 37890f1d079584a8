//! Matrix-inequality modeling: affine expressions, problem assembly and
//! lowering to a standard-form semidefinite program.

pub mod assemble;
pub mod compile;
pub mod direct;
pub mod expr;
pub mod problem;

pub use assemble::{
    assemble_fixed, assemble_proximal_step, Anchor, AssembledLmi, AssemblyOptions, CertSlots,
    FixedFactor, LmiPoint, Slot, SupplyEmbedding,
};
pub use compile::{compile, SdpBlock, StandardSdp};
pub use expr::{AffineExpr, Assignment, VarKind, VarRef};
pub use problem::{Constraint, LmiProblem, Sense};

use crate::error::{Error, Result};
use crate::matfun::Matrix;

/// Matrices of the quadratic Krasovskii functional.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub p: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub s: Matrix,
    pub u: Matrix,
}

impl Certificate {
    pub fn check_shapes(&self, nu: usize, dnu: usize) -> Result<()> {
        let ok = self.p.shape() == (nu, nu)
            && self.q.shape() == (nu, dnu)
            && self.r.shape() == (dnu, dnu)
            && self.s.shape() == (nu, nu)
            && self.u.shape() == (nu, nu);
        if ok {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "certificate must be P {nu}x{nu}, Q {nu}x{dnu}, R {dnu}x{dnu}, S and U {nu}x{nu}"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_gram, BasisSpec};
    use crate::matfun;
    use crate::model::{build_augmented, supply_from_template, AugmentedSystem, PlantModel, SupplyKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_system() -> AugmentedSystem {
        let plant = PlantModel {
            a: Matrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, 0.2]),
            b: Matrix::from_column_slice(2, 1, &[0.0, 1.0]),
            d1: Matrix::from_column_slice(2, 1, &[0.3, -0.2]),
            c1: Matrix::from_row_slice(1, 3, &[0.5, 0.1, 0.0]),
            c2: Matrix::from_row_slice(1, 3, &[0.0, 0.2, 0.1]),
            c3bar: Matrix::from_row_slice(1, 6, &[0.1, 0.0, 0.2, -0.1, 0.3, 0.0]),
            d2: Matrix::from_element(1, 1, 0.1),
            d3: Matrix::from_element(1, 1, 0.05),
            r: 0.7,
        };
        let spec = BasisSpec::exponentials(&[0.0, 0.2], 0.7).unwrap();
        let g = build_gram(&spec, 3).unwrap();
        build_augmented(&plant, &g, &spec).unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_cert(rng: &mut ChaCha8Rng, nu: usize, dnu: usize) -> Certificate {
        let sym = |m: Matrix| matfun::symmetrize(&m);
        Certificate {
            p: sym(random(rng, nu, nu)),
            q: random(rng, nu, dnu),
            r: sym(random(rng, dnu, dnu)),
            s: sym(random(rng, nu, nu)),
            u: sym(random(rng, nu, nu)),
        }
    }

    #[test]
    fn expression_and_direct_assembly_agree() {
        let aug = small_system();
        let l = aug.layout;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [SupplyKind::L2Gain, SupplyKind::Passivity] {
            let supply = supply_from_template(kind, 1, 1).unwrap();
            let cert = random_cert(&mut rng, l.nu, l.dnu());
            let k = random(&mut rng, 1, l.gain_cols());
            let asm = assemble_fixed(
                &aug,
                &supply,
                &FixedFactor::Gain(k.clone()),
                &AssemblyOptions::default(),
            )
            .unwrap();
            let mut vals = Assignment::new();
            let set = |vals: &mut Assignment, slot: &Slot, m: &Matrix| {
                if let Slot::Var(v) = slot {
                    vals.set(*v, m.clone()).unwrap();
                }
            };
            set(&mut vals, &asm.cert.p, &cert.p);
            set(&mut vals, &asm.cert.q, &cert.q);
            vals.set(asm.cert.r, cert.r.clone()).unwrap();
            vals.set(asm.cert.s, cert.s.clone()).unwrap();
            vals.set(asm.cert.u, cert.u.clone()).unwrap();
            let gamma = if supply.gamma_role { Some(0.8) } else { None };
            if let Some(g) = gamma {
                set(&mut vals, &asm.gamma, &Matrix::from_element(1, 1, g));
            }
            let con = asm
                .problem
                .constraints()
                .iter()
                .find(|c| c.label == "dissipation")
                .unwrap();
            let via_expr = con.expr.evaluate(&vals).unwrap();
            let via_direct =
                direct::phi_hat(&aug, &supply, &cert, &k, gamma, SupplyEmbedding::Derived).unwrap();
            assert!((via_expr - via_direct).abs().max() < 1e-12);
        }
    }

    #[test]
    fn literal_embedding_rejects_gamma_supplies() {
        let aug = small_system();
        let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
        let k = Matrix::zeros(1, aug.layout.gain_cols());
        let opts = AssemblyOptions {
            embedding: SupplyEmbedding::Literal,
            ..Default::default()
        };
        assert!(matches!(
            assemble_fixed(&aug, &supply, &FixedFactor::Gain(k), &opts),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn overestimate_bounds_the_bilinear_inequality() {
        let aug = small_system();
        let l = aug.layout;
        let supply = supply_from_template(SupplyKind::L2Gain, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let cert = random_cert(&mut rng, l.nu, l.dnu());
            let k = random(&mut rng, 1, l.gain_cols());
            let anchor = Anchor {
                p: matfun::symmetrize(&random(&mut rng, l.nu, l.nu)),
                q: random(&mut rng, l.nu, l.dnu()),
                k: random(&mut rng, 1, l.gain_cols()),
            };
            let zd: f64 = rng.gen_range(0.05..0.95);
            let asm = assemble_proximal_step(&aug, &supply, &anchor, (1.0, 1.0), &AssemblyOptions::default())
                .unwrap();
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
                vals.set(g, Matrix::from_element(1, 1, 0.6)).unwrap();
            }
            let z = Matrix::identity(l.nu, l.nu) * zd;
            vals.set(asm.z.unwrap(), z.clone()).unwrap();
            let con = asm
                .problem
                .constraints()
                .iter()
                .find(|c| c.label == "overestimate")
                .unwrap();
            let big = con.expr.evaluate(&vals).unwrap();
            // Schur complement of the (−Z, −(I−Z)) corner.
            let ell = l.ell();
            let tl = big.view((0, 0), (ell, ell)).into_owned();
            let off = big.view((ell, 0), (2 * l.nu, ell)).into_owned();
            let corner = big.view((ell, ell), (2 * l.nu, 2 * l.nu)).into_owned();
            let schur = &tl - off.transpose() * corner.try_inverse().unwrap() * &off;
            let exact = direct::phi_hat(&aug, &supply, &cert, &k, Some(0.6), SupplyEmbedding::Derived)
                .unwrap();
            let gap = matfun::lambda_min_sym(&matfun::symmetrize(&(schur - exact)));
            assert!(gap > -1e-9, "overestimate below the exact value by {gap}");
        }
    }
}
