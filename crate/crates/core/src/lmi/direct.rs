//! Numeric evaluation of the dissipation inequality by explicit block
//! placement, independent of the expression machinery.

use super::{Certificate, SupplyEmbedding};
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};
use crate::model::{AugmentedSystem, SupplyRate};

fn add_block(m: &mut Matrix, row: usize, col: usize, b: &Matrix) {
    let mut v = m.view_mut((row, col), b.shape());
    v += b;
}

/// `Φ̂(P, Q, R, S, U, K, γ)` evaluated block by block.
pub fn phi_hat(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    cert: &Certificate,
    k: &Matrix,
    gamma: Option<f64>,
    embedding: SupplyEmbedding,
) -> Result<Matrix> {
    let l = aug.layout;
    let (nu, dnu, ell) = (l.nu, l.dnu(), l.ell());
    cert.check_shapes(nu, dnu)?;
    if embedding == SupplyEmbedding::Literal && supply.gamma_role {
        return Err(Error::Parameter("literal embedding needs a supply without γ".into()));
    }
    let (j1, j3) = supply.scaled(gamma)?;
    let sign = if embedding == SupplyEmbedding::Derived { -1.0 } else { 1.0 };
    let (c, dl, e, w, z) = (l.current(), l.delayed(), l.eta(), l.w(), l.zeta());

    let mut m = Matrix::zeros(ell, ell);
    // Off-diagonal blocks of Q·F(0), -Q·F(-r), -Q·Π̂, R·F(0), -R·F(-r), -R·Π̂.
    let qf0 = &cert.q * &aug.f0;
    let qfr = &cert.q * &aug.fmr;
    let qpi = &cert.q * &aug.pi_hat;
    let rf0 = &cert.r * &aug.f0;
    let rfr = &cert.r * &aug.fmr;
    let rpi = &cert.r * &aug.pi_hat;
    add_block(&mut m, c, c, &(&qf0 + qf0.transpose()));
    add_block(&mut m, c, dl, &(-&qfr));
    add_block(&mut m, dl, c, &(-qfr.transpose()));
    add_block(&mut m, c, e, &(-&qpi));
    add_block(&mut m, e, c, &(-qpi.transpose()));
    add_block(&mut m, e, c, &rf0);
    add_block(&mut m, c, e, &rf0.transpose());
    add_block(&mut m, e, dl, &(-&rfr));
    add_block(&mut m, dl, e, &(-rfr.transpose()));
    add_block(&mut m, e, e, &(-(&rpi + rpi.transpose())));

    add_block(&mut m, c, c, &(&cert.s + &cert.u * aug.r));
    add_block(&mut m, dl, dl, &(-&cert.s));
    for j in 0..l.d {
        add_block(&mut m, e + j * nu, e + j * nu, &(-&cert.u));
    }
    add_block(&mut m, w, w, &(&j3 * sign));
    add_block(&mut m, z, z, &j1);

    // Output coupling: z = Σ·(χ, χ_r, η, w).
    let jt = if embedding == SupplyEmbedding::Derived {
        supply.jtilde.clone()
    } else {
        supply.jtilde.transpose()
    };
    let js = jt * &aug.sigma;
    let j2s = supply.j2.transpose() * &aug.sigma * sign;
    add_block(&mut m, z, 0, &js);
    add_block(&mut m, 0, z, &js.transpose());
    add_block(&mut m, w, 0, &j2s);
    add_block(&mut m, 0, w, &j2s.transpose());

    // Sy(𝐏ᵀ(𝐀 + 𝐁𝐊)).
    let mut closed = aug.bb_a.clone();
    let bk = &aug.bb_b * aug.padded_gain(k)?;
    closed += bk;
    let mut bp = Matrix::zeros(nu, ell);
    bp.view_mut((0, c), (nu, nu)).copy_from(&cert.p);
    bp.view_mut((0, e), (nu, dnu)).copy_from(&cert.q);
    let pa = bp.transpose() * closed;
    m += &pa + pa.transpose();
    Ok(matfun::symmetrize(&m))
}

/// `[[P, Q], [Qᵀ, R + I_d⊗S]]`.
pub fn functional_matrix(cert: &Certificate, d: usize) -> Result<Matrix> {
    let nu = cert.p.nrows();
    cert.check_shapes(nu, d * nu)?;
    let rs = &cert.r + matfun::kron(&Matrix::identity(d, d), &cert.s);
    matfun::vcat(&[
        &matfun::hcat(&[&cert.p, &cert.q])?,
        &matfun::hcat(&[&cert.q.transpose(), &rs])?,
    ])
}
