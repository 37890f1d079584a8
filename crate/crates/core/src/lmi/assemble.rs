//! Assembly of the dissipativity inequalities in the `ξ` coordinates.

use super::expr::{AffineExpr, Assignment, VarRef};
use super::problem::{LmiProblem, Sense};
use super::Certificate;
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};
use crate::model::{AugmentedSystem, Layout, SupplyRate};
use crate::tol;

/// A matrix block that is either a decision variable or fixed data.
#[derive(Debug, Clone)]
pub enum Slot {
    Var(VarRef),
    Fixed(Matrix),
}

impl Slot {
    pub fn expr(&self) -> AffineExpr {
        match self {
            Slot::Var(v) => AffineExpr::var(*v),
            Slot::Fixed(m) => AffineExpr::constant(m.clone()),
        }
    }

    pub fn value(&self, values: &Assignment) -> Result<Matrix> {
        match self {
            Slot::Var(v) => values
                .get(*v)
                .cloned()
                .ok_or_else(|| Error::UnregisteredVariable(format!("#{}", v.id))),
            Slot::Fixed(m) => Ok(m.clone()),
        }
    }
}

/// How the supply rate enters the `w` and `ζ` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupplyEmbedding {
    /// `-J₃` on the `w` block and `-J₂ᵀ` in the `w` rows, so that the
    /// inequality encodes `v̇ - s ≤ 0`.
    #[default]
    Derived,
    /// `+J₃`, `+J₂ᵀ` and `J̃ᵀ` in the `ζ` rows. Only accepted for supplies
    /// without a γ role.
    Literal,
}

#[derive(Debug, Clone)]
pub struct CertSlots {
    pub p: Slot,
    pub q: Slot,
    pub r: VarRef,
    pub s: VarRef,
    pub u: VarRef,
}

impl CertSlots {
    pub fn value(&self, values: &Assignment) -> Result<Certificate> {
        let get = |v: VarRef| {
            values
                .get(v)
                .cloned()
                .ok_or_else(|| Error::UnregisteredVariable(format!("#{}", v.id)))
        };
        Ok(Certificate {
            p: self.p.value(values)?,
            q: self.q.value(values)?,
            r: get(self.r)?,
            s: get(self.s)?,
            u: get(self.u)?,
        })
    }
}

/// `ε = STRICT_MARGIN_SCALE · (1 + max |data|)`.
pub fn strict_margin(aug: &AugmentedSystem, supply: &SupplyRate) -> f64 {
    let supply_scale = [&supply.j1, &supply.jtilde, &supply.j2, &supply.j3]
        .iter()
        .map(|m| matfun::max_abs(m))
        .fold(0.0, f64::max);
    tol::STRICT_MARGIN_SCALE * (1.0 + aug.data_scale().max(supply_scale))
}

/// Registers `P, Q, R, S, U` (or only `R, S, U` when `P, Q` are fixed).
pub fn register_certificate(
    prob: &mut LmiProblem,
    layout: &Layout,
    fixed_pq: Option<(&Matrix, &Matrix)>,
) -> Result<CertSlots> {
    let (nu, dnu) = (layout.nu, layout.dnu());
    let (p, q) = match fixed_pq {
        Some((p, q)) => {
            if p.shape() != (nu, nu) || q.shape() != (nu, dnu) {
                return Err(Error::dim(format!("fixed P, Q must be {nu}x{nu} and {nu}x{dnu}")));
            }
            (Slot::Fixed(matfun::symmetrize(p)), Slot::Fixed(q.clone()))
        }
        None => (Slot::Var(prob.sym("P", nu)?), Slot::Var(prob.full("Q", nu, dnu)?)),
    };
    Ok(CertSlots {
        p,
        q,
        r: prob.sym("R", dnu)?,
        s: prob.sym("S", nu)?,
        u: prob.sym("U", nu)?,
    })
}

/// `[[P, Q], [Qᵀ, R + I_d⊗S]] ≻ 0`, `S ≻ 0`, `U ≻ 0`.
pub fn add_positivity(prob: &mut LmiProblem, cert: &CertSlots, layout: &Layout) -> Result<()> {
    let (nu, dnu, d) = (layout.nu, layout.dnu(), layout.d);
    let rs = AffineExpr::var(cert.r).add(&AffineExpr::kron_identity(d, cert.s))?;
    let m = AffineExpr::from_blocks(
        &[nu, dnu],
        &[nu, dnu],
        vec![
            (0, 0, cert.p.expr()),
            (0, 1, cert.q.expr()),
            (1, 0, cert.q.expr().transpose()),
            (1, 1, rs),
        ],
    )?;
    prob.add_strict("functional", m, Sense::Psd)?;
    prob.add_strict("S", AffineExpr::var(cert.s), Sense::Psd)?;
    prob.add_strict("U", AffineExpr::var(cert.u), Sense::Psd)?;
    Ok(())
}

/// `γ·M` or `g·M` for a fixed level `g`.
fn gamma_times(gamma: &Slot, m: &Matrix) -> Result<AffineExpr> {
    match gamma {
        Slot::Var(v) => AffineExpr::scaled_by(*v, m.clone()),
        Slot::Fixed(g) => Ok(AffineExpr::constant(m * g[(0, 0)])),
    }
}

/// `𝐏 = [P, 0, Q, 0, 0]`, `ν × ℓ`.
pub fn bold_p(cert_p: &AffineExpr, cert_q: &AffineExpr, layout: &Layout) -> Result<AffineExpr> {
    let (nu, ell) = (layout.nu, layout.ell());
    cert_p
        .embed(nu, ell, 0, layout.current())?
        .add(&cert_q.embed(nu, ell, 0, layout.eta())?)
}

/// Selector `E` with `K E = [K₁ K₂ K₃ 0]`.
fn gain_selector(layout: &Layout) -> Matrix {
    let mut e = Matrix::zeros(layout.gain_cols(), layout.ell());
    e.view_mut((0, 0), (layout.gain_cols(), layout.gain_cols()))
        .fill_with_identity();
    e
}

/// `𝐍 = 𝐁𝐊`, `ν × ℓ`.
pub fn bold_n(aug: &AugmentedSystem, gain: &Slot) -> Result<AffineExpr> {
    gain.expr()
        .rmul(&gain_selector(&aug.layout))?
        .lmul(&aug.bb_b)
}

/// The certificate-only part `Φ` of the dissipation inequality.
pub fn phi_expr(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    cert: &CertSlots,
    gamma: &Slot,
    embedding: SupplyEmbedding,
) -> Result<AffineExpr> {
    let l = aug.layout;
    let (nu, dnu, q, m, ell) = (l.nu, l.dnu(), l.q, l.m, l.ell());
    if supply.m() != m || supply.q() != q {
        return Err(Error::dim("supply rate does not match the plant's z and w"));
    }
    if embedding == SupplyEmbedding::Literal && supply.gamma_role {
        return Err(Error::Parameter(
            "the literal supply embedding is not affine-consistent for γ-scaled supplies".into(),
        ));
    }
    let sign = match embedding {
        SupplyEmbedding::Derived => -1.0,
        SupplyEmbedding::Literal => 1.0,
    };

    // Sy(L · [F(0), -F(-r), -Π̂, 0, 0]) with L = col(Q, 0, R, 0, 0).
    let mut rrow = Matrix::zeros(dnu, ell);
    rrow.view_mut((0, l.current()), (dnu, nu)).copy_from(&aug.f0);
    rrow.view_mut((0, l.delayed()), (dnu, nu)).copy_from(&(-&aug.fmr));
    rrow.view_mut((0, l.eta()), (dnu, dnu)).copy_from(&(-&aug.pi_hat));
    let lcol = cert
        .q
        .expr()
        .embed(ell, dnu, l.current(), 0)?
        .add(&AffineExpr::var(cert.r).embed(ell, dnu, l.eta(), 0)?)?;
    let mut phi = lcol.rmul(&rrow)?.sy()?;

    let s = AffineExpr::var(cert.s);
    let u = AffineExpr::var(cert.u);
    phi = phi
        .add(&s.clone().add(&u.clone().scale(aug.r))?.embed(ell, ell, l.current(), l.current())?)?
        .add(&s.scale(-1.0).embed(ell, ell, l.delayed(), l.delayed())?)?
        .add(
            &AffineExpr::kron_identity(l.d, cert.u)
                .scale(-1.0)
                .embed(ell, ell, l.eta(), l.eta())?,
        )?;

    let (j1, j3) = if supply.gamma_role {
        (gamma_times(gamma, &supply.j1)?, gamma_times(gamma, &supply.j3)?)
    } else {
        (
            AffineExpr::constant(supply.j1.clone()),
            AffineExpr::constant(supply.j3.clone()),
        )
    };
    phi = phi
        .add(&j3.scale(sign).embed(ell, ell, l.w(), l.w())?)?
        .add(&j1.embed(ell, ell, l.zeta(), l.zeta())?)?;

    // Sy(col(0, 0, 0, ∓J₂ᵀ, J̃) · [Σ, 0]); the literal form uses J̃ᵀ.
    let mut mcol = Matrix::zeros(ell, m);
    mcol.view_mut((l.w(), 0), (q, m)).copy_from(&(supply.j2.transpose() * sign));
    let jt = match embedding {
        SupplyEmbedding::Derived => supply.jtilde.clone(),
        SupplyEmbedding::Literal => supply.jtilde.transpose(),
    };
    mcol.view_mut((l.zeta(), 0), (m, m)).copy_from(&jt);
    let mut sig = Matrix::zeros(m, ell);
    sig.view_mut((0, 0), (m, l.zeta())).copy_from(&aug.sigma);
    let cross = &mcol * &sig;
    phi.add_constant(&(&cross + cross.transpose()))
}

/// `Φ̂ = Φ + Sy(𝐏ᵀ(𝐀 + 𝐁𝐊))`; either `(P, Q)` or the gain must be fixed.
pub fn phi_hat_expr(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    cert: &CertSlots,
    gain: &Slot,
    gamma: &Slot,
    embedding: SupplyEmbedding,
) -> Result<AffineExpr> {
    let phi = phi_expr(aug, supply, cert, gamma, embedding)?;
    let bp = bold_p(&cert.p.expr(), &cert.q.expr(), &aug.layout)?;
    let closed = bold_n(aug, gain)?.add(&AffineExpr::constant(aug.bb_a.clone()))?;
    let coupling = bp.transpose().mul(&closed).map_err(|_| {
        Error::NonAffine("Φ̂ needs either (P, Q) or the gain to be fixed".into())
    })?;
    phi.add(&coupling.sy()?)
}

/// Data of the convex overestimate around the anchor `(P̃, Q̃, K̃)`.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub p: Matrix,
    pub q: Matrix,
    pub k: Matrix,
}

/// The block inequality bounding `Φ̂` from above around `anchor`.
///
/// Returns the `(ℓ + 2ν)`-square expression required to be `⪯ -εI`.
pub fn overestimate_expr(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    cert: &CertSlots,
    gain: VarRef,
    z: VarRef,
    gamma: &Slot,
    anchor: &Anchor,
    embedding: SupplyEmbedding,
) -> Result<AffineExpr> {
    let l = aug.layout;
    let (nu, ell) = (l.nu, l.ell());
    let phi = phi_expr(aug, supply, cert, gamma, embedding)?;
    let bp = bold_p(&cert.p.expr(), &cert.q.expr(), &l)?;
    let bp_t = bold_p(
        &AffineExpr::constant(anchor.p.clone()),
        &AffineExpr::constant(anchor.q.clone()),
        &l,
    )?;
    let n = bold_n(aug, &Slot::Var(gain))?;
    let n_t = bold_n(aug, &Slot::Fixed(anchor.k.clone()))?;

    let bpt_t = bp_t.transpose();
    let lin = bpt_t
        .mul(&n)?
        .add(&bp.transpose().mul(&n_t)?)?
        .sub(&bpt_t.mul(&n_t)?)?
        .add(&bp.transpose().rmul(&aug.bb_a)?)?;
    let tl = phi.add(&lin.sy()?)?;

    let dp = bp.sub(&bp_t)?;
    let dn = n.sub(&n_t)?;
    let zexpr = AffineExpr::var(z);
    let eye = Matrix::identity(nu, nu);
    AffineExpr::from_blocks(
        &[ell, nu, nu],
        &[ell, nu, nu],
        vec![
            (0, 0, tl),
            (1, 0, dp.clone()),
            (0, 1, dp.transpose()),
            (2, 0, dn.clone()),
            (0, 2, dn.transpose()),
            (1, 1, zexpr.clone().scale(-1.0)),
            (2, 2, zexpr.add_constant(&(-eye))?),
        ],
    )
}

/// `[[T, X − X̃], [(X − X̃)ᵀ, I]] ⪰ 0`, so that `tr T ≥ ‖X − X̃‖²_F`.
pub fn add_proximal_epigraph(
    prob: &mut LmiProblem,
    label: &str,
    x: &AffineExpr,
    anchor: &Matrix,
    t: VarRef,
) -> Result<()> {
    let (r, c) = x.shape();
    if anchor.shape() != (r, c) || t.rows != r {
        return Err(Error::dim(format!("proximal term `{label}` has mismatched shapes")));
    }
    let diff = x.clone().add_constant(&(-anchor))?;
    let m = AffineExpr::from_blocks(
        &[r, c],
        &[r, c],
        vec![
            (0, 0, AffineExpr::var(t)),
            (0, 1, diff.clone()),
            (1, 0, diff.transpose()),
            (1, 1, AffineExpr::constant(Matrix::identity(c, c))),
        ],
    )?;
    prob.add_constraint(label, m, Sense::Psd, 0.0)
}

/// Which factor of the bilinear inequality is held fixed.
#[derive(Debug, Clone)]
pub enum FixedFactor {
    /// Stacked gain `[K₁ K₂ K₃]`; the certificate is free.
    Gain(Matrix),
    /// `(P, Q)`; `R, S, U` and the gain are free.
    Certificate { p: Matrix, q: Matrix },
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyOptions {
    pub embedding: SupplyEmbedding,
    /// Weight of γ in the objective (ignored without a γ role).
    pub gamma_weight: f64,
    /// Strictness margin; `None` uses [`strict_margin`].
    pub margin: Option<f64>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            embedding: SupplyEmbedding::Derived,
            gamma_weight: 1.0,
            margin: None,
        }
    }
}

/// An assembled problem together with the slots of its unknowns.
#[derive(Debug, Clone)]
pub struct AssembledLmi {
    pub problem: LmiProblem,
    pub cert: CertSlots,
    pub gain: Slot,
    pub gamma: Slot,
    pub z: Option<VarRef>,
    pub t1: Option<VarRef>,
    pub t2: Option<VarRef>,
}

/// Point recovered from a solved [`AssembledLmi`].
#[derive(Debug, Clone)]
pub struct LmiPoint {
    pub certificate: Certificate,
    pub gain: Matrix,
    pub gamma: Option<f64>,
    pub z: Option<Matrix>,
}

impl AssembledLmi {
    pub fn extract(&self, y: &[f64]) -> Result<LmiPoint> {
        let values = self.problem.unpack(y)?;
        self.extract_from(&values)
    }

    pub fn extract_from(&self, values: &Assignment) -> Result<LmiPoint> {
        let gamma = match &self.gamma {
            Slot::Var(v) => values.scalar(*v),
            Slot::Fixed(g) => Some(g[(0, 0)]),
        };
        Ok(LmiPoint {
            certificate: self.cert.value(values)?,
            gain: self.gain.value(values)?,
            gamma,
            z: self.z.and_then(|z| values.get(z).cloned()),
        })
    }
}

fn register_gamma(prob: &mut LmiProblem, supply: &SupplyRate, weight: f64) -> Result<Slot> {
    if !supply.gamma_role {
        return Ok(Slot::Fixed(Matrix::from_element(1, 1, 1.0)));
    }
    let g = prob.scalar("gamma")?;
    prob.add_constraint("gamma", AffineExpr::var(g), Sense::Psd, tol::GAMMA_FLOOR)?;
    if weight != 0.0 {
        prob.minimize(g, Matrix::from_element(1, 1, weight))?;
    }
    Ok(Slot::Var(g))
}

/// The dissipation inequality with one bilinear factor fixed.
pub fn assemble_fixed(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    fixed: &FixedFactor,
    opts: &AssemblyOptions,
) -> Result<AssembledLmi> {
    supply.validate()?;
    let l = aug.layout;
    let eps = opts.margin.unwrap_or_else(|| strict_margin(aug, supply));
    let mut prob = LmiProblem::new(eps);
    let (cert, gain) = match fixed {
        FixedFactor::Gain(k) => {
            if k.shape() != (aug.p, l.gain_cols()) {
                return Err(Error::dim(format!(
                    "fixed gain must be {}x{}",
                    aug.p,
                    l.gain_cols()
                )));
            }
            (register_certificate(&mut prob, &l, None)?, Slot::Fixed(k.clone()))
        }
        FixedFactor::Certificate { p, q } => {
            let cert = register_certificate(&mut prob, &l, Some((p, q)))?;
            let k = prob.full("K", aug.p, l.gain_cols())?;
            (cert, Slot::Var(k))
        }
    };
    let gamma = register_gamma(&mut prob, supply, opts.gamma_weight)?;
    add_positivity(&mut prob, &cert, &l)?;
    let phi_hat = phi_hat_expr(aug, supply, &cert, &gain, &gamma, opts.embedding)?;
    prob.add_strict("dissipation", phi_hat, Sense::Nsd)?;
    Ok(AssembledLmi {
        problem: prob,
        cert,
        gain,
        gamma,
        z: None,
        t1: None,
        t2: None,
    })
}

/// One convex subproblem of the proximal iteration around `anchor`.
pub fn assemble_proximal_step(
    aug: &AugmentedSystem,
    supply: &SupplyRate,
    anchor: &Anchor,
    rho: (f64, f64),
    opts: &AssemblyOptions,
) -> Result<AssembledLmi> {
    supply.validate()?;
    let l = aug.layout;
    let (nu, dnu) = (l.nu, l.dnu());
    if anchor.p.shape() != (nu, nu)
        || anchor.q.shape() != (nu, dnu)
        || anchor.k.shape() != (aug.p, l.gain_cols())
    {
        return Err(Error::dim("anchor shapes do not match the augmented system"));
    }
    if !(rho.0 >= 0.0 && rho.1 >= 0.0) {
        return Err(Error::Parameter("proximal weights must be nonnegative".into()));
    }
    let eps = opts.margin.unwrap_or_else(|| strict_margin(aug, supply));
    let mut prob = LmiProblem::new(eps);
    let cert = register_certificate(&mut prob, &l, None)?;
    let k = prob.full("K", aug.p, l.gain_cols())?;
    let gamma = register_gamma(&mut prob, supply, opts.gamma_weight)?;
    let z = prob.sym("Z", nu)?;
    let t1 = prob.sym("T1", nu)?;
    let t2 = prob.sym("T2", aug.p)?;

    add_positivity(&mut prob, &cert, &l)?;
    prob.add_strict("Z", AffineExpr::var(z), Sense::Psd)?;
    prob.add_strict(
        "I-Z",
        AffineExpr::var(z)
            .scale(-1.0)
            .add_constant(&Matrix::identity(nu, nu))?,
        Sense::Psd,
    )?;
    let over = overestimate_expr(aug, supply, &cert, k, z, &gamma, anchor, opts.embedding)?;
    prob.add_strict("overestimate", over, Sense::Nsd)?;

    let lambda = AffineExpr::from_blocks(
        &[nu],
        &[nu, dnu],
        vec![(0, 0, cert.p.expr()), (0, 1, cert.q.expr())],
    )?;
    let lambda_anchor = matfun::hcat(&[&anchor.p, &anchor.q])?;
    add_proximal_epigraph(&mut prob, "prox-PQ", &lambda, &lambda_anchor, t1)?;
    add_proximal_epigraph(&mut prob, "prox-K", &AffineExpr::var(k), &anchor.k, t2)?;
    if rho.0 > 0.0 {
        prob.minimize(t1, Matrix::identity(nu, nu) * rho.0)?;
    }
    if rho.1 > 0.0 {
        prob.minimize(t2, Matrix::identity(aug.p, aug.p) * rho.1)?;
    }
    Ok(AssembledLmi {
        problem: prob,
        cert,
        gain: Slot::Var(k),
        gamma,
        z: Some(z),
        t1: Some(t1),
        t2: Some(t2),
    })
}
