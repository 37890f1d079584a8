//! Lowering of an [`LmiProblem`] to the standard form
//! `min cᵀy  s.t.  F₀ᵏ + Σ yᵢ Fᵢᵏ ⪰ 0` for every block `k`.

use std::fmt::Write as _;

use super::expr::{smat, svec, svec_position};
use super::problem::{LmiProblem, Sense};
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};

/// One PSD block in svec coordinates.
#[derive(Debug, Clone)]
pub struct SdpBlock {
    pub label: String,
    pub size: usize,
    /// `svec(F₀)`.
    pub constant: Vec<f64>,
    /// Sparse `svec(Fᵢ)` for each variable coordinate `i` that appears.
    pub coeffs: Vec<(usize, Vec<(usize, f64)>)>,
}

impl SdpBlock {
    pub fn svec_len(&self) -> usize {
        self.size * (self.size + 1) / 2
    }

    /// `F₀ + Σ yᵢFᵢ`.
    pub fn evaluate(&self, y: &[f64]) -> Matrix {
        let mut v = self.constant.clone();
        for (i, entries) in &self.coeffs {
            for &(k, a) in entries {
                v[k] += a * y[*i];
            }
        }
        smat(self.size, &v)
    }
}

#[derive(Debug, Clone)]
pub struct VarSegment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct StandardSdp {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
    pub segments: Vec<VarSegment>,
}

impl StandardSdp {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Smallest eigenvalue of each block at `y`.
    pub fn block_min_eigenvalues(&self, y: &[f64]) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| matfun::lambda_min_sym(&b.evaluate(y)))
            .collect()
    }

    /// Largest absolute entry of each block's data.
    pub fn block_scales(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let c = b.constant.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                b.coeffs
                    .iter()
                    .flat_map(|(_, e)| e.iter().map(|(_, v)| v.abs()))
                    .fold(c, f64::max)
            })
            .collect()
    }

    /// Sizes of every object in the compiled problem, one per line.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "coordinates {}", self.n_vars);
        for seg in &self.segments {
            let _ = writeln!(s, "  var {:<8} offset {:>4} len {:>4}", seg.name, seg.offset, seg.len);
        }
        for (k, b) in self.blocks.iter().enumerate() {
            let nnz: usize = b.coeffs.iter().map(|(_, e)| e.len()).sum();
            let _ = writeln!(
                s,
                "  block {k:>2} {:<14} size {:>3} vars {:>4} nnz {}",
                b.label,
                b.size,
                b.coeffs.len(),
                nnz
            );
        }
        s
    }

    /// SDPA sparse format: `min cᵀx s.t. Σ xᵢFᵢ − F₀ ⪰ 0`.
    pub fn to_sdpa(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "* {} blocks", self.blocks.len());
        let _ = writeln!(s, "{}", self.n_vars);
        let _ = writeln!(s, "{}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.size.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let c: Vec<String> = self.objective.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", c.join(" "));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let emit = |s: &mut String, mat: usize, blk: usize, n: usize, k: usize, v: f64| {
            let (i, j) = svec_position(n, k);
            let val = if i == j { v } else { v * h };
            if val != 0.0 {
                let _ = writeln!(s, "{mat} {} {} {} {val:e}", blk + 1, j + 1, i + 1);
            }
        };
        for (bk, b) in self.blocks.iter().enumerate() {
            for (k, v) in b.constant.iter().enumerate() {
                emit(&mut s, 0, bk, b.size, k, -v);
            }
        }
        for (bk, b) in self.blocks.iter().enumerate() {
            for (i, entries) in &b.coeffs {
                for &(k, v) in entries {
                    emit(&mut s, i + 1, bk, b.size, k, v);
                }
            }
        }
        s
    }
}

/// Compiles every constraint into a PSD block, checking symmetry.
pub fn compile(prob: &LmiProblem) -> Result<StandardSdp> {
    let n_vars = prob.n_coords();
    let mut objective = vec![0.0; n_vars];
    for (var, w) in prob.objective_terms() {
        let info = prob.info(*var)?;
        // ⟨W, V⟩ = Σ_c y_c ⟨W, E_c⟩
        for c in 0..var.coords() {
            let contrib: f64 = var
                .basis_entries(c)
                .iter()
                .map(|&(i, j, v)| v * w[(i, j)])
                .sum();
            objective[info.offset + c] += contrib;
        }
    }

    let mut blocks = Vec::with_capacity(prob.constraints().len());
    for con in prob.constraints() {
        let n = con.size();
        let sign = match con.sense {
            Sense::Psd => 1.0,
            Sense::Nsd => -1.0,
        };
        let check = |m: &Matrix, what: &str| -> Result<()> {
            let defect = matfun::max_abs(&(m - m.transpose()));
            if defect > 1e-10 * (1.0 + matfun::max_abs(m)) {
                return Err(Error::Domain(format!(
                    "constraint `{}` is not symmetric ({what}, defect {defect:e})",
                    con.label
                )));
            }
            Ok(())
        };
        let c0 = con.expr.constant_part() * sign - Matrix::identity(n, n) * con.margin;
        check(&c0, "constant")?;
        let mut coeffs = Vec::new();
        for var in con.expr.variables() {
            let info = prob.info(var)?;
            for c in 0..var.coords() {
                let m = con.expr.coefficient(var, c) * sign;
                check(&m, &info.name)?;
                let sv: Vec<(usize, f64)> = svec(&m)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .collect();
                if !sv.is_empty() {
                    coeffs.push((info.offset + c, sv));
                }
            }
        }
        coeffs.sort_by_key(|(i, _)| *i);
        blocks.push(SdpBlock {
            label: con.label.clone(),
            size: n,
            constant: svec(&c0),
            coeffs,
        });
    }

    let segments = prob
        .vars()
        .iter()
        .map(|v| VarSegment {
            name: v.name.clone(),
            offset: v.offset,
            len: v.var.coords(),
        })
        .collect();
    Ok(StandardSdp {
        n_vars,
        objective,
        blocks,
        segments,
    })
}
