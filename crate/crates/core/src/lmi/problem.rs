use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use super::expr::{AffineExpr, Assignment, VarKind, VarRef};
use crate::error::{Error, Result};
use crate::matfun::{self, Matrix};

/// Direction of a matrix inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// `expr ⪰ margin·I`.
    Psd,
    /// `expr ⪯ -margin·I`.
    Nsd,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub expr: AffineExpr,
    pub sense: Sense,
    pub margin: f64,
}

impl Constraint {
    pub fn size(&self) -> usize {
        self.expr.rows()
    }

    /// The matrix required to be positive semidefinite.
    pub fn normalized(&self, values: &Assignment) -> Result<Matrix> {
        let v = self.expr.evaluate(values)?;
        let n = v.nrows();
        let signed = match self.sense {
            Sense::Psd => v,
            Sense::Nsd => -v,
        };
        Ok(matfun::symmetrize(&signed) - Matrix::identity(n, n) * self.margin)
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    pub var: VarRef,
    /// Offset of the variable's first coordinate in the stacked vector.
    pub offset: usize,
}

/// Decision variables, matrix inequalities and a linear objective.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    vars: Vec<VarInfo>,
    constraints: Vec<Constraint>,
    /// `Σ ⟨W, V⟩` over `(V, W)` pairs.
    objective: Vec<(VarRef, Matrix)>,
    strict_margin: f64,
    owner: u64,
}

static NEXT_OWNER: AtomicU64 = AtomicU64::new(1);

impl LmiProblem {
    pub fn new(strict_margin: f64) -> Self {
        LmiProblem {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            strict_margin,
            owner: NEXT_OWNER.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn strict_margin(&self) -> f64 {
        self.strict_margin
    }

    fn register(&mut self, name: &str, kind: VarKind, rows: usize, cols: usize) -> Result<VarRef> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("variable `{name}` has an empty shape")));
        }
        if self.vars.iter().any(|v| v.name == name) {
            return Err(Error::Usage(format!("variable `{name}` registered twice")));
        }
        let var = VarRef {
            owner: self.owner,
            id: self.vars.len(),
            kind,
            rows,
            cols,
        };
        self.vars.push(VarInfo {
            name: name.to_string(),
            var,
            offset: self.n_coords(),
        });
        Ok(var)
    }

    pub fn sym(&mut self, name: &str, n: usize) -> Result<VarRef> {
        self.register(name, VarKind::Symmetric, n, n)
    }

    pub fn full(&mut self, name: &str, rows: usize, cols: usize) -> Result<VarRef> {
        self.register(name, VarKind::Full, rows, cols)
    }

    pub fn scalar(&mut self, name: &str) -> Result<VarRef> {
        self.register(name, VarKind::Scalar, 1, 1)
    }

    pub fn vars(&self) -> &[VarInfo] {
        &self.vars
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarRef> {
        self.vars.iter().find(|v| v.name == name).map(|v| v.var)
    }

    pub fn info(&self, var: VarRef) -> Result<&VarInfo> {
        self.vars
            .get(var.id)
            .filter(|v| v.var == var)
            .ok_or_else(|| Error::UnregisteredVariable(format!("#{}", var.id)))
    }

    pub fn n_coords(&self) -> usize {
        self.vars.iter().map(|v| v.var.coords()).sum()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_terms(&self) -> &[(VarRef, Matrix)] {
        &self.objective
    }

    pub fn add_constraint(
        &mut self,
        label: &str,
        expr: AffineExpr,
        sense: Sense,
        margin: f64,
    ) -> Result<()> {
        if expr.rows() != expr.cols() {
            return Err(Error::dim(format!(
                "constraint `{label}` is {}x{}, not square",
                expr.rows(),
                expr.cols()
            )));
        }
        for v in expr.variables() {
            self.info(v)
                .map_err(|_| Error::UnregisteredVariable(format!("#{} in `{label}`", v.id)))?;
        }
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::Parameter(format!("margin of `{label}` must be ≥ 0")));
        }
        self.constraints.push(Constraint {
            label: label.to_string(),
            expr,
            sense,
            margin,
        });
        Ok(())
    }

    /// Adds a strict inequality enforced with the problem's margin.
    pub fn add_strict(&mut self, label: &str, expr: AffineExpr, sense: Sense) -> Result<()> {
        let eps = self.strict_margin;
        self.add_constraint(label, expr, sense, eps)
    }

    /// Adds `⟨weight, var⟩` to the minimized objective.
    pub fn minimize(&mut self, var: VarRef, weight: Matrix) -> Result<()> {
        self.info(var)?;
        if weight.shape() != (var.rows, var.cols) {
            return Err(Error::dim("objective weight shape differs from the variable"));
        }
        self.objective.push((var, weight));
        Ok(())
    }

    /// Splits a stacked coordinate vector into variable values.
    pub fn unpack(&self, y: &[f64]) -> Result<Assignment> {
        if y.len() != self.n_coords() {
            return Err(Error::dim(format!(
                "coordinate vector has length {}, expected {}",
                y.len(),
                self.n_coords()
            )));
        }
        let mut a = Assignment::new();
        for v in &self.vars {
            let c = &y[v.offset..v.offset + v.var.coords()];
            a.set(v.var, v.var.from_coords(c))?;
        }
        Ok(a)
    }

    /// Inverse of [`LmiProblem::unpack`]; missing variables become zero.
    pub fn pack(&self, values: &Assignment) -> Vec<f64> {
        let mut y = vec![0.0; self.n_coords()];
        for v in &self.vars {
            if let Some(val) = values.get(v.var) {
                let c = v.var.to_coords(val);
                y[v.offset..v.offset + c.len()].copy_from_slice(&c);
            }
        }
        y
    }

    pub fn objective_value(&self, values: &Assignment) -> Result<f64> {
        let mut s = 0.0;
        for (v, w) in &self.objective {
            let val = values
                .get(*v)
                .ok_or_else(|| Error::UnregisteredVariable(format!("#{}", v.id)))?;
            s += w.component_mul(val).sum();
        }
        Ok(s)
    }

    /// Smallest eigenvalue over all normalized constraints, with its label.
    pub fn min_eigenvalue(&self, values: &Assignment) -> Result<(f64, String)> {
        let mut worst = (f64::INFINITY, String::new());
        for c in &self.constraints {
            let lam = matfun::lambda_min_sym(&c.normalized(values)?);
            if lam < worst.0 {
                worst = (lam, c.label.clone());
            }
        }
        Ok(worst)
    }

    /// Human-readable listing of variables, constraints and objective.
    pub fn dump_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variables ({} coordinates)", self.n_coords());
        for v in &self.vars {
            let _ = writeln!(
                s,
                "  {:<6} {:?} {}x{} offset {} coords {}",
                v.name,
                v.var.kind,
                v.var.rows,
                v.var.cols,
                v.offset,
                v.var.coords()
            );
        }
        let _ = writeln!(s, "constraints ({})", self.constraints.len());
        for c in &self.constraints {
            let names: Vec<_> = c
                .expr
                .variables()
                .iter()
                .map(|v| self.vars[v.id].name.clone())
                .collect();
            let rel = match c.sense {
                Sense::Psd => "⪰",
                Sense::Nsd => "⪯ -",
            };
            let _ = writeln!(
                s,
                "  {:<14} size {:>3}  {rel}{:e}·I  in [{}]",
                c.label,
                c.size(),
                c.margin,
                names.join(", ")
            );
        }
        let _ = writeln!(s, "objective");
        for (v, w) in &self.objective {
            let _ = writeln!(
                s,
                "  <W, {}>  ‖W‖_max = {}",
                self.vars[v.id].name,
                matfun::max_abs(w)
            );
        }
        s
    }
}
