//! Affine matrix expressions in matrix-valued decision variables.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matfun::{kron, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Symmetric,
    Full,
    Scalar,
}

/// Handle to a decision variable registered with an [`super::LmiProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarRef {
    /// Identifier of the owning problem.
    pub owner: u64,
    pub id: usize,
    pub kind: VarKind,
    pub rows: usize,
    pub cols: usize,
}

impl VarRef {
    /// Number of scalar coordinates (svec length for symmetric variables).
    pub fn coords(&self) -> usize {
        match self.kind {
            VarKind::Symmetric => self.rows * (self.rows + 1) / 2,
            VarKind::Full => self.rows * self.cols,
            VarKind::Scalar => 1,
        }
    }

    /// Nonzero entries `(row, col, value)` of the basis matrix of a coordinate.
    ///
    /// Symmetric variables use svec coordinates (lower triangle, column
    /// major, off-diagonals scaled by √2); full variables are column major.
    pub fn basis_entries(&self, coord: usize) -> Vec<(usize, usize, f64)> {
        match self.kind {
            VarKind::Scalar => vec![(0, 0, 1.0)],
            VarKind::Full => vec![(coord % self.rows, coord / self.rows, 1.0)],
            VarKind::Symmetric => {
                let (i, j) = svec_position(self.rows, coord);
                if i == j {
                    vec![(i, i, 1.0)]
                } else {
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    vec![(i, j, h), (j, i, h)]
                }
            }
        }
    }

    /// Rebuilds a value from its coordinates.
    pub fn from_coords(&self, coords: &[f64]) -> Matrix {
        match self.kind {
            VarKind::Scalar => Matrix::from_element(1, 1, coords[0]),
            VarKind::Full => Matrix::from_column_slice(self.rows, self.cols, coords),
            VarKind::Symmetric => smat(self.rows, coords),
        }
    }

    /// Coordinates of a value (inverse of [`VarRef::from_coords`]).
    pub fn to_coords(&self, value: &Matrix) -> Vec<f64> {
        match self.kind {
            VarKind::Scalar => vec![value[(0, 0)]],
            VarKind::Full => value.as_slice().to_vec(),
            VarKind::Symmetric => svec(value),
        }
    }
}

/// Offset of entry `(i, j)`, `i ≥ j`, in the svec of an `n × n` matrix.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * j.saturating_sub(1) / 2 + (i - j)
}

/// Inverse of [`svec_index`].
pub fn svec_position(n: usize, mut idx: usize) -> (usize, usize) {
    for j in 0..n {
        let len = n - j;
        if idx < len {
            return (j + idx, j);
        }
        idx -= len;
    }
    panic!("svec index out of range");
}

/// Symmetric vectorization with √2-scaled off-diagonal entries.
pub fn svec(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let s2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            if i == j {
                out.push(m[(i, i)]);
            } else {
                out.push(0.5 * (m[(i, j)] + m[(j, i)]) * s2);
            }
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(n: usize, v: &[f64]) -> Matrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Matrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            if i == j {
                m[(i, i)] = v[k];
            } else {
                m[(i, j)] = v[k] * h;
                m[(j, i)] = v[k] * h;
            }
            k += 1;
        }
    }
    m
}

/// Values assigned to decision variables, keyed by variable id.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    values: HashMap<usize, Matrix>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, var: VarRef, value: Matrix) -> Result<()> {
        if value.shape() != (var.rows, var.cols) {
            return Err(Error::dim(format!(
                "value for variable {} is {}x{}, expected {}x{}",
                var.id,
                value.nrows(),
                value.ncols(),
                var.rows,
                var.cols
            )));
        }
        self.values.insert(var.id, value);
        Ok(())
    }

    pub fn with(mut self, var: VarRef, value: Matrix) -> Result<Self> {
        self.set(var, value)?;
        Ok(self)
    }

    pub fn get(&self, var: VarRef) -> Option<&Matrix> {
        self.values.get(&var.id)
    }

    pub fn scalar(&self, var: VarRef) -> Option<f64> {
        self.get(var).map(|m| m[(0, 0)])
    }
}

/// `left · (I_k ⊗ op(V)) · right`.
#[derive(Debug, Clone)]
struct Term {
    var: VarRef,
    left: Matrix,
    right: Matrix,
    transpose: bool,
    kron: usize,
}

impl Term {
    fn inner_shape(&self) -> (usize, usize) {
        let (r, c) = if self.transpose {
            (self.var.cols, self.var.rows)
        } else {
            (self.var.rows, self.var.cols)
        };
        (r * self.kron, c * self.kron)
    }
}

/// `C + Σ Lᵢ (I ⊗ op(Vᵢ)) Rᵢ`: a matrix expression affine in the variables.
#[derive(Debug, Clone)]
pub struct AffineExpr {
    constant: Matrix,
    terms: Vec<Term>,
}

impl AffineExpr {
    pub fn constant(m: Matrix) -> Self {
        AffineExpr {
            constant: m,
            terms: Vec::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(Matrix::zeros(rows, cols))
    }

    pub fn var(v: VarRef) -> Self {
        AffineExpr {
            constant: Matrix::zeros(v.rows, v.cols),
            terms: vec![Term {
                var: v,
                left: Matrix::identity(v.rows, v.rows),
                right: Matrix::identity(v.cols, v.cols),
                transpose: false,
                kron: 1,
            }],
        }
    }

    /// `I_k ⊗ V`.
    pub fn kron_identity(k: usize, v: VarRef) -> Self {
        AffineExpr {
            constant: Matrix::zeros(k * v.rows, k * v.cols),
            terms: vec![Term {
                var: v,
                left: Matrix::identity(k * v.rows, k * v.rows),
                right: Matrix::identity(k * v.cols, k * v.cols),
                transpose: false,
                kron: k,
            }],
        }
    }

    /// `γ · M` for a scalar variable γ.
    pub fn scaled_by(v: VarRef, m: Matrix) -> Result<Self> {
        if v.kind != VarKind::Scalar {
            return Err(Error::Usage("scaled_by needs a scalar variable".into()));
        }
        let (r, c) = m.shape();
        // left · (γ I_c) · I_c = γ · m
        Ok(AffineExpr {
            constant: Matrix::zeros(r, c),
            terms: vec![Term {
                var: v,
                left: m,
                right: Matrix::identity(c, c),
                transpose: false,
                kron: c,
            }],
        })
    }

    pub fn rows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn cols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_part(&self) -> &Matrix {
        &self.constant
    }

    pub fn variables(&self) -> Vec<VarRef> {
        let mut out: Vec<VarRef> = Vec::new();
        for t in &self.terms {
            if !out.contains(&t.var) {
                out.push(t.var);
            }
        }
        out
    }

    fn check_same_shape(&self, other: &AffineExpr, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }

    pub fn add(mut self, other: &AffineExpr) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        self.constant += &other.constant;
        self.terms.extend(other.terms.iter().cloned());
        Ok(self)
    }

    pub fn sub(self, other: &AffineExpr) -> Result<Self> {
        self.add(&other.clone().scale(-1.0))
    }

    pub fn add_constant(mut self, m: &Matrix) -> Result<Self> {
        if m.shape() != self.shape() {
            return Err(Error::dim("add_constant: shape mismatch"));
        }
        self.constant += m;
        Ok(self)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.left *= s;
        }
        self
    }

    /// `M · self`.
    pub fn lmul(mut self, m: &Matrix) -> Result<Self> {
        if m.ncols() != self.rows() {
            return Err(Error::dim(format!(
                "lmul: {}x{} times {}x{}",
                m.nrows(),
                m.ncols(),
                self.rows(),
                self.cols()
            )));
        }
        self.constant = m * &self.constant;
        for t in &mut self.terms {
            t.left = m * &t.left;
        }
        Ok(self)
    }

    /// `self · M`.
    pub fn rmul(mut self, m: &Matrix) -> Result<Self> {
        if m.nrows() != self.cols() {
            return Err(Error::dim(format!(
                "rmul: {}x{} times {}x{}",
                self.rows(),
                self.cols(),
                m.nrows(),
                m.ncols()
            )));
        }
        self.constant = &self.constant * m;
        for t in &mut self.terms {
            t.right = &t.right * m;
        }
        Ok(self)
    }

    /// Product of two expressions; at least one factor must be constant.
    pub fn mul(&self, other: &AffineExpr) -> Result<Self> {
        match (self.is_constant(), other.is_constant()) {
            (_, true) => self.clone().rmul(&other.constant),
            (true, false) => other.clone().lmul(&self.constant),
            (false, false) => Err(Error::NonAffine(format!(
                "product of two variable expressions ({}x{} · {}x{})",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            ))),
        }
    }

    pub fn transpose(&self) -> Self {
        AffineExpr {
            constant: self.constant.transpose(),
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    var: t.var,
                    left: t.right.transpose(),
                    right: t.left.transpose(),
                    transpose: !t.transpose,
                    kron: t.kron,
                })
                .collect(),
        }
    }

    /// `Sy(E) = E + Eᵀ`.
    pub fn sy(&self) -> Result<Self> {
        if self.rows() != self.cols() {
            return Err(Error::dim("Sy(·) of a non-square expression"));
        }
        self.clone().add(&self.transpose())
    }

    /// Embeds `self` at `(row, col)` of a `rows × cols` zero matrix.
    pub fn embed(&self, rows: usize, cols: usize, row: usize, col: usize) -> Result<Self> {
        if row + self.rows() > rows || col + self.cols() > cols {
            return Err(Error::dim("embed: block does not fit"));
        }
        let mut left = Matrix::zeros(rows, self.rows());
        left.view_mut((row, 0), (self.rows(), self.rows())).fill_with_identity();
        let mut right = Matrix::zeros(self.cols(), cols);
        right.view_mut((0, col), (self.cols(), self.cols())).fill_with_identity();
        self.clone().lmul(&left)?.rmul(&right)
    }

    /// Assembles a block matrix from `(block_row, block_col, expr)` entries.
    pub fn from_blocks(
        row_sizes: &[usize],
        col_sizes: &[usize],
        blocks: Vec<(usize, usize, AffineExpr)>,
    ) -> Result<Self> {
        let offsets = |sizes: &[usize]| {
            sizes
                .iter()
                .scan(0, |acc, s| {
                    let o = *acc;
                    *acc += s;
                    Some(o)
                })
                .collect::<Vec<_>>()
        };
        let (ro, co) = (offsets(row_sizes), offsets(col_sizes));
        let rows: usize = row_sizes.iter().sum();
        let cols: usize = col_sizes.iter().sum();
        let mut out = AffineExpr::zeros(rows, cols);
        for (bi, bj, e) in blocks {
            if e.shape() != (row_sizes[bi], col_sizes[bj]) {
                return Err(Error::dim(format!(
                    "block ({bi},{bj}) is {}x{}, expected {}x{}",
                    e.rows(),
                    e.cols(),
                    row_sizes[bi],
                    col_sizes[bj]
                )));
            }
            out = out.add(&e.embed(rows, cols, ro[bi], co[bj])?)?;
        }
        Ok(out)
    }

    pub fn evaluate(&self, values: &Assignment) -> Result<Matrix> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let v = values
                .get(t.var)
                .ok_or_else(|| Error::UnregisteredVariable(format!("#{}", t.var.id)))?;
            let v = if t.transpose { v.transpose() } else { v.clone() };
            let inner = if t.kron == 1 {
                v
            } else {
                kron(&Matrix::identity(t.kron, t.kron), &v)
            };
            out += &t.left * inner * &t.right;
        }
        Ok(out)
    }

    /// Coefficient matrix of one coordinate of `var`.
    pub fn coefficient(&self, var: VarRef, coord: usize) -> Matrix {
        let mut out = Matrix::zeros(self.rows(), self.cols());
        let entries = var.basis_entries(coord);
        for t in self.terms.iter().filter(|t| t.var == var) {
            let (ir, ic) = t.inner_shape();
            debug_assert_eq!((t.left.ncols(), t.right.nrows()), (ir, ic));
            let (vr, vc) = if t.transpose {
                (var.cols, var.rows)
            } else {
                (var.rows, var.cols)
            };
            for &(a, b, val) in &entries {
                let (a, b) = if t.transpose { (b, a) } else { (a, b) };
                for rep in 0..t.kron {
                    let col = t.left.column(rep * vr + a);
                    let row = t.right.row(rep * vc + b);
                    out.ger(val, &col, &row.transpose(), 1.0);
                }
            }
        }
        out
    }
}
