//! Dense real matrix utilities and the matrix functions used everywhere else:
//! the exponential, the SPD square root, Kronecker products, Gram integrals
//! of exponential bases and a Lyapunov-based stabilizing gain.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tol;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// A symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(Matrix);

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim(format!(
                "SPD matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        ensure_finite(&m, "SPD matrix")?;
        let scale = norm_inf(&m).max(f64::MIN_POSITIVE);
        let defect = norm_inf(&(&m - m.transpose()));
        if defect > tol::SYMMETRY_REL * scale {
            return Err(Error::Domain(format!(
                "matrix is not symmetric (defect {defect:.3e})"
            )));
        }
        let m = symmetrize(&m);
        let eig = SymmetricEigen::new(m.clone());
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if !(lmin > tol::PD_REL_FLOOR * lmax.abs()) || lmax <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {lmin:.3e}, largest {lmax:.3e}"
            )));
        }
        Ok(SpdMatrix(m))
    }

    /// Symmetrizes `m` before validating it. Used for matrices that are SPD
    /// in exact arithmetic but carry rounding noise.
    pub fn from_symmetrized(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim("SPD matrix must be square"));
        }
        SpdMatrix::new(symmetrize(&m))
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inverse(&self) -> Result<SpdMatrix> {
        let chol = self
            .0
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factorization failed".into()))?;
        SpdMatrix::from_symmetrized(chol.inverse())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0.clone()).eigenvalues.min()
    }
}

impl std::ops::Deref for SpdMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub(crate) fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite entries")))
    }
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute column sum.
pub fn norm_1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// `Sy(M) = M + Mᵀ`.
pub fn sy(m: &Matrix) -> Matrix {
    m + m.transpose()
}

pub fn lambda_max_sym(m: &Matrix) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.max()
}

pub fn lambda_min_sym(m: &Matrix) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Eigenvalues of a general real square matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::dim("eigenvalues of a non-square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    ensure_finite(m, "eigenvalue input")?;
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Solver("Schur decomposition did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect())
}

/// Largest real part among the eigenvalues of `m`.
pub fn spectral_abscissa_of(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn hcat(blocks: &[&Matrix]) -> Result<Matrix> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(Error::dim("hcat: row counts differ"));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    Ok(out)
}

pub fn vcat(blocks: &[&Matrix]) -> Result<Matrix> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    if blocks.iter().any(|b| b.ncols() != cols) {
        return Err(Error::dim("vcat: column counts differ"));
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    Ok(out)
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the unscaled [13/13] approximant meets unit
// roundoff in backward error.
const THETA13: f64 = 5.371920351148152;

/// `e^{M t}` by scaling and squaring with the diagonal [13/13] Padé approximant.
pub fn expm(m: &Matrix, t: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "expm needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain("expm time argument is not finite".into()));
    }
    ensure_finite(m, "expm input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let a = m * t;
    let norm = norm_1(&a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);

    let ident = Matrix::identity(n, n);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];
    let lu = (&v - &u).lu();
    let mut r = lu
        .solve(&(&v + &u))
        .ok_or_else(|| Error::Domain("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Unique SPD square root via a symmetric eigendecomposition.
pub fn sqrtm_spd(m: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > tol::PD_REL_FLOOR * lmax) {
        return Err(Error::NotPositiveDefinite(format!(
            "square root needs λ_min > 0, got {lmin:.3e}"
        )));
    }
    let sqrt_vals = eig.eigenvalues.map(f64::sqrt);
    let v = &eig.eigenvectors;
    let s = v * Matrix::from_diagonal(&sqrt_vals) * v.transpose();
    SpdMatrix::from_symmetrized(s)
}

/// `∫_{-r}^0 e^{Πτ} w₀ w₀ᵀ e^{Πᵀτ} dτ` via Van Loan's block exponential.
///
/// With `τ = -s` the integral is `∫_0^r e^{-Πs} W e^{-Πᵀs} ds`, which is the
/// `F₂₂ᵀ F₁₂` product of `exp([[Π, W], [0, -Πᵀ]] r)`.
pub fn vanloan_gram(pi: &Matrix, w0: &Vector, r: f64) -> Result<SpdMatrix> {
    let d = pi.nrows();
    if !pi.is_square() || w0.len() != d {
        return Err(Error::dim(format!(
            "Gram integral needs square Π and matching w₀ (Π is {}x{}, w₀ has {})",
            pi.nrows(),
            pi.ncols(),
            w0.len()
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("delay must be positive, got {r}")));
    }
    let w = w0 * w0.transpose();
    let mut h = Matrix::zeros(2 * d, 2 * d);
    h.view_mut((0, 0), (d, d)).copy_from(pi);
    h.view_mut((0, d), (d, d)).copy_from(&w);
    h.view_mut((d, d), (d, d)).copy_from(&(-pi.transpose()));
    let e = expm(&h, r)?;
    let f12 = e.view((0, d), (d, d)).into_owned();
    let f22 = e.view((d, d), (d, d)).into_owned();
    let gram = symmetrize(&(f22.transpose() * f12));

    let eig = SymmetricEigen::new(gram.clone());
    let lmin = eig.eigenvalues.min();
    let trace = gram.trace();
    if !(lmin > tol::GRAM_DEGENERATE_REL * trace) {
        let lmax = eig.eigenvalues.max();
        return Err(Error::DegenerateBasis(format!(
            "Gram matrix is not positive definite (λ_min = {lmin:.3e}, condition number ≈ {:.3e}); \
             basis functions are linearly dependent on [-r, 0]",
            lmax / lmin.abs().max(f64::MIN_POSITIVE)
        )));
    }
    SpdMatrix::new(gram)
}

/// Solves `A W + W Aᵀ = Q` through the Kronecker-vectorized system.
pub fn solve_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    if !a.is_square() || q.shape() != (n, n) {
        return Err(Error::dim("Lyapunov equation needs square A and Q of equal size"));
    }
    let ident = Matrix::identity(n, n);
    let op = kron(&ident, a) + kron(a, &ident);
    let rhs = Vector::from_column_slice(q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("Lyapunov operator is singular".into()))?;
    Ok(Matrix::from_column_slice(n, n, sol.as_slice()))
}

/// A gain `K` with `max Re eig(A + BK) ≤ -margin`, by the Bass shift method.
///
/// With `β = ‖A‖_∞ + margin`, `-(A + βI)` is Hurwitz, the Lyapunov equation
/// `(A + βI)W + W(A + βI)ᵀ = 2BBᵀ` has a unique solution, and `K = -BᵀW⁻¹`
/// places every closed-loop eigenvalue on `Re s = -β`.
pub fn stabilizing_gain(a: &Matrix, b: &Matrix, margin: f64) -> Result<Matrix> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::dim(format!(
            "stabilizing gain needs A n×n and B n×p (A is {}x{}, B is {}x{})",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    let beta = norm_inf(a) + margin;
    let shifted = a + Matrix::identity(n, n) * beta;
    let w = symmetrize(&solve_lyapunov(&shifted, &(b * b.transpose() * 2.0))?);
    let eig = SymmetricEigen::new(w.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > 1e-12 * lmax.max(f64::MIN_POSITIVE)) {
        return Err(Error::Stabilizability(format!(
            "controllability Gramian is singular (λ_min = {lmin:.3e})"
        )));
    }
    let w_inv = w
        .cholesky()
        .ok_or_else(|| Error::Stabilizability("Gramian factorization failed".into()))?
        .inverse();
    let k = -(b.transpose() * w_inv);
    check_stabilizing(a, b, &k, margin)?;
    Ok(k)
}

/// Popov–Belevitch–Hautus test: `rank [A − λI, B] = n` for every eigenvalue
/// `λ` of `A` with `Re λ ≥ 0`.
pub fn is_stabilizable(a: &Matrix, b: &Matrix) -> Result<bool> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(Error::dim("stabilizability test needs A n×n and B n×p"));
    }
    let scale = norm_inf(a).max(norm_inf(b)).max(1.0);
    for (re, im) in eigenvalues(a)? {
        if re < -1e-12 * scale {
            continue;
        }
        let pbh = nalgebra::DMatrix::<nalgebra::Complex<f64>>::from_fn(n, n + b.ncols(), |i, j| {
            if j < n {
                let diag = if i == j { nalgebra::Complex::new(re, im) } else { nalgebra::Complex::new(0.0, 0.0) };
                nalgebra::Complex::new(a[(i, j)], 0.0) - diag
            } else {
                nalgebra::Complex::new(b[(i, j - n)], 0.0)
            }
        });
        let sv = pbh.singular_values();
        if sv.min() <= 1e-10 * scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Independent eigenvalue check that `A + BK` decays faster than `margin`.
pub fn check_stabilizing(a: &Matrix, b: &Matrix, k: &Matrix, margin: f64) -> Result<f64> {
    if k.shape() != (b.ncols(), a.nrows()) {
        return Err(Error::dim(format!(
            "gain must be {}x{}, got {}x{}",
            b.ncols(),
            a.nrows(),
            k.nrows(),
            k.ncols()
        )));
    }
    let alpha = spectral_abscissa_of(&(a + b * k))?;
    // Bass places eigenvalues exactly on Re s = -β; allow rounding noise.
    if alpha > -margin + 1e-9 * (1.0 + margin) {
        return Err(Error::Stabilizability(format!(
            "closed loop spectral abscissa {alpha:.6} exceeds -{margin}"
        )));
    }
    Ok(alpha)
}

/// Chebyshev points of the second kind mapped onto `[lo, hi]`, ordered from
/// `hi` down to `lo`.
pub fn chebyshev_points(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|k| {
                let x = (std::f64::consts::PI * k as f64 / (count - 1) as f64).cos();
                lo + 0.5 * (x + 1.0) * (hi - lo)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&Matrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(e, Matrix::identity(2, 2));
    }

    #[test]
    fn expm_of_diagonal() {
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]));
        let e = expm(&m, 1.0).unwrap();
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14 * 3.0);
        assert!((e[(1, 1)] - 2f64.exp()).abs() < 1e-13 * 8.0);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn expm_delayed_input_kernel_closed_form() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, 0.1]);
        let b = Matrix::from_column_slice(2, 1, &[0.0, 1.0]);
        for tau in [-1.0, -0.5, 0.0] {
            let k = expm(&a, -tau).unwrap() * &b;
            let top = 10.0 / 11.0 * ((-0.1 * tau).exp() - (tau).exp());
            let bot = (-0.1 * tau).exp();
            assert!((k[(0, 0)] - top).abs() < 1e-14, "tau={tau}");
            assert!((k[(1, 0)] - bot).abs() < 1e-14, "tau={tau}");
        }
    }

    #[test]
    fn expm_large_norm_matches_diagonalization() {
        // Rotation generator: e^{θJ} is a rotation by θ.
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let e = expm(&j, 40.0).unwrap();
        let (c, s) = (40f64.cos(), 40f64.sin());
        let expected = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((e - expected).abs().max() < 1e-12);
    }

    #[test]
    fn expm_rejects_non_square_and_nan() {
        assert!(matches!(expm(&Matrix::zeros(2, 3), 1.0), Err(Error::Dimension(_))));
        let mut m = Matrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(expm(&m, 1.0), Err(Error::Domain(_))));
        assert!(matches!(expm(&Matrix::zeros(2, 2), f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn sqrtm_identity_and_diagonal() {
        let i3 = SpdMatrix::new(Matrix::identity(3, 3)).unwrap();
        assert!((sqrtm_spd(&i3).unwrap().as_matrix() - Matrix::identity(3, 3)).abs().max() < 1e-15);
        let d = SpdMatrix::new(Matrix::from_diagonal(&Vector::from_vec(vec![4.0, 9.0]))).unwrap();
        let s = sqrtm_spd(&d).unwrap();
        assert!((s[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((s[(1, 1)] - 3.0).abs() < 1e-14);
        assert!(s[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn sqrtm_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let l = random_matrix(&mut rng, 5, 5, 1.0) + Matrix::identity(5, 5) * 0.5;
            let m = SpdMatrix::from_symmetrized(&l * l.transpose()).unwrap();
            let s = sqrtm_spd(&m).unwrap();
            let err = norm_inf(&(s.as_matrix() * s.as_matrix() - m.as_matrix()));
            assert!(err <= 1e-10 * norm_inf(m.as_matrix()), "err {err}");
        }
    }

    #[test]
    fn spd_rejects_indefinite_and_asymmetric() {
        let indefinite = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(SpdMatrix::new(indefinite), Err(Error::NotPositiveDefinite(_))));
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(SpdMatrix::new(asym), Err(Error::Domain(_))));
    }

    #[test]
    fn kron_basic_cases() {
        let two = Matrix::from_element(1, 1, 2.0);
        assert_eq!(kron(&two, &Matrix::identity(2, 2)), Matrix::identity(2, 2) * 2.0);
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kron(&Matrix::identity(2, 2), &m), block_diag(&[&m, &m]));
    }

    #[test]
    fn kron_mixed_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 2, 2, 1.0);
            let b = random_matrix(&mut rng, 2, 2, 1.0);
            let c = random_matrix(&mut rng, 2, 2, 1.0);
            let d = random_matrix(&mut rng, 2, 2, 1.0);
            let lhs = kron(&a, &b) * kron(&c, &d);
            let rhs = kron(&(&a * &c), &(&b * &d));
            assert!((lhs - rhs).abs().max() < 1e-14);
        }
    }

    #[test]
    fn gram_closed_form_two_exponentials() {
        // f(τ) = (1, e^τ) on [-1, 0].
        let pi = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let w0 = Vector::from_vec(vec![1.0, 1.0]);
        let g = vanloan_gram(&pi, &w0, 1.0).unwrap();
        let e1 = (-1f64).exp();
        let expected =
            Matrix::from_row_slice(2, 2, &[1.0, 1.0 - e1, 1.0 - e1, (1.0 - e1 * e1) / 2.0]);
        assert!((g.as_matrix() - expected).abs().max() < 1e-14);
    }

    #[test]
    fn gram_constant_integrand() {
        let g = vanloan_gram(&Matrix::zeros(1, 1), &Vector::from_vec(vec![1.0]), 2.0).unwrap();
        assert!((g[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gram_detects_dependent_basis() {
        // Two copies of the constant function.
        let err = vanloan_gram(&Matrix::zeros(2, 2), &Vector::from_vec(vec![1.0, 1.0]), 1.0);
        assert!(matches!(err, Err(Error::DegenerateBasis(_))));
        assert!(matches!(
            vanloan_gram(&Matrix::zeros(1, 1), &Vector::from_vec(vec![1.0]), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bass_gain_scalar_cases() {
        let b = Matrix::from_element(1, 1, 1.0);
        for a0 in [-1.0, 0.1] {
            let a = Matrix::from_element(1, 1, a0);
            let k = stabilizing_gain(&a, &b, 0.05).unwrap();
            assert!(a0 + k[(0, 0)] < -0.05 + 1e-9);
        }
    }

    #[test]
    fn bass_gain_rejects_uncontrollable_unstable_mode() {
        let a = Matrix::from_element(1, 1, 0.1);
        let b = Matrix::zeros(1, 1);
        assert!(matches!(stabilizing_gain(&a, &b, 0.05), Err(Error::Stabilizability(_))));
    }

    #[test]
    fn lyapunov_solution_satisfies_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 4, 4, 1.0) - Matrix::identity(4, 4) * 5.0;
        let q = random_matrix(&mut rng, 4, 4, 1.0);
        let w = solve_lyapunov(&a, &q).unwrap();
        assert!((&a * &w + &w * a.transpose() - q).abs().max() < 1e-12);
    }

    #[test]
    fn chebyshev_points_span_interval() {
        let pts = chebyshev_points(5, -1.0, 0.0);
        assert_eq!(pts.len(), 5);
        assert!((pts[0] - 0.0).abs() < 1e-15);
        assert!((pts[4] + 1.0).abs() < 1e-15);
        assert!((pts[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn stabilizability_ignores_stable_uncontrollable_modes() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.5]);
        assert!(is_stabilizable(&a, &Matrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap());
        assert!(!is_stabilizable(&a, &Matrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap());
        let rot = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(!is_stabilizable(&rot, &Matrix::zeros(2, 1)).unwrap());
        assert!(is_stabilizable(&(-Matrix::identity(2, 2)), &Matrix::zeros(2, 1)).unwrap());
    }

}
