//! Dense real-matrix primitives.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, stored column-major. Because of
//! that, [`vec`] is a plain copy of the storage slice and [`unvec`] its
//! inverse; the column-stacking semantics do not depend on it, they are
//! pinned by tests.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default floor on the reciprocal condition number accepted by [`solve_linear`].
pub const DEFAULT_MIN_RCOND: f64 = 1e-12;

/// Stacks the columns of `m`, first column on top.
pub fn vec(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &Vector, rows: usize, cols: usize) -> Result<Matrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape a vector of length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(Matrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Kronecker product: block `(i, j)` of the result is `y[(i, j)] * z`.
pub fn kron(y: &Matrix, z: &Matrix) -> Matrix {
    y.kronecker(z)
}

/// Largest absolute entry, the norm used for every residual in this crate.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub(crate) fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

// Padé coefficients and the 1-norm bounds under which each degree is
// accurate to unit roundoff (Higham 2005).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068e0;
const THETA_13: f64 = 5.371_920_351_148_152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
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

/// `e^{m·scale}` by scaling and squaring with a diagonal Padé approximant
/// whose degree (3, 5, 7, 9 or 13) is picked from the 1-norm.
///
/// `scale == 0` returns the identity exactly.
pub fn expm(m: &Matrix, scale: f64) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "matrix exponential argument")?;
    if !scale.is_finite() {
        return Err(Error::NonFinite("matrix exponential scale"));
    }
    let n = m.nrows();
    if scale == 0.0 {
        return Ok(Matrix::identity(n, n));
    }
    let a = m * scale;
    let norm = one_norm(&a);

    let result = if norm <= THETA_3 {
        pade_low(&a, &PADE_3)
    } else if norm <= THETA_5 {
        pade_low(&a, &PADE_5)
    } else if norm <= THETA_7 {
        pade_low(&a, &PADE_7)
    } else if norm <= THETA_9 {
        pade_low(&a, &PADE_9)
    } else {
        let squarings = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = &a * 2f64.powi(-squarings);
        let mut r = pade_13(&scaled)?;
        for _ in 0..squarings {
            r = &r * &r;
        }
        Ok(r)
    }?;

    if is_finite(&result) {
        Ok(result)
    } else {
        Err(Error::Overflow)
    }
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for k in 0..b.len() / 2 {
        v += &power * b[2 * k];
        u += &power * b[2 * k + 1];
        power = &power * &a2;
    }
    let u = a * u;
    pade_quotient(u, v)
}

fn pade_13(a: &Matrix) -> Result<Matrix> {
    let b = &PADE_13;
    let n = a.nrows();
    let ident = Matrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    pade_quotient(u, v)
}

// Solves (V - U) R = (V + U).
fn pade_quotient(u: Matrix, v: Matrix) -> Result<Matrix> {
    let numer = &v + &u;
    let denom = v - u;
    if !is_finite(&numer) || !is_finite(&denom) {
        return Err(Error::Overflow);
    }
    denom
        .lu()
        .solve(&numer)
        .ok_or(Error::SingularSystem { rcond: 0.0 })
}

/// A solved linear system together with its reciprocal 2-norm condition number.
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub x: Vector,
    pub rcond: f64,
}

/// Solves `a·x = b`, refusing systems with `rcond < DEFAULT_MIN_RCOND`.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<LinearSolve> {
    solve_linear_with(a, b, DEFAULT_MIN_RCOND)
}

pub fn solve_linear_with(a: &Matrix, b: &Vector, min_rcond: f64) -> Result<LinearSolve> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "cannot solve a {}x{} system with a right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    ensure_finite(a, "system matrix")?;
    if !b.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let sv = a.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let rcond = if smax > 0.0 { smin / smax } else { 0.0 };
    if !(rcond >= min_rcond) {
        return Err(Error::SingularSystem { rcond });
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularSystem { rcond })?;
    Ok(LinearSolve { x, rcond })
}

/// Smallest singular value of `a` (over `min(rows, cols)` values).
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().min()
}
