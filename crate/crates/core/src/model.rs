//! The plant `x' = A0 x(t) + A1 x(t-h) + ∫_{-h}^0 A_D(θ) x(t+θ) dθ` with the
//! exponential kernel `A_D(θ) = Cd e^{Ad θ} Bd`, and the symmetric weight `Q`.

use std::fmt;

use nalgebra::dmatrix;

use crate::matcore::{expm, is_finite, max_abs, Matrix};
use crate::{Error, Result};

/// Linear time-delay system with one constant and one distributed delay.
///
/// Dimensions: `A0`, `A1` are `n×n`, `Ad` is `n_d×n_d`, `Bd` is `n_d×n`,
/// `Cd` is `n×n_d`; `n` and `n_d` are read off `A0` and `Ad`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDelaySystem {
    pub a0: Matrix,
    pub a1: Matrix,
    pub ad: Matrix,
    pub bd: Matrix,
    pub cd: Matrix,
    pub h: f64,
}

/// One broken invariant of a [`TimeDelaySystem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty(&'static str),
    NotSquare(&'static str),
    Shape {
        matrix: &'static str,
        axis: &'static str,
        expected_name: &'static str,
        expected: usize,
        actual: usize,
    },
    NonFinite(&'static str),
    NegativeDelay(f64),
    NonFiniteDelay,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty(m) => write!(f, "{m} must have at least one row and column"),
            Violation::NotSquare(m) => write!(f, "{m} must be square"),
            Violation::Shape {
                matrix,
                axis,
                expected_name,
                expected,
                actual,
            } => write!(
                f,
                "{matrix} {axis} ≠ {expected_name} (expected {expected}, got {actual})"
            ),
            Violation::NonFinite(m) => write!(f, "{m} has non-finite entries"),
            Violation::NegativeDelay(h) => write!(f, "h must be ≥ 0 (got {h})"),
            Violation::NonFiniteDelay => write!(f, "h must be finite"),
        }
    }
}

impl TimeDelaySystem {
    /// Builds and validates a system.
    pub fn new(a0: Matrix, a1: Matrix, ad: Matrix, bd: Matrix, cd: Matrix, h: f64) -> Result<Self> {
        let sys = Self {
            a0,
            a1,
            ad,
            bd,
            cd,
            h,
        };
        sys.check()?;
        Ok(sys)
    }

    /// System whose kernel is `A_D(θ) = sin(ωθ)·B0 + cos(ωθ)·B1`.
    ///
    /// When `n = 2` and `B0 = [[0,-1],[1,0]]·B1` the kernel is realized with
    /// `n_d = 2` as `Ad = ω[[0,-1],[1,0]]`, `Cd = I`, `Bd = B1`. Otherwise the
    /// general `n_d = 2n` realization `Ad = ω[[0,-I],[I,0]]`, `Cd = [I 0]`,
    /// `Bd = [B1; -B0]` is used.
    pub fn with_harmonic_kernel(
        a0: Matrix,
        a1: Matrix,
        b0: &Matrix,
        b1: &Matrix,
        frequency: f64,
        h: f64,
    ) -> Result<Self> {
        let n = a0.nrows();
        if b0.shape() != (n, n) || b1.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "harmonic kernel coefficients must be {n}x{n}, got {:?} and {:?}",
                b0.shape(),
                b1.shape()
            )));
        }
        let rotation = dmatrix![0.0, -1.0; 1.0, 0.0];
        let compact = n == 2 && max_abs(&(b0 - &rotation * b1)) <= 1e-14 * max_abs(b0).max(1.0);
        let (ad, bd, cd) = if compact {
            (rotation * frequency, b1.clone(), Matrix::identity(2, 2))
        } else {
            let mut ad = Matrix::zeros(2 * n, 2 * n);
            let mut bd = Matrix::zeros(2 * n, n);
            let mut cd = Matrix::zeros(n, 2 * n);
            for i in 0..n {
                ad[(i, n + i)] = -frequency;
                ad[(n + i, i)] = frequency;
                cd[(i, i)] = 1.0;
            }
            bd.view_mut((0, 0), (n, n)).copy_from(b1);
            bd.view_mut((n, 0), (n, n)).copy_from(&(-b0));
            (ad, bd, cd)
        };
        Self::new(a0, a1, ad, bd, cd, h)
    }

    pub fn n(&self) -> usize {
        self.a0.nrows()
    }

    pub fn n_d(&self) -> usize {
        self.ad.nrows()
    }

    /// Checks every structural invariant, collecting all violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let n = self.a0.nrows();
        let nd = self.ad.nrows();

        let square = |m: &Matrix, name: &'static str, out: &mut Vec<Violation>| {
            if m.nrows() == 0 || m.ncols() == 0 {
                out.push(Violation::Empty(name));
            } else if !m.is_square() {
                out.push(Violation::NotSquare(name));
            }
        };
        square(&self.a0, "A0", &mut out);
        square(&self.ad, "Ad", &mut out);

        let mut shape = |matrix, axis, expected_name, expected, actual| {
            if expected != actual {
                out.push(Violation::Shape {
                    matrix,
                    axis,
                    expected_name,
                    expected,
                    actual,
                });
            }
        };
        shape("A1", "rows", "n", n, self.a1.nrows());
        shape("A1", "cols", "n", n, self.a1.ncols());
        shape("Bd", "rows", "n_d", nd, self.bd.nrows());
        shape("Bd", "cols", "n", n, self.bd.ncols());
        shape("Cd", "rows", "n", n, self.cd.nrows());
        shape("Cd", "cols", "n_d", nd, self.cd.ncols());

        for (m, name) in [
            (&self.a0, "A0"),
            (&self.a1, "A1"),
            (&self.ad, "Ad"),
            (&self.bd, "Bd"),
            (&self.cd, "Cd"),
        ] {
            if !is_finite(m) {
                out.push(Violation::NonFinite(name));
            }
        }
        if !self.h.is_finite() {
            out.push(Violation::NonFiniteDelay);
        } else if self.h < 0.0 {
            out.push(Violation::NegativeDelay(self.h));
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// [`validate`](Self::validate) folded into the crate error type.
    pub fn check(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidSystem)
    }

    /// `A_D(θ) = Cd e^{Ad θ} Bd` for `θ ∈ [-h, 0]`.
    pub fn kernel_at(&self, theta: f64) -> Result<Matrix> {
        if !(theta >= -self.h && theta <= 0.0) {
            return Err(Error::Domain {
                what: "θ",
                value: theta,
                lo: -self.h,
                hi: 0.0,
            });
        }
        self.kernel_unchecked(theta)
    }

    pub(crate) fn kernel_unchecked(&self, theta: f64) -> Result<Matrix> {
        Ok(&self.cd * expm(&self.ad, theta)? * &self.bd)
    }
}

/// Symmetric weight `Q = Qᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight(Matrix);

impl Weight {
    /// Relative asymmetry `max|Q - Qᵀ| / max|Q|` tolerated (and removed by
    /// symmetrizing) on ingestion.
    pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

    pub fn new(q: Matrix) -> Result<Self> {
        if !q.is_square() || q.is_empty() {
            return Err(Error::Dimension(format!(
                "weight must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if !is_finite(&q) {
            return Err(Error::NonFinite("Q"));
        }
        let scale = max_abs(&q);
        let asymmetry = if scale > 0.0 {
            max_abs(&(&q - q.transpose())) / scale
        } else {
            0.0
        };
        if asymmetry > Self::SYMMETRY_TOLERANCE {
            return Err(Error::AsymmetricWeight { asymmetry });
        }
        let sym = (&q + q.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}
