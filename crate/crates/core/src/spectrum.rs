//! Existence and uniqueness of the delay Lyapunov matrix.
//!
//! A unique solution exists for every `Q` iff no characteristic root `λ`
//! has its mirror `-λ` also a root. The same property is equivalent to the
//! boundary matrix `G = F1 + F2 e^{E h}` being nonsingular, which is what
//! [`check`] measures. [`characteristic_value`] is there for spot checks.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::matcore::{expm, max_abs, smallest_singular_value, Matrix};
use crate::model::TimeDelaySystem;
use crate::odec::OdecOperator;
use crate::quadrature::{integrate, QuadratureOptions};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Borderline,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Borderline => "borderline",
            Verdict::Violated => "violated",
        })
    }
}

/// Bounds on `σ_min(G) / max|G|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumThresholds {
    /// Below this the condition is violated and no solve is attempted.
    pub violated: f64,
    /// Below this (and above `violated`) the solve proceeds with a warning.
    pub borderline: f64,
}

impl Default for SpectrumThresholds {
    fn default() -> Self {
        Self {
            violated: 1e-12,
            borderline: 1e-8,
        }
    }
}

impl SpectrumThresholds {
    pub fn classify(&self, sigma_min_relative: f64) -> Verdict {
        if !(sigma_min_relative >= self.violated) {
            Verdict::Violated
        } else if sigma_min_relative < self.borderline {
            Verdict::Borderline
        } else {
            Verdict::Satisfied
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub sigma_min: f64,
    /// `max|G|`
    pub g_norm: f64,
    pub sigma_min_relative: f64,
    pub verdict: Verdict,
    pub thresholds: SpectrumThresholds,
    pub n_s: usize,
}

pub fn check(op: &OdecOperator, thresholds: &SpectrumThresholds) -> SpectrumReport {
    let g = op.g();
    let sigma_min = smallest_singular_value(g);
    let g_norm = max_abs(g);
    let sigma_min_relative = if g_norm > 0.0 {
        sigma_min / g_norm
    } else {
        0.0
    };
    SpectrumReport {
        sigma_min,
        g_norm,
        sigma_min_relative,
        verdict: thresholds.classify(sigma_min_relative),
        thresholds: *thresholds,
        n_s: op.n_s(),
    }
}

fn complexify(m: &Matrix) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Below this smallest singular value of `λI + Ad` the closed-form kernel
/// transform is abandoned for quadrature.
const RESOLVENT_FLOOR: f64 = 1e-10;

/// `∫_{-h}^{0} e^{λθ} Cd e^{Adθ} Bd dθ = Cd (λI + Ad)⁻¹ (I − e^{-(λI + Ad)h}) Bd`.
///
/// Returns `None` when `λI + Ad` is numerically singular.
pub fn kernel_transform_closed_form(
    sys: &TimeDelaySystem,
    lambda: Complex64,
) -> Result<Option<DMatrix<Complex64>>> {
    let nd = sys.n_d();
    let m = complexify(&sys.ad) + DMatrix::<Complex64>::identity(nd, nd) * lambda;
    if m.singular_values().min() < RESOLVENT_FLOOR {
        return Ok(None);
    }
    let decay = complexify(&expm(&sys.ad, -sys.h)?) * (-lambda * sys.h).exp();
    let inner = DMatrix::<Complex64>::identity(nd, nd) - decay;
    let Some(solved) = m.lu().solve(&(inner * complexify(&sys.bd))) else {
        return Ok(None);
    };
    Ok(Some(complexify(&sys.cd) * solved))
}

/// The same integral by composite Gauss–Legendre.
pub fn kernel_transform_quadrature(
    sys: &TimeDelaySystem,
    lambda: Complex64,
    opts: &QuadratureOptions,
) -> Result<DMatrix<Complex64>> {
    let n = sys.n();
    let term = |theta: f64, part: fn(Complex64) -> f64| -> Result<Matrix> {
        let w = part((lambda * theta).exp());
        Ok(sys.kernel_unchecked(theta)? * w)
    };
    let re = integrate(-sys.h, 0.0, n, n, opts, |t| term(t, |z| z.re))?;
    let im = integrate(-sys.h, 0.0, n, n, opts, |t| term(t, |z| z.im))?;
    Ok(re.zip_map(&im, Complex64::new))
}

/// `det(λI − A0 − e^{-λh}A1 − ∫_{-h}^{0} e^{λθ} A_D(θ) dθ)`.
pub fn characteristic_value(sys: &TimeDelaySystem, lambda: Complex64) -> Result<Complex64> {
    sys.check()?;
    let n = sys.n();
    let transform = match kernel_transform_closed_form(sys, lambda)? {
        Some(t) => t,
        None => kernel_transform_quadrature(sys, lambda, &QuadratureOptions::default())?,
    };
    let m = DMatrix::<Complex64>::identity(n, n) * lambda
        - complexify(&sys.a0)
        - complexify(&sys.a1) * (-lambda * sys.h).exp()
        - transform;
    Ok(m.determinant())
}
