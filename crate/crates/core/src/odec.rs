//! The delay-free auxiliary system and the delay Lyapunov matrix built from it.
//!
//! Six blocks evolve under a linear ODE, `τ ∈ ℝ`:
//!
//! ```text
//! Ω1' =  Ω1 A0 + Ω2 A1 + Ω3 Bd + Ω4 Bd            (n × n)
//! Ω2' = -A1ᵀΩ1 - A0ᵀΩ2 - BdᵀΩ5 - BdᵀΩ6            (n × n)
//! Ω3' = -Ω3 Ad + Ω1 Cd                             (n × n_d)
//! Ω4' = -Ω4 Ad - Ω2 Cd e^{-Ad h}                   (n × n_d)
//! Ω5' =  AdᵀΩ5 + (Cd e^{-Ad h})ᵀΩ1                 (n_d × n)
//! Ω6' =  AdᵀΩ6 - CdᵀΩ2                             (n_d × n)
//! ```
//!
//! coupled at the two ends of `[0, h]` by
//!
//! ```text
//! -Q = Ω1(0)A0 + Ω2(0)A1 + Ω4(0)Bd + A1ᵀΩ1(h) + A0ᵀΩ2(h) + BdᵀΩ5(h)
//!  0 = Ω1(0) - Ω2(h),   0 = Ω3(0) = Ω4(h) = Ω5(0) = Ω6(h).
//! ```
//!
//! Under `vec`, the dynamics become `ω' = E ω` and the coupling
//! `F1 ω(0) + F2 ω(h) = [-vec Q; 0]`, so `ω(0)` solves
//! `(F1 + F2 e^{E h}) ω(0) = [-vec Q; 0]`.

use std::ops::Range;

use crate::matcore::{expm, kron, max_abs, unvec, vec, Matrix, Vector};
use crate::model::{TimeDelaySystem, Weight};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::spectrum::{self, SpectrumReport, SpectrumThresholds, Verdict};
use crate::{Error, Result};

/// `n_s = 2n² + 4·n·n_d`.
pub fn state_count(n: usize, n_d: usize) -> usize {
    2 * n * n + 4 * n * n_d
}

/// Offsets of the six vec'd blocks inside the stacked state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub n: usize,
    pub n_d: usize,
}

impl BlockLayout {
    /// `(rows, cols)` of block `k ∈ 1..=6`.
    pub fn shape(&self, k: usize) -> (usize, usize) {
        match k {
            1 | 2 => (self.n, self.n),
            3 | 4 => (self.n, self.n_d),
            5 | 6 => (self.n_d, self.n),
            _ => panic!("block index {k} out of 1..=6"),
        }
    }

    pub fn range(&self, k: usize) -> Range<usize> {
        let nn = self.n * self.n;
        let nx = self.n * self.n_d;
        let start = match k {
            1 => 0,
            2 => nn,
            3..=6 => 2 * nn + (k - 3) * nx,
            _ => panic!("block index {k} out of 1..=6"),
        };
        let (r, c) = self.shape(k);
        start..start + r * c
    }

    pub fn n_s(&self) -> usize {
        state_count(self.n, self.n_d)
    }
}

/// A stacked `n_s`-vector viewed as the six blocks `Ω1 … Ω6`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaBlocks {
    stacked: Vector,
    layout: BlockLayout,
}

impl OmegaBlocks {
    pub fn new(stacked: Vector, layout: BlockLayout) -> Result<Self> {
        if stacked.len() != layout.n_s() {
            return Err(Error::Dimension(format!(
                "stacked state has length {}, expected n_s = {}",
                stacked.len(),
                layout.n_s()
            )));
        }
        Ok(Self { stacked, layout })
    }

    pub fn from_blocks(blocks: [&Matrix; 6], layout: BlockLayout) -> Result<Self> {
        let mut stacked = Vector::zeros(layout.n_s());
        for (k, b) in (1..=6).zip(blocks) {
            if b.shape() != layout.shape(k) {
                return Err(Error::Dimension(format!(
                    "Ω{k} is {:?}, expected {:?}",
                    b.shape(),
                    layout.shape(k)
                )));
            }
            stacked
                .rows_mut(layout.range(k).start, b.len())
                .copy_from(&vec(b));
        }
        Ok(Self { stacked, layout })
    }

    pub fn stacked(&self) -> &Vector {
        &self.stacked
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    /// `vec(Ω_k)` as a slice of the stacked state.
    pub fn block_vec(&self, k: usize) -> &[f64] {
        &self.stacked.as_slice()[self.layout.range(k)]
    }

    /// Block `Ω_k`, `k ∈ 1..=6`.
    pub fn block(&self, k: usize) -> Matrix {
        let (r, c) = self.layout.shape(k);
        Matrix::from_column_slice(r, c, self.block_vec(k))
    }

    pub fn omega1(&self) -> Matrix {
        self.block(1)
    }
    pub fn omega2(&self) -> Matrix {
        self.block(2)
    }
    pub fn omega3(&self) -> Matrix {
        self.block(3)
    }
    pub fn omega4(&self) -> Matrix {
        self.block(4)
    }
    pub fn omega5(&self) -> Matrix {
        self.block(5)
    }
    pub fn omega6(&self) -> Matrix {
        self.block(6)
    }
}

/// Vectorized dynamics `E` and coupling matrices `F1`, `F2`, with
/// `G = F1 + F2 e^{E h}`.
#[derive(Debug, Clone)]
pub struct OdecOperator {
    layout: BlockLayout,
    h: f64,
    e: Matrix,
    f1: Matrix,
    f2: Matrix,
    g: Matrix,
}

impl OdecOperator {
    pub fn assemble(sys: &TimeDelaySystem) -> Result<Self> {
        sys.check()?;
        let (n, nd) = (sys.n(), sys.n_d());
        let layout = BlockLayout { n, n_d: nd };
        let ns = layout.n_s();
        let i_n = Matrix::identity(n, n);
        let i_nn = Matrix::identity(n * n, n * n);
        let i_nx = Matrix::identity(n * nd, n * nd);
        let c_shift = &sys.cd * expm(&sys.ad, -sys.h)?;

        let mut e = Matrix::zeros(ns, ns);
        let put = |m: &mut Matrix, row: usize, col: usize, block: Matrix| {
            let r = layout.range(row);
            let c = layout.range(col);
            debug_assert_eq!(block.shape(), (r.len(), c.len()));
            m.view_mut((r.start, c.start), (r.len(), c.len()))
                .copy_from(&block);
        };

        put(&mut e, 1, 1, kron(&sys.a0.transpose(), &i_n));
        put(&mut e, 1, 2, kron(&sys.a1.transpose(), &i_n));
        put(&mut e, 1, 3, kron(&sys.bd.transpose(), &i_n));
        put(&mut e, 1, 4, kron(&sys.bd.transpose(), &i_n));

        put(&mut e, 2, 1, -kron(&i_n, &sys.a1.transpose()));
        put(&mut e, 2, 2, -kron(&i_n, &sys.a0.transpose()));
        put(&mut e, 2, 5, -kron(&i_n, &sys.bd.transpose()));
        put(&mut e, 2, 6, -kron(&i_n, &sys.bd.transpose()));

        put(&mut e, 3, 1, kron(&sys.cd.transpose(), &i_n));
        put(&mut e, 3, 3, -kron(&sys.ad.transpose(), &i_n));

        put(&mut e, 4, 2, -kron(&c_shift.transpose(), &i_n));
        put(&mut e, 4, 4, -kron(&sys.ad.transpose(), &i_n));

        put(&mut e, 5, 1, kron(&i_n, &c_shift.transpose()));
        put(&mut e, 5, 5, kron(&i_n, &sys.ad.transpose()));

        put(&mut e, 6, 2, -kron(&i_n, &sys.cd.transpose()));
        put(&mut e, 6, 6, kron(&i_n, &sys.ad.transpose()));

        let mut f1 = Matrix::zeros(ns, ns);
        put(&mut f1, 1, 1, kron(&sys.a0.transpose(), &i_n));
        put(&mut f1, 1, 2, kron(&sys.a1.transpose(), &i_n));
        put(&mut f1, 1, 3, kron(&sys.bd.transpose(), &i_n));
        put(&mut f1, 1, 4, kron(&sys.bd.transpose(), &i_n));
        put(&mut f1, 2, 1, i_nn.clone());
        put(&mut f1, 3, 3, i_nx.clone());
        // Row block 4 pins Ω5(0); Ω5 is n_d×n so the row block has n·n_d rows.
        put(&mut f1, 4, 5, i_nx.clone());

        let mut f2 = Matrix::zeros(ns, ns);
        put(&mut f2, 1, 1, kron(&i_n, &sys.a1.transpose()));
        put(&mut f2, 1, 2, kron(&i_n, &sys.a0.transpose()));
        put(&mut f2, 1, 5, kron(&i_n, &sys.bd.transpose()));
        put(&mut f2, 1, 6, kron(&i_n, &sys.bd.transpose()));
        put(&mut f2, 2, 2, -i_nn);
        put(&mut f2, 5, 4, i_nx.clone());
        put(&mut f2, 6, 6, i_nx);

        let g = &f1 + &f2 * expm(&e, sys.h)?;
        Ok(Self {
            layout,
            h: sys.h,
            e,
            f1,
            f2,
            g,
        })
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn n_s(&self) -> usize {
        self.layout.n_s()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn e(&self) -> &Matrix {
        &self.e
    }

    pub fn f1(&self) -> &Matrix {
        &self.f1
    }

    pub fn f2(&self) -> &Matrix {
        &self.f2
    }

    /// Combined boundary matrix `F1 + F2 e^{E h}`.
    pub fn g(&self) -> &Matrix {
        &self.g
    }

    /// `[-vec(Q); 0; …; 0]`.
    pub fn boundary_rhs(&self, q: &Weight) -> Result<Vector> {
        let n = self.layout.n;
        if q.n() != n {
            return Err(Error::Dimension(format!(
                "weight is {}x{}, system has n = {n}",
                q.n(),
                q.n()
            )));
        }
        let mut rhs = Vector::zeros(self.n_s());
        rhs.rows_mut(0, n * n).copy_from(&(-vec(q.matrix())));
        Ok(rhs)
    }
}

/// Solves the combined boundary system for the `τ = 0` state.
///
/// Fails with [`Error::SpectrumConditionViolated`] exactly when
/// [`spectrum::check`] reports [`Verdict::Violated`] under the same thresholds.
pub fn solve_boundary(
    op: &OdecOperator,
    q: &Weight,
    thresholds: &SpectrumThresholds,
) -> Result<(OmegaBlocks, SpectrumReport)> {
    let rhs = op.boundary_rhs(q)?;
    let report = spectrum::check(op, thresholds);
    if report.verdict == Verdict::Violated {
        return Err(Error::SpectrumConditionViolated {
            sigma_min: report.sigma_min,
            sigma_min_relative: report.sigma_min_relative,
        });
    }
    let x =
        op.g.clone()
            .lu()
            .solve(&rhs)
            .ok_or(Error::SpectrumConditionViolated {
                sigma_min: report.sigma_min,
                sigma_min_relative: report.sigma_min_relative,
            })?;
    Ok((OmegaBlocks::new(x, op.layout)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub thresholds: SpectrumThresholds,
    pub quadrature: QuadratureOptions,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub spectrum: SpectrumReport,
    /// `‖G ω(0) − [-vec Q; 0]‖_max`.
    pub boundary_residual: f64,
}

impl Diagnostics {
    /// Near-singular `G`: the solution exists but may be inaccurate.
    pub fn warning(&self) -> Option<String> {
        (self.spectrum.verdict == Verdict::Borderline).then(|| {
            format!(
                "boundary matrix is nearly singular (sigma_min/|G| = {:e})",
                self.spectrum.sigma_min_relative
            )
        })
    }
}

/// The solved auxiliary system; evaluates `Ω(τ)` and `P(τ)`.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    sys: TimeDelaySystem,
    q: Weight,
    omega0: OmegaBlocks,
    op: OdecOperator,
    diagnostics: Diagnostics,
    quadrature: QuadratureOptions,
}

/// Per-block residuals of the integral identities expressing `Ω3 … Ω6`
/// through `Ω1`, `Ω2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapsedResiduals {
    pub omega3: f64,
    pub omega4: f64,
    pub omega5: f64,
    pub omega6: f64,
}

impl CollapsedResiduals {
    pub fn max(&self) -> f64 {
        self.omega3
            .max(self.omega4)
            .max(self.omega5)
            .max(self.omega6)
    }
}

/// Residuals of the time-reversal symmetry of a unique solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipResiduals {
    /// `max_τ ‖Ω1(τ) − Ω2(h−τ)ᵀ‖`
    pub omega1_omega2: f64,
    /// `max_τ ‖Ω3(τ) − Ω6(h−τ)ᵀ‖`
    pub omega3_omega6: f64,
    /// `max_τ ‖Ω4(τ) − Ω5(h−τ)ᵀ‖`
    pub omega4_omega5: f64,
}

impl FlipResiduals {
    pub fn max(&self) -> f64 {
        self.omega1_omega2
            .max(self.omega3_omega6)
            .max(self.omega4_omega5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointResiduals {
    /// `‖Ω1(0) − Ω1(0)ᵀ‖`
    pub symmetry_at_zero: f64,
    /// `‖Ω1(0) − Ω2(h)‖`
    pub omega1_omega2: f64,
    pub omega3_at_zero: f64,
    pub omega4_at_h: f64,
    pub omega5_at_zero: f64,
    pub omega6_at_h: f64,
}

impl EndpointResiduals {
    /// Largest of the boundary-condition residuals (symmetry excluded).
    pub fn boundary_max(&self) -> f64 {
        self.omega1_omega2
            .max(self.omega3_at_zero)
            .max(self.omega4_at_h)
            .max(self.omega5_at_zero)
            .max(self.omega6_at_h)
    }
}

/// Every certificate for a solution in one place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub dde: f64,
    pub algebraic: f64,
    pub collapsed: CollapsedResiduals,
    pub flip: FlipResiduals,
    pub endpoints: EndpointResiduals,
}

/// `count` equally spaced points on `[0, h]`, both ends included.
pub fn uniform_grid(h: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| h * (i as f64 / (count - 1) as f64))
            .collect(),
    }
}

impl LyapunovSolution {
    pub fn solve(sys: &TimeDelaySystem, q: &Weight) -> Result<Self> {
        Self::solve_with(sys, q, &SolveOptions::default())
    }

    pub fn solve_with(sys: &TimeDelaySystem, q: &Weight, opts: &SolveOptions) -> Result<Self> {
        let op = OdecOperator::assemble(sys)?;
        let (omega0, spectrum) = solve_boundary(&op, q, &opts.thresholds)?;
        let rhs = op.boundary_rhs(q)?;
        let boundary_residual = (op.g() * omega0.stacked() - rhs).amax();
        Ok(Self {
            sys: sys.clone(),
            q: q.clone(),
            omega0,
            op,
            diagnostics: Diagnostics {
                spectrum,
                boundary_residual,
            },
            quadrature: opts.quadrature,
        })
    }

    pub fn system(&self) -> &TimeDelaySystem {
        &self.sys
    }

    pub fn weight(&self) -> &Weight {
        &self.q
    }

    pub fn operator(&self) -> &OdecOperator {
        &self.op
    }

    pub fn omega0(&self) -> &OmegaBlocks {
        &self.omega0
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn h(&self) -> f64 {
        self.sys.h
    }

    /// `Ω(τ) = e^{E τ} Ω(0)`; valid for any finite `τ`.
    pub fn evaluate_omega(&self, tau: f64) -> Result<OmegaBlocks> {
        if !tau.is_finite() {
            return Err(Error::NonFinite("τ"));
        }
        let stacked = expm(self.op.e(), tau)? * self.omega0.stacked();
        OmegaBlocks::new(stacked, self.op.layout)
    }

    /// `½[Ω1(τ) + Ω2(h−τ)ᵀ]` without a domain check. Equals `P(τ)` on `[0, h]`
    /// and extends it smoothly past both ends.
    fn p_branch(&self, tau: f64) -> Result<Matrix> {
        let a = self.evaluate_omega(tau)?.omega1();
        let b = self.evaluate_omega(self.h() - tau)?.omega2();
        Ok((a + b.transpose()) * 0.5)
    }

    /// Delay Lyapunov matrix on `[-h, h]`, with `P(-τ) = P(τ)ᵀ`.
    pub fn p_at(&self, tau: f64) -> Result<Matrix> {
        let h = self.h();
        if !(tau.abs() <= h) {
            return Err(Error::Domain {
                what: "τ",
                value: tau,
                lo: -h,
                hi: h,
            });
        }
        if tau >= 0.0 {
            self.p_branch(tau)
        } else {
            Ok(self.p_branch(-tau)?.transpose())
        }
    }

    fn kernel(&self, theta: f64) -> Result<Matrix> {
        self.sys.kernel_unchecked(theta)
    }

    /// Max over `grid ⊂ [0, h]` of `‖P'(τ) − P(τ)A0 − P(τ−h)A1 − ∫P(τ+θ)A_D(θ)dθ‖`.
    ///
    /// `P'` is a central difference of the `[0, h]` branch with step `1e-6·h`
    /// (`1e-6` when `h = 0`), so the endpoints use one-sided derivatives.
    pub fn residual_dde(&self, grid: &[f64]) -> Result<f64> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("residual grid is empty".into()));
        }
        let h = self.h();
        let n = self.sys.n();
        let step = if h > 0.0 { 1e-6 * h } else { 1e-6 };
        let mut worst = 0.0_f64;
        for &tau in grid {
            if !(0.0..=h).contains(&tau) {
                return Err(Error::Domain {
                    what: "τ",
                    value: tau,
                    lo: 0.0,
                    hi: h,
                });
            }
            let derivative =
                (self.p_branch(tau + step)? - self.p_branch(tau - step)?) / (2.0 * step);
            let integrand = |theta: f64| -> Result<Matrix> {
                Ok(self.p_at(tau + theta)? * self.kernel(theta)?)
            };
            let integral = integrate(-h, -tau, n, n, &self.quadrature, integrand)?
                + integrate(-tau, 0.0, n, n, &self.quadrature, integrand)?;
            let rhs =
                self.p_at(tau)? * &self.sys.a0 + self.p_at(tau - h)? * &self.sys.a1 + integral;
            worst = worst.max(max_abs(&(derivative - rhs)));
        }
        Ok(worst)
    }

    /// `‖A0ᵀP(0) + P(0)A0 + A1ᵀP(h) + P(−h)A1 + ∫[A_D(θ)ᵀP(−θ) + P(θ)A_D(θ)]dθ + Q‖`.
    pub fn residual_algebraic(&self) -> Result<f64> {
        let h = self.h();
        let n = self.sys.n();
        let (a0, a1) = (&self.sys.a0, &self.sys.a1);
        let p0 = self.p_at(0.0)?;
        let integral = integrate(-h, 0.0, n, n, &self.quadrature, |theta| {
            let k = self.kernel(theta)?;
            Ok(k.transpose() * self.p_at(-theta)? + self.p_at(theta)? * k)
        })?;
        let total = a0.transpose() * &p0
            + &p0 * a0
            + a1.transpose() * self.p_at(h)?
            + self.p_at(-h)? * a1
            + integral
            + self.q.matrix();
        Ok(max_abs(&total))
    }

    /// Compares `Ω3 … Ω6` on `grid` against their integral expressions in
    /// `Ω1`, `Ω2`:
    ///
    /// ```text
    /// Ω3(τ) = ∫_{-τ}^{0}    Ω1(τ+θ) Cd e^{Adθ} dθ
    /// Ω4(τ) = ∫_{-h}^{-τ}   Ω2(τ+θ+h) Cd e^{Adθ} dθ
    /// Ω5(τ) = ∫_{-h}^{τ-h}  (Cd e^{Adθ})ᵀ Ω1(τ−θ−h) dθ
    /// Ω6(τ) = ∫_{τ-h}^{0}   (Cd e^{Adθ})ᵀ Ω2(τ−θ) dθ
    /// ```
    pub fn residual_collapsed(&self, grid: &[f64]) -> Result<CollapsedResiduals> {
        let h = self.h();
        let (n, nd) = (self.sys.n(), self.sys.n_d());
        let q = &self.quadrature;
        let weight =
            |theta: f64| -> Result<Matrix> { Ok(&self.sys.cd * expm(&self.sys.ad, theta)?) };
        let mut out = CollapsedResiduals {
            omega3: 0.0,
            omega4: 0.0,
            omega5: 0.0,
            omega6: 0.0,
        };
        for &tau in grid {
            if !(0.0..=h).contains(&tau) {
                return Err(Error::Domain {
                    what: "τ",
                    value: tau,
                    lo: 0.0,
                    hi: h,
                });
            }
            let omega = self.evaluate_omega(tau)?;
            let w3 = integrate(-tau, 0.0, n, nd, q, |t| {
                Ok(self.evaluate_omega(tau + t)?.omega1() * weight(t)?)
            })?;
            let w4 = integrate(-h, -tau, n, nd, q, |t| {
                Ok(self.evaluate_omega(tau + t + h)?.omega2() * weight(t)?)
            })?;
            let w5 = integrate(-h, tau - h, nd, n, q, |t| {
                Ok(weight(t)?.transpose() * self.evaluate_omega(tau - t - h)?.omega1())
            })?;
            let w6 = integrate(tau - h, 0.0, nd, n, q, |t| {
                Ok(weight(t)?.transpose() * self.evaluate_omega(tau - t)?.omega2())
            })?;
            out.omega3 = out.omega3.max(max_abs(&(omega.omega3() - w3)));
            out.omega4 = out.omega4.max(max_abs(&(omega.omega4() - w4)));
            out.omega5 = out.omega5.max(max_abs(&(omega.omega5() - w5)));
            out.omega6 = out.omega6.max(max_abs(&(omega.omega6() - w6)));
        }
        Ok(out)
    }

    pub fn flip_residuals(&self, grid: &[f64]) -> Result<FlipResiduals> {
        let h = self.h();
        let mut out = FlipResiduals {
            omega1_omega2: 0.0,
            omega3_omega6: 0.0,
            omega4_omega5: 0.0,
        };
        for &tau in grid {
            let fwd = self.evaluate_omega(tau)?;
            let back = self.evaluate_omega(h - tau)?;
            out.omega1_omega2 = out
                .omega1_omega2
                .max(max_abs(&(fwd.omega1() - back.omega2().transpose())));
            out.omega3_omega6 = out
                .omega3_omega6
                .max(max_abs(&(fwd.omega3() - back.omega6().transpose())));
            out.omega4_omega5 = out
                .omega4_omega5
                .max(max_abs(&(fwd.omega4() - back.omega5().transpose())));
        }
        Ok(out)
    }

    pub fn endpoint_residuals(&self) -> Result<EndpointResiduals> {
        let start = &self.omega0;
        let end = self.evaluate_omega(self.h())?;
        let w1 = start.omega1();
        Ok(EndpointResiduals {
            symmetry_at_zero: max_abs(&(&w1 - w1.transpose())),
            omega1_omega2: max_abs(&(&w1 - end.omega2())),
            omega3_at_zero: max_abs(&start.omega3()),
            omega4_at_h: max_abs(&end.omega4()),
            omega5_at_zero: max_abs(&start.omega5()),
            omega6_at_h: max_abs(&end.omega6()),
        })
    }

    pub fn residual_report(
        &self,
        dde_grid: &[f64],
        collapsed_grid: &[f64],
    ) -> Result<ResidualReport> {
        Ok(ResidualReport {
            dde: self.residual_dde(dde_grid)?,
            algebraic: self.residual_algebraic()?,
            collapsed: self.residual_collapsed(collapsed_grid)?,
            flip: self.flip_residuals(dde_grid)?,
            endpoints: self.endpoint_residuals()?,
        })
    }
}

/// Stacks `P(τ)` samples into a table: one row per `τ`, entries row-major.
pub fn sample_p(sol: &LyapunovSolution, taus: &[f64]) -> Result<Vec<(f64, Matrix)>> {
    taus.iter().map(|&t| Ok((t, sol.p_at(t)?))).collect()
}

/// Block `k` of a raw stacked vector.
pub fn block_from_stacked(stacked: &Vector, layout: BlockLayout, k: usize) -> Result<Matrix> {
    let (r, c) = layout.shape(k);
    let range = layout.range(k);
    unvec(&Vector::from_column_slice(&stacked.as_slice()[range]), r, c)
}
