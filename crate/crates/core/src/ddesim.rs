//! Independent validation path: time-stepping the delay system.
//!
//! The distributed delay is carried by the accumulator
//! `y(t) = ∫_{-h}^{0} e^{Ad θ} Bd x(t+θ) dθ`, which turns the plant into
//!
//! ```text
//! x' = A0 x + Cd y + A1 x(t-h)
//! y' = Bd x - Ad y - e^{-Ad h} Bd x(t-h)
//! ```
//!
//! integrated with classical RK4 on a grid that divides `h`, reading delayed
//! states from the stored record (method of steps). The record keeps both
//! one-sided derivatives of every step so that off-grid reads use cubic
//! Hermite interpolation that never straddles a derivative jump.
//!
//! States are `n × c` matrices: `c = 1` for ordinary runs, `c = n` for the
//! fundamental matrix.

use std::io::{self, Write};

use crate::matcore::{expm, max_abs, Matrix, Vector};
use crate::model::{TimeDelaySystem, Weight};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::{Error, Result};

/// Minimum number of steps per delay interval.
pub const MIN_STEPS_PER_DELAY: usize = 20;

/// Initial function `φ` on `[-h, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub enum HistorySpec {
    /// `φ(0) = x0`, `φ(θ) = 0` for `θ < 0`.
    PointMass(Matrix),
    /// Uniform samples of `φ`, the first at `-h` and the last at `0`,
    /// interpolated by piecewise cubics.
    Sampled(Vec<Matrix>),
}

impl HistorySpec {
    pub fn point_mass(x0: &Vector) -> Self {
        HistorySpec::PointMass(Matrix::from_column_slice(x0.len(), 1, x0.as_slice()))
    }

    /// `Φ(0) = I`, zero before: the history of the fundamental matrix.
    pub fn fundamental(n: usize) -> Self {
        HistorySpec::PointMass(Matrix::identity(n, n))
    }

    pub fn sampled(samples: &[Vector]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "sampled history needs samples".into(),
            ));
        }
        let n = samples[0].len();
        if samples.iter().any(|s| s.len() != n) {
            return Err(Error::Dimension("history samples differ in length".into()));
        }
        if samples.iter().any(|s| !s.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("history samples"));
        }
        Ok(HistorySpec::Sampled(
            samples
                .iter()
                .map(|s| Matrix::from_column_slice(n, 1, s.as_slice()))
                .collect(),
        ))
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            HistorySpec::PointMass(m) => m.shape(),
            HistorySpec::Sampled(s) => s[0].shape(),
        }
    }

    /// `φ(0)`.
    pub fn initial(&self) -> Matrix {
        match self {
            HistorySpec::PointMass(m) => m.clone(),
            HistorySpec::Sampled(s) => s[s.len() - 1].clone(),
        }
    }

    /// `φ(θ)` for `θ ∈ [-h, 0]`, taking the left limit at `θ = 0` (so a
    /// point mass reads as zero everywhere here).
    fn value(&self, theta: f64, h: f64) -> Matrix {
        match self {
            HistorySpec::PointMass(m) => Matrix::zeros(m.nrows(), m.ncols()),
            HistorySpec::Sampled(s) => interpolate_samples(s, (theta + h) / h),
        }
    }

    fn validate(&self, n: usize, h: f64) -> Result<()> {
        let (rows, _) = self.shape();
        if rows != n {
            return Err(Error::Dimension(format!(
                "history has {rows} rows, system has n = {n}"
            )));
        }
        if let HistorySpec::Sampled(s) = self {
            if h > 0.0 && s.len() < 2 {
                return Err(Error::InvalidArgument(
                    "sampled history on a positive delay needs at least two samples".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Piecewise-cubic Lagrange interpolation of uniform samples at relative
/// position `u ∈ [0, 1]`.
fn interpolate_samples(samples: &[Matrix], u: f64) -> Matrix {
    let last = samples.len() - 1;
    if last == 0 {
        return samples[0].clone();
    }
    let s = (u * last as f64).clamp(0.0, last as f64);
    let i = (s.floor() as usize).min(last - 1);
    // Four-point stencil around [i, i+1], shifted inward at the ends.
    let width = 4.min(samples.len());
    let start = (i as isize - 1).clamp(0, (samples.len() - width) as isize) as usize;
    let nodes: Vec<usize> = (start..start + width).collect();
    let mut out = Matrix::zeros(samples[0].nrows(), samples[0].ncols());
    for &j in &nodes {
        let mut w = 1.0;
        for &k in &nodes {
            if k != j {
                w *= (s - k as f64) / (j as f64 - k as f64);
            }
        }
        out += &samples[j] * w;
    }
    out
}

/// Dense record of a simulation on `t_k = k·dt`, `k = 0..=K`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dt: f64,
    h: f64,
    history: HistorySpec,
    x: Vec<Matrix>,
    y: Vec<Matrix>,
    /// `x'` at the start and at the end of each step, from inside the step.
    slopes: Vec<(Matrix, Matrix)>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delay(&self) -> f64 {
        self.h
    }

    /// Number of grid nodes, `K + 1`.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn state(&self, k: usize) -> &Matrix {
        &self.x[k]
    }

    pub fn aux(&self, k: usize) -> &Matrix {
        &self.y[k]
    }

    pub fn history(&self) -> &HistorySpec {
        &self.history
    }

    /// `x(t)` for `t ∈ [-h, T]`: history before zero, cubic Hermite inside
    /// each step.
    pub fn state_at(&self, t: f64) -> Result<Matrix> {
        let end = self.horizon();
        if !(t >= -self.h && t <= end) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: -self.h,
                hi: end,
            });
        }
        if t < 0.0 {
            return Ok(self.history.value(t, self.h));
        }
        let s = t / self.dt;
        let nearest = s.round();
        if (s - nearest).abs() <= 1e-9 {
            return Ok(self.x[nearest as usize].clone());
        }
        let k = (s.floor() as usize).min(self.slopes.len() - 1);
        Ok(self.hermite(k, s - k as f64))
    }

    /// Cubic Hermite interpolant on step `k` at fraction `u ∈ [0, 1]`.
    fn hermite(&self, k: usize, u: f64) -> Matrix {
        let (d0, d1) = &self.slopes[k];
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        &self.x[k] * h00 + d0 * (h10 * self.dt) + &self.x[k + 1] * h01 + d1 * (h11 * self.dt)
    }

    /// Writes `t, x_1 … x_n, y_1 … y_{n_d}` with 17 significant digits.
    /// Matrix-valued runs expand to `x_i_j` / `y_i_j`, row-major.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (n, c) = self.x[0].shape();
        let nd = self.y[0].nrows();
        let mut header = vec!["t".to_string()];
        let name = |p: &str, i: usize, j: usize| {
            if c == 1 {
                format!("{p}_{}", i + 1)
            } else {
                format!("{p}_{}_{}", i + 1, j + 1)
            }
        };
        for i in 0..n {
            for j in 0..c {
                header.push(name("x", i, j));
            }
        }
        for i in 0..nd {
            for j in 0..c {
                header.push(name("y", i, j));
            }
        }
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![format_sig17(self.time(k))];
            for m in [&self.x[k], &self.y[k]] {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        row.push(format_sig17(m[(i, j)]));
                    }
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits, enough to round-trip f64.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" so that identical runs never differ only in zero sign.
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Steps per delay for `dt`, or an error if `dt` does not divide `h`.
fn steps_per_delay(dt: f64, h: f64) -> Result<usize> {
    let bad = || Error::IncommensurateStep {
        dt,
        h,
        min_steps: MIN_STEPS_PER_DELAY,
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(bad());
    }
    if h == 0.0 {
        return Ok(0);
    }
    let ratio = h / dt;
    let m = ratio.round();
    if (ratio - m).abs() > 1e-9 * ratio || (m as usize) < MIN_STEPS_PER_DELAY {
        return Err(bad());
    }
    Ok(m as usize)
}

/// `y(0) = ∫_{-h}^{0} e^{Ad θ} Bd φ(θ) dθ`.
fn initial_accumulator(sys: &TimeDelaySystem, hist: &HistorySpec) -> Result<Matrix> {
    let (_, c) = hist.shape();
    let nd = sys.n_d();
    match hist {
        HistorySpec::PointMass(_) => Ok(Matrix::zeros(nd, c)),
        HistorySpec::Sampled(s) if sys.h == 0.0 || s.len() < 2 => Ok(Matrix::zeros(nd, c)),
        HistorySpec::Sampled(s) => {
            let h = sys.h;
            let pieces = s.len() - 1;
            let opts = QuadratureOptions::default();
            let mut acc = Matrix::zeros(nd, c);
            for i in 0..pieces {
                let lo = -h + h * i as f64 / pieces as f64;
                let hi = -h + h * (i + 1) as f64 / pieces as f64;
                acc += integrate(lo, hi, nd, c, &opts, |theta| {
                    Ok(expm(&sys.ad, theta)? * &sys.bd * hist.value(theta, h))
                })?;
            }
            Ok(acc)
        }
    }
}

/// Integrates the augmented system from the history `hist` up to `horizon`
/// (rounded up to the grid) with step `dt`.
///
/// For `h > 0`, `dt` must equal `h / m` with integer `m ≥ 20`.
pub fn simulate(
    sys: &TimeDelaySystem,
    hist: &HistorySpec,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    sys.check()?;
    let h = sys.h;
    let m = steps_per_delay(dt, h)?;
    hist.validate(sys.n(), h)?;
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must be finite and at least one step ({dt})"
        )));
    }
    let steps = (horizon / dt - 1e-9).ceil() as usize;

    let delayed_gain = expm(&sys.ad, -h)? * &sys.bd;
    let rhs = |x: &Matrix, y: &Matrix, xd: &Matrix| -> (Matrix, Matrix) {
        (
            &sys.a0 * x + &sys.cd * y + &sys.a1 * xd,
            &sys.bd * x - &sys.ad * y - &delayed_gain * xd,
        )
    };

    let mut traj = Trajectory {
        dt,
        h,
        history: hist.clone(),
        x: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        slopes: Vec::with_capacity(steps),
    };
    traj.x.push(hist.initial());
    traj.y.push(initial_accumulator(sys, hist)?);

    for k in 0..steps {
        let t = k as f64 * dt;
        let x = traj.x[k].clone();
        let y = traj.y[k].clone();
        // Delayed reads at the start, middle and end of the step. With the
        // grid aligned to h they come from one smooth piece of the record.
        let delayed: Option<[Matrix; 3]> = if m == 0 {
            None
        } else if k < m {
            Some([
                hist.value(t - h, h),
                hist.value(t - h + 0.5 * dt, h),
                hist.value((t - h + dt).min(0.0), h),
            ])
        } else {
            let j = k - m;
            Some([
                traj.x[j].clone(),
                traj.hermite(j, 0.5),
                traj.x[j + 1].clone(),
            ])
        };
        let pick = |i: usize, stage_x: &Matrix| -> Matrix {
            match &delayed {
                Some(d) => d[i].clone(),
                None => stage_x.clone(),
            }
        };

        let (k1x, k1y) = rhs(&x, &y, &pick(0, &x));
        let x2 = &x + &k1x * (0.5 * dt);
        let y2 = &y + &k1y * (0.5 * dt);
        let (k2x, k2y) = rhs(&x2, &y2, &pick(1, &x2));
        let x3 = &x + &k2x * (0.5 * dt);
        let y3 = &y + &k2y * (0.5 * dt);
        let (k3x, k3y) = rhs(&x3, &y3, &pick(1, &x3));
        let x4 = &x + &k3x * dt;
        let y4 = &y + &k3y * dt;
        let (k4x, k4y) = rhs(&x4, &y4, &pick(2, &x4));

        let xn = &x + (&k1x + &k2x * 2.0 + &k3x * 2.0 + &k4x) * (dt / 6.0);
        let yn = &y + (&k1y + &k2y * 2.0 + &k3y * 2.0 + &k4y) * (dt / 6.0);
        if !xn.iter().chain(yn.iter()).all(|v| v.is_finite()) {
            return Err(Error::BlowUp { time: t + dt });
        }
        let (end_slope, _) = rhs(&xn, &yn, &pick(2, &xn));
        traj.slopes.push((k1x, end_slope));
        traj.x.push(xn);
        traj.y.push(yn);
    }
    Ok(traj)
}

/// Simulation of the fundamental matrix: `Φ(0) = I`, zero history.
pub fn fundamental_matrix(sys: &TimeDelaySystem, horizon: f64, dt: f64) -> Result<Trajectory> {
    simulate(sys, &HistorySpec::fundamental(sys.n()), horizon, dt)
}

/// Max residual of the original delay equation along a simulated path.
///
/// `x'` comes from a fourth-order five-point difference of the stored
/// states and the distributed term from Gauss–Legendre over each step of
/// the record, so the check does not reuse the accumulator `y`. Nodes whose
/// difference stencil crosses a multiple of `h` are skipped.
pub fn equation_residual(sys: &TimeDelaySystem, traj: &Trajectory) -> Result<f64> {
    sys.check()?;
    let dt = traj.dt;
    let h = sys.h;
    if (h - traj.h).abs() > 1e-12 * h.max(1.0) {
        return Err(Error::InvalidArgument(
            "trajectory was produced with a different delay".into(),
        ));
    }
    let m = steps_per_delay(dt, h)?;
    // Four-point Gauss–Legendre mapped onto one step [0, dt].
    let nodes: Vec<(f64, f64)> = gauss_nodes(4)?
        .into_iter()
        .map(|(x, w)| (0.5 * dt * (x + 1.0), 0.5 * dt * w))
        .collect();
    // Kernel at every quadrature point, indexed by step offset within the delay.
    let mut kernel = Vec::with_capacity(m);
    for i in 0..m {
        let lo = -h + i as f64 * dt;
        let row: Result<Vec<Matrix>> = nodes
            .iter()
            .map(|&(off, _)| sys.kernel_unchecked((lo + off).min(0.0)))
            .collect();
        kernel.push(row?);
    }

    let a_eff = if m == 0 {
        &sys.a0 + &sys.a1
    } else {
        sys.a0.clone()
    };
    let last = traj.len() - 1;
    let mut worst = 0.0_f64;
    for k in 2..last.saturating_sub(1) {
        if m > 0 && (k >= 1) && [k - 1, k, k + 1].iter().any(|&i| i > 0 && i % m == 0) {
            continue;
        }
        let x = &traj.x;
        let derivative = (&x[k - 2] - &x[k - 1] * 8.0 + &x[k + 1] * 8.0 - &x[k + 2]) / (12.0 * dt);
        let mut rhs = &a_eff * &x[k];
        if m > 0 {
            let t = traj.time(k);
            rhs += &sys.a1 * traj.state_at(t - h)?;
            for (i, row) in kernel.iter().enumerate() {
                // Step offset i covers s ∈ [t - h + i dt, t - h + (i+1) dt].
                let base = k as isize - m as isize + i as isize;
                for (&(off, w), a_d) in nodes.iter().zip(row) {
                    let xs = if base < 0 {
                        traj.history.value((base as f64) * dt + off, h)
                    } else {
                        traj.hermite(base as usize, off / dt)
                    };
                    rhs += a_d * xs * w;
                }
            }
        }
        worst = worst.max(max_abs(&(derivative - rhs)));
    }
    Ok(worst)
}

fn gauss_nodes(order: usize) -> Result<Vec<(f64, f64)>> {
    use gauss_quad::legendre::GaussLegendre;
    let degree = std::num::NonZeroUsize::new(order)
        .ok_or_else(|| Error::InvalidArgument("quadrature order must be positive".into()))?;
    Ok(GaussLegendre::new(degree).as_node_weight_pairs().to_vec())
}

/// Composite Simpson weights for `nodes` equally spaced samples (3/8 rule
/// on the last three intervals when the interval count is odd).
fn simpson_weights(nodes: usize, dt: f64) -> Vec<f64> {
    let intervals = nodes.saturating_sub(1);
    let mut w = vec![0.0; nodes];
    match intervals {
        0 => {}
        1 => {
            w[0] = 0.5 * dt;
            w[1] = 0.5 * dt;
        }
        _ => {
            let simpson_end = if intervals.is_multiple_of(2) {
                intervals
            } else {
                intervals - 3
            };
            for i in (0..simpson_end).step_by(2) {
                w[i] += dt / 3.0;
                w[i + 1] += 4.0 * dt / 3.0;
                w[i + 2] += dt / 3.0;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[s + o] += 3.0 * dt / 8.0 * c;
                }
            }
        }
    }
    w
}

/// Bound on `∫_T^∞` from an exponential envelope fitted to the last tenth of
/// the samples. Infinite when the envelope is not decaying.
fn tail_estimate(magnitudes: &[f64], dt: f64) -> f64 {
    let len = magnitudes.len();
    let window = (len / 10).max(4).min(len);
    if window < 2 {
        return f64::INFINITY;
    }
    let tail = &magnitudes[len - window..];
    let half = window / 2;
    let early = tail[..half].iter().copied().fold(0.0, f64::max);
    let late = tail[half..].iter().copied().fold(0.0, f64::max);
    if late == 0.0 {
        return 0.0;
    }
    if !(late < early) {
        return f64::INFINITY;
    }
    let rate = (early / late).ln() / (half as f64 * dt);
    late / rate
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    /// `∫_0^T xᵀQx dt` by composite Simpson.
    pub value: f64,
    /// Estimated `∫_T^∞`, not included in `value`.
    pub tail: f64,
    pub horizon: f64,
    /// Set when the tail exceeds 10% of the integral (non-decaying run).
    pub warning: bool,
}

/// Cost-to-go `∫ x(t)ᵀ Q x(t) dt` over a vector trajectory.
pub fn cost_quadrature(traj: &Trajectory, q: &Weight) -> Result<CostEstimate> {
    let (n, c) = traj.x[0].shape();
    if c != 1 {
        return Err(Error::InvalidArgument(
            "cost quadrature needs a vector-valued trajectory".into(),
        ));
    }
    if q.n() != n {
        return Err(Error::Dimension(format!(
            "weight is {0}x{0}, state has n = {n}",
            q.n()
        )));
    }
    let values: Vec<f64> = traj
        .x
        .iter()
        .map(|x| (x.transpose() * q.matrix() * x)[(0, 0)])
        .collect();
    let weights = simpson_weights(values.len(), traj.dt);
    let value: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let magnitudes: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let tail = tail_estimate(&magnitudes, traj.dt);
    Ok(CostEstimate {
        value,
        tail,
        horizon: traj.horizon(),
        warning: tail > 0.1 * value.abs(),
    })
}

/// Horizon, step and tail control for the simulation-based estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Initial horizon; default `max(20 h, 20)`.
    pub horizon: Option<f64>,
    /// Explicit step; default `h / steps_per_delay` (or `1 / steps_per_delay`
    /// when `h = 0`).
    pub dt: Option<f64>,
    pub steps_per_delay: usize,
    /// The horizon is doubled until the tail estimate falls below this.
    pub tail_tolerance: f64,
    pub max_doublings: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            horizon: None,
            dt: None,
            steps_per_delay: 100,
            tail_tolerance: 1e-5,
            max_doublings: 8,
        }
    }
}

impl OracleOptions {
    pub fn step(&self, h: f64) -> f64 {
        self.dt.unwrap_or_else(|| {
            let m = self.steps_per_delay.max(MIN_STEPS_PER_DELAY) as f64;
            if h > 0.0 {
                h / m
            } else {
                1.0 / m
            }
        })
    }

    pub fn initial_horizon(&self, h: f64) -> f64 {
        self.horizon.unwrap_or((20.0 * h).max(20.0))
    }
}

/// Cost-to-go from `hist`, extending the horizon until the tail is small.
pub fn cost_to_go(
    sys: &TimeDelaySystem,
    hist: &HistorySpec,
    q: &Weight,
    opts: &OracleOptions,
) -> Result<(CostEstimate, Trajectory)> {
    let dt = opts.step(sys.h);
    let mut horizon = opts.initial_horizon(sys.h);
    let mut doublings = 0;
    loop {
        let traj = simulate(sys, hist, horizon, dt)?;
        let est = cost_quadrature(&traj, q)?;
        if est.tail <= opts.tail_tolerance || doublings >= opts.max_doublings {
            return Ok((est, traj));
        }
        horizon *= 2.0;
        doublings += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub tau: f64,
    /// `∫_0^T Φ(t)ᵀ Q Φ(t+τ) dt`
    pub p: Matrix,
    pub tail: f64,
    pub horizon: f64,
    /// Set when the tail exceeds 10% of `max|P|`.
    pub warning: bool,
}

/// `P(τ) = ∫_0^∞ Φ(t)ᵀ Q Φ(t+τ) dt` from a simulated fundamental matrix.
pub fn oracle_p(
    sys: &TimeDelaySystem,
    q: &Weight,
    tau: f64,
    opts: &OracleOptions,
) -> Result<OracleEstimate> {
    Ok(oracle_p_grid(sys, q, &[tau], opts)?.remove(0))
}

/// [`oracle_p`] at several `τ ∈ [0, h]` from one simulation per horizon.
pub fn oracle_p_grid(
    sys: &TimeDelaySystem,
    q: &Weight,
    taus: &[f64],
    opts: &OracleOptions,
) -> Result<Vec<OracleEstimate>> {
    sys.check()?;
    let h = sys.h;
    if q.n() != sys.n() {
        return Err(Error::Dimension(format!(
            "weight is {0}x{0}, system has n = {1}",
            q.n(),
            sys.n()
        )));
    }
    for &tau in taus {
        if !(0.0..=h).contains(&tau) {
            return Err(Error::Domain {
                what: "τ",
                value: tau,
                lo: 0.0,
                hi: h,
            });
        }
    }
    let dt = opts.step(h);
    let mut horizon = opts.initial_horizon(h);
    let mut doublings = 0;
    loop {
        let steps = (horizon / dt - 1e-9).ceil() as usize;
        let horizon_grid = steps as f64 * dt;
        let traj = fundamental_matrix(sys, horizon_grid + h + dt, dt)?;
        let weights = simpson_weights(steps + 1, dt);
        let mut out = Vec::with_capacity(taus.len());
        for &tau in taus {
            let mut p = Matrix::zeros(sys.n(), sys.n());
            let mut magnitudes = Vec::with_capacity(steps + 1);
            for (k, w) in weights.iter().enumerate() {
                let t = traj.time(k);
                let integrand = traj.x[k].transpose() * q.matrix() * traj.state_at(t + tau)?;
                magnitudes.push(max_abs(&integrand));
                p += integrand * *w;
            }
            let tail = tail_estimate(&magnitudes, dt);
            let warning = tail > 0.1 * max_abs(&p);
            out.push(OracleEstimate {
                tau,
                p,
                tail,
                horizon: horizon_grid,
                warning,
            });
        }
        let worst_tail = out.iter().map(|e| e.tail).fold(0.0, f64::max);
        if worst_tail <= opts.tail_tolerance || doublings >= opts.max_doublings {
            return Ok(out);
        }
        horizon *= 2.0;
        doublings += 1;
    }
}
