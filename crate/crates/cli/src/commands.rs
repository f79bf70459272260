use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dlyap_core::ddesim::{cost_to_go, format_sig17, oracle_p_grid};
use dlyap_core::matcore::max_abs;
use dlyap_core::odec::{uniform_grid, ResidualReport, SolveOptions};
use dlyap_core::spectrum::{self, SpectrumReport};
use dlyap_core::{Error, LyapunovSolution, Matrix, OdecOperator, TimeDelaySystem, Verdict, Weight};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{to_rows, ConfigError, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATED: u8 = 1;
pub const EXIT_BORDERLINE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Points used for the delay-equation and collapsed-identity residuals.
const DDE_GRID: usize = 41;
const COLLAPSED_GRID: usize = 11;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: e.0,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SpectrumConditionViolated { .. } => EXIT_VIOLATED,
            Error::Overflow | Error::SingularSystem { .. } | Error::BlowUp { .. } => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub quiet: bool,
}

impl Context {
    fn say(&self, text: &str) {
        if !self.quiet {
            print!("{text}");
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        fs::create_dir_all(&self.out_dir).map_err(|e| io_failure(&self.out_dir, e))?;
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| io_failure(&path, e))
    }

    fn write_summary(&self, summary: &Value) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(summary).expect("summary serializes");
        self.write("summary.json", &(text + "\n"))
    }
}

struct Problem {
    sys: TimeDelaySystem,
    q: Weight,
    taus: Vec<f64>,
}

fn load(ctx: &Context) -> Result<Problem, Failure> {
    let sys = ctx.config.build_system()?;
    let q = ctx.config.weight()?;
    if q.n() != sys.n() {
        return Err(
            ConfigError(format!("q is {0}x{0}, system has n = {1}", q.n(), sys.n())).into(),
        );
    }
    let taus = ctx.config.taus(sys.h)?;
    Ok(Problem { sys, q, taus })
}

fn spectrum_json(r: &SpectrumReport) -> Value {
    json!({
        "verdict": r.verdict.to_string(),
        "sigma_min": r.sigma_min,
        "g_max_abs": r.g_norm,
        "sigma_min_relative": r.sigma_min_relative,
        "n_s": r.n_s,
    })
}

fn spectrum_text(r: &SpectrumReport) -> String {
    format!(
        "spectrum condition: {}\n  sigma_min(G) = {:.6e}\n  max|G| = {:.6e}\n  relative = {:.6e}\n  n_s = {}\n",
        r.verdict, r.sigma_min, r.g_norm, r.sigma_min_relative, r.n_s
    )
}

/// Spectrum check, then the solve. A violation is reported and written
/// out before failing.
fn solve_checked(
    ctx: &Context,
    p: &Problem,
) -> Result<(LyapunovSolution, SpectrumReport), Failure> {
    let thresholds = ctx.config.tolerances.thresholds();
    let op = OdecOperator::assemble(&p.sys)?;
    let report = spectrum::check(&op, &thresholds);
    if report.verdict == Verdict::Violated {
        let text = format!(
            "{}no delay Lyapunov matrix: a characteristic root has its mirror image as a root\n",
            spectrum_text(&report)
        );
        ctx.write("report.txt", &text)?;
        ctx.write_summary(
            &json!({ "status": "spectrum_violated", "spectrum": spectrum_json(&report) }),
        )?;
        return Err(Failure {
            code: EXIT_VIOLATED,
            message: format!(
                "spectrum condition violated: sigma_min(G)/max|G| = {:.3e}",
                report.sigma_min_relative
            ),
        });
    }
    let opts = SolveOptions {
        thresholds,
        ..SolveOptions::default()
    };
    let sol = LyapunovSolution::solve_with(&p.sys, &p.q, &opts)?;
    Ok((sol, report))
}

fn p_table(sol: &LyapunovSolution, taus: &[f64]) -> Result<Vec<(f64, Matrix)>, Failure> {
    let rows: Result<Vec<_>, Error> = taus.par_iter().map(|&t| Ok((t, sol.p_at(t)?))).collect();
    Ok(rows?)
}

/// `tau, p_11, p_12, …, p_nn` with row-major entries (`p_i_j` once
/// `n ≥ 10`).
pub fn p_csv(n: usize, rows: &[(f64, Matrix)]) -> String {
    let mut out = String::from("tau");
    for i in 1..=n {
        for j in 1..=n {
            if n < 10 {
                let _ = write!(out, ",p_{i}{j}");
            } else {
                let _ = write!(out, ",p_{i}_{j}");
            }
        }
    }
    out.push('\n');
    for (tau, p) in rows {
        out.push_str(&format_sig17(*tau));
        for i in 0..n {
            for j in 0..n {
                out.push(',');
                out.push_str(&format_sig17(p[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

fn residual_json(r: &ResidualReport) -> Value {
    json!({
        "dde": r.dde,
        "algebraic": r.algebraic,
        "collapsed": {
            "omega3": r.collapsed.omega3,
            "omega4": r.collapsed.omega4,
            "omega5": r.collapsed.omega5,
            "omega6": r.collapsed.omega6,
        },
        "flip": {
            "omega1_omega2": r.flip.omega1_omega2,
            "omega3_omega6": r.flip.omega3_omega6,
            "omega4_omega5": r.flip.omega4_omega5,
        },
        "endpoints": {
            "symmetry_at_zero": r.endpoints.symmetry_at_zero,
            "omega1_omega2": r.endpoints.omega1_omega2,
            "omega3_at_zero": r.endpoints.omega3_at_zero,
            "omega4_at_h": r.endpoints.omega4_at_h,
            "omega5_at_zero": r.endpoints.omega5_at_zero,
            "omega6_at_h": r.endpoints.omega6_at_h,
        },
    })
}

/// Fixed-point with eight decimals, without a sign on values that round to zero.
fn fixed(x: f64) -> String {
    let s = format!("{x:.8}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn matrix_text(m: &Matrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        out.push_str(indent);
        for j in 0..m.ncols() {
            let _ = write!(out, "{:>14}", fixed(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

fn solution_text(sol: &LyapunovSolution, spectrum: &SpectrumReport, r: &ResidualReport) -> String {
    let sys = sol.system();
    let mut out = format!(
        "delay Lyapunov matrix\nsystem: n = {}, n_d = {}, h = {}\n",
        sys.n(),
        sys.n_d(),
        sys.h
    );
    out.push_str(&spectrum_text(spectrum));
    let _ = writeln!(
        out,
        "boundary residual: {:.3e}",
        sol.diagnostics().boundary_residual
    );
    out.push_str("Omega(0) blocks, vec (column-major):\n");
    for k in 1..=6 {
        let entries: Vec<String> = sol
            .omega0()
            .block_vec(k)
            .iter()
            .map(|&x| fixed(x))
            .collect();
        let _ = writeln!(out, "  Omega{k}: [{}]", entries.join(", "));
    }
    out.push_str("P(0):\n");
    out.push_str(&matrix_text(
        &sol.p_at(0.0).unwrap_or_else(|_| sol.omega0().omega1()),
        "  ",
    ));
    let _ = write!(
        out,
        "residuals:\n  delay equation       {:.3e}\n  algebraic coupling   {:.3e}\n  collapsed identities {:.3e}  (omega3 {:.3e}, omega4 {:.3e}, omega5 {:.3e}, omega6 {:.3e})\n  flip invariants      {:.3e}\n  symmetry of P(0)     {:.3e}\n  endpoint conditions  {:.3e}\n",
        r.dde,
        r.algebraic,
        r.collapsed.max(),
        r.collapsed.omega3,
        r.collapsed.omega4,
        r.collapsed.omega5,
        r.collapsed.omega6,
        r.flip.max(),
        r.endpoints.symmetry_at_zero,
        r.endpoints.boundary_max(),
    );
    if let Some(w) = sol.diagnostics().warning() {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Satisfied => EXIT_OK,
        Verdict::Borderline => EXIT_BORDERLINE,
        Verdict::Violated => EXIT_VIOLATED,
    }
}

fn residuals_of(sol: &LyapunovSolution) -> Result<ResidualReport, Failure> {
    let h = sol.h();
    Ok(sol.residual_report(&uniform_grid(h, DDE_GRID), &uniform_grid(h, COLLAPSED_GRID))?)
}

pub fn solve(ctx: &Context) -> Result<u8, Failure> {
    let p = load(ctx)?;
    let (sol, spectrum) = solve_checked(ctx, &p)?;
    let table = p_table(&sol, &p.taus)?;
    let residuals = residuals_of(&sol)?;
    let report = solution_text(&sol, &spectrum, &residuals);
    ctx.write("P_tau.csv", &p_csv(p.sys.n(), &table))?;
    ctx.write("report.txt", &report)?;
    ctx.write_summary(&json!({
        "status": "solved",
        "spectrum": spectrum_json(&spectrum),
        "boundary_residual": sol.diagnostics().boundary_residual,
        "omega0": (1..=6).map(|k| sol.omega0().block_vec(k).to_vec()).collect::<Vec<_>>(),
        "p0": to_rows(&sol.p_at(0.0)?),
        "residuals": residual_json(&residuals),
        "tau_points": p.taus.len(),
    }))?;
    ctx.say(&report);
    ctx.say(&format!("wrote {}\n", ctx.out_dir.display()));
    Ok(verdict_code(spectrum.verdict))
}

pub fn check(ctx: &Context) -> Result<u8, Failure> {
    let sys = ctx.config.build_system()?;
    let op = OdecOperator::assemble(&sys)?;
    let report = spectrum::check(&op, &ctx.config.tolerances.thresholds());
    ctx.say(&format!(
        "verdict: {}\nsigma_min: {:.6e}\nsigma_min_relative: {:.6e}\nn_s: {}\n",
        report.verdict, report.sigma_min, report.sigma_min_relative, report.n_s
    ));
    Ok(verdict_code(report.verdict))
}

pub fn sample(ctx: &Context, explicit: &[f64], write_file: bool) -> Result<u8, Failure> {
    let mut p = load(ctx)?;
    if !explicit.is_empty() {
        let h = p.sys.h;
        if let Some(t) = explicit.iter().find(|t| !(t.abs() <= h)) {
            return Err(ConfigError(format!("τ = {t} lies outside [-{h}, {h}]")).into());
        }
        p.taus = explicit.to_vec();
    }
    let (sol, spectrum) = solve_checked(ctx, &p)?;
    let csv = p_csv(p.sys.n(), &p_table(&sol, &p.taus)?);
    if write_file {
        ctx.write("P_tau.csv", &csv)?;
    }
    ctx.say(&csv);
    Ok(verdict_code(spectrum.verdict))
}

struct CheckRow {
    name: String,
    value: f64,
    tolerance: f64,
    pass: bool,
    note: String,
}

impl CheckRow {
    fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckRow {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
            note: String::new(),
        }
    }

    fn failed(name: impl Into<String>, tolerance: f64, note: String) -> Self {
        CheckRow {
            name: name.into(),
            value: f64::NAN,
            tolerance,
            pass: false,
            note,
        }
    }
}

pub fn validate(ctx: &Context) -> Result<u8, Failure> {
    let p = load(ctx)?;
    let tol = &ctx.config.tolerances;
    let (sol, spectrum) = solve_checked(ctx, &p)?;
    let r = residuals_of(&sol)?;
    let mut rows = vec![
        CheckRow::new("residual delay equation", r.dde, tol.residual_dde),
        CheckRow::new(
            "residual algebraic coupling",
            r.algebraic,
            tol.residual_algebraic,
        ),
        CheckRow::new(
            "residual collapsed identities",
            r.collapsed.max(),
            tol.residual_collapsed,
        ),
        CheckRow::new("flip invariants", r.flip.max(), tol.flip),
        CheckRow::new(
            "symmetry of P(0)",
            r.endpoints.symmetry_at_zero,
            tol.symmetry,
        ),
        CheckRow::new(
            "endpoint conditions",
            r.endpoints.boundary_max(),
            tol.endpoints,
        ),
    ];

    let opts = ctx.config.oracle_options();
    let p0 = sol.p_at(0.0)?;
    let scale = max_abs(&p0).max(1.0);
    let oracle_taus: Vec<f64> = p.taus.iter().map(|t| t.abs()).collect();
    match oracle_p_grid(&p.sys, &p.q, &oracle_taus, &opts) {
        Ok(estimates) => {
            let mut gap = 0.0_f64;
            for (est, &tau) in estimates.iter().zip(&p.taus) {
                let oracle = if tau < 0.0 {
                    est.p.transpose()
                } else {
                    est.p.clone()
                };
                gap = gap.max(max_abs(&(oracle - sol.p_at(tau)?)));
            }
            let mut row = CheckRow::new("simulated P(τ) vs solved P(τ)", gap, tol.oracle * scale);
            if estimates.iter().any(|e| e.warning) {
                row.note = "trajectories not decaying".into();
            }
            rows.push(row);
        }
        Err(e) => rows.push(CheckRow::failed(
            "simulated P(τ) vs solved P(τ)",
            tol.oracle * scale,
            e.to_string(),
        )),
    }

    let histories = ctx.config.histories(p.sys.n())?;
    let runs: Vec<_> = histories
        .par_iter()
        .map(|hist| cost_to_go(&p.sys, hist, &p.q, &opts))
        .collect();
    let mut trajectory = None;
    for (i, (run, x0)) in runs
        .into_iter()
        .zip(&ctx.config.simulation.histories)
        .enumerate()
    {
        let name = format!("cost from x0 = {x0:?}");
        let x = dlyap_core::Vector::from_column_slice(x0);
        let predicted = (x.transpose() * &p0 * &x)[(0, 0)];
        let allowed = tol.cost * predicted.abs().max(1.0);
        match run {
            Ok((cost, traj)) => {
                let mut row = CheckRow::new(name, (cost.value - predicted).abs(), allowed);
                row.note = format!("simulated {:.8}, x0ᵀP(0)x0 {:.8}", cost.value, predicted);
                if cost.warning {
                    row.note.push_str("; trajectory not decaying");
                }
                rows.push(row);
                if i == 0 {
                    trajectory = Some(traj);
                }
            }
            Err(e) => rows.push(CheckRow::failed(name, allowed, e.to_string())),
        }
    }

    if let Some(traj) = &trajectory {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).expect("in-memory write");
        ctx.write(
            "trajectory.csv",
            &String::from_utf8(buf).expect("csv is utf-8"),
        )?;
    }

    let all_pass = rows.iter().all(|r| r.pass);
    let mut text = solution_text(&sol, &spectrum, &r);
    text.push_str("\nvalidation:\n");
    let width = rows
        .iter()
        .map(|r| r.name.chars().count())
        .max()
        .unwrap_or(0);
    for row in &rows {
        let _ = write!(
            text,
            "  {} {:<width$}  value {:>10.3e}  tol {:>10.3e}  margin {:>10.3e}",
            if row.pass { "PASS" } else { "FAIL" },
            row.name,
            row.value,
            row.tolerance,
            row.tolerance - row.value,
        );
        if !row.note.is_empty() {
            let _ = write!(text, "  ({})", row.note);
        }
        text.push('\n');
    }
    ctx.write("report.txt", &text)?;
    ctx.write_summary(&json!({
        "status": if all_pass { "passed" } else { "failed" },
        "spectrum": spectrum_json(&spectrum),
        "residuals": residual_json(&r),
        "checks": rows.iter().map(|row| json!({
            "name": row.name,
            "value": row.value,
            "tolerance": row.tolerance,
            "pass": row.pass,
            "note": row.note,
        })).collect::<Vec<_>>(),
    }))?;
    ctx.say(&text);
    Ok(if !all_pass {
        EXIT_NUMERICAL
    } else {
        verdict_code(spectrum.verdict)
    })
}
