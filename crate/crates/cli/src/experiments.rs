//! Runs, curves and the generator-torque sweep, plus their file output.

use std::fs;
use std::path::{Path, PathBuf};

use cpest_core::estimator::InterlacedEstimator;
use cpest_core::linalg::{mat_vec, sub};
use cpest_core::model::{cp_reduced, z_star, CpParams};
use cpest_core::pipeline::{convergence_fit, run_observed, ExpFit, Record, RunOutput, StepObserver};
use cpest_core::plant::TrajectoryPoint;
use cpest_core::regressor::RegressorSample;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, TorqueLaw};
use crate::error::CliError;

/// Δ must first exceed this fraction of its final value to open the fit window.
pub const FIT_DELTA_FRACTION: f64 = 0.1;
/// Relative |η̃| at which the fit window closes.
pub const FIT_FLOOR: f64 = 1e-9;
pub const CONVERGED_TOL: f64 = 1e-2;
pub const Z_STAR_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitSummary {
    pub slope: f64,
    pub r_squared: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

impl From<ExpFit> for FitSummary {
    fn from(f: ExpFit) -> Self {
        FitSummary { slope: f.slope, r_squared: f.r_squared, t_start: f.t_start, t_end: f.t_end, points: f.points }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverparamSummary {
    /// `|Ŵ − G(θ)|` at `t = 0` and at the end.
    pub error_initial: f64,
    pub error_final: f64,
    pub error_ratio: f64,
    pub lambda_max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    /// All normalized errors below 1e-2.
    pub converged: bool,
    /// Negative slope with R² > 0.95.
    pub exponential: bool,
    /// Δ(T_f) > 0 and within 5 % of Δ(0.8 T_f).
    pub delta_settled: bool,
    /// λ_max(F) stays above 10 % of its initial value and the 4-vector
    /// estimate keeps at least half of its initial error.
    pub ls_not_converged: bool,
    /// `|ẑ⋆ − z⋆| / z⋆ < 0.05`.
    pub z_star_accurate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub t_final: f64,
    pub records: usize,
    pub abort: Option<String>,
    pub alpha: f64,
    pub c_true: [f64; 3],
    pub c_hat_initial: [f64; 3],
    pub c_hat: [f64; 3],
    pub normalized_errors: [f64; 3],
    pub delta_final: f64,
    pub delta_at_80pct: f64,
    pub lambda_max_f_initial: f64,
    pub lambda_max_f_final: f64,
    pub lambda_min_f_final: f64,
    pub z_star_true: f64,
    pub z_star_hat: f64,
    pub z_star_rel_error: f64,
    pub fit: Option<FitSummary>,
    pub overparam: OverparamSummary,
    pub flags: Flags,
}

/// A finished run and its summary.
pub struct RunReport {
    pub output: RunOutput<f64>,
    pub summary: RunSummary,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, CliError> {
    run_scenario_observed(cfg, &mut ())
}

pub fn run_scenario_observed<O: StepObserver<f64>>(cfg: &ScenarioConfig, observer: &mut O) -> Result<RunReport, CliError> {
    let pc = cfg.pipeline()?;
    let output = run_observed(&pc, observer)?;
    let summary = summarize(cfg, &output, pc.gains.alpha);
    Ok(RunReport { output, summary })
}

fn summarize(cfg: &ScenarioConfig, out: &RunOutput<f64>, alpha: f64) -> RunSummary {
    let first = &out.records[0];
    let last = out.last().expect("a run records its initial state");
    let t_end = last.t;
    let at_80 =
        out.records.iter().min_by(|a, b| (a.t - 0.8 * t_end).abs().total_cmp(&(b.t - 0.8 * t_end).abs())).expect("non-empty");
    let zs = |c: &CpParams<f64>| z_star(c).unwrap_or(f64::NAN);
    let z_true = zs(&out.c_true);
    let z_hat = zs(&last.c_hat);
    let z_err = ((z_hat - z_true) / z_true).abs();
    let fit = convergence_fit(out, FIT_DELTA_FRACTION, FIT_FLOOR).map(FitSummary::from);
    let op = out.overparam_errors();
    let overparam = OverparamSummary {
        error_initial: op[0],
        error_final: op[op.len() - 1],
        error_ratio: op[op.len() - 1] / op[0],
        lambda_max_ratio: last.lambda_max / first.lambda_max,
    };
    let flags = Flags {
        converged: last.errors.iter().all(|e| *e < CONVERGED_TOL),
        exponential: fit.as_ref().is_some_and(|f| f.slope < 0.0 && f.r_squared > 0.95),
        delta_settled: last.mixed.delta > 0.0 && (last.mixed.delta - at_80.mixed.delta).abs() <= 0.05 * last.mixed.delta,
        ls_not_converged: overparam.lambda_max_ratio > 0.1 && overparam.error_ratio >= 0.5,
        z_star_accurate: z_err < Z_STAR_TOL,
    };
    RunSummary {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        t_final: t_end,
        records: out.records.len(),
        abort: out.abort.as_ref().map(|e| e.to_string()),
        alpha,
        c_true: out.c_true.as_array(),
        c_hat_initial: first.c_hat.as_array(),
        c_hat: last.c_hat.as_array(),
        normalized_errors: last.errors,
        delta_final: last.mixed.delta,
        delta_at_80pct: at_80.mixed.delta,
        lambda_max_f_initial: first.lambda_max,
        lambda_max_f_final: last.lambda_max,
        lambda_min_f_final: last.lambda_min,
        z_star_true: z_true,
        z_star_hat: z_hat,
        z_star_rel_error: z_err,
        fit,
        overparam,
        flags,
    }
}

pub const TIMESERIES_HEADER: [&str; 25] = [
    "t",
    "z",
    "z_dot",
    "omega",
    "v_w",
    "z_meas",
    "y1",
    "y2",
    "delta",
    "lambda_min_f",
    "lambda_max_f",
    "eta_hat1",
    "eta_hat2",
    "eta_hat3",
    "c_hat1",
    "c_hat2",
    "c_hat3",
    "err1",
    "err2",
    "err3",
    "w_hat1",
    "w_hat2",
    "w_hat3",
    "w_hat4",
    "overparam_err",
];

fn timeseries_row(r: &Record<f64>, overparam_err: f64) -> Vec<String> {
    let mut row = vec![r.t, r.truth.z, r.truth.z_dot, r.truth.omega, r.truth.v_w, r.z_meas, r.sample.y[0], r.sample.y[1]];
    row.extend([r.mixed.delta, r.lambda_min, r.lambda_max]);
    row.extend(r.eta_hat);
    row.extend(r.c_hat.as_array());
    row.extend(r.errors);
    row.extend(r.w_hat);
    row.push(overparam_err);
    row.into_iter().map(fmt_f64).collect()
}

/// Shortest round-trip representation; deterministic across runs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_timeseries(path: &Path, out: &RunOutput<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TIMESERIES_HEADER)?;
    for (r, e) in out.records.iter().zip(out.overparam_errors()) {
        w.write_record(timeseries_row(r, e))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub z: f64,
    pub cp_true: f64,
    pub cp_hat: f64,
    pub cp_initial: Option<f64>,
}

/// Uniform grid of `n` points on `[z_min, z_max]` (a single point at
/// `z_min` when `n == 1`).
pub fn curve_grid(z_min: f64, z_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![z_min],
        _ => (0..n).map(|i| z_min + (z_max - z_min) * i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn emit_cp_curve(
    c_true: &CpParams<f64>,
    c_hat: &CpParams<f64>,
    c_initial: Option<&CpParams<f64>>,
    grid: &[f64],
) -> Vec<CurveRow> {
    grid.iter()
        .map(|&z| CurveRow {
            z,
            cp_true: cp_reduced(z, c_true),
            cp_hat: cp_reduced(z, c_hat),
            cp_initial: c_initial.map(|c| cp_reduced(z, c)),
        })
        .collect()
}

pub fn write_curve(path: &Path, rows: &[CurveRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["z", "cp_true", "cp_hat", "cp_initial"])?;
    for r in rows {
        w.write_record([fmt_f64(r.z), fmt_f64(r.cp_true), fmt_f64(r.cp_hat), r.cp_initial.map(fmt_f64).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_curve(report: &RunReport, cfg: &ScenarioConfig) -> Vec<CurveRow> {
    let out = &report.output;
    let grid = curve_grid(cfg.output.curve_z_min, cfg.output.curve_z_max, cfg.output.curve_points);
    let last = out.last().expect("non-empty");
    emit_cp_curve(&out.c_true, &last.c_hat, Some(&out.records[0].c_hat), &grid)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `timeseries.csv`, `curve.csv`, `summary.json` and the effective
/// `config.toml` into `dir`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, report: &RunReport) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    write_timeseries(&dir.join("timeseries.csv"), &report.output)?;
    write_curve(&dir.join("curve.csv"), &run_curve(report, cfg))?;
    write_json(&dir.join("summary.json"), &report.summary)?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

pub fn run_dir(root: &Path, cfg: &ScenarioConfig) -> PathBuf {
    root.join(format!("{}-seed{}", cfg.scenario.name(), cfg.seed))
}

/// Worst NLPRE residual `|y − φ G(θ)|∞` of a regressor that ignores `Te`,
/// next to `e^{−θ3 z0} (F[τ_d], F[τ_d / z³])` integrated from the truth.
struct DisturbanceProbe {
    g: [f64; 4],
    theta3: f64,
    scale: f64,
    sigma: f64,
    inertia: f64,
    h: f64,
    filt: [f64; 2],
    prev: Option<[f64; 2]>,
    sup_residual: f64,
    sup_filtered: f64,
}

impl DisturbanceProbe {
    fn input(&self, p: &TrajectoryPoint<f64>) -> [f64; 2] {
        let tau_d = cpest_core::model::disturbance_tau_d(p.z, p.z_dot, p.tau(self.inertia), p.tau_integral, self.theta3);
        [tau_d, tau_d / (p.z * p.z * p.z)]
    }
}

impl StepObserver<f64> for DisturbanceProbe {
    fn observe(&mut self, truth: &TrajectoryPoint<f64>, sample: &RegressorSample<f64>, _: &InterlacedEstimator<f64>) {
        let u1 = self.input(truth);
        // Trapezoidal step of x' = σ (u − x) from the previous sample.
        let u0 = self.prev.unwrap_or(u1);
        let a = 0.5 * self.sigma * self.h;
        for i in 0..2 {
            self.filt[i] = ((1.0 - a) * self.filt[i] + a * (u0[i] + u1[i])) / (1.0 + a);
        }
        self.prev = Some(u1);
        let d = sub(&sample.y, &mat_vec(&sample.phi, &self.g));
        let df = self.filt.map(|v| v * self.scale);
        self.sup_residual = self.sup_residual.max(d[0].abs().max(d[1].abs()));
        self.sup_filtered = self.sup_filtered.max(df[0].abs().max(df[1].abs()));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub te_over_inertia: f64,
    pub te: f64,
    pub sup_d: f64,
    /// Same bound from `τ_d` filtered directly.
    pub sup_d_filtered: f64,
    pub sup_d_over_te: Option<f64>,
    pub normalized_errors: [f64; 3],
    pub abort: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// max / min of `sup|d| / |Te|` over the nonzero points.
    pub ratio_spread: Option<f64>,
    pub pass: bool,
}

pub fn small_te_sweep(cfg: &ScenarioConfig, te_over_inertia: &[f64]) -> Result<SweepReport, CliError> {
    let rows = te_over_inertia
        .par_iter()
        .map(|&f| {
            let mut c = cfg.clone();
            c.torque.law = if f == 0.0 { TorqueLaw::Zero } else { TorqueLaw::Constant };
            c.torque.te_over_inertia = f;
            let pc = c.pipeline()?;
            let theta = pc.true_theta()?;
            let z0 = pc.z0();
            let mut probe = DisturbanceProbe {
                g: cpest_core::model::g_of_theta(&theta, z0).0,
                theta3: theta.theta3,
                scale: (-theta.theta3 * z0).exp(),
                sigma: pc.sigma,
                inertia: pc.plant.phys.inertia,
                h: pc.plant.h,
                filt: [0.0; 2],
                prev: None,
                sup_residual: 0.0,
                sup_filtered: 0.0,
            };
            let report = run_scenario_observed(&c, &mut probe)?;
            let te = f * pc.plant.phys.inertia;
            let last = report.output.last().expect("non-empty");
            Ok(SweepRow {
                te_over_inertia: f,
                te,
                sup_d: probe.sup_residual,
                sup_d_filtered: probe.sup_filtered,
                sup_d_over_te: (te != 0.0).then(|| probe.sup_residual / te.abs()),
                normalized_errors: last.errors,
                abort: report.summary.abort,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.sup_d_over_te).collect();
    let ratio_spread = (!ratios.is_empty()).then(|| {
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    });
    let pass = ratio_spread.is_some_and(|s| s <= 2.0) && rows.iter().all(|r| r.abort.is_none());
    Ok(SweepReport { rows, ratio_spread, pass })
}

pub fn write_sweep(path: &Path, report: &SweepReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["te_over_inertia", "te", "sup_d", "sup_d_filtered", "sup_d_over_te", "err1", "err2", "err3"])?;
    for r in &report.rows {
        let mut row = vec![fmt_f64(r.te_over_inertia), fmt_f64(r.te), fmt_f64(r.sup_d), fmt_f64(r.sup_d_filtered)];
        row.push(r.sup_d_over_te.map(fmt_f64).unwrap_or_default());
        row.extend(r.normalized_errors.map(fmt_f64));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
