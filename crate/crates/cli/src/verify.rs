//! The oracle suite run by `cpest verify`.
//!
//! Every check returns an [`OracleReport`]; the suite records the wall time
//! of each and fails if any report fails.

use std::time::{Duration, Instant};

use cpest_core::estimator::{overparam_ls_baseline, InterlacedEstimator};
use cpest_core::linalg::{det_adj4, identity, mat_sub, mat_vec, matmul, max_abs, norm, sub, Mat4};
use cpest_core::model::*;
use cpest_core::oracles::{
    cofactor_adjugate, cofactor_determinant, finite_difference_jacobian, grid_argmax_cp, ode_reference_solution, OracleReport,
};
use cpest_core::pipeline::StepObserver;
use cpest_core::plant::{simulate, PlantConfig, TorqueProfile, TrajectoryPoint};
use cpest_core::regressor::{
    key_identity_residual, swapping_residual, InputSegment, RegressorBuilder, RegressorInput, RegressorSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::CliError;
use crate::experiments::{run_scenario, run_scenario_observed, small_te_sweep, CONVERGED_TOL, Z_STAR_TOL};

/// Knobs for the suite. `corrupt_adjugate` perturbs the production
/// adjugate before it is compared with the oracle, so the suite can be seen
/// to fail.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub corrupt_adjugate: bool,
    /// Only run checks whose name contains this string.
    pub filter: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub runtime_ms: f64,
    pub metadata: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub runtime_ms: f64,
    pub pass: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

type Check = fn(&VerifyOptions) -> Result<OracleReport, CliError>;

pub const RANDOM_SAMPLES: usize = 1000;

pub fn checks() -> Vec<(&'static str, Check)> {
    vec![
        ("parameter-map", check_parameter_map),
        ("z-star-grid", check_z_star_grid),
        ("adjugate-cofactor", check_adjugate),
        ("w-jacobian-fd", check_jacobian),
        ("monotonicity-margin", check_margin),
        ("alpha-forms", check_alpha_forms),
        ("map-consistency", check_map_consistency),
        ("filter-closed-form", check_filter_closed_form),
        ("swapping-lemma", check_swapping),
        ("plant-step-refinement", check_step_refinement),
        ("plant-fourth-order", check_fourth_order),
        ("equilibrium-start", check_equilibrium_start),
        ("s2-constant-wind", check_s2_constant_wind),
        ("key-identity-s1", check_key_identity_s1),
        ("key-identity-s2", check_key_identity_s2),
        ("equilibrium-reached", check_equilibrium_reached),
        ("nlpre-exactness", check_nlpre),
        ("extended-nlpre", check_extended_nlpre),
        ("delta-monotone", check_delta_monotone),
        ("lyapunov-monotone", check_lyapunov),
        ("estimator-convergence", check_convergence),
        ("exponential-rate", check_exponential),
        ("delta-settles", check_delta_settles),
        ("overparam-ls-stalls", check_overparam),
        ("ls-synthetic-pe", check_synthetic_pe),
        ("noise-z-star", check_noise),
        ("te-disturbance-order", check_te_sweep),
    ]
}

pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let mut out = Vec::new();
    for (name, check) in checks() {
        if opts.filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        let t0 = Instant::now();
        let report = check(opts).unwrap_or_else(|e| OracleReport::new(name, f64::NAN, 0.0).with("error", e));
        let runtime = t0.elapsed();
        out.push(CheckOutcome {
            name: name.to_string(),
            pass: report.pass,
            max_residual: report.max_residual,
            tolerance: report.tolerance,
            runtime_ms: ms(runtime),
            metadata: report.metadata,
        });
    }
    let pass = !out.is_empty() && out.iter().all(|c| c.pass);
    VerifyReport { checks: out, runtime_ms: ms(start.elapsed()), pass }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn reference_plant() -> Result<PlantConfig<f64>, CliError> {
    Ok(ScenarioConfig::preset(ScenarioKind::S1).pipeline()?.plant)
}

fn rng(opts: &VerifyOptions) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed)
}

fn random_eta(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(1e-3..1.0), rng.gen_range(1e-4..1.0), rng.gen_range(1.0..20.0)]
}

fn check_parameter_map(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let t0 = Instant::now();
    let c = c_from_kappas(&HeierCoefficients::reference(), 1.84)?;
    let elapsed = t0.elapsed();
    let expected = [65.74, 0.144, 11.41];
    let sig3 = |x: f64| format!("{x:.2e}");
    let mismatches = c.as_array().iter().zip(expected).filter(|(a, b)| sig3(**a) != sig3(*b)).count();
    let mut r = OracleReport::new("parameter-map", mismatches as f64, 0.0)
        .with("c", format!("({:.3}, {:.5}, {:.3})", c.c1, c.c2, c.c3))
        .with("runtime_us", format!("{:.1}", elapsed.as_secs_f64() * 1e6));
    if elapsed >= Duration::from_millis(1) {
        r.pass = false;
    }
    Ok(r)
}

fn check_z_star_grid(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let c = reference_plant()?.c;
    let n = 100_000;
    let (lo, hi) = (1e-5, 1.0);
    let grid = grid_argmax_cp(&c, lo, hi, n)?;
    let step = (hi - lo) / (n - 1) as f64;
    Ok(OracleReport::new("z-star-grid", (grid - z_star(&c)?).abs(), step).with("grid_points", n).with("z_star", grid))
}

fn check_adjugate(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for _ in 0..RANDOM_SAMPLES {
        let mut a = [[0.0; 4]; 4];
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        // I − F for a symmetric positive semidefinite F with |F| < 1.
        let ata = matmul(&cpest_core::linalg::transpose(&a), &a);
        let s = rng.gen_range(0.1..1.0) / (1.0 + ata.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
        let m: Mat4<f64> = mat_sub(&identity(), &ata.map(|r| r.map(|v| v * s)));
        let (det, mut adj) = det_adj4(&m);
        if opts.corrupt_adjugate {
            adj[1][2] += 1e-3;
        }
        worst = worst.max(max_abs(&mat_sub(&adj, &cofactor_adjugate(&m)))).max((det - cofactor_determinant(&m)).abs());
        let id: Mat4<f64> = identity();
        worst_identity = worst_identity.max(max_abs(&mat_sub(&matmul(&adj, &m), &id.map(|r| r.map(|v| v * det)))));
    }
    let mut r = OracleReport::new("adjugate-cofactor", worst, 1e-12)
        .with("samples", RANDOM_SAMPLES)
        .with("seed", opts.seed)
        .with("identity_residual", format!("{worst_identity:.2e}"));
    r.pass &= worst_identity <= 1e-10;
    Ok(r)
}

fn check_jacobian(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_SAMPLES {
        let e = random_eta(&mut rng);
        let fd = finite_difference_jacobian(|x: &[f64; 3]| w_of_eta(x).0, &e, 1e-6);
        let an = w_jacobian(&e);
        worst = worst.max(max_abs(&mat_sub(&fd, &an)));
    }
    Ok(OracleReport::new("w-jacobian-fd", worst, 1e-6).with("samples", RANDOM_SAMPLES).with("step", 1e-6))
}

fn check_margin(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let mut worst_at_bound = f64::MIN;
    let mut min_at_double = f64::MAX;
    for _ in 0..RANDOM_SAMPLES {
        let e = random_eta(&mut rng);
        let bound = alpha_lower_bound(&e)?;
        worst_at_bound = worst_at_bound.max(monotonicity_margin(&e, bound));
        min_at_double = min_at_double.min(monotonicity_margin(&e, 2.0 * bound));
    }
    let mut r = OracleReport::new("monotonicity-margin", worst_at_bound.max(0.0), 1e-9)
        .with("samples", RANDOM_SAMPLES)
        .with("min_margin_at_2x", format!("{min_at_double:.3e}"));
    r.pass &= min_at_double > 0.0;
    Ok(r)
}

fn check_alpha_forms(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let phys = PhysicalParams::<f64>::reference();
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_SAMPLES {
        let c = CpParams::<f64>::new(rng.gen_range(1.0..200.0), rng.gen_range(0.01..0.5), rng.gen_range(1.0..30.0))?;
        let v = rng.gen_range(3.0..20.0);
        let z0 = rng.gen_range(0.05..2.0);
        let theta = theta_from_c(&c, &phys, v)?;
        let a = alpha_lower_bound(&eta_from_theta(&theta, z0).as_array())?;
        let b = alpha_lower_bound_physical(&c, theta_gain(&phys, Scenario::S1, v), z0)?;
        worst = worst.max(((a - b) / a).abs());
    }
    Ok(OracleReport::new("alpha-forms", worst, 1e-9).with("samples", RANDOM_SAMPLES))
}

fn check_map_consistency(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let phys = PhysicalParams::<f64>::reference();
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_SAMPLES {
        let c = CpParams::<f64>::new(rng.gen_range(1.0..200.0), rng.gen_range(0.01..0.5), rng.gen_range(1.0..30.0))?;
        let v = rng.gen_range(3.0..20.0);
        let z0 = rng.gen_range(0.05..2.0);
        let theta = theta_from_c(&c, &phys, v)?;
        let g = g_of_theta(&theta, z0);
        let w = w_of_eta(&eta_from_theta(&theta, z0).as_array()).0;
        for i in 0..4 {
            worst = worst.max(((g.0[i] - w[i]) / g.0[i]).abs());
        }
        worst = worst.max(g.consistency_defect().abs() / (g.0[0] * g.0[3]));
        let back = c_from_theta(&theta, &phys, v)?;
        for (x, y) in c.as_array().iter().zip(back.as_array()) {
            worst = worst.max(((x - y) / x).abs());
        }
    }
    Ok(OracleReport::new("map-consistency", worst, 1e-12).with("samples", RANDOM_SAMPLES))
}

fn check_filter_closed_form(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut reg = RegressorBuilder::init(0.5, 1.0, Scenario::S1)?;
    let input = RegressorInput { z: 0.5, v_w: 9.0 };
    let h = 1e-3;
    let mut worst = 0.0f64;
    for k in 1..=10_000 {
        reg.advance(&InputSegment::linear(input, input), h)?;
        worst = worst.max((reg.bank().one - (1.0 - (-(k as f64) * h).exp())).abs());
    }
    Ok(OracleReport::new("filter-closed-form", worst, 1e-6).with("horizon_s", 10))
}

fn check_swapping(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let r = swapping_residual(|t: f64| t, |_| 1.0, f64::sin, f64::cos, 1.0, 1e-3, 10.0)?;
    Ok(OracleReport::new("swapping-lemma", r, 1e-5).with("x", "t").with("u", "sin t"))
}

fn check_step_refinement(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let plant = reference_plant()?;
    let coarse = simulate(&plant)?;
    let fine = ode_reference_solution(&plant, 16)?;
    let worst = coarse.points.iter().zip(&fine.points).map(|(a, b)| (a.z - b.z).abs()).fold(0.0, f64::max);
    Ok(OracleReport::new("plant-step-refinement", worst, 1e-8).with("refine", 16))
}

fn check_fourth_order(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut plant = reference_plant()?;
    plant.t_final = 20.0;
    let z_at = |h: f64| -> Result<f64, CliError> {
        let mut p = plant.clone();
        p.h = h;
        p.record_dt = h;
        Ok(simulate(&p)?.last().expect("recorded").z)
    };
    let (a, b, c) = (z_at(0.04)?, z_at(0.02)?, z_at(0.01)?);
    let ratio = (a - b) / (b - c);
    Ok(OracleReport::new("plant-fourth-order", (ratio - 16.0).abs() / 16.0, 0.1).with("ratio", format!("{ratio:.3}")))
}

fn check_equilibrium_start(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut plant = reference_plant()?;
    plant.omega0 = plant.wind.base / plant.c.c2;
    plant.t_final = 50.0;
    let tr = simulate(&plant)?;
    let worst = tr.points.iter().map(|p| (p.z - plant.c.c2).abs()).fold(0.0, f64::max);
    Ok(OracleReport::new("equilibrium-start", worst, 1e-12))
}

fn check_s2_constant_wind(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut s1 = reference_plant()?;
    s1.t_final = 100.0;
    let mut s2 = s1.clone();
    s2.scenario = Scenario::S2;
    s2.torque = TorqueProfile::S2Coupling;
    let v = s1.wind.base;
    let (a, b) = (simulate(&s1)?, simulate(&s2)?);
    let worst = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| (p.omega - q.omega).abs().max((v * p.xi1 - q.xi1).abs()).max((v * p.xi2 - q.xi2).abs()))
        .fold(0.0, f64::max);
    Ok(OracleReport::new("s2-constant-wind", worst, 1e-10))
}

fn check_key_identity_s1(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut plant = reference_plant()?;
    plant.record_dt = plant.h;
    let tr = simulate(&plant)?;
    let theta = theta_from_c(&plant.c, &plant.phys, plant.wind.base)?;
    let r = key_identity_residual(&tr, &theta, plant.phys.inertia);
    Ok(OracleReport::new("key-identity-s1", r, 1e-8).with("samples", tr.points.len()))
}

fn check_key_identity_s2(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let cfg = ScenarioConfig::preset(ScenarioKind::S2);
    let mut plant = cfg.pipeline()?.plant;
    plant.record_dt = plant.h;
    let tr = simulate(&plant)?;
    let theta = theta_bar_from_c(&plant.c, &plant.phys);
    let r = key_identity_residual(&tr, &theta, plant.phys.inertia);
    Ok(OracleReport::new("key-identity-s2", r, 1e-8).with("wind", "9 + sin(0.1 pi t)"))
}

fn check_equilibrium_reached(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let plant = reference_plant()?;
    let tr = simulate(&plant)?;
    let z = tr.last().expect("recorded").z;
    Ok(OracleReport::new("equilibrium-reached", (z - plant.c.c2).abs(), 1e-3).with("z_final", z))
}

/// Full-rate view of the noiseless S1 run.
struct FullRate {
    g: [f64; 4],
    eta: [f64; 3],
    w0: [f64; 4],
    f0: f64,
    nlpre: f64,
    extended: f64,
    delta_drop: f64,
    delta_min: f64,
    u0: Option<f64>,
    u_prev: f64,
    u_rise: f64,
}

impl StepObserver<f64> for FullRate {
    fn observe(&mut self, _: &TrajectoryPoint<f64>, s: &RegressorSample<f64>, est: &InterlacedEstimator<f64>) {
        self.nlpre = self.nlpre.max(norm(&sub(&s.y, &mat_vec(&s.phi, &self.g))));
        let ls = &est.state().ls;
        let lhs = sub(&ls.w_hat, &self.g);
        let rhs = mat_vec(&ls.f, &sub(&self.w0, &self.g)).map(|v| v * self.f0);
        self.extended = self.extended.max(max_abs(&[sub(&lhs, &rhs)]));
        let d = est.mixed().delta;
        self.delta_drop = self.delta_drop.max(self.delta_min - d);
        self.delta_min = self.delta_min.max(d);
        let u = est.lyapunov(&self.eta);
        if self.u0.is_none() {
            self.u0 = Some(u);
        } else {
            self.u_rise = self.u_rise.max(u - self.u_prev);
        }
        self.u_prev = u;
    }
}

fn full_rate_s1() -> Result<FullRate, CliError> {
    let cfg = ScenarioConfig::preset(ScenarioKind::S1);
    let pc = cfg.pipeline()?;
    let theta = pc.true_theta()?;
    let mut obs = FullRate {
        g: g_of_theta(&theta, pc.z0()).0,
        eta: pc.true_eta()?.as_array(),
        w0: pc.w0,
        f0: pc.gains.f0,
        nlpre: 0.0,
        extended: 0.0,
        delta_drop: 0.0,
        delta_min: 0.0,
        u0: None,
        u_prev: 0.0,
        u_rise: 0.0,
    };
    let report = run_scenario_observed(&cfg, &mut obs)?;
    if let Some(e) = report.summary.abort {
        return Err(CliError::Numeric(e));
    }
    Ok(obs)
}

fn check_nlpre(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    Ok(OracleReport::new("nlpre-exactness", full_rate_s1()?.nlpre, 1e-6))
}

fn check_extended_nlpre(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    Ok(OracleReport::new("extended-nlpre", full_rate_s1()?.extended, 1e-6))
}

fn check_delta_monotone(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    Ok(OracleReport::new("delta-monotone", full_rate_s1()?.delta_drop, 1e-12))
}

fn check_lyapunov(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let obs = full_rate_s1()?;
    let u0 = obs.u0.unwrap_or(0.0);
    Ok(OracleReport::new("lyapunov-monotone", obs.u_rise.max(0.0) / u0, 1e-12).with("u0", format!("{u0:.3e}")))
}

fn check_convergence(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let s = run_scenario(&ScenarioConfig::preset(ScenarioKind::S1))?.summary;
    let worst = s.normalized_errors.iter().cloned().fold(0.0, f64::max);
    Ok(OracleReport::new("estimator-convergence", worst, CONVERGED_TOL)
        .with("errors", format!("{:.2e}/{:.2e}/{:.2e}", s.normalized_errors[0], s.normalized_errors[1], s.normalized_errors[2])))
}

fn check_exponential(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let s = run_scenario(&ScenarioConfig::preset(ScenarioKind::S1))?.summary;
    let Some(fit) = s.fit else {
        return Ok(OracleReport::new("exponential-rate", f64::NAN, 0.05).with("fit", "window too short"));
    };
    let mut r = OracleReport::new("exponential-rate", 1.0 - fit.r_squared, 0.05)
        .with("slope", format!("{:.4}", fit.slope))
        .with("r2", format!("{:.4}", fit.r_squared))
        .with("window", format!("[{:.1}, {:.1}]", fit.t_start, fit.t_end));
    r.pass &= fit.slope < 0.0;
    Ok(r)
}

fn check_delta_settles(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let out = run_scenario(&ScenarioConfig::preset(ScenarioKind::S1))?.summary;
    let rel = (out.delta_final - out.delta_at_80pct).abs() / out.delta_final;
    let mut r = OracleReport::new("delta-settles", rel, 0.05).with("delta_final", format!("{:.5}", out.delta_final));
    r.pass &= out.delta_final > 0.0;
    Ok(r)
}

fn check_overparam(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let s = run_scenario(&ScenarioConfig::preset(ScenarioKind::BaselineOverparam))?.summary;
    // Residual is how far the LS stage got toward convergence on each measure.
    let lambda_short = (0.1 / s.overparam.lambda_max_ratio).max(0.0);
    let error_short = (0.5 / s.overparam.error_ratio).max(0.0);
    let mut r = OracleReport::new("overparam-ls-stalls", lambda_short.max(error_short), 1.0)
        .with("lambda_max_ratio", format!("{:.3}", s.overparam.lambda_max_ratio))
        .with("error_ratio", format!("{:.3}", s.overparam.error_ratio));
    r.pass = s.flags.ls_not_converged;
    Ok(r)
}

fn check_synthetic_pe(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut rng = rng(opts);
    let w_true = [0.3, -0.2, 1.5, 0.7];
    let freqs: Vec<f64> = (0..8).map(|_| rng.gen_range(0.3..3.0)).collect();
    let h = 1e-2;
    let at = |t: f64| {
        let phi = [
            [(freqs[0] * t).sin(), (freqs[1] * t).cos(), 1.0, (freqs[2] * t).sin()],
            [(freqs[3] * t).cos(), 0.5 + 0.5 * (freqs[4] * t).sin(), (freqs[5] * t).cos(), -1.0],
        ];
        RegressorSample { t, y: mat_vec(&phi, &w_true), phi }
    };
    let segs = (0..5000).map(|k| {
        let t = k as f64 * h;
        [at(t), at(t + 0.5 * h), at(t + h)]
    });
    let trace = overparam_ls_baseline(segs, 10.0, 1.0, [0.0; 4], h, 100)?;
    let lmax = *trace.lambda_max.last().expect("recorded");
    Ok(OracleReport::new("ls-synthetic-pe", lmax, 1e-2).with("horizon_s", 50))
}

fn check_noise(opts: &VerifyOptions) -> Result<OracleReport, CliError> {
    let mut cfg = ScenarioConfig::preset(ScenarioKind::S1Noise);
    cfg.seed = opts.seed;
    let s = run_scenario(&cfg)?.summary;
    let biased = s.normalized_errors.iter().any(|e| *e > CONVERGED_TOL);
    let mut r = OracleReport::new("noise-z-star", s.z_star_rel_error, Z_STAR_TOL)
        .with("seed", cfg.seed)
        .with("biased", biased)
        .with("errors", format!("{:.2e}/{:.2e}/{:.2e}", s.normalized_errors[0], s.normalized_errors[1], s.normalized_errors[2]));
    r.pass &= biased;
    Ok(r)
}

fn check_te_sweep(_: &VerifyOptions) -> Result<OracleReport, CliError> {
    let cfg = ScenarioConfig::preset(ScenarioKind::S1SmallTe);
    let sweep = small_te_sweep(&cfg, &cfg.sweep.te_over_inertia)?;
    let spread = sweep.ratio_spread.unwrap_or(f64::NAN);
    let mut r = OracleReport::new("te-disturbance-order", spread, 2.0);
    for row in &sweep.rows {
        r = r.with(format!("sup_d@{}J", row.te_over_inertia), format!("{:.3e}", row.sup_d));
    }
    r.pass = sweep.pass;
    Ok(r)
}
