use cpest_core::estimator::InterlacedEstimator;
use cpest_core::linalg::{mat_vec, max_abs, norm, sub, Mat2x4, Vec4};
use cpest_core::model::{theta_bar_from_c, theta_from_c, CpParams, Scenario};
use cpest_core::pipeline::{convergence_fit, run, run_observed, PipelineConfig, RunOutput, StepObserver};
use cpest_core::plant::{simulate, TorqueProfile, TrajectoryPoint, WindProfile};
use cpest_core::regressor::{key_identity_residual, RegressorSample};

fn reference_c() -> CpParams<f64> {
    CpParams::new(65.738, 0.14371, 11.413).unwrap()
}

fn config(t_final: f64) -> PipelineConfig<f64> {
    let mut cfg = PipelineConfig::reference(reference_c(), 0.1).unwrap();
    cfg.plant.t_final = t_final;
    cfg
}

fn nlpre_residual(sample: &RegressorSample<f64>, g: &Vec4<f64>) -> f64 {
    let phi: &Mat2x4<f64> = &sample.phi;
    norm(&sub(&sample.y, &mat_vec(phi, g)))
}

#[derive(Default)]
struct FullRate {
    g: Vec4<f64>,
    eta: [f64; 3],
    w0: Vec4<f64>,
    f0: f64,
    nlpre: f64,
    extended_nlpre: f64,
    deltas: Vec<f64>,
    lyapunov: Vec<f64>,
    lambda_max: Vec<f64>,
}

impl StepObserver<f64> for FullRate {
    fn observe(&mut self, _: &TrajectoryPoint<f64>, sample: &RegressorSample<f64>, est: &InterlacedEstimator<f64>) {
        self.nlpre = self.nlpre.max(nlpre_residual(sample, &self.g));
        let ls = &est.state().ls;
        // W̃(t) = f0 F(t) W̃(0)
        let lhs = sub(&ls.w_hat, &self.g);
        let rhs = mat_vec(&ls.f, &sub(&self.w0, &self.g)).map(|v| v * self.f0);
        self.extended_nlpre = self.extended_nlpre.max(max_abs(&[sub(&lhs, &rhs)]));
        self.deltas.push(est.mixed().delta);
        self.lyapunov.push(est.lyapunov(&self.eta));
        self.lambda_max.push(ls.lambda_max());
    }
}

fn full_rate_run(cfg: &PipelineConfig<f64>) -> (RunOutput<f64>, FullRate) {
    let eta = cfg.true_eta().unwrap();
    let theta = cfg.true_theta().unwrap();
    let mut obs = FullRate {
        g: cpest_core::model::g_of_theta(&theta, cfg.z0()).0,
        eta: eta.as_array(),
        w0: cfg.w0,
        f0: cfg.gains.f0,
        ..FullRate::default()
    };
    let out = run_observed(cfg, &mut obs).unwrap();
    assert!(out.abort.is_none(), "{:?}", out.abort);
    (out, obs)
}

#[test]
fn noiseless_s1_run_invariants() {
    let cfg = config(500.0);
    let (out, obs) = full_rate_run(&cfg);

    assert!(obs.nlpre < 1e-6, "NLPRE residual {}", obs.nlpre);
    assert!(obs.extended_nlpre < 1e-6, "extended NLPRE residual {}", obs.extended_nlpre);

    assert_eq!(out.records[0].mixed.delta, 0.0);
    let dmax = obs.deltas.windows(2).map(|w| w[0] - w[1]).fold(f64::MIN, f64::max);
    assert!(dmax <= 1e-12, "delta decreased by {dmax}");
    let (dlo, dhi) = obs.deltas.iter().fold((f64::MAX, f64::MIN), |(a, b), d| (a.min(*d), b.max(*d)));
    // I − f0 F is formed from F ≈ I early on, so Δ carries absolute roundoff.
    assert!(dlo >= -1e-15 && dhi < 1.0, "delta range [{dlo:e}, {dhi}]");

    let umax = obs.lyapunov.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    assert!(umax <= 1e-12 * obs.lyapunov[0], "U increased by {umax}");

    let lmax = obs.lambda_max.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    assert!(lmax <= 1e-12, "lambda_max increased by {lmax}");

    let last = out.last().unwrap();
    assert!(last.errors.iter().all(|e| *e < 1e-2), "{:?}", last.errors);
    assert!((last.truth.z - reference_c().c2).abs() < 1e-3);

    let fit = convergence_fit(&out, 0.1, 1e-9).unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared > 0.95, "{fit:?}");
}

#[test]
fn overparameterized_ls_does_not_converge() {
    let out = run(&config(500.0)).unwrap();
    let first = &out.records[0];
    let last = out.last().unwrap();
    assert!(last.lambda_max > 0.1 * first.lambda_max);
    let err = out.overparam_errors();
    assert!(err.last().unwrap() >= &(0.5 * err[0]), "{} vs {}", err.last().unwrap(), err[0]);
}

#[test]
fn seeded_noise_runs_are_reproducible() {
    let mut cfg = config(20.0);
    cfg.noise.wind_amplitude = 0.3;
    cfg.noise.rotor_amplitude = 0.5;
    cfg.noise.seed = 11;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    cfg.noise.seed = 12;
    let c = run(&cfg).unwrap();
    assert_ne!(a.records.last(), c.records.last());
}

#[test]
fn key_identity_s1_and_s2() {
    let c = reference_c();
    let mut plant = config(500.0).plant;
    plant.record_dt = plant.h;
    let tr = simulate(&plant).unwrap();
    let theta = theta_from_c(&c, &plant.phys, 9.0).unwrap();
    let r1 = key_identity_residual(&tr, &theta, plant.phys.inertia);
    assert!(r1 < 1e-8, "S1 residual {r1}");

    plant.scenario = Scenario::S2;
    plant.wind = WindProfile::sinusoidal(9.0, 1.0, 0.05);
    plant.torque = TorqueProfile::S2Coupling;
    let tr = simulate(&plant).unwrap();
    let r2 = key_identity_residual(&tr, &theta_bar_from_c(&c, &plant.phys), plant.phys.inertia);
    assert!(r2 < 1e-8, "S2 residual {r2}");
}

#[test]
fn s2_pipeline_converges_under_varying_wind() {
    let mut cfg = config(500.0);
    cfg.plant.scenario = Scenario::S2;
    cfg.plant.wind = WindProfile::sinusoidal(9.0, 1.0, 0.05);
    cfg.plant.torque = TorqueProfile::S2Coupling;
    cfg.gains.alpha = cpest_core::pipeline::default_alpha(&cfg.plant, 0.1).unwrap();
    let (out, obs) = full_rate_run(&cfg);
    assert!(obs.nlpre < 1e-6, "NLPRE residual {}", obs.nlpre);
    let last = out.last().unwrap();
    assert!(last.errors.iter().all(|e| *e < 1e-2), "{:?}", last.errors);
}

#[test]
fn plant_is_fourth_order() {
    let plant = config(20.0).plant;
    let z_at = |h: f64| {
        let mut p = plant.clone();
        p.h = h;
        p.record_dt = h;
        simulate(&p).unwrap().last().unwrap().z
    };
    let (a, b, c) = (z_at(0.04), z_at(0.02), z_at(0.01));
    let ratio = (a - b) / (b - c);
    assert!((ratio - 16.0).abs() < 1.6, "ratio {ratio}");
}
