//! End-to-end run: plant, measurement, regressor and estimator advanced on
//! one shared step.

use crate::error::{Error, Result};
use crate::estimator::{c_hat, EstimatorGains, InterlacedEstimator, MixedSample};
use crate::linalg::{norm, sub, Vec3, Vec4};
use crate::model::{
    alpha_bound_over_box, eta_from_theta, g_of_theta, theta_bar_from_c, theta_from_c, theta_gain, CpParams, EtaParams, Scenario,
    ThetaParams,
};
use crate::plant::{NoiseSource, NoiseSpec, Plant, PlantConfig, TrajectoryPoint};
use crate::regressor::{InputSegment, RegressorBuilder, RegressorInput, RegressorSample};
use crate::scalar::Real;

/// Where the estimator takes `z(0)` from: the filter initial conditions, the
/// `η` rescaling and the map back to `ĉ` all use it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialZ {
    /// The plant's initial condition, known to the experimenter.
    #[default]
    Known,
    /// The first (possibly noisy) measurement.
    Measured,
}

/// Everything a run needs besides the plant.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig<T> {
    pub plant: PlantConfig<T>,
    pub noise: NoiseSpec<T>,
    /// Filter bandwidth σ.
    pub sigma: T,
    pub gains: EstimatorGains<T>,
    /// `Ŵ(0)`.
    pub w0: Vec4<T>,
    /// `η̂(0)`; `None` means half the true `η`.
    pub eta0: Option<Vec3<T>>,
    /// Wind speed used to turn `η̂` into `ĉ` in S1; `None` uses `v_w(0)`.
    pub nominal_wind: Option<T>,
    pub initial_z: InitialZ,
}

impl<T: Real> PipelineConfig<T> {
    /// Reference plant with `σ = 1`, default gains and `α` at twice its lower
    /// bound over a ±`prior_halfwidth` relative box around `c`.
    pub fn reference(c: CpParams<T>, prior_halfwidth: T) -> Result<Self> {
        let plant = PlantConfig::reference(c);
        let alpha = default_alpha(&plant, prior_halfwidth)?;
        Ok(PipelineConfig {
            plant,
            noise: NoiseSpec::none(),
            sigma: T::one(),
            gains: EstimatorGains::reference(alpha),
            w0: [T::zero(); 4],
            eta0: None,
            nominal_wind: None,
            initial_z: InitialZ::Known,
        })
    }

    pub fn z0(&self) -> T {
        self.plant.wind.speed(T::zero()) / self.plant.omega0
    }

    pub fn wind_for_c(&self) -> T {
        self.nominal_wind.unwrap_or_else(|| self.plant.wind.speed(T::zero()))
    }

    pub fn true_theta(&self) -> Result<ThetaParams<T>> {
        let p = &self.plant;
        match p.scenario {
            Scenario::S1 => theta_from_c(&p.c, &p.phys, self.wind_for_c()),
            Scenario::S2 => Ok(theta_bar_from_c(&p.c, &p.phys)),
        }
    }

    pub fn true_eta(&self) -> Result<EtaParams<T>> {
        Ok(eta_from_theta(&self.true_theta()?, self.z0()))
    }
}

/// `2 ×` the α lower bound over the box `c (1 ± halfwidth)`.
pub fn default_alpha<T: Real>(plant: &PlantConfig<T>, halfwidth: T) -> Result<T> {
    if !(halfwidth >= T::zero() && halfwidth < T::one()) {
        return Err(Error::invalid("prior_halfwidth", format!("must lie in [0, 1), got {halfwidth}")));
    }
    let c = &plant.c;
    let lo = CpParams::new(c.c1 * (T::one() - halfwidth), c.c2 * (T::one() - halfwidth), c.c3 * (T::one() - halfwidth))?;
    let hi = CpParams::new(c.c1 * (T::one() + halfwidth), c.c2 * (T::one() + halfwidth), c.c3 * (T::one() + halfwidth))?;
    let v = plant.wind.speed(T::zero());
    let gain = theta_gain(&plant.phys, plant.scenario, v);
    let z0 = v / plant.omega0;
    Ok(T::lit(2.0) * alpha_bound_over_box(&lo, &hi, gain, z0)?)
}

/// One recorded row of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record<T> {
    pub t: T,
    pub truth: TrajectoryPoint<T>,
    /// Measured `z` fed to the regressor.
    pub z_meas: T,
    pub sample: RegressorSample<T>,
    pub mixed: MixedSample<T>,
    pub w_hat: Vec4<T>,
    pub lambda_min: T,
    pub lambda_max: T,
    pub eta_hat: Vec3<T>,
    pub c_hat: CpParams<T>,
    pub errors: [T; 3],
}

/// Result of a run. `abort` carries the numeric error that stopped the run
/// early, if any; the records up to that point are kept.
#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub records: Vec<Record<T>>,
    pub c_true: CpParams<T>,
    pub eta_true: EtaParams<T>,
    pub g_true: Vec4<T>,
    pub abort: Option<Error>,
}

impl<T: Real> RunOutput<T> {
    pub fn last(&self) -> Option<&Record<T>> {
        self.records.last()
    }

    /// `|Ŵ − G(θ)|` at each record.
    pub fn overparam_errors(&self) -> Vec<T> {
        self.records.iter().map(|r| norm(&sub(&r.w_hat, &self.g_true))).collect()
    }
}

/// Observer invoked after every step with the full-rate state.
pub trait StepObserver<T> {
    fn observe(&mut self, truth: &TrajectoryPoint<T>, sample: &RegressorSample<T>, estimator: &InterlacedEstimator<T>);
}

impl<T> StepObserver<T> for () {
    fn observe(&mut self, _: &TrajectoryPoint<T>, _: &RegressorSample<T>, _: &InterlacedEstimator<T>) {}
}

/// Runs the closed pipeline, recording every `record_dt` and at the end.
pub fn run<T: Real>(config: &PipelineConfig<T>) -> Result<RunOutput<T>> {
    run_observed(config, &mut ())
}

pub fn run_observed<T: Real, O: StepObserver<T>>(config: &PipelineConfig<T>, observer: &mut O) -> Result<RunOutput<T>> {
    let pc = &config.plant;
    let mut plant = Plant::new(pc.clone())?;
    let mut noise = NoiseSource::new(config.noise)?;
    let exact = config.noise.is_silent() && pc.wind.has_exact_derivative();
    let c_true = pc.c;
    let theta = config.true_theta()?;
    let v_c = config.wind_for_c();
    let h = pc.h;

    let measure = |p: &TrajectoryPoint<T>, noise: &mut NoiseSource<T>| {
        let (omega, v) = noise.measure(p.omega, p.v_w);
        RegressorInput { z: v / omega, v_w: v }
    };

    let mut truth = plant.current();
    let mut input = measure(&truth, &mut noise);
    let z0 = match config.initial_z {
        InitialZ::Known => truth.z,
        InitialZ::Measured => input.z,
    };
    let eta_true = eta_from_theta(&theta, z0);
    let g_true = g_of_theta(&theta, z0).0;
    let eta0 = config.eta0.unwrap_or_else(|| eta_true.as_array().map(|v| v * T::lit(0.5)));
    let mut reg = RegressorBuilder::init(z0, config.sigma, pc.scenario)?;
    let mut est = InterlacedEstimator::new(config.gains, config.w0, eta0)?;

    let n = pc.steps();
    let every = pc.record_every();
    let mut records = Vec::with_capacity(n / every + 2);
    let mut sample = reg.emit_sample();
    let snapshot =
        |truth: &TrajectoryPoint<T>, z_meas: T, sample: &RegressorSample<T>, est: &InterlacedEstimator<T>| -> Record<T> {
            let eta_hat = est.eta_hat();
            let chat =
                c_hat(&eta_hat, z0, &pc.phys, pc.scenario, v_c).unwrap_or(CpParams { c1: T::nan(), c2: T::nan(), c3: T::nan() });
            let ls = &est.state().ls;
            Record {
                t: truth.t,
                truth: *truth,
                z_meas,
                sample: *sample,
                mixed: est.mixed(),
                w_hat: ls.w_hat,
                lambda_min: ls.lambda_min(),
                lambda_max: ls.lambda_max(),
                eta_hat,
                c_hat: chat,
                errors: c_true.normalized_errors(&chat),
            }
        };
    records.push(snapshot(&truth, input.z, &sample, &est));

    let mut abort = None;
    for k in 1..=n {
        let step = (|| -> Result<()> {
            plant.advance()?;
            let next = plant.current();
            let next_input = measure(&next, &mut noise);
            let segment = if exact {
                let d = |p: &TrajectoryPoint<T>| [p.z_dot, p.v_w_dot];
                InputSegment { start: input, end: next_input, slopes: Some((d(&truth), d(&next))) }
            } else {
                InputSegment::linear(input, next_input)
            };
            let half = T::lit(0.5);
            let mut probe = reg.clone();
            probe.advance(&segment.sub(T::zero(), half, h), h * half)?;
            let mid = probe.emit_sample();
            reg.advance(&segment, h)?;
            let end = reg.emit_sample();
            est.step(&[sample, mid, end], h)?;
            truth = next;
            input = next_input;
            sample = end;
            Ok(())
        })();
        if let Err(e) = step {
            abort = Some(e);
            break;
        }
        observer.observe(&truth, &sample, &est);
        if k % every == 0 || k == n {
            records.push(snapshot(&truth, input.z, &sample, &est));
        }
    }
    if abort.is_some() && records.last().map(|r| r.t) != Some(truth.t) {
        records.push(snapshot(&truth, input.z, &sample, &est));
    }
    Ok(RunOutput { records, c_true, eta_true, g_true, abort })
}

/// Least-squares line through `log|η̃|` against time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

/// Fits `log|η̂ − η|` over the window that opens when `Δ` first exceeds
/// `delta_fraction` of its final value and closes when the relative error
/// `|η̃| / |η|` first drops below `floor` (where roundoff takes over).
/// Returns `None` with fewer than three points in the window.
pub fn convergence_fit<T: Real>(out: &RunOutput<T>, delta_fraction: f64, floor: f64) -> Option<ExpFit> {
    let final_delta = out.last()?.mixed.delta.to_f64_lossy();
    let eta = out.eta_true.as_array();
    let eta_norm = norm(&eta).to_f64_lossy();
    let start = out.records.iter().position(|r| r.mixed.delta.to_f64_lossy() > delta_fraction * final_delta)?;
    let pts: Vec<(f64, f64)> = out.records[start..]
        .iter()
        .map(|r| (r.t.to_f64_lossy(), norm(&sub(&r.eta_hat, &eta)).to_f64_lossy()))
        .take_while(|&(_, e)| e > floor * eta_norm)
        .map(|(t, e)| (t, e.ln()))
        .collect();
    linear_fit(&pts).map(|(slope, intercept, r_squared)| ExpFit {
        slope,
        intercept,
        r_squared,
        t_start: pts[0].0,
        t_end: pts[pts.len() - 1].0,
        points: pts.len(),
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, R²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((a, my - a * mx, r2))
}
