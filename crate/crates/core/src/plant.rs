//! Fixed-step simulation of the one-mass rotor `J ω̇ = Tm − Te`.
//!
//! The integrated state is augmented with the two ξ integrals and the running
//! torque-disturbance integral so that downstream identity checks see values
//! of the same (fourth) order of accuracy as `ω` itself.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{mechanical_torque_unchecked, tau_d_integrand, CpParams, PhysicalParams, Scenario};
use crate::ode::rk4_step;
use crate::scalar::Real;

/// Shape of the wind-speed signal.
#[derive(Clone, Debug, PartialEq)]
pub enum WindKind<T> {
    Constant,
    /// Steps to `v` at each breakpoint `(t, v)`; `base` applies before the first.
    /// Not differentiable, so unusable for scenario S2.
    Piecewise(Vec<(T, T)>),
    /// `base + amplitude · sin(2π f t + phase)`.
    Sinusoidal {
        amplitude: T,
        frequency_hz: T,
        phase: T,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindProfile<T> {
    pub base: T,
    pub kind: WindKind<T>,
}

impl<T: Real> WindProfile<T> {
    pub fn constant(v: T) -> Self {
        WindProfile { base: v, kind: WindKind::Constant }
    }

    pub fn sinusoidal(base: T, amplitude: T, frequency_hz: T) -> Self {
        WindProfile { base, kind: WindKind::Sinusoidal { amplitude, frequency_hz, phase: T::zero() } }
    }

    pub fn speed(&self, t: T) -> T {
        match &self.kind {
            WindKind::Constant => self.base,
            WindKind::Piecewise(steps) => steps.iter().take_while(|(ts, _)| *ts <= t).last().map_or(self.base, |&(_, v)| v),
            WindKind::Sinusoidal { amplitude, frequency_hz, phase } => {
                self.base + *amplitude * (T::TAU() * *frequency_hz * t + *phase).sin()
            }
        }
    }

    /// `v̇_w(t)`; zero between the jumps of a piecewise profile.
    pub fn derivative(&self, t: T) -> T {
        match &self.kind {
            WindKind::Constant | WindKind::Piecewise(_) => T::zero(),
            WindKind::Sinusoidal { amplitude, frequency_hz, phase } => {
                let w = T::TAU() * *frequency_hz;
                *amplitude * w * (w * t + *phase).cos()
            }
        }
    }

    /// Whether `v̇_w` is available exactly at every instant.
    pub fn has_exact_derivative(&self) -> bool {
        !matches!(self.kind, WindKind::Piecewise(_))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > T::zero()) {
            return Err(Error::invalid("wind.base", "must be > 0"));
        }
        match &self.kind {
            WindKind::Constant => Ok(()),
            WindKind::Piecewise(steps) => {
                if steps.windows(2).any(|w| w[1].0 < w[0].0) {
                    return Err(Error::invalid("wind.steps", "breakpoints must be sorted in time"));
                }
                if steps.iter().any(|&(_, v)| !(v > T::zero())) {
                    return Err(Error::invalid("wind.steps", "speeds must be > 0"));
                }
                Ok(())
            }
            WindKind::Sinusoidal { amplitude, frequency_hz, .. } => {
                if !(amplitude.abs() < self.base) {
                    return Err(Error::invalid("wind.amplitude", "must be below the base speed"));
                }
                if !(*frequency_hz >= T::zero()) {
                    return Err(Error::invalid("wind.frequency_hz", "must be >= 0"));
                }
                Ok(())
            }
        }
    }
}

/// Electrical (generator) torque law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TorqueProfile<T> {
    /// Off-grid, `Te = 0`.
    Zero,
    /// `Te = −J (v̇_w / v_w) ω`, which removes the additive term from the
    /// z-dynamics under time-varying wind.
    S2Coupling,
    /// Constant `Te` (N·m).
    Constant(T),
}

impl<T: Real> TorqueProfile<T> {
    pub fn torque(&self, t: T, omega: T, wind: &WindProfile<T>, inertia: T) -> T {
        match *self {
            TorqueProfile::Zero => T::zero(),
            TorqueProfile::S2Coupling => -inertia * wind.derivative(t) / wind.speed(t) * omega,
            TorqueProfile::Constant(te) => te,
        }
    }
}

/// Uniform measurement noise on the wind and rotor channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec<T> {
    /// Half-width of the wind-speed noise (m/s).
    pub wind_amplitude: T,
    /// Half-width of the rotor-speed noise (rad/s).
    pub rotor_amplitude: T,
    pub seed: u64,
}

impl<T: Real> NoiseSpec<T> {
    pub fn none() -> Self {
        NoiseSpec { wind_amplitude: T::zero(), rotor_amplitude: T::zero(), seed: 0 }
    }

    pub fn is_silent(&self) -> bool {
        self.wind_amplitude == T::zero() && self.rotor_amplitude == T::zero()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wind_amplitude >= T::zero()) || !(self.rotor_amplitude >= T::zero()) {
            return Err(Error::invalid("noise", "amplitudes must be >= 0"));
        }
        Ok(())
    }
}

/// Seeded source of measurement noise.
#[derive(Clone, Debug)]
pub struct NoiseSource<T> {
    spec: NoiseSpec<T>,
    rng: ChaCha8Rng,
}

impl<T: Real> NoiseSource<T> {
    pub fn new(spec: NoiseSpec<T>) -> Result<Self> {
        spec.validate()?;
        Ok(NoiseSource { spec, rng: ChaCha8Rng::seed_from_u64(spec.seed) })
    }

    /// Returns `(ω_meas, v_w_meas)`: truth plus independent uniform draws on
    /// `[−a, a]` per channel.
    pub fn measure(&mut self, omega: T, v_w: T) -> (T, T) {
        let w = draw(&mut self.rng, self.spec.rotor_amplitude);
        let v = draw(&mut self.rng, self.spec.wind_amplitude);
        (omega + w, v_w + v)
    }
}

fn draw<T: Real>(rng: &mut ChaCha8Rng, amplitude: T) -> T {
    if amplitude == T::zero() {
        return T::zero();
    }
    let a = amplitude.to_f64_lossy();
    T::lit(Uniform::new_inclusive(-a, a).sample(rng))
}

/// Rotor speed at a time instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantState<T> {
    pub omega: T,
    pub t: T,
}

/// One RK4 step of `J ω̇ = Tm − Te`.
pub fn step<T: Real>(
    state: &PlantState<T>,
    wind: &WindProfile<T>,
    torque: &TorqueProfile<T>,
    phys: &PhysicalParams<T>,
    c: &CpParams<T>,
    h: T,
    omega_min: T,
) -> Result<PlantState<T>> {
    if !(h > T::zero()) {
        return Err(Error::invalid("h", "step must be > 0"));
    }
    check_floor(state.t, state.omega, omega_min)?;
    let next = rk4_step(state.t, &[state.omega], h, |t, x| [omega_rate(t, x[0], wind, torque, phys, c)]);
    let out = PlantState { omega: next[0], t: state.t + h };
    check_floor(out.t, out.omega, omega_min)?;
    Ok(out)
}

fn check_floor<T: Real>(t: T, omega: T, floor: T) -> Result<()> {
    if !(omega >= floor) {
        return Err(Error::RotorSpeedFloor { t: t.to_f64_lossy(), omega: omega.to_f64_lossy(), floor: floor.to_f64_lossy() });
    }
    Ok(())
}

#[inline]
fn omega_rate<T: Real>(
    t: T,
    omega: T,
    wind: &WindProfile<T>,
    torque: &TorqueProfile<T>,
    phys: &PhysicalParams<T>,
    c: &CpParams<T>,
) -> T {
    let v = wind.speed(t);
    let tm = mechanical_torque_unchecked(omega, v, c, phys);
    (tm - torque.torque(t, omega, wind, phys.inertia)) / phys.inertia
}

/// Everything needed to simulate one run of the rotor.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantConfig<T> {
    pub phys: PhysicalParams<T>,
    pub c: CpParams<T>,
    pub wind: WindProfile<T>,
    pub torque: TorqueProfile<T>,
    /// Selects the weighting of the logged ξ integrals.
    pub scenario: Scenario,
    pub omega0: T,
    /// Integration step (s).
    pub h: T,
    pub t_final: T,
    /// Time between recorded samples (s); rounded to a whole number of steps.
    pub record_dt: T,
    pub omega_min: T,
}

impl<T: Real> PlantConfig<T> {
    /// Constant 9 m/s wind, off-grid, `ω(0) = 10`, `h = 1e-3`, `T_f = 500`.
    pub fn reference(c: CpParams<T>) -> Self {
        PlantConfig {
            phys: PhysicalParams::reference(),
            c,
            wind: WindProfile::constant(T::lit(9.0)),
            torque: TorqueProfile::Zero,
            scenario: Scenario::S1,
            omega0: T::lit(10.0),
            h: T::lit(1e-3),
            t_final: T::lit(500.0),
            record_dt: T::lit(0.1),
            omega_min: T::lit(1e-6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.c.validate()?;
        self.wind.validate()?;
        if !(self.h > T::zero()) {
            return Err(Error::invalid("h", "step must be > 0"));
        }
        if !(self.t_final >= T::zero()) {
            return Err(Error::invalid("t_final", "must be >= 0"));
        }
        if !(self.record_dt > T::zero()) {
            return Err(Error::invalid("record_dt", "must be > 0"));
        }
        if !(self.omega0 > self.omega_min) || !(self.omega_min > T::zero()) {
            return Err(Error::invalid("omega0", "must exceed the rotor-speed floor, which must be > 0"));
        }
        if self.scenario == Scenario::S2 && !self.wind.has_exact_derivative() {
            return Err(Error::invalid("wind", "scenario S2 needs a differentiable wind profile"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.h).round().to_usize().unwrap_or(0)
    }

    pub fn record_every(&self) -> usize {
        (self.record_dt / self.h).round().to_usize().unwrap_or(1).max(1)
    }
}

/// Truth sample of the plant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub omega: T,
    pub v_w: T,
    pub v_w_dot: T,
    pub te: T,
    pub z: T,
    /// `ż` from the vector field, not from differencing.
    pub z_dot: T,
    /// `∫ −w z⁴` with `w = 1` (S1) or `w = v_w` (S2).
    pub xi1: T,
    /// `∫ w z³`.
    pub xi2: T,
    /// `∫ τ e^{c3 z} z²`, `τ = Te / (J v_w)`.
    pub tau_integral: T,
}

impl<T: Real> TrajectoryPoint<T> {
    /// `τ = Te / (J v_w)`.
    pub fn tau(&self, inertia: T) -> T {
        self.te / (inertia * self.v_w)
    }
}

/// Recorded plant run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory<T> {
    pub points: Vec<TrajectoryPoint<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint<T>> {
        self.points.last()
    }
}

/// Stepper over the augmented state `(ω, ξ1, ξ2, ∫τ e^{c3 z} z²)`.
#[derive(Clone, Debug)]
pub struct Plant<T> {
    config: PlantConfig<T>,
    state: [T; 4],
    k: usize,
}

impl<T: Real> Plant<T> {
    pub fn new(config: PlantConfig<T>) -> Result<Self> {
        config.validate()?;
        let state = [config.omega0, T::zero(), T::zero(), T::zero()];
        Ok(Plant { config, state, k: 0 })
    }

    pub fn config(&self) -> &PlantConfig<T> {
        &self.config
    }

    pub fn time(&self) -> T {
        T::from_usize(self.k).expect("step index fits") * self.config.h
    }

    pub fn step_index(&self) -> usize {
        self.k
    }

    pub fn state(&self) -> PlantState<T> {
        PlantState { omega: self.state[0], t: self.time() }
    }

    fn rates(&self, t: T, x: &[T; 4]) -> [T; 4] {
        let cfg = &self.config;
        let omega = x[0];
        let v = cfg.wind.speed(t);
        let z = v / omega;
        let te = cfg.torque.torque(t, omega, &cfg.wind, cfg.phys.inertia);
        let tm = mechanical_torque_unchecked(omega, v, &cfg.c, &cfg.phys);
        let weight = match cfg.scenario {
            Scenario::S1 => T::one(),
            Scenario::S2 => v,
        };
        let z3 = z * z * z;
        let tau = te / (cfg.phys.inertia * v);
        [(tm - te) / cfg.phys.inertia, -weight * z3 * z, weight * z3, tau_d_integrand(z, tau, cfg.c.c3)]
    }

    /// Truth sample at the current step.
    pub fn current(&self) -> TrajectoryPoint<T> {
        let cfg = &self.config;
        let t = self.time();
        let omega = self.state[0];
        let v = cfg.wind.speed(t);
        let v_dot = cfg.wind.derivative(t);
        let omega_dot = self.rates(t, &self.state)[0];
        TrajectoryPoint {
            t,
            omega,
            v_w: v,
            v_w_dot: v_dot,
            te: cfg.torque.torque(t, omega, &cfg.wind, cfg.phys.inertia),
            z: v / omega,
            z_dot: v_dot / omega - v * omega_dot / (omega * omega),
            xi1: self.state[1],
            xi2: self.state[2],
            tau_integral: self.state[3],
        }
    }

    /// Advances one step of size `h`.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.time();
        let h = self.config.h;
        let next = rk4_step(t, &self.state, h, |t, x| self.rates(t, x));
        self.k += 1;
        let floor = self.config.omega_min;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "plant state", t: self.time().to_f64_lossy() });
        }
        check_floor(self.time(), next[0], floor)?;
        self.state = next;
        Ok(())
    }
}

/// Runs the plant to `t_final`, recording every `record_dt`. The final
/// instant is always recorded; a zero-length run returns an empty trajectory.
pub fn simulate<T: Real>(config: &PlantConfig<T>) -> Result<Trajectory<T>> {
    let mut plant = Plant::new(config.clone())?;
    let n = config.steps();
    if n == 0 {
        return Ok(Trajectory::default());
    }
    let every = config.record_every();
    let mut points = Vec::with_capacity(n / every + 2);
    points.push(plant.current());
    for k in 1..=n {
        plant.advance()?;
        if k % every == 0 || k == n {
            points.push(plant.current());
        }
    }
    Ok(Trajectory { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{c_from_kappas, theta_bar_from_c, z_dot_s2, HeierCoefficients};

    fn c_ref() -> CpParams<f64> {
        c_from_kappas(&HeierCoefficients::reference(), 1.84).unwrap()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let c = c_ref();
        let phys = PhysicalParams::reference();
        let wind = WindProfile::constant(9.0);
        let mut s = PlantState { omega: 9.0 / c.c2, t: 0.0 };
        for _ in 0..1000 {
            s = step(&s, &wind, &TorqueProfile::Zero, &phys, &c, 1e-3, 1e-6).unwrap();
        }
        assert!((s.omega - 9.0 / c.c2).abs() < 1e-9);
        assert!(step(&s, &wind, &TorqueProfile::Zero, &phys, &c, 0.0, 1e-6).is_err());
    }

    #[test]
    fn zero_length_run_is_empty() {
        let mut cfg = PlantConfig::reference(c_ref());
        cfg.t_final = 0.0;
        assert!(simulate(&cfg).unwrap().is_empty());
    }

    #[test]
    fn wind_profiles() {
        let w = WindProfile { base: 8.0, kind: WindKind::Piecewise(vec![(1.0, 9.0), (2.0, 7.5)]) };
        assert_eq!(w.speed(0.5), 8.0);
        assert_eq!(w.speed(1.0), 9.0);
        assert_eq!(w.speed(3.0), 7.5);
        assert!(!w.has_exact_derivative());
        let s = WindProfile::sinusoidal(9.0f64, 1.0, 0.1);
        let d = 1e-6;
        let fd = (s.speed(2.0 + d) - s.speed(2.0 - d)) / (2.0 * d);
        assert!((fd - s.derivative(2.0)).abs() < 1e-8);
        assert!(WindProfile::sinusoidal(1.0, 2.0, 0.1).validate().is_err());
    }

    #[test]
    fn torque_profiles() {
        let w = WindProfile::sinusoidal(9.0f64, 1.0, 0.1);
        assert_eq!(TorqueProfile::Zero.torque(1.0, 50.0, &w, 7.856), 0.0);
        let te = TorqueProfile::S2Coupling.torque(1.0, 50.0, &w, 7.856);
        assert!((te + 7.856 * w.derivative(1.0) / w.speed(1.0) * 50.0).abs() < 1e-12);
        assert_eq!(TorqueProfile::Constant(0.3).torque(1.0, 50.0, &w, 7.856), 0.3);
    }

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let spec = NoiseSpec { wind_amplitude: 0.3f64, rotor_amplitude: 0.5, seed: 7 };
        let mut a = NoiseSource::new(spec).unwrap();
        let mut b = NoiseSource::new(spec).unwrap();
        let (mut max_w, mut max_v) = (0.0f64, 0.0f64);
        for _ in 0..100_000 {
            let (w, v) = a.measure(60.0, 9.0);
            assert_eq!((w, v), b.measure(60.0, 9.0));
            max_w = max_w.max((w - 60.0).abs());
            max_v = max_v.max((v - 9.0).abs());
        }
        assert!(max_w <= 0.5 + 1e-12 && max_w > 0.49);
        assert!(max_v <= 0.3 + 1e-12 && max_v > 0.29);
        let mut silent = NoiseSource::new(NoiseSpec::none()).unwrap();
        assert_eq!(silent.measure(60.0, 9.0), (60.0, 9.0));
        assert!(NoiseSource::new(NoiseSpec { wind_amplitude: -1.0, rotor_amplitude: 0.0, seed: 0 }).is_err());
    }

    #[test]
    fn floor_aborts_run() {
        let mut cfg = PlantConfig::reference(c_ref());
        cfg.torque = TorqueProfile::Constant(500.0);
        cfg.t_final = 10.0;
        cfg.omega_min = 1.0;
        match simulate(&cfg) {
            Err(Error::RotorSpeedFloor { .. }) => {}
            other => panic!("expected floor abort, got {other:?}"),
        }
    }

    #[test]
    fn s2_logged_rate_matches_vector_field() {
        let c = c_ref();
        let mut cfg = PlantConfig::reference(c);
        cfg.wind = WindProfile::sinusoidal(9.0, 1.0, 0.05);
        cfg.torque = TorqueProfile::S2Coupling;
        cfg.scenario = Scenario::S2;
        cfg.t_final = 50.0;
        let traj = simulate(&cfg).unwrap();
        let bar = theta_bar_from_c(&c, &cfg.phys);
        for p in &traj.points {
            assert!((p.z_dot - z_dot_s2(p.z, p.v_w, &bar)).abs() < 1e-9);
        }
    }
}
