//! Interlaced least-squares + DREM estimator.
//!
//! Least-squares stage on the image `W = W(η) ∈ ℝ⁴`:
//!
//! ```text
//! dŴ/dt = γ F φᵀ (y − φ Ŵ),   Ŵ(0) = W0
//! dF/dt = −γ F φᵀ φ F,        F(0) = I / f0
//! ```
//!
//! Mixing: `Δ = det(I − f0 F)`, `Y = adj(I − f0 F) (Ŵ − f0 F W0)`, which
//! satisfy `Y = Δ W(η)` along noiseless runs. The scalar regression drives
//!
//! ```text
//! dη̂/dt = Γ Δ T (Y − Δ W(η̂))
//! ```
//!
//! followed by a componentwise clamp of `η̂` at a positive floor.
//!
//! The η̂ stage is stiff for realistic gains (its fastest rate is about
//! `Γ α Δ²`, far beyond `1/h`), so it is integrated implicitly. The
//! least-squares stage uses RK4, sub-stepped only if `γ |φ|² |F| h > 1`.

use crate::error::{Error, Result};
use crate::linalg::{
    det_adj4, dot, identity, inverse3, mat_scale, mat_sub, mat_vec, matmul, max_abs, max_eigenvalue, min_eigenvalue, sub,
    symmetrize, transpose, Mat3, Mat4, Vec3, Vec4,
};
use crate::model::{c_from_theta, t_matrix, theta_from_eta, w_jacobian, w_of_eta, CpParams, EtaParams, PhysicalParams, Scenario};
use crate::ode::rk4_step_driven;
use crate::regressor::RegressorSample;
use crate::scalar::Real;

/// Hard cap on sub-steps per outer step.
const MAX_SUBSTEPS: usize = 100_000;

const NEWTON_MAX_ITER: usize = 50;

/// Minimum eigenvalue of `F` below which the run is aborted.
pub const F_MIN_EIGENVALUE: f64 = 1e-14;

/// Tuning of the estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorGains<T> {
    /// Least-squares adaptation gain `γ_W`.
    pub gamma_w: T,
    /// Initial information scale, `F(0) = I / f0`.
    pub f0: T,
    /// Gain matrix `Γ` of the η̂ stage (symmetric positive definite).
    pub gamma: Mat3<T>,
    /// Free entry of the mixing matrix `T`.
    pub alpha: T,
    /// Projection floor for every component of η̂.
    pub eta_floor: T,
}

impl<T: Real> EstimatorGains<T> {
    /// `γ_W = 100`, `f0 = 1`, `Γ = diag(50, 50, 500)`, floor `1e-8`.
    pub fn reference(alpha: T) -> Self {
        let o = T::zero();
        EstimatorGains {
            gamma_w: T::lit(100.0),
            f0: T::one(),
            gamma: [[T::lit(50.0), o, o], [o, T::lit(50.0), o], [o, o, T::lit(500.0)]],
            alpha,
            eta_floor: T::lit(1e-8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_w", self.gamma_w), ("f0", self.f0), ("alpha", self.alpha), ("eta_floor", self.eta_floor)] {
            if !(v > T::zero()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        let g = &self.gamma;
        let asym = max_abs(&mat_sub(g, &transpose(g)));
        if asym > T::lit(1e-12) * max_abs(g) {
            return Err(Error::invalid("gamma", "must be symmetric"));
        }
        if !(min_eigenvalue(g) > T::zero()) {
            return Err(Error::invalid("gamma", "must be positive definite"));
        }
        Ok(())
    }
}

/// Least-squares stage state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LsStage<T> {
    pub w_hat: Vec4<T>,
    pub f: Mat4<T>,
    /// `Ŵ(0)`, kept for the mixing step.
    pub w0: Vec4<T>,
}

impl<T: Real> LsStage<T> {
    pub fn new(w0: Vec4<T>, f0: T) -> Self {
        LsStage { w_hat: w0, f: mat_scale(&identity(), T::one() / f0), w0 }
    }

    pub fn lambda_max(&self) -> T {
        max_eigenvalue(&self.f)
    }

    pub fn lambda_min(&self) -> T {
        min_eigenvalue(&self.f)
    }
}

/// Output of the mixing step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixedSample<T> {
    pub delta: T,
    pub y: Vec4<T>,
}

/// Right-hand side of the least-squares ODEs for one regressor sample.
pub fn ls_rates<T: Real>(w_hat: &Vec4<T>, f: &Mat4<T>, sample: &RegressorSample<T>, gamma_w: T) -> (Vec4<T>, Mat4<T>) {
    let phi = &sample.phi;
    let err = sub(&sample.y, &mat_vec(phi, w_hat));
    let f_phi_t = matmul(f, &transpose(phi)); // 4x2
    let dw = mat_vec(&f_phi_t, &err).map(|v| v * gamma_w);
    let df = mat_scale(&matmul(&f_phi_t, &transpose(&f_phi_t)), -gamma_w);
    (dw, df)
}

fn pack<T: Real>(w: &Vec4<T>, f: &Mat4<T>) -> [T; 20] {
    let mut x = [T::zero(); 20];
    x[..4].copy_from_slice(w);
    for i in 0..4 {
        x[4 + 4 * i..8 + 4 * i].copy_from_slice(&f[i]);
    }
    x
}

fn unpack<T: Real>(x: &[T; 20]) -> (Vec4<T>, Mat4<T>) {
    let mut w = [T::zero(); 4];
    w.copy_from_slice(&x[..4]);
    let mut f = [[T::zero(); 4]; 4];
    for i in 0..4 {
        f[i].copy_from_slice(&x[4 + 4 * i..8 + 4 * i]);
    }
    (w, f)
}

/// Quadratic interpolation through samples at fractions 0, ½ and 1.
fn interpolate_sample<T: Real>(nodes: &[RegressorSample<T>; 3], s: T) -> RegressorSample<T> {
    let (half, two, four) = (T::lit(0.5), T::lit(2.0), T::lit(4.0));
    let l0 = two * (s - half) * (s - T::one());
    let lm = -four * s * (s - T::one());
    let l1 = two * s * (s - half);
    let mix = |a: T, b: T, c: T| l0 * a + lm * b + l1 * c;
    let [a, b, c] = nodes;
    let mut out = *b;
    out.t = mix(a.t, b.t, c.t);
    for i in 0..2 {
        out.y[i] = mix(a.y[i], b.y[i], c.y[i]);
        for j in 0..4 {
            out.phi[i][j] = mix(a.phi[i][j], b.phi[i][j], c.phi[i][j]);
        }
    }
    out
}

fn substeps_for(rate_bound: f64, h: f64) -> usize {
    let n = (h * rate_bound).ceil();
    if n.is_finite() && n >= 1.0 {
        (n as usize).min(MAX_SUBSTEPS)
    } else {
        1
    }
}

/// One step of the least-squares stage across `[t, t + h]`.
///
/// `samples` holds the regressor at the start, midpoint and end of the step.
/// `F` is re-symmetrized afterwards and checked for positive definiteness.
pub fn ls_update<T: Real>(ls: &mut LsStage<T>, samples: &[RegressorSample<T>; 3], gamma_w: T, h: T) -> Result<()> {
    let phi_sq = samples.iter().map(|s| s.phi.iter().flatten().fold(T::zero(), |a, &v| a + v * v)).fold(T::zero(), T::max);
    let f_norm = (0..4).map(|i| ls.f[i][i]).fold(T::zero(), |a, v| a + v.abs());
    let n = substeps_for((gamma_w * phi_sq * f_norm).to_f64_lossy(), h.to_f64_lossy());
    let dt = h / T::from_usize(n).expect("substep count");
    let mut x = pack(&ls.w_hat, &ls.f);
    let inv_n = T::one() / T::from_usize(n).expect("substep count");
    for k in 0..n {
        let s0 = T::from_usize(k).expect("index") * inv_n;
        let inputs = if n == 1 {
            *samples
        } else {
            let at = |s: T| interpolate_sample(samples, s);
            [at(s0), at(s0 + T::lit(0.5) * inv_n), at(s0 + inv_n)]
        };
        x = rk4_step_driven(&x, dt, inputs, |x, sample| {
            let (w, f) = unpack(x);
            let (dw, df) = ls_rates(&w, &f, sample, gamma_w);
            pack(&dw, &df)
        });
    }
    let (w, f) = unpack(&x);
    let t_end = samples[2].t.to_f64_lossy();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "least-squares state", t: t_end });
    }
    ls.w_hat = w;
    ls.f = symmetrize(&f);
    let min_eig = ls.lambda_min();
    if !(min_eig > T::lit(F_MIN_EIGENVALUE)) {
        return Err(Error::InformationMatrixIndefinite { t: t_end, min_eig: min_eig.to_f64_lossy() });
    }
    Ok(())
}

/// `Δ = det(I − f0 F)` and `Y = adj(I − f0 F)(Ŵ − f0 F W0)`.
pub fn mix<T: Real>(ls: &LsStage<T>, f0: T) -> MixedSample<T> {
    let scaled = mat_scale(&ls.f, f0);
    let m = mat_sub(&identity(), &scaled);
    let (delta, adj) = det_adj4(&m);
    debug_assert!({
        let prod = matmul(&adj, &m);
        let tol = T::lit(1e-10) * (T::one() + max_abs(&adj) * max_abs(&m));
        max_abs(&mat_sub(&prod, &mat_scale(&identity(), delta))) <= tol
    });
    let rhs = sub(&ls.w_hat, &mat_vec(&scaled, &ls.w0));
    MixedSample { delta, y: mat_vec(&adj, &rhs) }
}

/// `Γ Δ T (Y − Δ W(η̂))`.
pub fn eta_rate<T: Real>(eta_hat: &Vec3<T>, mixed: &MixedSample<T>, gamma: &Mat3<T>, alpha: T) -> Vec3<T> {
    let w = w_of_eta(eta_hat).0;
    let err: Vec4<T> = [0, 1, 2, 3].map(|i| mixed.y[i] - mixed.delta * w[i]);
    let t_err = mat_vec(&t_matrix(alpha), &err).map(|v| v * mixed.delta);
    mat_vec(gamma, &t_err)
}

/// Componentwise clamp at `floor`.
pub fn project<T: Real>(eta_hat: &Vec3<T>, floor: T) -> Vec3<T> {
    eta_hat.map(|v| v.max(floor))
}

/// One implicit (backward Euler) step of the η̂ stage to the end of a step
/// of length `h`, using the mixed signals there, followed by the projection.
///
/// The implicit equation is solved by Newton's method. Any `η` with
/// `Y = Δ W(η)` is an exact fixed point, and because the update field is
/// monotone in the `Γ⁻¹` inner product, `½ η̃ᵀ Γ⁻¹ η̃` cannot increase.
pub fn eta_update<T: Real>(eta_hat: &Vec3<T>, mixed: &MixedSample<T>, gains: &EstimatorGains<T>, h: T) -> Vec3<T> {
    if mixed.delta == T::zero() {
        return project(eta_hat, gains.eta_floor);
    }
    let t = t_matrix(gains.alpha);
    let d2h = mixed.delta * mixed.delta * h;
    let mut e = *eta_hat;
    for _ in 0..NEWTON_MAX_ITER {
        let rate = eta_rate(&e, mixed, &gains.gamma, gains.alpha);
        let r: Vec3<T> = [0, 1, 2].map(|i| e[i] - eta_hat[i] - h * rate[i]);
        let jac = matmul(&gains.gamma, &matmul(&t, &w_jacobian(&e)));
        let mut m: Mat3<T> = identity();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = m[i][j] + d2h * jac[i][j];
            }
        }
        let Some(inv) = inverse3(&m) else { break };
        let step = mat_vec(&inv, &r);
        e = sub(&e, &step);
        let converged =
            (0..3).all(|i| step[i].abs() <= T::lit(1e-15) * (e[i].abs() + eta_hat[i].abs()) + T::min_positive_value());
        if converged {
            break;
        }
    }
    project(&e, gains.eta_floor)
}

/// Curve parameters recovered from `η̂`.
///
/// S1: `ĉ = ((J / κ v_w) e^{η̂3 z0} η̂1, η̂2 / η̂1, η̂3)`; S2 drops `v_w`.
pub fn c_hat<T: Real>(eta_hat: &Vec3<T>, z0: T, phys: &PhysicalParams<T>, scenario: Scenario, v_w: T) -> Result<CpParams<T>> {
    let theta = theta_from_eta(&EtaParams::from_array(*eta_hat, z0), scenario);
    c_from_theta(&theta, phys, v_w)
}

/// Complete estimator state: the LS stage and η̂.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorState<T> {
    pub ls: LsStage<T>,
    pub eta_hat: Vec3<T>,
    pub mixed: MixedSample<T>,
}

/// The interlaced estimator driven by a stream of regressor samples.
#[derive(Clone, Debug)]
pub struct InterlacedEstimator<T> {
    gains: EstimatorGains<T>,
    state: EstimatorState<T>,
    gamma_inv: Mat3<T>,
}

impl<T: Real> InterlacedEstimator<T> {
    pub fn new(gains: EstimatorGains<T>, w0: Vec4<T>, eta0: Vec3<T>) -> Result<Self> {
        gains.validate()?;
        if eta0.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::invalid("eta0", "initial estimate must be componentwise > 0"));
        }
        let ls = LsStage::new(w0, gains.f0);
        let mixed = mix(&ls, gains.f0);
        let gamma_inv = inverse3(&gains.gamma).ok_or_else(|| Error::invalid("gamma", "singular"))?;
        Ok(InterlacedEstimator {
            gains,
            state: EstimatorState { ls, eta_hat: project(&eta0, gains.eta_floor), mixed },
            gamma_inv,
        })
    }

    pub fn gains(&self) -> &EstimatorGains<T> {
        &self.gains
    }

    pub fn state(&self) -> &EstimatorState<T> {
        &self.state
    }

    pub fn eta_hat(&self) -> Vec3<T> {
        self.state.eta_hat
    }

    pub fn mixed(&self) -> MixedSample<T> {
        self.state.mixed
    }

    /// Advances both stages across one step; `samples` are the regressor at
    /// the start, midpoint and end.
    pub fn step(&mut self, samples: &[RegressorSample<T>; 3], h: T) -> Result<()> {
        ls_update(&mut self.state.ls, samples, self.gains.gamma_w, h)?;
        let m1 = mix(&self.state.ls, self.gains.f0);
        self.state.eta_hat = eta_update(&self.state.eta_hat, &m1, &self.gains, h);
        self.state.mixed = m1;
        Ok(())
    }

    /// `½ η̃ᵀ Γ⁻¹ η̃` with respect to the true `η`.
    pub fn lyapunov(&self, eta_true: &Vec3<T>) -> T {
        let e = sub(&self.state.eta_hat, eta_true);
        T::lit(0.5) * dot(&e, &mat_vec(&self.gamma_inv, &e))
    }
}

/// Trace of a least-squares-only run on the overparameterized regression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OverparamTrace<T> {
    pub t: Vec<T>,
    pub w_hat: Vec<Vec4<T>>,
    pub lambda_max: Vec<T>,
}

/// Runs only the least-squares stage, treating `G(θ)` as a free 4-vector.
///
/// Each item of `segments` carries the regressor at the start, midpoint and
/// end of a step of length `h`; the trace is recorded every `record_every`
/// steps plus the initial and final states.
pub fn overparam_ls_baseline<T, I>(
    segments: I,
    gamma_w: T,
    f0: T,
    w0: Vec4<T>,
    h: T,
    record_every: usize,
) -> Result<OverparamTrace<T>>
where
    T: Real,
    I: IntoIterator<Item = [RegressorSample<T>; 3]>,
{
    let mut ls = LsStage::new(w0, f0);
    let mut trace = OverparamTrace::default();
    let record = |t: T, ls: &LsStage<T>, trace: &mut OverparamTrace<T>| {
        trace.t.push(t);
        trace.w_hat.push(ls.w_hat);
        trace.lambda_max.push(ls.lambda_max());
    };
    record(T::zero(), &ls, &mut trace);
    let every = record_every.max(1);
    let mut last_t = T::zero();
    let mut k = 0usize;
    for seg in segments {
        ls_update(&mut ls, &seg, gamma_w, h)?;
        k += 1;
        last_t = seg[2].t;
        if k.is_multiple_of(every) {
            record(last_t, &ls, &mut trace);
        }
    }
    if !k.is_multiple_of(every) {
        record(last_t, &ls, &mut trace);
    }
    Ok(trace)
}
