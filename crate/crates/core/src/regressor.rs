//! Measurable regression `y = φ G(θ)` built on-line from samples of `z`.
//!
//! With the stable filter `F = σ / (p + σ)` and `pF[x] := σ (x − F[x])`, the
//! two rows are
//!
//! ```text
//! y1 = pF[z]    φ1 = (−F[w z⁴],  F[w z³], −ξ1 pF[z]  − A1, −ξ2 pF[z]  + A2)
//! y2 = pF[ξ3]   φ2 = (−F[w z],   F[w],    −ξ1 pF[ξ3] − B1, −ξ2 pF[ξ3] + B2)
//! ```
//!
//! where `ξ̇1 = −w z⁴`, `ξ̇2 = w z³`, `ξ3 = −1 / (2 z²)`, `A_i`, `B_i` are the
//! swapping-lemma corrections `1/(p+σ)[|ξ̇_i| pF[·]]`, and `w = 1` (S1) or
//! `w = v_w` (S2).
//!
//! Initial conditions: the filters realizing `pF[z]` and `pF[ξ3]` start at
//! `z(0)` and `ξ3(0)`, every other state at zero. With `ξ(0) = 0` this makes
//! the regression hold exactly from `t = 0`, with no decaying term.

use crate::error::{Error, Result};
use crate::linalg::{matmul, min_eigenvalue, transpose, zeros, Mat2x4, Mat4};
use crate::model::{disturbance_tau_d, GVector, Scenario, ThetaParams};
use crate::ode::{hermite, rk4_step, rk4_step_driven};
use crate::plant::Trajectory;
use crate::scalar::Real;

/// `ξ3 = −1 / (2 z²)`.
#[inline]
pub fn xi3<T: Real>(z: T) -> T {
    -T::one() / (T::lit(2.0) * z * z)
}

/// Open-loop integrals `ξ1`, `ξ2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiState<T> {
    pub xi1: T,
    pub xi2: T,
}

/// States of the first-order filters, all with bandwidth `sigma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterBank<T> {
    pub sigma: T,
    /// `F[z]` started at `z(0)`; realizes `pF[z]`.
    pub z_ic: T,
    /// `F[w z]` from rest.
    pub z: T,
    pub z3: T,
    pub z4: T,
    /// `F[ξ3]` started at `ξ3(0)`; realizes `pF[ξ3]`.
    pub xi3: T,
    /// `F[w]` from rest.
    pub one: T,
    /// `1/(p+σ)[w z⁴ pF[z]]`
    pub swap_z4_dz: T,
    /// `1/(p+σ)[w z³ pF[z]]`
    pub swap_z3_dz: T,
    /// `1/(p+σ)[w z⁴ pF[ξ3]]`
    pub swap_z4_dxi3: T,
    /// `1/(p+σ)[w z³ pF[ξ3]]`
    pub swap_z3_dxi3: T,
}

impl<T: Real> FilterBank<T> {
    /// `pF[z] = σ (z − F[z])`, exact derivative of the `z_ic` state.
    pub fn p_f_z(&self, z: T) -> T {
        self.sigma * (z - self.z_ic)
    }

    pub fn p_f_xi3(&self, z: T) -> T {
        self.sigma * (xi3(z) - self.xi3)
    }
}

/// Measured signals at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressorInput<T> {
    pub z: T,
    pub v_w: T,
}

/// Input signals across one step `[t, t + h]`.
///
/// With slopes available (noiseless truth) the signals are interpolated by
/// cubic Hermite polynomials, otherwise linearly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InputSegment<T> {
    pub start: RegressorInput<T>,
    pub end: RegressorInput<T>,
    /// `(ż, v̇_w)` at the start and the end.
    pub slopes: Option<([T; 2], [T; 2])>,
}

impl<T: Real> InputSegment<T> {
    pub fn linear(start: RegressorInput<T>, end: RegressorInput<T>) -> Self {
        InputSegment { start, end, slopes: None }
    }

    /// Signals at fraction `s ∈ [0, 1]` of a step of length `h`.
    pub fn at(&self, s: T, h: T) -> RegressorInput<T> {
        match self.slopes {
            Some((d0, d1)) => RegressorInput {
                z: hermite(self.start.z, d0[0], self.end.z, d1[0], h, s),
                v_w: hermite(self.start.v_w, d0[1], self.end.v_w, d1[1], h, s),
            },
            None => RegressorInput {
                z: self.start.z + s * (self.end.z - self.start.z),
                v_w: self.start.v_w + s * (self.end.v_w - self.start.v_w),
            },
        }
    }

    /// Restriction to the sub-interval `[a, b] ⊂ [0, 1]` of the step.
    pub fn sub(&self, a: T, b: T, h: T) -> InputSegment<T> {
        let start = self.at(a, h);
        let end = self.at(b, h);
        let slopes = self.slopes.map(|_| (self.slope_at(a, h), self.slope_at(b, h)));
        InputSegment { start, end, slopes }
    }

    fn slope_at(&self, s: T, h: T) -> [T; 2] {
        match self.slopes {
            Some((d0, d1)) => {
                let deriv = |x0: T, dx0: T, x1: T, dx1: T| {
                    let (one, two, three, six) = (T::one(), T::lit(2.0), T::lit(3.0), T::lit(6.0));
                    let s2 = s * s;
                    let dh00 = six * s2 - six * s;
                    let dh10 = three * s2 - two * two * s + one;
                    let dh01 = -six * s2 + six * s;
                    let dh11 = three * s2 - two * s;
                    (dh00 * x0 + dh01 * x1) / h + dh10 * dx0 + dh11 * dx1
                };
                [deriv(self.start.z, d0[0], self.end.z, d1[0]), deriv(self.start.v_w, d0[1], self.end.v_w, d1[1])]
            }
            None => [(self.end.z - self.start.z) / h, (self.end.v_w - self.start.v_w) / h],
        }
    }
}

/// One sample of the regression `y = φ G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegressorSample<T> {
    pub t: T,
    pub y: [T; 2],
    pub phi: Mat2x4<T>,
}

impl<T: Real> RegressorSample<T> {
    /// `y − φ g`.
    pub fn residual(&self, g: &GVector<T>) -> [T; 2] {
        let p = crate::linalg::mat_vec(&self.phi, &g.0);
        [self.y[0] - p[0], self.y[1] - p[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.y.iter().chain(self.phi.iter().flatten()).all(|v| v.is_finite())
    }
}

const NSTATE: usize = 12;

/// Owns the ξ integrators and the filter bank of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorBuilder<T> {
    scenario: Scenario,
    sigma: T,
    // xi1, xi2, z_ic, z, z3, z4, xi3, one, a1, a2, b1, b2
    x: [T; NSTATE],
    t: T,
    z_now: T,
}

impl<T: Real> RegressorBuilder<T> {
    /// Fresh builder at `t = 0` with measured `z(0) = z0`.
    pub fn init(z0: T, sigma: T, scenario: Scenario) -> Result<Self> {
        if !(z0 > T::zero()) {
            return Err(Error::invalid("z0", format!("must be > 0, got {z0}")));
        }
        if !(sigma > T::zero()) {
            return Err(Error::invalid("sigma", format!("filter bandwidth must be > 0, got {sigma}")));
        }
        let mut x = [T::zero(); NSTATE];
        x[2] = z0;
        x[6] = xi3(z0);
        Ok(RegressorBuilder { scenario, sigma, x, t: T::zero(), z_now: z0 })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn xi(&self) -> XiState<T> {
        XiState { xi1: self.x[0], xi2: self.x[1] }
    }

    pub fn bank(&self) -> FilterBank<T> {
        let x = &self.x;
        FilterBank {
            sigma: self.sigma,
            z_ic: x[2],
            z: x[3],
            z3: x[4],
            z4: x[5],
            xi3: x[6],
            one: x[7],
            swap_z4_dz: x[8],
            swap_z3_dz: x[9],
            swap_z4_dxi3: x[10],
            swap_z3_dxi3: x[11],
        }
    }

    fn weight(&self, v_w: T) -> T {
        match self.scenario {
            Scenario::S1 => T::one(),
            Scenario::S2 => v_w,
        }
    }

    fn rates(&self, x: &[T; NSTATE], input: RegressorInput<T>) -> [T; NSTATE] {
        let s = self.sigma;
        let z = input.z;
        let w = self.weight(input.v_w);
        let z3 = z * z * z;
        let wz3 = w * z3;
        let wz4 = wz3 * z;
        let p_f_z = s * (z - x[2]);
        let p_f_xi3 = s * (xi3(z) - x[6]);
        [
            -wz4,
            wz3,
            p_f_z,
            s * (w * z - x[3]),
            s * (wz3 - x[4]),
            s * (wz4 - x[5]),
            p_f_xi3,
            s * (w - x[7]),
            -s * x[8] + wz4 * p_f_z,
            -s * x[9] + wz3 * p_f_z,
            -s * x[10] + wz4 * p_f_xi3,
            -s * x[11] + wz3 * p_f_xi3,
        ]
    }

    /// One RK4 step across `segment`, which must start at the current time.
    pub fn advance(&mut self, segment: &InputSegment<T>, h: T) -> Result<()> {
        if !(segment.end.z > T::zero()) {
            return Err(Error::invalid("z", format!("measured z must be > 0, got {}", segment.end.z)));
        }
        let t0 = self.t;
        let inputs = [segment.start, segment.at(T::lit(0.5), h), segment.end];
        let next = rk4_step_driven(&self.x, h, inputs, |x, u| self.rates(x, *u));
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "regressor state", t: (t0 + h).to_f64_lossy() });
        }
        self.x = next;
        self.t = t0 + h;
        self.z_now = segment.end.z;
        Ok(())
    }

    /// `(y, φ)` at the current time.
    pub fn emit_sample(&self) -> RegressorSample<T> {
        let b = self.bank();
        let xi = self.xi();
        let z = self.z_now;
        let p_f_z = b.p_f_z(z);
        let p_f_xi3 = b.p_f_xi3(z);
        RegressorSample {
            t: self.t,
            y: [p_f_z, p_f_xi3],
            phi: [
                [-b.z4, b.z3, -xi.xi1 * p_f_z - b.swap_z4_dz, -xi.xi2 * p_f_z + b.swap_z3_dz],
                [-b.z, b.one, -xi.xi1 * p_f_xi3 - b.swap_z4_dxi3, -xi.xi2 * p_f_xi3 + b.swap_z3_dxi3],
            ],
        }
    }
}

/// Streaming trapezoidal accumulation of `∫ φᵀφ dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramAccumulator<T> {
    gram: Mat4<T>,
    last: Option<(T, Mat4<T>)>,
}

impl<T: Real> Default for GramAccumulator<T> {
    fn default() -> Self {
        GramAccumulator { gram: zeros(), last: None }
    }
}

impl<T: Real> GramAccumulator<T> {
    pub fn push(&mut self, sample: &RegressorSample<T>) {
        let outer = matmul(&transpose(&sample.phi), &sample.phi);
        if let Some((t_prev, prev)) = self.last {
            let w = T::lit(0.5) * (sample.t - t_prev);
            for i in 0..4 {
                for j in 0..4 {
                    self.gram[i][j] = self.gram[i][j] + w * (outer[i][j] + prev[i][j]);
                }
            }
        }
        self.last = Some((sample.t, outer));
    }

    pub fn gram(&self) -> &Mat4<T> {
        &self.gram
    }

    /// Smallest eigenvalue of the accumulated Gram matrix; a positive value
    /// certifies interval excitation over the window seen so far.
    pub fn min_eigenvalue(&self) -> T {
        min_eigenvalue(&self.gram)
    }
}

/// Interval-excitation index `λ_min(∫ φᵀφ)` over the sampled window.
pub fn ie_index<T: Real>(samples: &[RegressorSample<T>]) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "window must be nonempty"));
    }
    let mut acc = GramAccumulator::default();
    samples.iter().for_each(|s| acc.push(s));
    Ok(acc.min_eigenvalue())
}

/// Sup-norm gap of the swapping lemma
/// `F[x u̇] = x pF[u] − 1/(p+σ)[ẋ pF[u]]` realized numerically on
/// `[0, horizon]` with step `h`. Both sides start at zero.
pub fn swapping_residual<T, X, Xd, U, Ud>(x: X, x_dot: Xd, u: U, u_dot: Ud, sigma: T, h: T, horizon: T) -> Result<T>
where
    T: Real,
    X: Fn(T) -> T,
    Xd: Fn(T) -> T,
    U: Fn(T) -> T,
    Ud: Fn(T) -> T,
{
    if !(sigma > T::zero()) || !(h > T::zero()) {
        return Err(Error::invalid("sigma/h", "must be > 0"));
    }
    // lhs = F[x u̇], fu = F[u] from u(0), corr = 1/(p+σ)[ẋ pF[u]]
    let mut state = [T::zero(), u(T::zero()), T::zero()];
    let rates = |t: T, s: &[T; 3]| {
        let p_f_u = sigma * (u(t) - s[1]);
        [sigma * (x(t) * u_dot(t) - s[0]), p_f_u, -sigma * s[2] + x_dot(t) * p_f_u]
    };
    let gap = |t: T, s: &[T; 3]| (s[0] - (x(t) * sigma * (u(t) - s[1]) - s[2])).abs();
    let n = (horizon / h).round().to_usize().unwrap_or(0);
    let mut worst = gap(T::zero(), &state);
    for k in 0..n {
        let t = T::from_usize(k).expect("index") * h;
        state = rk4_step(t, &state, h, rates);
        worst = worst.max(gap(t + h, &state));
    }
    Ok(worst)
}

/// Sup-norm of the key identity along a plant trajectory.
///
/// S1: `e^{θ3 z0} ż + θ1θ3 ξ1 ż + θ2θ3 ξ2 ż + θ1 z⁴ − θ2 z³ − τ_d`.
/// S2: `e^{θ̄3 z0} ż + θ̄1θ̄3 ξ̄1 ż + θ̄2θ̄3 ξ̄2 ż + v_w (θ̄1 z⁴ − θ̄2 z³)`.
pub fn key_identity_residual<T: Real>(trajectory: &Trajectory<T>, theta: &ThetaParams<T>, inertia: T) -> T {
    let Some(first) = trajectory.points.first() else {
        return T::zero();
    };
    let [t1, t2, t3] = theta.as_array();
    let e0 = (t3 * first.z).exp();
    trajectory.points.iter().fold(T::zero(), |worst, p| {
        let z3 = p.z * p.z * p.z;
        let head = e0 * p.z_dot + t1 * t3 * p.xi1 * p.z_dot + t2 * t3 * p.xi2 * p.z_dot;
        let r = match theta.scenario {
            Scenario::S1 => {
                let tau_d = disturbance_tau_d(p.z, p.z_dot, p.tau(inertia), p.tau_integral, t3);
                head + t1 * z3 * p.z - t2 * z3 - tau_d
            }
            Scenario::S2 => head + p.v_w * (t1 * z3 * p.z - t2 * z3),
        };
        worst.max(r.abs())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_segment(z: f64) -> InputSegment<f64> {
        let i = RegressorInput { z, v_w: 9.0 };
        InputSegment { start: i, end: i, slopes: Some(([0.0, 0.0], [0.0, 0.0])) }
    }

    #[test]
    fn init_conditions() {
        let b = RegressorBuilder::init(0.9, 1.0, Scenario::S1).unwrap();
        let s = b.emit_sample();
        assert_eq!(s.y, [0.0, 0.0]);
        assert_eq!(s.phi, [[0.0; 4]; 2]);
        assert_eq!(b.xi(), XiState { xi1: 0.0, xi2: 0.0 });
        assert_eq!(b.bank().xi3, -1.0 / (2.0 * 0.81));
        assert!(RegressorBuilder::init(0.0, 1.0, Scenario::S1).is_err());
        assert!(RegressorBuilder::init(0.5, 0.0, Scenario::S1).is_err());
    }

    #[test]
    fn constant_input_closed_forms() {
        let zbar = 0.144;
        let mut b = RegressorBuilder::init(zbar, 1.0, Scenario::S1).unwrap();
        let h = 1e-3;
        let seg = constant_segment(zbar);
        for k in 1..=5000 {
            b.advance(&seg, h).unwrap();
            let t = k as f64 * h;
            let s = b.emit_sample();
            assert_eq!(s.y[0], 0.0);
            assert!((b.bank().one - (1.0 - (-t).exp())).abs() < 1e-6);
            assert_eq!(s.phi[0][2], 0.0);
            assert_eq!(s.phi[1][3], 0.0);
        }
        let t = 5.0;
        assert!((b.xi().xi2 - zbar.powi(3) * t).abs() < 1e-12);
        assert!((b.xi().xi1 + zbar.powi(4) * t).abs() < 1e-12);
    }

    #[test]
    fn s2_with_unit_wind_matches_s1() {
        let mut a = RegressorBuilder::init(0.5, 1.0, Scenario::S1).unwrap();
        let mut b = RegressorBuilder::init(0.5, 1.0, Scenario::S2).unwrap();
        let h = 1e-3;
        for k in 0..2000 {
            let z0 = 0.5 - 1e-4 * k as f64;
            let z1 = z0 - 1e-4;
            let seg = InputSegment::linear(RegressorInput { z: z0, v_w: 1.0 }, RegressorInput { z: z1, v_w: 1.0 });
            a.advance(&seg, h).unwrap();
            b.advance(&seg, h).unwrap();
        }
        assert!((a.xi().xi1 - b.xi().xi1).abs() < 1e-12);
        assert!((a.xi().xi2 - b.xi().xi2).abs() < 1e-12);
        assert_eq!(a.emit_sample(), b.emit_sample());
    }

    #[test]
    fn segment_interpolation() {
        let seg = InputSegment {
            start: RegressorInput { z: 1.0f64, v_w: 2.0 },
            end: RegressorInput { z: 2.0, v_w: 2.0 },
            slopes: Some(([1.0, 0.0], [1.0, 0.0])),
        };
        assert!((seg.at(0.5, 1.0).z - 1.5).abs() < 1e-15);
        let sub = seg.sub(0.25, 0.75, 1.0);
        assert!((sub.start.z - 1.25).abs() < 1e-15);
        assert!((sub.slopes.unwrap().0[0] - 1.0).abs() < 1e-14);
        let lin = InputSegment::linear(seg.start, seg.end);
        assert_eq!(lin.at(0.25, 0.1).z, 1.25);
    }

    #[test]
    fn swapping_lemma_cases() {
        let r = swapping_residual(|_| 1.0, |_| 0.0, |t: f64| t.sin(), |t: f64| t.cos(), 1.0, 1e-3, 10.0).unwrap();
        assert!(r < 1e-9, "{r}");
        let r = swapping_residual(|t| t, |_| 1.0, |t: f64| t.sin(), |t: f64| t.cos(), 1.0, 1e-3, 10.0).unwrap();
        assert!(r < 1e-5, "{r}");
        let r = swapping_residual(|t: f64| t * t, |t| 2.0 * t, |_| 3.0, |_| 0.0, 2.0, 1e-3, 5.0).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn gram_of_zero_regressor() {
        let samples: Vec<_> = (0..10).map(|k| RegressorSample { t: k as f64 * 0.1, y: [0.0; 2], phi: [[0.0; 4]; 2] }).collect();
        assert_eq!(ie_index(&samples).unwrap(), 0.0);
        assert!(ie_index::<f64>(&[]).is_err());
    }
}
