//! Power-coefficient curve, rotor torque, z-dynamics and the parameter maps
//! `c ↔ θ ↔ η` together with their images `G(θ) = W(η)` in ℝ⁴.
//!
//! Coordinates: `z = v_w / ω` is the raw quotient of wind speed (m/s) and
//! rotor speed (rad/s). The reduced curve is `Cp(z) = c1 (z − c2) e^{−c3 z}`.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Mat4x3, Vec4};
use crate::scalar::Real;

/// Operating scenario of the turbine.
///
/// `S1`: constant, known wind and zero electrical torque (off-grid).
/// `S2`: time-varying wind with known derivative and generator torque
/// `Te = −J (v̇_w / v_w) ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scenario {
    S1,
    S2,
}

/// Unit convention of the pitch angle in a coefficient table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PitchUnit {
    Degrees,
    Radians,
}

/// Pitch angle tagged with its unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pitch<T> {
    Degrees(T),
    Radians(T),
}

impl<T: Real> Pitch<T> {
    pub fn zero() -> Self {
        Pitch::Radians(T::zero())
    }

    pub fn in_unit(self, unit: PitchUnit) -> T {
        match (self, unit) {
            (Pitch::Degrees(b), PitchUnit::Degrees) | (Pitch::Radians(b), PitchUnit::Radians) => b,
            (Pitch::Degrees(b), PitchUnit::Radians) => b.to_radians(),
            (Pitch::Radians(b), PitchUnit::Degrees) => b.to_degrees(),
        }
    }
}

/// Curve-fit coefficients of the general power coefficient `Cp(λ, β)`.
///
/// `kappa3`, `kappa4` and `ell` only act when `β ≠ 0`; they are allowed to be
/// zero. The remaining coefficients must be strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeierCoefficients<T> {
    pub kappa1: T,
    pub kappa2: T,
    pub kappa3: T,
    pub kappa4: T,
    pub kappa5: T,
    pub kappa6: T,
    pub kappa7: T,
    pub ell: T,
    pub pitch_unit: PitchUnit,
}

impl<T: Real> HeierCoefficients<T> {
    /// The classical fit `κ = (0.5, 116, 0.4, 0, 5, 21, 0.035)`, `ℓ = 2`,
    /// pitch in degrees.
    pub fn reference() -> Self {
        HeierCoefficients {
            kappa1: T::lit(0.5),
            kappa2: T::lit(116.0),
            kappa3: T::lit(0.4),
            kappa4: T::zero(),
            kappa5: T::lit(5.0),
            kappa6: T::lit(21.0),
            kappa7: T::lit(0.035),
            ell: T::lit(2.0),
            pitch_unit: PitchUnit::Degrees,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let strict = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa5", self.kappa5),
            ("kappa6", self.kappa6),
            ("kappa7", self.kappa7),
        ];
        for (name, v) in strict {
            if !(v > T::zero()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        for (name, v) in [("kappa3", self.kappa3), ("kappa4", self.kappa4)] {
            if !(v >= T::zero()) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Rotor and air constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams<T> {
    /// Air density (kg/m³).
    pub rho: T,
    /// Blade length (m).
    pub r: T,
    /// Rotor inertia (kg·m²).
    pub inertia: T,
    /// Swept area (m²).
    pub area: T,
    /// `½ ρ A` (kg/m).
    pub kappa: T,
}

impl<T: Real> PhysicalParams<T> {
    /// Builds the parameter set with a disc swept area `π r²`.
    pub fn new(rho: T, r: T, inertia: T) -> Result<Self> {
        let area = swept_area(r)?;
        Self::with_area(rho, r, inertia, area)
    }

    pub fn with_area(rho: T, r: T, inertia: T, area: T) -> Result<Self> {
        for (name, v) in [("rho", rho), ("r", r), ("inertia", inertia), ("area", area)] {
            if !(v > T::zero()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(PhysicalParams { rho, r, inertia, area, kappa: T::lit(0.5) * rho * area })
    }

    /// Air density 1.225 kg/m³, blade 1.84 m, inertia 7.856 kg·m².
    pub fn reference() -> Self {
        Self::new(T::lit(1.225), T::lit(1.84), T::lit(7.856)).expect("reference values are positive")
    }
}

/// Parameters `c = (c1, c2, c3)` of the reduced curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpParams<T> {
    pub c1: T,
    pub c2: T,
    pub c3: T,
}

impl<T: Real> CpParams<T> {
    pub fn new(c1: T, c2: T, c3: T) -> Result<Self> {
        let c = CpParams { c1, c2, c3 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v > T::zero()) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// `|ĉᵢ − cᵢ| / cᵢ` with `self` as the truth.
    pub fn normalized_errors(&self, estimate: &CpParams<T>) -> [T; 3] {
        let truth = self.as_array();
        let est = estimate.as_array();
        [0, 1, 2].map(|i| ((est[i] - truth[i]) / truth[i]).abs())
    }
}

/// Reparameterization `θ` of the z-dynamics.
///
/// For [`Scenario::S1`], `θ = (κ v_w c1 / J, κ v_w c1 c2 / J, c3)`; for
/// [`Scenario::S2`] the wind factor is dropped (`θ̄`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaParams<T> {
    pub theta1: T,
    pub theta2: T,
    pub theta3: T,
    pub scenario: Scenario,
}

impl<T: Real> ThetaParams<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    /// Positive equilibrium `z̄ = θ2 / θ1` of the unforced z-dynamics.
    pub fn equilibrium(&self) -> T {
        self.theta2 / self.theta1
    }
}

/// Monotone reparameterization `η = (e^{−θ3 z0} θ1, e^{−θ3 z0} θ2, θ3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaParams<T> {
    pub eta1: T,
    pub eta2: T,
    pub eta3: T,
    /// Initial value `z(0)` used by the exponential rescaling.
    pub z0: T,
}

impl<T: Real> EtaParams<T> {
    pub fn as_array(&self) -> [T; 3] {
        [self.eta1, self.eta2, self.eta3]
    }

    pub fn from_array(eta: [T; 3], z0: T) -> Self {
        EtaParams { eta1: eta[0], eta2: eta[1], eta3: eta[2], z0 }
    }
}

/// Image of the parameters in ℝ⁴ entering the regression `y = φ G`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GVector<T>(pub Vec4<T>);

impl<T: Real> GVector<T> {
    /// `G1 G4 − G2 G3`; vanishes for every image of the maps.
    pub fn consistency_defect(&self) -> T {
        let g = &self.0;
        g[0] * g[3] - g[1] * g[2]
    }
}

/// Swept area `π r²` of a horizontal-axis rotor.
pub fn swept_area<T: Real>(r: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::invalid("r", format!("blade length must be > 0, got {r}")));
    }
    Ok(T::PI() * r * r)
}

/// General power coefficient `Cp(λ, β)`.
pub fn cp_general<T: Real>(lambda: T, pitch: Pitch<T>, k: &HeierCoefficients<T>) -> Result<T> {
    let beta = pitch.in_unit(k.pitch_unit);
    let denom = lambda + T::lit(0.08) * beta;
    if denom == T::zero() || !denom.is_finite() {
        return Err(Error::invalid("lambda", "λ + 0.08β must be nonzero"));
    }
    let inv_lambda_i = T::one() / denom - k.kappa7 / (beta.powi(3) + T::one());
    let beta_pow = if beta == T::zero() { T::zero() } else { beta.powf(k.ell) };
    Ok(k.kappa1 * (k.kappa2 * inv_lambda_i - k.kappa3 * beta - k.kappa4 * beta_pow - k.kappa5) * (-k.kappa6 * inv_lambda_i).exp())
}

/// Reduced power coefficient `c1 (z − c2) e^{−c3 z}`.
pub fn cp_reduced<T: Real>(z: T, c: &CpParams<T>) -> T {
    c.c1 * (z - c.c2) * (-c.c3 * z).exp()
}

/// Reduced-curve parameters implied by a coefficient table at `β = 0`.
pub fn c_from_kappas<T: Real>(k: &HeierCoefficients<T>, r: T) -> Result<CpParams<T>> {
    k.validate()?;
    if !(r > T::zero()) {
        return Err(Error::invalid("r", "blade length must be > 0"));
    }
    CpParams::new(k.kappa1 * k.kappa2 / r * (k.kappa6 * k.kappa7).exp(), r * (k.kappa7 + k.kappa5 / k.kappa2), k.kappa6 / r)
}

/// Location `(c2 c3 + 1) / c3` of the maximum of the reduced curve.
pub fn z_star<T: Real>(c: &CpParams<T>) -> Result<T> {
    if !(c.c3 > T::zero()) {
        return Err(Error::invalid("c3", "must be > 0"));
    }
    Ok((c.c2 * c.c3 + T::one()) / c.c3)
}

/// Maximum value `(c1 / c3) e^{−(1 + c2 c3)}` of the reduced curve.
pub fn cp_max<T: Real>(c: &CpParams<T>) -> T {
    c.c1 / c.c3 * (-(T::one() + c.c2 * c.c3)).exp()
}

/// Aerodynamic torque `κ (v_w³ / ω) Cp(v_w / ω)`.
pub fn mechanical_torque<T: Real>(omega: T, v_w: T, c: &CpParams<T>, phys: &PhysicalParams<T>) -> Result<T> {
    if !(omega > T::zero()) {
        return Err(Error::invalid("omega", format!("rotor speed must be > 0, got {omega}")));
    }
    Ok(mechanical_torque_unchecked(omega, v_w, c, phys))
}

#[inline]
pub(crate) fn mechanical_torque_unchecked<T: Real>(omega: T, v_w: T, c: &CpParams<T>, phys: &PhysicalParams<T>) -> T {
    phys.kappa * v_w * v_w * v_w / omega * cp_reduced(v_w / omega, c)
}

/// Factor relating `c1` to `θ1`: `κ v_w / J` for S1, `κ / J` for S2.
pub fn theta_gain<T: Real>(phys: &PhysicalParams<T>, scenario: Scenario, v_w: T) -> T {
    match scenario {
        Scenario::S1 => phys.kappa * v_w / phys.inertia,
        Scenario::S2 => phys.kappa / phys.inertia,
    }
}

/// `θ` for scenario S1 under constant wind `v_w`.
pub fn theta_from_c<T: Real>(c: &CpParams<T>, phys: &PhysicalParams<T>, v_w: T) -> Result<ThetaParams<T>> {
    if !(v_w > T::zero()) {
        return Err(Error::invalid("v_w", "wind speed must be > 0"));
    }
    Ok(theta_with_gain(c, theta_gain(phys, Scenario::S1, v_w), Scenario::S1))
}

/// Wind-independent `θ̄` of scenario S2.
pub fn theta_bar_from_c<T: Real>(c: &CpParams<T>, phys: &PhysicalParams<T>) -> ThetaParams<T> {
    theta_with_gain(c, theta_gain(phys, Scenario::S2, T::one()), Scenario::S2)
}

fn theta_with_gain<T: Real>(c: &CpParams<T>, gain: T, scenario: Scenario) -> ThetaParams<T> {
    ThetaParams { theta1: gain * c.c1, theta2: gain * c.c1 * c.c2, theta3: c.c3, scenario }
}

/// Inverse of [`theta_from_c`] (S1) or [`theta_bar_from_c`] (S2, `v_w` ignored).
pub fn c_from_theta<T: Real>(theta: &ThetaParams<T>, phys: &PhysicalParams<T>, v_w: T) -> Result<CpParams<T>> {
    if theta.theta1 == T::zero() {
        return Err(Error::invalid("theta1", "θ1 = 0 makes the inverse map singular"));
    }
    if theta.scenario == Scenario::S1 && !(v_w > T::zero()) {
        return Err(Error::invalid("v_w", "wind speed must be > 0"));
    }
    let gain = theta_gain(phys, theta.scenario, v_w);
    Ok(CpParams { c1: theta.theta1 / gain, c2: theta.theta2 / theta.theta1, c3: theta.theta3 })
}

pub fn eta_from_theta<T: Real>(theta: &ThetaParams<T>, z0: T) -> EtaParams<T> {
    let s = (-theta.theta3 * z0).exp();
    EtaParams { eta1: s * theta.theta1, eta2: s * theta.theta2, eta3: theta.theta3, z0 }
}

/// Inverse of [`eta_from_theta`].
pub fn theta_from_eta<T: Real>(eta: &EtaParams<T>, scenario: Scenario) -> ThetaParams<T> {
    let s = (eta.eta3 * eta.z0).exp();
    ThetaParams { theta1: s * eta.eta1, theta2: s * eta.eta2, theta3: eta.eta3, scenario }
}

/// `G(θ) = e^{−θ3 z0} (θ1, θ2, θ1θ3, θ2θ3)`.
pub fn g_of_theta<T: Real>(theta: &ThetaParams<T>, z0: T) -> GVector<T> {
    let s = (-theta.theta3 * z0).exp();
    GVector([s * theta.theta1, s * theta.theta2, s * theta.theta1 * theta.theta3, s * theta.theta2 * theta.theta3])
}

/// `W(η) = (η1, η2, η1η3, η2η3)`.
pub fn w_of_eta<T: Real>(eta: &[T; 3]) -> GVector<T> {
    GVector([eta[0], eta[1], eta[0] * eta[2], eta[1] * eta[2]])
}

/// Jacobian `∇W(η)`, 4x3.
pub fn w_jacobian<T: Real>(eta: &[T; 3]) -> Mat4x3<T> {
    let (o, l) = (T::zero(), T::one());
    [[l, o, o], [o, l, o], [eta[2], o, eta[0]], [o, eta[2], eta[1]]]
}

/// Mixing matrix `T` with rows `(α,0,0,0)`, `(0,α,0,0)`, `(0,0,0,1)`.
pub fn t_matrix<T: Real>(alpha: T) -> [[T; 4]; 3] {
    let (o, l) = (T::zero(), T::one());
    [[alpha, o, o, o], [o, alpha, o, o], [o, o, o, l]]
}

/// Smallest `α` for which `T W` is strictly monotone at `η`: `¼ η3² / η2`.
pub fn alpha_lower_bound<T: Real>(eta: &[T; 3]) -> Result<T> {
    if !(eta[1] > T::zero()) {
        return Err(Error::invalid("eta2", "must be > 0"));
    }
    Ok(T::lit(0.25) * eta[2] * eta[2] / eta[1])
}

/// The same bound written in terms of the curve parameters:
/// `c3² e^{c3 z0} / (4 g c1 c2)` with `g` from [`theta_gain`].
/// For S1, `g = κ v_w / J` and `z0 = v_w / ω(0)`.
pub fn alpha_lower_bound_physical<T: Real>(c: &CpParams<T>, gain: T, z0: T) -> Result<T> {
    c.validate()?;
    if !(gain > T::zero()) {
        return Err(Error::invalid("gain", "must be > 0"));
    }
    Ok(c.c3 * c.c3 * (c.c3 * z0).exp() / (T::lit(4.0) * gain * c.c1 * c.c2))
}

/// Worst case of [`alpha_lower_bound_physical`] over the prior box
/// `c_lo ≤ c ≤ c_hi`.
///
/// The bound decreases in `c1`, `c2` and increases in `c3` (for `z0 > 0`),
/// so only the lower bounds on `c1`, `c2` and the upper bound on `c3` matter.
pub fn alpha_bound_over_box<T: Real>(c_lo: &CpParams<T>, c_hi: &CpParams<T>, gain: T, z0: T) -> Result<T> {
    c_lo.validate()?;
    if c_hi.c3 < c_lo.c3 || c_hi.c1 < c_lo.c1 || c_hi.c2 < c_lo.c2 {
        return Err(Error::invalid("prior box", "upper bounds must dominate lower bounds"));
    }
    if z0 < T::zero() {
        return Err(Error::invalid("z0", "must be >= 0"));
    }
    alpha_lower_bound_physical(&CpParams { c1: c_lo.c1, c2: c_lo.c2, c3: c_hi.c3 }, gain, z0)
}

/// Symmetric part `T∇W + ∇WᵀT` at `η`.
pub fn monotonicity_matrix<T: Real>(eta: &[T; 3], alpha: T) -> Mat3<T> {
    let two = T::lit(2.0);
    let o = T::zero();
    [[two * alpha, o, o], [o, two * alpha, eta[2]], [o, eta[2], two * eta[1]]]
}

/// Smallest eigenvalue of [`monotonicity_matrix`]; positive iff
/// `α > ¼ η3² / η2` (for `η2 > 0`).
pub fn monotonicity_margin<T: Real>(eta: &[T; 3], alpha: T) -> T {
    let two = T::lit(2.0);
    let (a, b, d) = (two * alpha, eta[2], two * eta[1]);
    // lower 2x2 block [[a, b], [b, d]]
    let mean = (a + d) / two;
    let rad = (((a - d) / two).powi(2) + b * b).sqrt();
    let hi = mean + rad;
    let det = a * d - b * b;
    let lo = if hi > T::zero() { det / hi } else { mean - rad };
    lo.min(a)
}

/// `ż` in scenario S1: `−z³(θ1 z − θ2) e^{−θ3 z} + z² τ`, `τ = Te / (J v_w)`.
pub fn z_dot_s1<T: Real>(z: T, tau: T, theta: &ThetaParams<T>) -> T {
    let z2 = z * z;
    -z2 * z * (theta.theta1 * z - theta.theta2) * (-theta.theta3 * z).exp() + z2 * tau
}

/// `ż` in scenario S2: `−v_w z³(θ̄1 z − θ̄2) e^{−θ̄3 z}`.
pub fn z_dot_s2<T: Real>(z: T, v_w: T, theta_bar: &ThetaParams<T>) -> T {
    -v_w * z * z * z * (theta_bar.theta1 * z - theta_bar.theta2) * (-theta_bar.theta3 * z).exp()
}

/// Integrand `τ e^{θ3 z} z²` of the torque disturbance.
pub fn tau_d_integrand<T: Real>(z: T, tau: T, theta3: T) -> T {
    tau * (theta3 * z).exp() * z * z
}

/// Torque disturbance `τ_d = τ e^{θ3 z} z² − θ3 ż ∫₀ᵗ τ e^{θ3 z} z² ds` given the
/// running integral.
pub fn disturbance_tau_d<T: Real>(z: T, z_dot: T, tau: T, tau_integral: T, theta3: T) -> T {
    tau_d_integrand(z, tau, theta3) - theta3 * z_dot * tau_integral
}

/// [`disturbance_tau_d`] along a sampled history, accumulating the integral
/// with the trapezoidal rule. All slices must have the same length.
pub fn disturbance_tau_d_history<T: Real>(t: &[T], z: &[T], z_dot: &[T], tau: &[T], theta3: T) -> Result<Vec<T>> {
    let n = t.len();
    if z.len() != n || z_dot.len() != n || tau.len() != n {
        return Err(Error::invalid("history", "all series must have equal length"));
    }
    let mut out = Vec::with_capacity(n);
    let mut integral = T::zero();
    let mut prev: Option<(T, T)> = None;
    for i in 0..n {
        let g = tau_d_integrand(z[i], tau[i], theta3);
        if let Some((tp, gp)) = prev {
            integral = integral + T::lit(0.5) * (t[i] - tp) * (g + gp);
        }
        prev = Some((t[i], g));
        out.push(disturbance_tau_d(z[i], z_dot[i], tau[i], integral, theta3));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_setup() -> (PhysicalParams<f64>, CpParams<f64>) {
        let phys = PhysicalParams::reference();
        let c = c_from_kappas(&HeierCoefficients::reference(), phys.r).unwrap();
        (phys, c)
    }

    #[test]
    fn swept_area_values() {
        assert!((swept_area(1.0).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        let a = swept_area(1.84f64).unwrap();
        assert!((a - 10.636).abs() < 5e-4, "{a}");
        assert!(swept_area(0.0).is_err());
        assert!(swept_area(-1.0f64).is_err());
    }

    #[test]
    fn kappa_is_half_rho_area() {
        let p = PhysicalParams::<f64>::reference();
        assert_eq!(p.kappa, 0.5 * p.rho * p.area);
    }

    #[test]
    fn reference_curve_parameters() {
        let (_, c) = reference_setup();
        assert!((c.c1 - 65.74).abs() < 5e-3, "{}", c.c1);
        assert!((c.c2 - 0.144).abs() < 5e-4, "{}", c.c2);
        assert!((c.c3 - 11.41).abs() < 5e-3, "{}", c.c3);
    }

    #[test]
    fn c3_is_one_when_r_equals_kappa6() {
        let k = HeierCoefficients::<f64>::reference();
        let c = c_from_kappas(&k, k.kappa6).unwrap();
        assert_eq!(c.c3, 1.0);
    }

    #[test]
    fn general_curve_reduces_at_zero_pitch() {
        let k = HeierCoefficients::<f64>::reference();
        let (phys, c) = reference_setup();
        for i in 1..200 {
            let z = i as f64 * 0.005;
            let general = cp_general(phys.r / z, Pitch::zero(), &k).unwrap();
            assert!((general - cp_reduced(z, &c)).abs() < 1e-12);
        }
        let root = cp_general(phys.r / c.c2, Pitch::zero(), &k).unwrap();
        assert!(root.abs() < 1e-12);
        let top = cp_general(phys.r / z_star(&c).unwrap(), Pitch::Degrees(0.0), &k).unwrap();
        assert!((top - 0.41).abs() < 5e-3, "{top}");
        assert!((top - cp_max(&c)).abs() < 1e-12);
    }

    #[test]
    fn general_curve_rejects_singular_tip_speed() {
        let k = HeierCoefficients::<f64>::reference();
        assert!(cp_general(0.0, Pitch::zero(), &k).is_err());
        assert!(cp_general(-0.8, Pitch::Degrees(10.0), &k).is_err());
        // pitched evaluation is finite and below the unpitched value
        let pitched = cp_general(8.0, Pitch::Degrees(5.0), &k).unwrap();
        let flat = cp_general(8.0, Pitch::zero(), &k).unwrap();
        assert!(pitched.is_finite() && pitched < flat);
    }

    #[test]
    fn pitch_unit_conversion() {
        let b = Pitch::Radians(std::f64::consts::PI).in_unit(PitchUnit::Degrees);
        assert!((b - 180.0).abs() < 1e-12);
        assert_eq!(Pitch::Degrees(3.0).in_unit(PitchUnit::Degrees), 3.0);
    }

    #[test]
    fn reduced_curve_shape() {
        let (_, c) = reference_setup();
        assert_eq!(cp_reduced(c.c2, &c), 0.0);
        assert!(cp_reduced(0.5 * c.c2, &c) < 0.0);
        let zs = z_star(&c).unwrap();
        assert!((zs - 0.2316).abs() < 5e-4, "{zs}");
        assert!((cp_reduced(zs, &c) - 0.410).abs() < 5e-3);
        let d = 1e-4;
        assert!(cp_reduced(zs - d, &c) < cp_reduced(zs, &c));
        assert!(cp_reduced(zs + d, &c) < cp_reduced(zs, &c));
    }

    #[test]
    fn z_star_without_offset() {
        let c = CpParams::new(1.0f64, 1e-300, 4.0).unwrap();
        assert!((z_star(&c).unwrap() - 0.25).abs() < 1e-15);
        let c = CpParams { c1: 1.0, c2: 0.0, c3: 4.0 };
        assert_eq!(z_star(&c).unwrap(), 0.25);
        assert!(z_star(&CpParams { c1: 1.0, c2: 0.1, c3: 0.0 }).is_err());
    }

    #[test]
    fn torque_root_and_sign() {
        let (phys, c) = reference_setup();
        let v = 9.0;
        let omega_eq = v / c.c2;
        assert!(mechanical_torque(omega_eq, v, &c, &phys).unwrap().abs() < 1e-12);
        assert_eq!(mechanical_torque(10.0, 0.0, &c, &phys).unwrap(), 0.0);
        // z above c2 (slow rotor) accelerates
        assert!(mechanical_torque(v / (c.c2 * 1.01), v, &c, &phys).unwrap() > 0.0);
        assert!(mechanical_torque(v / (c.c2 * 0.99), v, &c, &phys).unwrap() < 0.0);
        assert!(mechanical_torque(0.0, v, &c, &phys).is_err());
    }

    #[test]
    fn theta_values_and_roundtrip() {
        let (phys, c) = reference_setup();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        // κ v_w / J ≈ 7.4636
        assert!((th.theta1 - 490.6).abs() < 0.1, "{}", th.theta1);
        assert!((th.theta2 / th.theta1 - c.c2).abs() < 1e-15);
        assert!((th.theta3 - 11.41).abs() < 5e-3);
        let back = c_from_theta(&th, &phys, 9.0).unwrap();
        for (a, b) in back.as_array().iter().zip(c.as_array()) {
            assert!(((a - b) / b).abs() < 1e-12);
        }
        let bar = theta_bar_from_c(&c, &phys);
        assert!((bar.theta1 * 9.0 - th.theta1).abs() < 1e-10);
        let back = c_from_theta(&bar, &phys, f64::NAN).unwrap();
        assert!(((back.c1 - c.c1) / c.c1).abs() < 1e-12);
        let singular = ThetaParams { theta1: 0.0, ..th };
        assert!(c_from_theta(&singular, &phys, 9.0).is_err());
    }

    #[test]
    fn eta_values_and_roundtrip() {
        let (phys, c) = reference_setup();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        let same = eta_from_theta(&th, 0.0);
        assert_eq!(same.as_array(), th.as_array());
        let eta = eta_from_theta(&th, 0.9);
        let s = (-th.theta3 * 0.9).exp();
        assert!((eta.eta1 - s * th.theta1).abs() < 1e-15);
        assert!((eta.eta1 - 1.697e-2).abs() < 2e-5, "{}", eta.eta1);
        assert!((eta.eta2 - 2.439e-3).abs() < 2e-6, "{}", eta.eta2);
        let back = theta_from_eta(&eta, Scenario::S1);
        for (a, b) in back.as_array().iter().zip(th.as_array()) {
            assert!(((a - b) / b).abs() < 1e-12);
        }
    }

    #[test]
    fn g_and_w_coincide() {
        let (phys, c) = reference_setup();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        let g = g_of_theta(&th, 0.9);
        let w = w_of_eta(&eta_from_theta(&th, 0.9).as_array());
        for i in 0..4 {
            assert!((g.0[i] - w.0[i]).abs() <= 1e-12 * g.0[i].abs());
        }
        assert_eq!(w_of_eta(&[1.0, 1.0, 0.0]).0, [1.0, 1.0, 0.0, 0.0]);
        assert!(g.consistency_defect().abs() < 1e-18);
    }

    #[test]
    fn jacobian_rows() {
        let j = w_jacobian(&[1.0, 1.0, 0.0]);
        assert_eq!(j[0], [1.0, 0.0, 0.0]);
        assert_eq!(j[1], [0.0, 1.0, 0.0]);
        assert_eq!(j[2], [0.0, 0.0, 1.0]);
        assert_eq!(j[3], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn alpha_bound_values() {
        assert_eq!(alpha_lower_bound(&[7.0, 1.0, 2.0]).unwrap(), 1.0);
        assert!(alpha_lower_bound(&[1.0, 0.0, 2.0]).is_err());
        let (phys, c) = reference_setup();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        let eta = eta_from_theta(&th, 0.9);
        let a = alpha_lower_bound(&eta.as_array()).unwrap();
        assert!((a - 1.335e4).abs() < 20.0, "{a}");
        let phys_form = alpha_lower_bound_physical(&c, theta_gain(&phys, Scenario::S1, 9.0), 0.9).unwrap();
        assert!(((a - phys_form) / a).abs() < 1e-9);
    }

    #[test]
    fn alpha_box_bound_dominates_interior() {
        let (phys, c) = reference_setup();
        let gain = theta_gain(&phys, Scenario::S1, 9.0);
        let lo = CpParams::new(0.9 * c.c1, 0.9 * c.c2, 0.9 * c.c3).unwrap();
        let hi = CpParams::new(1.1 * c.c1, 1.1 * c.c2, 1.1 * c.c3).unwrap();
        let bound = alpha_bound_over_box(&lo, &hi, gain, 0.9).unwrap();
        for i in 0..=10 {
            for j in 0..=10 {
                let s = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / 10.0;
                let probe = CpParams::new(s(lo.c1, hi.c1, i), s(lo.c2, hi.c2, j), s(lo.c3, hi.c3, (i + j) % 11)).unwrap();
                assert!(alpha_lower_bound_physical(&probe, gain, 0.9).unwrap() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn margin_examples() {
        assert!((monotonicity_margin(&[1.0f64, 1.0, 0.0], 1.0) - 2.0).abs() < 1e-15);
        let eta = [0.3, 0.02, 5.0];
        let a = alpha_lower_bound(&eta).unwrap();
        assert!(monotonicity_margin(&eta, a) <= 1e-9);
        assert!(monotonicity_margin(&eta, 2.0 * a) > 0.0);
        assert!(monotonicity_margin(&eta, 0.5 * a) < 0.0);
    }

    #[test]
    fn z_dynamics_equilibrium_and_sign() {
        let (phys, c) = reference_setup();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        assert_eq!(z_dot_s1(th.equilibrium(), 0.0, &th), 0.0);
        assert_eq!(z_dot_s1(0.0, 0.0, &th), 0.0);
        for i in 1..400 {
            let z = i as f64 * 0.005;
            let zd = z_dot_s1(z, 0.0, &th);
            if z < c.c2 {
                assert!(zd > 0.0, "z={z}");
            } else if z > c.c2 {
                assert!(zd < 0.0, "z={z}");
            }
        }
        let bar = theta_bar_from_c(&c, &phys);
        assert_eq!(z_dot_s2(bar.equilibrium(), 5.0, &bar), 0.0);
        assert_eq!(z_dot_s2(0.3, 0.0, &bar), 0.0);
        for &z in &[0.05, 0.2, 0.9] {
            assert!((z_dot_s2(z, 9.0, &bar) - z_dot_s1(z, 0.0, &th)).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_d_degenerate_cases() {
        assert_eq!(disturbance_tau_d(0.3, 0.01, 0.0, 0.0, 11.0), 0.0);
        let direct = disturbance_tau_d(0.3, 0.0, 0.02, 5.0, 11.0);
        assert!((direct - 0.02 * (11.0f64 * 0.3).exp() * 0.09).abs() < 1e-15);
        let t = [0.0, 0.5, 1.0];
        let zeros = disturbance_tau_d_history(&t, &[0.2; 3], &[0.1; 3], &[0.0; 3], 11.0).unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
        assert!(disturbance_tau_d_history(&t, &[0.2; 2], &[0.1; 3], &[0.0; 3], 11.0).is_err());
    }

    #[test]
    fn maps_work_in_single_precision() {
        let phys = PhysicalParams::<f32>::reference();
        let c = c_from_kappas(&HeierCoefficients::<f32>::reference(), phys.r).unwrap();
        let th = theta_from_c(&c, &phys, 9.0).unwrap();
        let back = c_from_theta(&th, &phys, 9.0).unwrap();
        assert!(((back.c1 - c.c1) / c.c1).abs() < 1e-5);
        assert!((z_star(&c).unwrap() - 0.2313).abs() < 1e-3);
    }
}
