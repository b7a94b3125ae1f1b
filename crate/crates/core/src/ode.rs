//! Classical fourth-order Runge-Kutta on fixed-size state arrays.

use crate::scalar::Real;

/// One classical RK4 step of `ẋ = f(t, x)` from `(t, x)` with step `h`.
pub fn rk4_step<T, F, const N: usize>(t: T, x: &[T; N], h: T, mut f: F) -> [T; N]
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
{
    let half = h * T::lit(0.5);
    let k1 = f(t, x);
    let k2 = f(t + half, &axpy(x, half, &k1));
    let k3 = f(t + half, &axpy(x, half, &k2));
    let k4 = f(t + h, &axpy(x, h, &k3));
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let mut out = *x;
    for i in 0..N {
        out[i] = x[i] + sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

/// RK4 step of a system driven by an external input, given the input at the
/// start, the midpoint and the end of the step.
pub fn rk4_step_driven<T, U, F, const N: usize>(x: &[T; N], h: T, inputs: [U; 3], mut f: F) -> [T; N]
where
    T: Real,
    F: FnMut(&[T; N], &U) -> [T; N],
{
    let half = h * T::lit(0.5);
    let [u0, um, u1] = inputs;
    let k1 = f(x, &u0);
    let k2 = f(&axpy(x, half, &k1), &um);
    let k3 = f(&axpy(x, half, &k2), &um);
    let k4 = f(&axpy(x, h, &k3), &u1);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let mut out = *x;
    for i in 0..N {
        out[i] = x[i] + sixth * (k1[i] + two * (k2[i] + k3[i]) + k4[i]);
    }
    out
}

#[inline]
fn axpy<T: Real, const N: usize>(x: &[T; N], a: T, k: &[T; N]) -> [T; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] = x[i] + a * k[i];
    }
    out
}

/// Cubic Hermite interpolant on `[0, h]` through `(x0, d0)` and `(x1, d1)`,
/// evaluated at `s ∈ [0, 1]` (fraction of the step).
pub fn hermite<T: Real>(x0: T, d0: T, x1: T, d1: T, h: T, s: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + one;
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1
}
