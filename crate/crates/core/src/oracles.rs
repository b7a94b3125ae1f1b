//! Reference computations that use different algorithms from the code they
//! check: grid search instead of closed forms, finer integration instead of
//! the production step, central differences instead of analytic Jacobians,
//! and 3×3 cofactors instead of the 2×2-minor expansion used by mixing.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Mat4;
use crate::model::{cp_reduced, CpParams};
use crate::plant::{simulate, PlantConfig, Trajectory};
use crate::scalar::Real;

/// Outcome of one oracle comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub metadata: Vec<(String, String)>,
}

impl OracleReport {
    /// `pass` is set from `max_residual <= tolerance`; NaN fails.
    pub fn new(name: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        OracleReport { name: name.into(), max_residual, tolerance, pass: max_residual <= tolerance, metadata: Vec::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{status} {} residual={:.3e} tol={:.1e}", self.name, self.max_residual, self.tolerance)?;
        for (k, v) in &self.metadata {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Grid point of `[z_lo, z_hi]` (`n` uniform points) maximizing `Cp`.
pub fn grid_argmax_cp<T: Real>(c: &CpParams<T>, z_lo: T, z_hi: T, n: usize) -> Result<T> {
    if n < 3 {
        return Err(Error::invalid("n", format!("need at least 3 grid points, got {n}")));
    }
    if !(z_lo > T::zero() && z_hi > z_lo) {
        return Err(Error::invalid("z range", format!("need 0 < z_lo < z_hi, got [{z_lo}, {z_hi}]")));
    }
    let dz = (z_hi - z_lo) / T::from_usize(n - 1).expect("grid size");
    let mut best = (z_lo, cp_reduced(z_lo, c));
    for i in 1..n {
        let z = z_lo + dz * T::from_usize(i).expect("grid index");
        let v = cp_reduced(z, c);
        if v > best.1 {
            best = (z, v);
        }
    }
    Ok(best.0)
}

/// The same plant run with the step divided by `refine` (16 by convention)
/// and the same recording instants.
pub fn ode_reference_solution<T: Real>(config: &PlantConfig<T>, refine: usize) -> Result<Trajectory<T>> {
    if refine == 0 {
        return Err(Error::invalid("refine", "must be >= 1"));
    }
    let mut fine = config.clone();
    fine.h = config.h / T::from_usize(refine).expect("refine");
    fine.record_dt = config.h * T::from_usize(config.record_every()).expect("stride");
    simulate(&fine)
}

/// Central-difference Jacobian `∂f_i/∂x_j` of `f: ℝᴺ → ℝᴹ` at `x`.
pub fn finite_difference_jacobian<T, F, const N: usize, const M: usize>(f: F, x: &[T; N], step: T) -> [[T; N]; M]
where
    T: Real,
    F: Fn(&[T; N]) -> [T; M],
{
    let mut jac = [[T::zero(); N]; M];
    for j in 0..N {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] = xp[j] + step;
        xm[j] = xm[j] - step;
        let (fp, fm) = (f(&xp), f(&xm));
        for i in 0..M {
            jac[i][j] = (fp[i] - fm[i]) / (step + step);
        }
    }
    jac
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn minor<T: Real>(m: &Mat4<T>, row: usize, col: usize) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (oi, i) in (0..4).filter(|&i| i != row).enumerate() {
        for (oj, j) in (0..4).filter(|&j| j != col).enumerate() {
            out[oi][oj] = m[i][j];
        }
    }
    out
}

/// Transpose of the cofactor matrix, each entry a signed 3×3 minor.
pub fn cofactor_adjugate<T: Real>(m: &Mat4<T>) -> Mat4<T> {
    let mut adj = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let c = det3(&minor(m, i, j));
            adj[j][i] = if (i + j) % 2 == 0 { c } else { -c };
        }
    }
    adj
}

/// First-row Laplace expansion of the 4×4 determinant.
pub fn cofactor_determinant<T: Real>(m: &Mat4<T>) -> T {
    (0..4).fold(T::zero(), |acc, j| {
        let c = m[0][j] * det3(&minor(m, 0, j));
        if j % 2 == 0 {
            acc + c
        } else {
            acc - c
        }
    })
}
