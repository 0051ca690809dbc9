use crate::error::{MofError, Result};
use crate::scalar::Real;

use super::{CoolingCoefficients, CoolingSetup};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryFlags {
    /// Negative effective stiffness: motion grows exponentially.
    pub unstable: bool,
    /// |Z| exceeded L/10; integration stopped there.
    pub expansion_invalid: bool,
}

/// Mirror displacement Z(t) on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T = f64> {
    pub times: Vec<T>,
    pub z: Vec<T>,
    pub zdot: Vec<T>,
    pub integrator: &'static str,
    pub dt: T,
    pub flags: TrajectoryFlags,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn with_capacity(n: usize, dt: T, integrator: &'static str) -> Self {
        Self {
            times: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            zdot: Vec::with_capacity(n),
            integrator,
            dt,
            flags: TrajectoryFlags::default(),
        }
    }

    pub(crate) fn push(&mut self, t: T, z: T, v: T) {
        self.times.push(t);
        self.z.push(z);
        self.zdot.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Suffix of the trajectory starting at time `t0`.
    pub fn after(&self, t0: T) -> (Vec<T>, Vec<T>) {
        let i = self.times.partition_point(|&t| t < t0);
        (self.times[i..].to_vec(), self.z[i..].to_vec())
    }
}

pub(crate) fn check_steps<T: Real>(t_end: T, dt: T) -> Result<usize> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(MofError::param("dt", format!("must be finite and > 0 (got {dt})")));
    }
    if !(t_end >= T::zero()) || !t_end.is_finite() {
        return Err(MofError::param("t_end", format!("must be finite and >= 0 (got {t_end})")));
    }
    (t_end / dt).round().to_usize().ok_or_else(|| MofError::param("t_end", "too many steps"))
}

/// Integrate M Z̈ + Γ Ż + M(Ω₀² − ΔΩ²) Z = F_rad with fixed-step RK4.
pub fn evolve_averaged<T: Real>(
    setup: &CoolingSetup<T>,
    coeffs: &CoolingCoefficients<T>,
    z0: T,
    v0: T,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let n = check_steps(t_end, dt)?;
    let mass = setup.mirror.mass();
    let w0 = setup.mirror.omega0_or_free();
    let k = coeffs.stiffness(w0);
    let rate = k.abs().sqrt().max(coeffs.gamma.abs() / mass);
    if rate > T::zero() && dt * rate > T::TAU() / T::lit(40.0) {
        return Err(MofError::param("dt", format!("must resolve the effective period with >= 40 steps (dt = {dt})")));
    }
    let g = coeffs.gamma / mass;
    let f = coeffs.f_rad / mass;
    let acc = |z: T, v: T| f - g * v - k * z;
    let cap = setup.length() / T::lit(10.0);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);

    let mut traj = Trajectory::with_capacity(n + 1, dt, "rk4");
    traj.flags.unstable = k < T::zero();
    let (mut z, mut v) = (z0, v0);
    traj.push(T::zero(), z, v);
    for i in 1..=n {
        let (k1z, k1v) = (v, acc(z, v));
        let (k2z, k2v) = (v + half * dt * k1v, acc(z + half * dt * k1z, v + half * dt * k1v));
        let (k3z, k3v) = (v + half * dt * k2v, acc(z + half * dt * k2z, v + half * dt * k2v));
        let (k4z, k4v) = (v + dt * k3v, acc(z + dt * k3z, v + dt * k3v));
        z = z + dt * sixth * (k1z + T::lit(2.0) * (k2z + k3z) + k4z);
        v = v + dt * sixth * (k1v + T::lit(2.0) * (k2v + k3v) + k4v);
        if !z.is_finite() || !v.is_finite() {
            return Err(MofError::NonFinite(format!("averaged trajectory at step {i}")));
        }
        traj.push(dt * T::from_usize_lossy(i), z, v);
        if z.abs() > cap {
            traj.flags.expansion_invalid = true;
            break;
        }
    }
    Ok(traj)
}
