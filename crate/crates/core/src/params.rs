//! Parameter records shared by every module, plus the derived frequency scales.
//!
//! Units follow c = 1: positions and lengths carry time units, λ carries s².

use num_complex::Complex;

use crate::error::{MofError, Result};
use crate::scalar::Real;

fn finite<T: Real>(name: &'static str, x: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(MofError::param(name, "must be finite"))
    }
}

/// Internal oscillator ("mirosc") of a mirror: mass `m`, natural frequency `Ω`, field coupling `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiroscParams<T = f64> {
    m: T,
    omega: T,
    lambda: T,
}

impl<T: Real> MiroscParams<T> {
    pub fn new(m: T, omega: T, lambda: T) -> Result<Self> {
        let m = finite("m", m)?;
        let omega = finite("omega", omega)?;
        let lambda = finite("lambda", lambda)?;
        if m < T::zero() {
            return Err(MofError::param("m", format!("must satisfy m >= 0 (got {m})")));
        }
        if omega <= T::zero() {
            return Err(MofError::param("omega", format!("must satisfy omega > 0 (got {omega})")));
        }
        if lambda < T::zero() {
            return Err(MofError::param("lambda", format!("must satisfy lambda >= 0 (got {lambda})")));
        }
        Ok(Self { m, omega, lambda })
    }

    pub fn m(&self) -> T {
        self.m
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Spring constant κ = mΩ².
    pub fn kappa(&self) -> T {
        self.m * self.omega * self.omega
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.m, self.omega, lambda)
    }

    /// Scattering needs either an inertial oscillator or a coupling.
    pub fn check_scattering(&self) -> Result<()> {
        if self.m == T::zero() && self.lambda == T::zero() {
            Err(MofError::param("m, lambda", "m = 0 and lambda = 0 together leave the mirror undefined"))
        } else {
            Ok(())
        }
    }
}

/// A mirror: its mirosc, bulk mass `M`, equilibrium position and optional trap frequency Ω₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorConfig<T = f64> {
    pub mirosc: MiroscParams<T>,
    mass: T,
    z_eq: T,
    trap_omega0: Option<T>,
}

impl<T: Real> MirrorConfig<T> {
    pub fn new(mirosc: MiroscParams<T>, mass: T, z_eq: T, trap_omega0: Option<T>) -> Result<Self> {
        let mass = finite("M", mass)?;
        if mass <= T::zero() {
            return Err(MofError::param("M", format!("must satisfy M > 0 (got {mass})")));
        }
        let z_eq = finite("z_eq", z_eq)?;
        if let Some(w0) = trap_omega0 {
            if !w0.is_finite() || w0 < T::zero() {
                return Err(MofError::param("trap_omega0", format!("must be finite and >= 0 (got {w0})")));
            }
        }
        Ok(Self { mirosc, mass, z_eq, trap_omega0 })
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn z_eq(&self) -> T {
        self.z_eq
    }

    pub fn trap_omega0(&self) -> Option<T> {
        self.trap_omega0
    }

    /// Trap frequency, zero for a free mirror.
    pub fn omega0_or_free(&self) -> T {
        self.trap_omega0.unwrap_or_else(T::zero)
    }

    pub fn at(&self, z_eq: T) -> Result<Self> {
        Self::new(self.mirosc, self.mass, z_eq, self.trap_omega0)
    }
}

/// Steady-state oscillator amplitude reported alongside R and T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OscAmplitude<T = f64> {
    Finite(Complex<T>),
    /// `m(Ω² − ω²) = 0`: the closed form λT/(m(Ω²−ω²)) is 0/0. `limit` is its finite limiting value.
    Resonant {
        limit: Complex<T>,
    },
    /// Model without an internal oscillator (BC mirror).
    Absent,
}

impl<T: Real> OscAmplitude<T> {
    pub fn finite(&self) -> Option<Complex<T>> {
        match self {
            OscAmplitude::Finite(a) => Some(*a),
            _ => None,
        }
    }

    pub fn is_resonant(&self) -> bool {
        matches!(self, OscAmplitude::Resonant { .. })
    }
}

/// Single-mirror scattering at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterResult<T = f64> {
    pub r: Complex<T>,
    pub t: Complex<T>,
    pub amplitude: OscAmplitude<T>,
}

impl<T: Real> ScatterResult<T> {
    pub fn reflectance(&self) -> T {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> T {
        self.t.norm_sqr()
    }
}

/// Uniform pump `J_ext = A cos Ω_D t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams<T = f64> {
    amplitude: T,
    omega_d: T,
}

impl<T: Real> DriveParams<T> {
    pub fn new(amplitude: T, omega_d: T) -> Result<Self> {
        let amplitude = finite("A", amplitude)?;
        let omega_d = finite("omega_D", omega_d)?;
        if omega_d <= T::zero() {
            return Err(MofError::param("omega_D", format!("must satisfy omega_D > 0 (got {omega_d})")));
        }
        Ok(Self { amplitude, omega_d })
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn omega_d(&self) -> T {
        self.omega_d
    }

    pub fn with_amplitude(&self, amplitude: T) -> Result<Self> {
        Self::new(amplitude, self.omega_d)
    }
}

/// Plasma frequency Ω_p = 3^{3/2} λ² / (4 m Ω²).
pub fn plasma_frequency<T: Real>(p: &MiroscParams<T>) -> Result<T> {
    if p.m == T::zero() {
        return Err(MofError::Degenerate("plasma frequency diverges for m = 0 (perfect-reflection regime)".into()));
    }
    let three = T::lit(3.0);
    Ok(three * three.sqrt() * p.lambda * p.lambda / (T::lit(4.0) * p.m * p.omega * p.omega))
}

/// Index r_p = Ω / Ω_p = 4 m Ω³ / (3^{3/2} λ²).
pub fn rp_index<T: Real>(p: &MiroscParams<T>) -> Result<T> {
    if p.lambda == T::zero() {
        return Err(MofError::Degenerate("r_p diverges for lambda = 0".into()));
    }
    let three = T::lit(3.0);
    Ok(T::lit(4.0) * p.m * p.omega.powi(3) / (three * three.sqrt() * p.lambda * p.lambda))
}

/// BC coupling γ = λ² / (2 m Ω²).
pub fn bc_gamma<T: Real>(p: &MiroscParams<T>) -> Result<T> {
    bc_gamma_from_kappa(p.kappa(), p.lambda)
}

/// BC coupling γ = λ² / (2κ), for the m → 0 limit taken at fixed κ.
pub fn bc_gamma_from_kappa<T: Real>(kappa: T, lambda: T) -> Result<T> {
    if !(kappa > T::zero()) {
        return Err(MofError::Degenerate(format!("gamma requires kappa > 0 (got {kappa})")));
    }
    Ok(lambda * lambda / (T::lit(2.0) * kappa))
}

/// Mirror parameters whose r_p equals `rp`, at given m and Ω.
pub fn mirosc_with_rp<T: Real>(m: T, omega: T, rp: T) -> Result<MiroscParams<T>> {
    if !(rp > T::zero()) {
        return Err(MofError::param("rp", "must be positive"));
    }
    let three = T::lit(3.0);
    let lambda2 = T::lit(4.0) * m * omega.powi(3) / (three * three.sqrt() * rp);
    MiroscParams::new(m, omega, lambda2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_mass() {
        let e = MiroscParams::new(-1.0, 1.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("m >= 0"));
    }

    #[test]
    fn plasma_unit_params() {
        let p = MiroscParams::new(1.0, 1.0, 1.0).unwrap();
        let wp = plasma_frequency(&p).unwrap();
        assert!((wp - 27f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((rp_index(&p).unwrap() - 4.0 / 27f64.sqrt()).abs() < 1e-15);
        assert_eq!(bc_gamma(&p).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_cases() {
        let p = MiroscParams::new(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(plasma_frequency(&p), Err(MofError::Degenerate(_))));
        let q = MiroscParams::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(plasma_frequency(&q).unwrap(), 0.0);
        assert!(rp_index(&q).is_err());
        assert_eq!(bc_gamma_from_kappa(2.0, 3.0).unwrap(), 2.25);
        assert!(bc_gamma_from_kappa(0.0, 3.0).is_err());
    }

    #[test]
    fn free_mirror_defaults() {
        let p = MiroscParams::new(1.0, 1.0, 1.0).unwrap();
        let mc = MirrorConfig::new(p, 2.0, 0.0, None).unwrap();
        assert_eq!(mc.omega0_or_free(), 0.0);
        assert!(MirrorConfig::new(p, 0.0, 0.0, None).is_err());
        assert!(MirrorConfig::new(p, 1.0, f64::NAN, None).is_err());
    }

    #[test]
    fn f32_path() {
        let p = MiroscParams::<f32>::new(1.0, 1.0, 1.0).unwrap();
        let wp = plasma_frequency(&p).unwrap();
        assert!((wp * rp_index(&p).unwrap() - 1.0).abs() < 1e-6);
    }
}
