//! Classical radiation-pressure cooling of a trapped mirror facing a perfect mirror at the origin.
//!
//! Pump-frequency signals are written `amp·e^{−iΩ_D t} + c.c.`; the complex amplitudes
//! below are the `amp` parts.

mod averaged;
mod delay;
mod fit;
mod kernel;

pub use averaged::{evolve_averaged, Trajectory, TrajectoryFlags};
pub use delay::{evolve_full_delay, FullDelayOptions, Q1Route};
pub use fit::{fit_damped_oscillation, DampedFit};
pub use kernel::{kernel_time_domain, KernelOptions, KernelTable};

use num_complex::Complex;

use crate::error::{MofError, Result};
use crate::params::{DriveParams, MiroscParams, MirrorConfig};
use crate::scalar::{cis, i_unit, re, Real};

/// Movable mirror (equilibrium at distance L from the fixed perfect mirror) plus pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSetup<T = f64> {
    pub mirror: MirrorConfig<T>,
    length: T,
    pub drive: DriveParams<T>,
}

impl<T: Real> CoolingSetup<T> {
    pub fn new(mirror: MirrorConfig<T>, length: T, drive: DriveParams<T>) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(MofError::param("L", format!("must satisfy L > 0 (got {length})")));
        }
        Ok(Self { mirror, length, drive })
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn with_length(&self, length: T) -> Result<Self> {
        Self::new(self.mirror, length, self.drive)
    }

    pub fn mirosc(&self) -> &MiroscParams<T> {
        &self.mirror.mirosc
    }

    /// λ²/(mΩ³); infinite for a massless mirosc.
    pub fn coupling_ratio(&self) -> T {
        let p = self.mirosc();
        p.lambda() * p.lambda() / (p.m() * p.omega().powi(3))
    }

    pub fn is_weak_coupling(&self) -> bool {
        self.coupling_ratio() < T::lit(0.1)
    }
}

#[inline]
fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        T::one() - x * x / T::lit(6.0)
    } else {
        x.sin() / x
    }
}

/// Response kernel D̃(ω) = −2ω / (2mω(ω²−Ω²) + iλ²(1 − e^{2iωL})).
///
/// Evaluated as −1 / (m(ω²−Ω²) + λ²L·sinc(ωL)·e^{iωL}), which is regular at ω = 0.
pub fn kernel_d<T: Real>(omega: T, p: &MiroscParams<T>, length: T) -> Result<Complex<T>> {
    let (m, w0, lam) = (p.m(), p.omega(), p.lambda());
    let den = re(m * (omega * omega - w0 * w0)) + cis(omega * length) * (lam * lam * length * sinc(omega * length));
    let scale = m * (omega * omega + w0 * w0) + lam * lam * length;
    if den.norm() <= T::epsilon() * T::lit(16.0) * scale {
        return Err(MofError::Pole { omega: omega.as_f64() });
    }
    Ok(-re(T::one()) / den)
}

/// Propagated drive at the mirror: F_ext = α e^{−iΩ_D t} + c.c., ∂ₓF_ext ↔ α′, ∂ₓ²F_ext ↔ iΩ_D α′.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveAmplitudes<T = f64> {
    pub alpha: Complex<T>,
    pub alpha_prime: Complex<T>,
    pub d2x: Complex<T>,
}

pub fn drive_amplitudes<T: Real>(d: &DriveParams<T>, length: T) -> DriveAmplitudes<T> {
    let (a, wd) = (d.amplitude(), d.omega_d());
    let ph = cis(wd * length);
    let alpha = (ph - re(T::one())) * (a / (T::lit(2.0) * wd * wd));
    let alpha_prime = i_unit::<T>() * ph * (a / (T::lit(2.0) * wd));
    let d2x = i_unit::<T>() * alpha_prime * wd;
    DriveAmplitudes { alpha, alpha_prime, d2x }
}

/// Complex amplitude λαD̃(Ω_D) of the driven steady-state mirosc q₀.
pub fn q0_steady<T: Real>(p: &MiroscParams<T>, d: &DriveParams<T>, length: T) -> Result<Complex<T>> {
    let amps = drive_amplitudes(d, length);
    Ok(amps.alpha * kernel_d(d.omega_d(), p, length)? * p.lambda())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveFrequency<T = f64> {
    Stable(T),
    /// Ω₀² − ΔΩ² < 0: exponential growth at this rate.
    Unstable {
        growth_rate: T,
    },
}

impl<T: Real> EffectiveFrequency<T> {
    pub fn from_stiffness(w2: T) -> Self {
        if w2 >= T::zero() {
            EffectiveFrequency::Stable(w2.sqrt())
        } else {
            EffectiveFrequency::Unstable { growth_rate: (-w2).sqrt() }
        }
    }

    pub fn stable(&self) -> Option<T> {
        match self {
            EffectiveFrequency::Stable(w) => Some(*w),
            EffectiveFrequency::Unstable { .. } => None,
        }
    }
}

/// Preconditions of the weak-coupling averaging that a setup fails to meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoolingWarning {
    /// λ²/(mΩ³) ≥ 0.1
    StrongCoupling,
    /// Ω₀ ≥ 0.1 Ω_D
    SlowPumpViolated,
    /// Ω₀L ≥ 0.1
    LongCavity,
    /// α = 0: the mirror sits on a node of the propagated drive.
    DriveNode,
}

/// Averaged mirror equation M Z̈ + Γ Ż + M(Ω₀² − ΔΩ²) Z = F_rad.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingCoefficients<T = f64> {
    pub length: T,
    pub f_rad: T,
    pub d_omega2: T,
    /// Damping coefficient in kg/s; twice `gamma_single`, the value that matches the delay dynamics.
    pub gamma: T,
    /// (λ⁴/2)|αD̃(Ω_D)|² cos 2Ω_D L as a bare expression.
    pub gamma_single: T,
    pub effective_frequency: EffectiveFrequency<T>,
    pub warnings: Vec<CoolingWarning>,
}

impl<T: Real> CoolingCoefficients<T> {
    pub fn stiffness(&self, omega0: T) -> T {
        omega0 * omega0 - self.d_omega2
    }

    /// Envelope decay rate Γ/(2M).
    pub fn decay_rate(&self, mass: T) -> T {
        self.gamma / (T::lit(2.0) * mass)
    }
}

/// F_rad, ΔΩ² and Γ from the time-averaged force.
///
/// F_rad and MΔΩ² are realized as `expression + c.c.`; Γ uses the same realization.
pub fn cooling_coefficients<T: Real>(setup: &CoolingSetup<T>) -> Result<CoolingCoefficients<T>> {
    let p = setup.mirosc();
    let l = setup.length;
    let wd = setup.drive.omega_d();
    let lam = p.lambda();
    let lam2 = lam * lam;
    let two = T::lit(2.0);
    let amps = drive_amplitudes(&setup.drive, l);
    let (a, ap) = (amps.alpha, amps.alpha_prime);
    let d = kernel_d(wd, p, l)?;
    let e2 = cis(two * wd * l);
    let c2 = (two * wd * l).cos();
    let ad = a * d;

    let f = ad * lam2 * (ap.conj() + ad.conj() * e2.conj() * (lam2 / two));
    let t1 = -i_unit::<T>() * ad * (wd * lam2) * (ap.conj() + ad.conj() * e2.conj() * (T::lit(1.5) * lam2));
    let t2 = d * lam2 * (ap + ad * e2 * lam2) * (ap.conj() + ad.conj() * (lam2 * c2));
    let mass = setup.mirror.mass();

    let f_rad = two * f.re;
    let d_omega2 = two * (t1 + t2).re / mass;
    let gamma_single = lam2 * lam2 / two * ad.norm_sqr() * c2;
    let gamma = two * gamma_single;

    let w0 = setup.mirror.omega0_or_free();
    let mut warnings = Vec::new();
    if !setup.is_weak_coupling() {
        warnings.push(CoolingWarning::StrongCoupling);
    }
    if w0 >= T::lit(0.1) * wd {
        warnings.push(CoolingWarning::SlowPumpViolated);
    }
    if w0 * l >= T::lit(0.1) {
        warnings.push(CoolingWarning::LongCavity);
    }
    if a.norm() <= T::epsilon() * T::lit(64.0) * (setup.drive.amplitude() / (wd * wd)).abs() {
        warnings.push(CoolingWarning::DriveNode);
    }
    Ok(CoolingCoefficients {
        length: l,
        f_rad,
        d_omega2,
        gamma,
        gamma_single,
        effective_frequency: EffectiveFrequency::from_stiffness(w0 * w0 - d_omega2),
        warnings,
    })
}

/// Coefficients at each cavity length of a sweep.
pub fn cooling_sweep<T: Real>(base: &CoolingSetup<T>, lengths: &[T]) -> Result<Vec<CoolingCoefficients<T>>> {
    lengths.iter().map(|&l| cooling_coefficients(&base.with_length(l)?)).collect()
}

/// Pump-period signals entering the force functional, all evaluated at one time.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PumpSignals<T> {
    pub q0: T,
    pub q0_delayed: T,
    pub q0dot_delayed: T,
    pub f1: T,
    pub f2: T,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Pump<T> {
    pub lambda: T,
    pub omega_d: T,
    pub delay: T,
    pub q0_hat: Complex<T>,
    pub amps: DriveAmplitudes<T>,
}

impl<T: Real> Pump<T> {
    pub fn new(setup: &CoolingSetup<T>) -> Result<Self> {
        let p = setup.mirosc();
        Ok(Self {
            lambda: p.lambda(),
            omega_d: setup.drive.omega_d(),
            delay: T::lit(2.0) * setup.length,
            q0_hat: q0_steady(p, &setup.drive, setup.length)?,
            amps: drive_amplitudes(&setup.drive, setup.length),
        })
    }

    #[inline]
    fn real_part(amp: Complex<T>, ph: Complex<T>) -> T {
        T::lit(2.0) * (amp * ph).re
    }

    pub fn at(&self, t: T) -> PumpSignals<T> {
        let ph = cis(-self.omega_d * t);
        let phd = cis(-self.omega_d * (t - self.delay));
        let iwd = Complex::new(T::zero(), -self.omega_d);
        PumpSignals {
            q0: Self::real_part(self.q0_hat, ph),
            q0_delayed: Self::real_part(self.q0_hat, phd),
            q0dot_delayed: Self::real_part(self.q0_hat * iwd, phd),
            f1: Self::real_part(self.amps.alpha_prime, ph),
            f2: Self::real_part(self.amps.d2x, ph),
        }
    }

    /// Source of the first-order mirosc response q₁.
    #[inline]
    pub fn q1_source(&self, s: &PumpSignals<T>, z: T, z_delayed: T) -> T {
        let lam = self.lambda;
        lam * s.f1 * z + lam * lam / T::lit(2.0) * (z + z_delayed) * s.q0_delayed
    }

    /// The force functional ℱ[Z] to first order in Z.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    pub fn force(&self, s: &PumpSignals<T>, z: T, z_delayed: T, zdot_delayed: T, q1: T, q1_delayed: T) -> T {
        let lam = self.lambda;
        let half = T::lit(0.5);
        let lam2 = lam * lam;
        let carrier = s.f1 + lam * half * s.q0_delayed;
        lam * s.q0 * carrier + lam * s.q0 * (s.f2 - lam * s.q0dot_delayed) * z
            - lam2 * half * s.q0 * s.q0dot_delayed * z_delayed
            - lam2 * half * s.q0 * s.q0_delayed * zdot_delayed
            + lam * q1 * carrier
            + lam2 * half * s.q0 * q1_delayed
    }
}

/// Pump-period average of ℱ with the mirror frozen at displacement `z`.
///
/// The frozen-mirror q₁ is the exact steady response at the pump harmonics, and the
/// average uses `samples` points per period. Compare against F_rad − MΔΩ²·z.
pub fn frozen_mirror_average_force<T: Real>(setup: &CoolingSetup<T>, z: T, samples: usize) -> Result<T> {
    let pump = Pump::new(setup)?;
    let p = setup.mirosc();
    let wd = setup.drive.omega_d();
    let lam = p.lambda();
    let d = kernel_d(wd, p, setup.length)?;
    // frozen Z: source λ f₁ z + λ² z q₀(t−2L) at ±Ω_D
    let src = (pump.amps.alpha_prime + pump.q0_hat * cis(T::lit(2.0) * wd * setup.length) * lam) * (lam * z);
    let q1_hat = d * src;
    let period = T::TAU() / wd;
    let n = samples.max(8);
    let mut acc = T::zero();
    for j in 0..n {
        let t = period * T::from_usize_lossy(j) / T::from_usize_lossy(n);
        let s = pump.at(t);
        let q1 = T::lit(2.0) * (q1_hat * cis(-wd * t)).re;
        let q1d = T::lit(2.0) * (q1_hat * cis(-wd * (t - pump.delay))).re;
        acc = acc + pump.force(&s, z, z, T::zero(), q1, q1d);
    }
    Ok(acc / T::from_usize_lossy(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> MiroscParams {
        MiroscParams::new(1.0, 3.0, 1.7).unwrap()
    }

    #[test]
    fn kernel_free_oscillator() {
        let q = MiroscParams::new(2.0, 3.0, 0.0).unwrap();
        let d = kernel_d(1.5, &q, 0.4).unwrap();
        assert!((d - re(-1.0 / (2.0 * (2.25 - 9.0)))).norm() < 1e-15);
    }

    #[test]
    fn kernel_zero_frequency_limit() {
        let d0 = kernel_d(0.0, &p(), 0.2).unwrap();
        assert!((d0 - re(1.0 / (9.0 - 1.7f64.powi(2) * 0.2))).norm() < 1e-14);
    }

    #[test]
    fn kernel_closed_form() {
        let q = p();
        for &w in &[0.3, 2.9, 3.0, 7.1] {
            let l = 0.37;
            let den = Complex::new(2.0 * w * (w * w - 9.0), 0.0)
                + Complex::new(0.0, 1.7f64.powi(2)) * (re(1.0) - cis(2.0 * w * l));
            let expect = re(-2.0 * w) / den;
            assert!((kernel_d(w, &q, l).unwrap() - expect).norm() < 1e-13 * expect.norm());
        }
    }

    #[test]
    fn kernel_pole_detected() {
        // ΩL = π with ω = Ω: both parts of the denominator vanish
        let q = MiroscParams::new(1.0, 2.0, 1.0).unwrap();
        let l = std::f64::consts::PI / 2.0;
        assert!(matches!(kernel_d(2.0, &q, l), Err(MofError::Pole { .. })));
    }

    #[test]
    fn drive_node() {
        let d = DriveParams::new(3.0, 2.0).unwrap();
        let a = drive_amplitudes(&d, std::f64::consts::PI);
        assert!(a.alpha.norm() < 1e-14);
        assert!((a.alpha_prime.norm() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gamma_vanishes_on_quarter_points() {
        let mirror = MirrorConfig::new(p(), 10.0, 0.0, Some(0.1)).unwrap();
        let drive = DriveParams::new(1.0, 5.0).unwrap();
        let l = std::f64::consts::PI / (4.0 * 5.0);
        let setup = CoolingSetup::new(mirror, l, drive).unwrap();
        let c = cooling_coefficients(&setup).unwrap();
        let ad = drive_amplitudes(&drive, l).alpha * kernel_d(5.0, &p(), l).unwrap();
        let scale = 1.7f64.powi(4) * ad.norm_sqr();
        assert!(scale > 0.0);
        assert!(c.gamma.abs() < 1e-14 * scale);
    }
}
