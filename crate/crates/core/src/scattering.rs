//! Closed-form single-mirror scattering: MOF mirror, BC mirror and the limit joining them.
//!
//! Phase convention: coefficients here are the conjugate-phase (e^{+iωt}) values,
//! R = −iλ²/(2mω(Ω²−ω²) + iλ²). Under e^{−iωt} time dependence the same
//! physics reads R* (see [`crate::cavity`], which uses e^{−iωt}). Moduli, unitarity
//! and T = 1 + R do not depend on the choice.

use num_complex::Complex;

use crate::error::{MofError, Result};
use crate::params::{bc_gamma_from_kappa, MiroscParams, OscAmplitude, ScatterResult};
use crate::scalar::{re, Real};

fn check_omega<T: Real>(omega: T) -> Result<()> {
    if omega > T::zero() && omega.is_finite() {
        Ok(())
    } else {
        Err(MofError::param("omega", format!("must be finite and > 0 (got {omega})")))
    }
}

/// R, T and mirosc amplitude A for a static MOF mirror at frequency `omega`.
pub fn mof_scatter<T: Real>(p: &MiroscParams<T>, omega: T) -> Result<ScatterResult<T>> {
    check_omega(omega)?;
    p.check_scattering()?;
    let (m, w0, lam) = (p.m(), p.omega(), p.lambda());
    let detune = m * (w0 * w0 - omega * omega);
    if lam == T::zero() {
        let amplitude = if detune == T::zero() {
            OscAmplitude::Resonant { limit: Complex::new(T::zero(), T::zero()) }
        } else {
            OscAmplitude::Finite(Complex::new(T::zero(), T::zero()))
        };
        return Ok(ScatterResult { r: re(T::zero()), t: re(T::one()), amplitude });
    }
    let x = T::lit(2.0) * omega * detune;
    let lam2 = lam * lam;
    let den = Complex::new(x, lam2);
    let r = Complex::new(T::zero(), -lam2) / den;
    let t = re(x) / den;
    // λT/(m(Ω²−ω²)) with the common factor cancelled
    let a = re(T::lit(2.0) * lam * omega) / den;
    let amplitude = if detune == T::zero() { OscAmplitude::Resonant { limit: a } } else { OscAmplitude::Finite(a) };
    Ok(ScatterResult { r, t, amplitude })
}

/// |R|² on a grid of y = ω/Ω.
pub fn mof_reflectivity_spectrum<T: Real>(p: &MiroscParams<T>, y_grid: &[T]) -> Result<Vec<T>> {
    p.check_scattering()?;
    if let Some(bad) = y_grid.iter().find(|y| !(**y > T::zero())) {
        return Err(MofError::param("y", format!("spectrum points must be > 0 (got {bad})")));
    }
    let (m, w0, lam) = (p.m(), p.omega(), p.lambda());
    if lam == T::zero() {
        return Ok(vec![T::zero(); y_grid.len()]);
    }
    let scale = T::lit(2.0) * m * w0.powi(3) / (lam * lam);
    Ok(y_grid
        .iter()
        .map(|&y| {
            let s = scale * y * (T::one() - y * y);
            T::one() / (T::one() + s * s)
        })
        .collect())
}

/// Interior minimum of |R(y)|² on (0, 1).
pub fn reflectivity_minimum_y<T: Real>() -> T {
    T::one() / T::lit(3.0).sqrt()
}

/// R, T for the BC mirror with coupling γ.
pub fn bc_scatter<T: Real>(gamma: T, omega: T) -> Result<ScatterResult<T>> {
    check_omega(omega)?;
    if !(gamma >= T::zero()) {
        return Err(MofError::param("gamma", format!("must be >= 0 (got {gamma})")));
    }
    let den = Complex::new(omega, gamma);
    Ok(ScatterResult { r: Complex::new(T::zero(), -gamma) / den, t: re(omega) / den, amplitude: OscAmplitude::Absent })
}

/// |R_MOF − R_BC| at one frequency along a decreasing mass sequence at fixed κ = mΩ².
pub fn mof_to_bc_convergence<T: Real>(kappa: T, lambda: T, omega: T, m_sequence: &[T]) -> Result<Vec<T>> {
    mof_to_bc_max_deviation(kappa, lambda, &[omega], m_sequence)
}

/// max over `omegas` of |R_MOF − R_BC| for each mass in a decreasing sequence at fixed κ.
pub fn mof_to_bc_max_deviation<T: Real>(kappa: T, lambda: T, omegas: &[T], m_sequence: &[T]) -> Result<Vec<T>> {
    let gamma = bc_gamma_from_kappa(kappa, lambda)?;
    for pair in m_sequence.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(MofError::param("m_sequence", "must be strictly decreasing"));
        }
    }
    m_sequence
        .iter()
        .map(|&m| {
            if !(m > T::zero()) {
                return Err(MofError::param("m_sequence", "masses must be positive"));
            }
            let p = MiroscParams::new(m, (kappa / m).sqrt(), lambda)?;
            let mut worst = T::zero();
            for &w in omegas {
                let d = (mof_scatter(&p, w)?.r - bc_scatter(gamma, w)?.r).norm();
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonance_is_perfect_reflection() {
        let p = MiroscParams::new(1.3, 2.0, 0.7).unwrap();
        let s = mof_scatter(&p, 2.0).unwrap();
        assert!((s.r + 1.0).norm() < 1e-15);
        assert!(s.t.norm() < 1e-15);
        assert!(s.amplitude.is_resonant());
    }

    #[test]
    fn zero_coupling_transparent() {
        let p = MiroscParams::new(1.0, 2.0, 0.0).unwrap();
        let s = mof_scatter(&p, 0.5).unwrap();
        assert_eq!(s.r, re(0.0));
        assert_eq!(s.t, re(1.0));
        assert!(MiroscParams::new(0.0, 2.0, 0.0).unwrap().check_scattering().is_err());
        assert!(mof_scatter(&MiroscParams::new(0.0, 2.0, 0.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn bc_values() {
        let s = bc_scatter(1.0, 1.0).unwrap();
        assert!((s.r - Complex::new(-0.5, -0.5)).norm() < 1e-15);
        let z = bc_scatter(0.0, 3.0).unwrap();
        assert_eq!(z.r.norm(), 0.0);
        assert_eq!(z.t, re(1.0));
        let big = bc_scatter(1e12, 1.0).unwrap();
        assert!((big.r + 1.0).norm() < 1e-10);
    }

    #[test]
    fn spectrum_rejects_nonpositive_y() {
        let p = MiroscParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(mof_reflectivity_spectrum(&p, &[0.5, 0.0]).is_err());
    }
}
