use std::sync::Arc;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{MofError, Result};
use crate::params::MiroscParams;
use crate::scalar::Real;

use super::kernel_d;

/// Frequency grid for the inverse transform of D̃(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions<T = f64> {
    /// Upper bound on the frequency spacing.
    pub d_omega: T,
    /// Half-width of the integration window; `None` uses the Nyquist frequency of the τ grid.
    pub window: Option<T>,
    /// Fraction of the window over which the raised-cosine taper rolls off.
    pub taper_fraction: T,
    /// Relative level below which the kernel tail is dropped.
    pub tail_tolerance: T,
}

impl<T: Real> KernelOptions<T> {
    pub fn new(d_omega: T) -> Self {
        Self { d_omega, window: None, taper_fraction: T::lit(0.2), tail_tolerance: T::lit(1e-9) }
    }
}

/// Causal kernel D(τ) sampled at τ_k = k·dτ, k = 0..len.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable<T = f64> {
    pub dtau: T,
    pub values: Vec<T>,
    /// Frequency spacing actually used.
    pub d_omega: T,
    pub window: T,
}

impl<T: Real> KernelTable<T> {
    pub fn at_index(&self, k: usize) -> T {
        self.values.get(k).copied().unwrap_or_else(T::zero)
    }
}

fn taper<T: Real>(w: T, window: T, fraction: T) -> T {
    let w = w.abs();
    let flat = window * (T::one() - fraction);
    if w <= flat {
        T::one()
    } else if w >= window {
        T::zero()
    } else {
        let x = (w - flat) / (window - flat);
        T::lit(0.5) * (T::one() + (T::PI() * x).cos())
    }
}

/// D(τ) = ∫ dω/2π e^{−iωτ} D̃(ω) by FFT, with a raised-cosine taper at the window edge.
pub fn kernel_time_domain<T: Real>(
    p: &MiroscParams<T>,
    length: T,
    dtau: T,
    opts: &KernelOptions<T>,
) -> Result<KernelTable<T>> {
    if !(dtau > T::zero()) || !(opts.d_omega > T::zero()) {
        return Err(MofError::param("kernel grid", "dtau and d_omega must be > 0"));
    }
    let span = T::TAU() / (opts.d_omega * dtau);
    let n = span
        .to_usize()
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| MofError::param("kernel grid", "frequency grid too large"))?
        .next_power_of_two()
        .max(16);
    let d_omega = T::TAU() / (T::from_usize_lossy(n) * dtau);
    let nyquist = T::PI() / dtau;
    let window = opts.window.unwrap_or(nyquist).min(nyquist);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for (j, slot) in buf.iter_mut().enumerate() {
        let signed = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
        let w = d_omega * T::from_i64(signed).expect("grid index");
        let tw = taper(w, window, opts.taper_fraction);
        if tw > T::zero() {
            *slot = kernel_d(w, p, length)? * tw;
        }
    }
    let fft: Arc<dyn rustfft::Fft<T>> = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    let scale = d_omega / T::TAU();
    let half: Vec<T> = buf[..n / 2].iter().map(|c| c.re * scale).collect();
    let peak = half.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let cut = half.iter().rposition(|v| v.abs() > opts.tail_tolerance * peak).map_or(1, |i| i + 1);
    if cut + n / 32 > n / 2 {
        return Err(MofError::History(format!(
            "kernel has not decayed within 2π/dω = {}; reduce d_omega",
            (T::TAU() / d_omega).as_f64()
        )));
    }
    Ok(KernelTable { dtau, values: half[..cut].to_vec(), d_omega, window })
}
