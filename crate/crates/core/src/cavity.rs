//! Two static mirrors (multiple-reflection sum), delta-potential normal modes in a
//! Dirichlet box, and the Nx coupling obtained from adiabatic mirosc elimination.
//!
//! Time dependence here is e^{−iωt} with e^{iωx} incident from the left, which gives
//! R = iλ²/(2mω(Ω²−ω²) − iλ²) for a single mirror at the origin.

use num_complex::Complex;

use crate::error::{MofError, Result};
use crate::params::{MiroscParams, MirrorConfig, OscAmplitude};
use crate::scalar::{cis, re, Real};

/// Mirror 1 at x = 0, mirror 2 at x = L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig<T = f64> {
    pub mirror1: MirrorConfig<T>,
    pub mirror2: MirrorConfig<T>,
    length: T,
}

impl<T: Real> CavityConfig<T> {
    pub fn new(mirror1: MirrorConfig<T>, mirror2: MirrorConfig<T>, length: T) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(MofError::param("L", format!("must satisfy L > 0 (got {length})")));
        }
        Ok(Self { mirror1, mirror2, length })
    }

    pub fn length(&self) -> T {
        self.length
    }
}

/// Amplitudes of e^{iωx} (`forward`) and e^{−iωx} (`backward`) in one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaves<T = f64> {
    pub forward: Complex<T>,
    pub backward: Complex<T>,
}

impl<T: Real> PlaneWaves<T> {
    pub fn eval(&self, omega: T, x: T) -> Complex<T> {
        self.forward * cis(omega * x) + self.backward * cis(-omega * x)
    }

    pub fn eval_dx(&self, omega: T, x: T) -> Complex<T> {
        let iw = Complex::new(T::zero(), omega);
        iw * (self.forward * cis(omega * x) - self.backward * cis(-omega * x))
    }
}

/// Left-incident mode in the three regions x < 0, 0 < x < L, x > L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRegions<T = f64> {
    pub left: PlaneWaves<T>,
    pub inside: PlaneWaves<T>,
    pub right: PlaneWaves<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityScatter<T = f64> {
    pub omega: T,
    pub length: T,
    pub r1: Complex<T>,
    pub t1: Complex<T>,
    pub r2: Complex<T>,
    pub t2: Complex<T>,
    pub a1: OscAmplitude<T>,
    pub a2: OscAmplitude<T>,
    pub psi: ModeRegions<T>,
}

impl<T: Real> CavityScatter<T> {
    /// ψ(x) of the left-incident mode.
    pub fn psi_at(&self, x: T) -> Complex<T> {
        let region = if x < T::zero() {
            &self.psi.left
        } else if x <= self.length {
            &self.psi.inside
        } else {
            &self.psi.right
        };
        region.eval(self.omega, x)
    }

    /// |T₁ / (1 − R₁R₂)|, the forward amplitude inside the cavity.
    pub fn interior_gain(&self) -> T {
        (self.t1 / (re(T::one()) - self.r1 * self.r2)).norm()
    }

    /// Reflection of the whole cavity, seen from the left.
    pub fn total_reflection(&self) -> Complex<T> {
        self.psi.left.backward
    }

    /// Transmission of the whole cavity.
    pub fn total_transmission(&self) -> Complex<T> {
        self.psi.right.forward
    }
}

/// Single-mirror r and the reduced oscillator amplitude 2λω/(X − iλ²), e^{−iωt} convention.
fn mirror_response<T: Real>(p: &MiroscParams<T>, omega: T) -> (Complex<T>, OscAmplitude<T>) {
    let (m, w0, lam) = (p.m(), p.omega(), p.lambda());
    let detune = m * (w0 * w0 - omega * omega);
    if lam == T::zero() {
        let a = re(T::zero());
        let amp = if detune == T::zero() { OscAmplitude::Resonant { limit: a } } else { OscAmplitude::Finite(a) };
        return (re(T::zero()), amp);
    }
    let lam2 = lam * lam;
    let den = Complex::new(T::lit(2.0) * omega * detune, -lam2);
    let r = Complex::new(T::zero(), lam2) / den;
    let a = re(T::lit(2.0) * lam * omega) / den;
    let amp = if detune == T::zero() { OscAmplitude::Resonant { limit: a } } else { OscAmplitude::Finite(a) };
    (r, amp)
}

fn scale_amp<T: Real>(a: OscAmplitude<T>, f: Complex<T>) -> OscAmplitude<T> {
    match a {
        OscAmplitude::Finite(v) => OscAmplitude::Finite(v * f),
        OscAmplitude::Resonant { limit } => OscAmplitude::Resonant { limit: limit * f },
        OscAmplitude::Absent => OscAmplitude::Absent,
    }
}

/// Scattering of e^{iωx} off the two-mirror cavity, with the multiple-reflection series summed.
pub fn two_mirror_scatter<T: Real>(c: &CavityConfig<T>, omega: T) -> Result<CavityScatter<T>> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(MofError::param("omega", format!("must be finite and > 0 (got {omega})")));
    }
    c.mirror1.mirosc.check_scattering()?;
    c.mirror2.mirosc.check_scattering()?;
    let l = c.length;
    let one = re(T::one());
    let (r1, amp1) = mirror_response(&c.mirror1.mirosc, omega);
    let (rho2, amp2) = mirror_response(&c.mirror2.mirosc, omega);
    let r2 = rho2 * cis(T::lit(2.0) * omega * l);
    let t1 = one + r1;
    let t2 = one + rho2;
    let product = (r1 * r2).norm();
    if !(product < T::one()) {
        return Err(MofError::NonSummable { product: product.as_f64() });
    }
    let g = one / (one - r1 * r2);
    let a1 = scale_amp(amp1, (one + r2) * g);
    let a2 = scale_amp(amp2, t1 * cis(omega * l) * g);
    let psi = ModeRegions {
        left: PlaneWaves { forward: one, backward: (r1 + r2 + re(T::lit(2.0)) * r1 * r2) * g },
        inside: PlaneWaves { forward: t1 * g, backward: t1 * r2 * g },
        right: PlaneWaves { forward: t1 * t2 * g, backward: re(T::zero()) },
    };
    Ok(CavityScatter { omega, length: l, r1, t1, r2, t2, a1, a2, psi })
}

/// Normal mode of the box [0, X] with a delta potential of strength λ²/κ at x = L:
/// u(x) = a·sin(kx) for x < L and b·sin(k(X − x)) for x > L; N_k·u has unit flat norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityMode<T = f64> {
    pub k: T,
    pub omega_k: T,
    pub a: T,
    pub b: T,
    pub n_k: T,
    pub length: T,
    pub box_size: T,
    pub strength: T,
}

fn sin_sq_integral<T: Real>(k: T, len: T) -> T {
    len / T::lit(2.0) - (T::lit(2.0) * k * len).sin() / (T::lit(4.0) * k)
}

impl<T: Real> CavityMode<T> {
    /// Unnormalized u(x).
    pub fn raw(&self, x: T) -> T {
        if x <= self.length {
            self.a * (self.k * x).sin()
        } else {
            self.b * (self.k * (self.box_size - x)).sin()
        }
    }

    /// Normalized mode function N_k·u(x).
    pub fn value(&self, x: T) -> T {
        self.n_k * self.raw(x)
    }

    pub fn raw_dx_left(&self) -> T {
        self.a * self.k * (self.k * self.length).cos()
    }

    pub fn raw_dx_right(&self) -> T {
        -self.b * self.k * (self.k * (self.box_size - self.length)).cos()
    }

    /// Average of the one-sided derivatives of u at the delta.
    pub fn raw_dx_mean(&self) -> T {
        (self.raw_dx_left() + self.raw_dx_right()) / T::lit(2.0)
    }

    pub fn raw_norm2(&self) -> T {
        self.a * self.a * sin_sq_integral(self.k, self.length)
            + self.b * self.b * sin_sq_integral(self.k, self.box_size - self.length)
    }

    /// ∫₀^X (N_k u)² dx.
    pub fn flat_norm2(&self) -> T {
        self.n_k * self.n_k * self.raw_norm2()
    }

    /// Fraction of the flat norm inside [0, L].
    pub fn interior_weight(&self) -> T {
        self.a * self.a * sin_sq_integral(self.k, self.length) / self.raw_norm2()
    }

    /// u′(L⁺) − u′(L⁻) + (λ²/κ)u(L), zero for an exact mode (normalized units).
    pub fn jump_residual(&self) -> T {
        let ul = self.raw(self.length);
        self.n_k * (self.raw_dx_right() - self.raw_dx_left() + self.strength * ul)
    }

    /// Zeros of u strictly inside (0, X), excluding x = L.
    pub fn node_count(&self) -> usize {
        node_count(self.k, self.length, self.box_size)
    }
}

fn node_count<T: Real>(k: T, l: T, x: T) -> usize {
    let pi = T::PI();
    let tol = T::lit(1e-9);
    // zeros strictly inside a segment, and whether the segment end at L is itself a zero
    let inner = |len: T| -> (usize, bool) {
        let s = k * len / pi;
        let r = s.round();
        if (s - r).abs() < tol {
            ((r - T::one()).max(T::zero()).to_usize().unwrap_or(0), true)
        } else {
            (s.floor().to_usize().unwrap_or(0), false)
        }
    };
    let (nl, zl) = inner(l);
    let (nr, zr) = inner(x - l);
    nl + nr + usize::from(zl && zr)
}

fn mode_condition<T: Real>(k: T, l: T, x: T, g: T) -> T {
    k * (k * x).sin() - g * (k * l).sin() * (k * (x - l)).sin()
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> Result<T> {
    let mut flo = f(lo);
    let tol = T::lit(1e-13);
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if hi - lo <= tol * mid.abs() {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(MofError::RootBracket { lo: lo.as_f64(), hi: hi.as_f64(), tol: ((hi - lo) / hi).as_f64() })
}

fn scan_roots<T: Real>(f: &impl Fn(T) -> T, lo: T, hi: T, step: T, out: &mut Vec<T>) -> Result<()> {
    let mut k0 = lo;
    let mut f0 = f(k0);
    while k0 < hi {
        let k1 = (k0 + step).min(hi);
        let f1 = f(k1);
        if f1 == T::zero() {
            out.push(k1);
        } else if f0 != T::zero() && (f0 > T::zero()) != (f1 > T::zero()) {
            out.push(bisect(f, k0, k1)?);
        }
        k0 = k1;
        f0 = f1;
    }
    Ok(())
}

/// Lowest `n_modes` positive roots k of the boxed delta-potential mode condition,
/// `k sin kX = (λ²/κ) sin kL sin k(X−L)`, with κ = m₂Ω₂² of the second mirror.
pub fn cavity_modes_boxed<T: Real>(c: &CavityConfig<T>, box_size: T, n_modes: usize) -> Result<Vec<CavityMode<T>>> {
    let kappa = c.mirror2.mirosc.kappa();
    if !(kappa > T::zero()) {
        return Err(MofError::Degenerate("mode strength lambda^2/kappa needs kappa > 0".into()));
    }
    let lam = c.mirror2.mirosc.lambda();
    modes_with_strength(c.length, box_size, lam * lam / kappa, n_modes)
}

/// Boxed modes for an explicit delta strength g = λ²/κ.
pub fn modes_with_strength<T: Real>(l: T, box_size: T, g: T, n_modes: usize) -> Result<Vec<CavityMode<T>>> {
    if !(box_size > l) || !(l > T::zero()) {
        return Err(MofError::param("box_size", format!("must satisfy X > L > 0 (X = {box_size}, L = {l})")));
    }
    if !(g >= T::zero()) {
        return Err(MofError::param("lambda^2/kappa", "must be >= 0"));
    }
    let x = box_size;
    let f = |k: T| mode_condition(k, l, x, g);
    let step = T::PI() / (T::lit(8.0) * x);
    let mut roots: Vec<T> = Vec::with_capacity(n_modes + 2);
    let mut lo = step * T::lit(1e-6);
    // grow the scan window until enough roots are bracketed
    let mut hi = T::PI() * T::from_usize_lossy(n_modes + 1) / x;
    while roots.len() < n_modes {
        scan_roots(&f, lo, hi, step, &mut roots)?;
        lo = hi;
        hi = hi + T::PI() * T::from_usize_lossy(n_modes + 1) / x;
    }
    // a pair of roots closer than one sample spacing shows up as a gap in the node count.
    // The attractive delta binds a state with ω² < 0 once g·L(X−L) > X; the lowest
    // positive root then carries one node instead of none.
    let first_nodes = usize::from(g * l * (x - l) > x);
    let floor = step * T::lit(1e-6);
    let mut refined = 0;
    loop {
        if roots.first().is_some_and(|&k| node_count(k, l, x) > first_nodes) {
            roots.insert(0, floor);
        }
        let mut gap = None;
        for (i, w) in roots.windows(2).enumerate() {
            let below = if w[0] == floor { first_nodes } else { node_count(w[0], l, x) + 1 };
            if node_count(w[1], l, x) > below {
                gap = Some(i);
                break;
            }
        }
        let Some(i) = gap else { break };
        refined += 1;
        if refined > 64 {
            return Err(MofError::RootBracket {
                lo: roots[i].as_f64(),
                hi: roots[i + 1].as_f64(),
                tol: (step / T::lit(1024.0)).as_f64(),
            });
        }
        let (a, b) = (roots[i], roots[i + 1]);
        let eps = (b - a) * T::lit(1e-9);
        let mut extra = Vec::new();
        scan_roots(&f, a + eps, b - eps, (b - a) / T::lit(1024.0), &mut extra)?;
        if extra.is_empty() {
            return Err(MofError::RootBracket {
                lo: a.as_f64(),
                hi: b.as_f64(),
                tol: ((b - a) / T::lit(1024.0)).as_f64(),
            });
        }
        roots.splice(i + 1..i + 1, extra);
    }
    roots.retain(|&k| k != floor);
    roots.dedup_by(|a, b| (*a - *b).abs() <= T::lit(1e-12) * b.abs());
    roots.truncate(n_modes);
    Ok(roots.into_iter().map(|k| build_mode(k, l, x, g)).collect())
}

fn build_mode<T: Real>(k: T, l: T, x: T, g: T) -> CavityMode<T> {
    let (sl, sr) = ((k * l).sin(), (k * (x - l)).sin());
    let (a, b) = if sl.abs() + sr.abs() > T::lit(1e-10) { (sr, sl) } else { ((k * (x - l)).cos(), -(k * l).cos()) };
    let mut mode = CavityMode { k, omega_k: k, a, b, n_k: T::one(), length: l, box_size: x, strength: g };
    mode.n_k = T::one() / mode.raw_norm2().sqrt();
    mode
}

/// ∫₀^X u_i u_j dx for two normalized modes of the same box.
pub fn mode_overlap<T: Real>(u: &CavityMode<T>, v: &CavityMode<T>) -> T {
    let cross = |k1: T, k2: T, len: T| -> T {
        if (k1 - k2).abs() <= T::lit(1e-14) * k1 {
            sin_sq_integral(k1, len)
        } else {
            let d = k1 - k2;
            let s = k1 + k2;
            ((d * len).sin() / d - (s * len).sin() / s) / T::lit(2.0)
        }
    };
    let inner = u.a * v.a * cross(u.k, v.k, u.length) + u.b * v.b * cross(u.k, v.k, u.box_size - u.length);
    u.n_k * v.n_k * inner
}

/// Nx coupling g = (λ²/2κ)|N_k|² Re[u′(L) u*(L)], with u′(L) the mean of the one-sided derivatives.
///
/// Convention: N_k gives the mode unit flat norm on [0, X]. With this choice
/// g = −(ω_k/2) ∂ω_k/∂L.
pub fn nx_coupling<T: Real>(mode: &CavityMode<T>, p: &MiroscParams<T>) -> Result<T> {
    let norm2 = mode.flat_norm2();
    if !((norm2 - T::one()).abs() < T::lit(1e-8)) {
        return Err(MofError::Unnormalized { norm2: norm2.as_f64() });
    }
    let kappa = p.kappa();
    if !(kappa > T::zero()) {
        return Err(MofError::Degenerate("Nx coupling needs kappa > 0".into()));
    }
    let lam = p.lambda();
    let ul = mode.raw(mode.length);
    Ok(lam * lam / (T::lit(2.0) * kappa) * mode.n_k * mode.n_k * mode.raw_dx_mean() * ul)
}

/// Frequency of the interior-gain maximum |T₁/(1 − R₁R₂)| within half a free spectral
/// range of `omega_guess` (typically a root from [`cavity_modes_boxed`]).
pub fn interior_resonance<T: Real>(c: &CavityConfig<T>, omega_guess: T) -> Result<T> {
    let half_fsr = T::PI() / (T::lit(2.0) * c.length());
    let lo = (omega_guess - half_fsr).max(omega_guess * T::lit(1e-3));
    let hi = omega_guess + half_fsr;
    let gain = |w: T| two_mirror_scatter(c, w).map(|s| s.interior_gain());
    let n = 400;
    let h = (hi - lo) / T::from_usize_lossy(n);
    let mut best = (lo, T::neg_infinity());
    for i in 0..=n {
        let w = lo + h * T::from_usize_lossy(i);
        let g = gain(w)?;
        if g > best.1 {
            best = (w, g);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let r = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (gain(x1)?, gain(x2)?);
    for _ in 0..200 {
        if b - a <= T::lit(1e-14) * b {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = gain(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = gain(x1)?;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

/// Two-term adiabatic mirosc response q ≈ (λ/κ)Φ − (λ/κ)Φ̈/Ω².
pub fn adiabatic_effective_source<T: Real>(phi: T, phi_ddot: T, p: &MiroscParams<T>) -> Result<T> {
    let kappa = p.kappa();
    if !(kappa > T::zero()) {
        return Err(MofError::Degenerate("adiabatic elimination needs kappa > 0".into()));
    }
    let s = p.lambda() / kappa;
    Ok(s * phi - s * phi_ddot / (p.omega() * p.omega()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mirror(m: f64, w: f64, lam: f64) -> MirrorConfig {
        MirrorConfig::new(MiroscParams::new(m, w, lam).unwrap(), 1.0, 0.0, None).unwrap()
    }

    #[test]
    fn transparent_first_mirror_resonant_second() {
        let c = CavityConfig::new(mirror(1.0, 3.0, 0.0), mirror(1.0, 2.0, 1.5), 0.7).unwrap();
        let s = two_mirror_scatter(&c, 2.0).unwrap();
        for &x in &[-1.3, -0.2, 0.1, 0.4, 0.69] {
            let expect = cis(2.0 * x) - cis(2.0 * (1.4 - x));
            assert!((s.psi_at(x) - expect).norm() < 1e-12);
        }
        assert!(s.psi_at(0.7).norm() < 1e-12);
        assert!(s.psi_at(1.9).norm() < 1e-12);
    }

    #[test]
    fn resonant_first_mirror() {
        let c = CavityConfig::new(mirror(1.0, 2.0, 0.8), mirror(0.5, 1.0, 1.1), 0.9).unwrap();
        let s = two_mirror_scatter(&c, 2.0).unwrap();
        for &x in &[-2.0, -0.5] {
            let expect = cis(2.0 * x) - cis(-2.0 * x);
            assert!((s.psi_at(x) - expect).norm() < 1e-12);
        }
        assert!(s.psi_at(0.5).norm() < 1e-12);
    }

    #[test]
    fn empty_box_modes() {
        let modes = modes_with_strength(1.0, 5.0, 0.0, 6).unwrap();
        for (n, m) in modes.iter().enumerate() {
            let expect = (n as f64 + 1.0) * std::f64::consts::PI / 5.0;
            assert!((m.k - expect).abs() < 1e-11 * expect, "{} vs {}", m.k, expect);
            assert!((m.flat_norm2() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalized_mode_rejected() {
        let mut m = modes_with_strength(1.0, 5.0, 3.0, 2).unwrap()[0];
        let p = MiroscParams::new(1.0, 1.0, 1.0).unwrap();
        assert!(nx_coupling(&m, &p).is_ok());
        m.n_k *= 2.0;
        assert!(matches!(nx_coupling(&m, &p), Err(MofError::Unnormalized { .. })));
    }

    #[test]
    fn adiabatic_static() {
        let p = MiroscParams::new(2.0, 3.0, 1.5).unwrap();
        let q: f64 = adiabatic_effective_source(0.4, 0.0, &p).unwrap();
        assert!((q - 1.5 / 18.0 * 0.4).abs() < 1e-15);
    }
}
