use crate::error::{MofError, Result};
use crate::scalar::Real;

use super::averaged::{check_steps, Trajectory};
use super::kernel::{kernel_time_domain, KernelOptions, KernelTable};
use super::{CoolingSetup, Pump};

/// How the first-order mirosc response q₁ is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Q1Route<T = f64> {
    /// Local form: m q̈₁ + mΩ²q₁ − (λ²/2)∫_{t−2L}^{t} q₁ = source, carried with a running integral.
    DelayOde,
    /// Causal convolution with the tabulated kernel D(τ).
    Kernel(KernelOptions<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullDelayOptions<T = f64> {
    pub z0: T,
    pub v0: T,
    pub t_end: T,
    pub dt: T,
    /// Keep every n-th step in the returned trajectory.
    pub record_every: usize,
    pub q1_route: Q1Route<T>,
}

impl<T: Real> FullDelayOptions<T> {
    pub fn new(z0: T, v0: T, t_end: T, dt: T) -> Self {
        Self { z0, v0, t_end, dt, record_every: 1, q1_route: Q1Route::DelayOde }
    }
}

/// Motion before t = 0: the free trapped oscillator through (z0, v0).
#[derive(Debug, Clone, Copy)]
struct PreHistory<T> {
    z0: T,
    v0: T,
    w0: T,
}

impl<T: Real> PreHistory<T> {
    fn zv(&self, t: T) -> (T, T) {
        if self.w0 > T::zero() {
            let (s, c) = (self.w0 * t).sin_cos();
            (self.z0 * c + self.v0 / self.w0 * s, -self.z0 * self.w0 * s + self.v0 * c)
        } else {
            (self.z0 + self.v0 * t, self.v0)
        }
    }
}

/// Ring buffer of per-step samples with their time derivatives.
struct History<T> {
    cap: usize,
    z: Vec<T>,
    v: Vec<T>,
    a: Vec<T>,
    q1: Vec<T>,
    p1: Vec<T>,
    src: Vec<T>,
    newest: usize,
}

impl<T: Real> History<T> {
    fn new(cap: usize) -> Self {
        let zero = vec![T::zero(); cap];
        Self {
            cap,
            z: zero.clone(),
            v: zero.clone(),
            a: zero.clone(),
            q1: zero.clone(),
            p1: zero.clone(),
            src: zero,
            newest: 0,
        }
    }

    fn store(&mut self, n: usize, z: T, v: T, a: T, q1: T, p1: T, src: T) {
        let i = n % self.cap;
        self.z[i] = z;
        self.v[i] = v;
        self.a[i] = a;
        self.q1[i] = q1;
        self.p1[i] = p1;
        self.src[i] = src;
        self.newest = n;
    }

    #[inline]
    fn slot(&self, n: usize) -> usize {
        debug_assert!(n <= self.newest && self.newest - n < self.cap);
        n % self.cap
    }
}

#[inline]
fn hermite<T: Real>(th: T, dt: T, y0: T, d0: T, y1: T, d1: T) -> T {
    let th2 = th * th;
    let th3 = th2 * th;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    (two * th3 - three * th2 + T::one()) * y0
        + (th3 - two * th2 + th) * dt * d0
        + (three * th2 - two * th3) * y1
        + (th3 - th2) * dt * d1
}

#[inline]
fn lagrange4<T: Real>(x: T, y: [T; 4]) -> T {
    // nodes at −1, 0, 1, 2
    let one = T::one();
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let l0 = -x * (x - one) * (x - two) / six;
    let l1 = (x + one) * (x - one) * (x - two) / two;
    let l2 = -(x + one) * x * (x - two) / two;
    let l3 = (x + one) * x * (x - one) / six;
    l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]
}

/// Delayed (Z, Ż, q₁) at time `s`.
struct Delayed<T> {
    z: T,
    v: T,
    q1: T,
}

struct Lookup<'a, T> {
    hist: &'a History<T>,
    pre: PreHistory<T>,
    dt: T,
    hermite_q1: bool,
}

impl<T: Real> Lookup<'_, T> {
    fn at(&self, s: T) -> Delayed<T> {
        if s < T::zero() {
            let (z, v) = self.pre.zv(s);
            return Delayed { z, v, q1: T::zero() };
        }
        let x = s / self.dt;
        let j = x.floor().to_usize().unwrap_or(0);
        let th = x - T::from_usize_lossy(j);
        let (i0, i1) = (self.hist.slot(j), self.hist.slot(j + 1));
        let h = self.hist;
        let z = hermite(th, self.dt, h.z[i0], h.v[i0], h.z[i1], h.v[i1]);
        let v = hermite(th, self.dt, h.v[i0], h.a[i0], h.v[i1], h.a[i1]);
        let q1 = if self.hermite_q1 {
            hermite(th, self.dt, h.q1[i0], h.p1[i0], h.q1[i1], h.p1[i1])
        } else {
            let pick = |k: isize| -> T {
                if k < 0 {
                    T::zero()
                } else {
                    h.q1[h.slot(k as usize)]
                }
            };
            let jj = j as isize;
            lagrange4(th, [pick(jj - 1), pick(jj), pick(jj + 1), pick(jj + 2)])
        };
        Delayed { z, v, q1 }
    }
}

/// Integrate M Z̈ + MΩ₀² Z = ℱ[Z] with fixed-step RK4 and history buffers for the 2L delays.
///
/// q₀ is the analytic driven steady state; the field is taken to start empty, so the
/// response q₁ and its running integral start at zero and cold-start transients of a few
/// round trips are part of the output.
pub fn evolve_full_delay<T: Real>(setup: &CoolingSetup<T>, opts: &FullDelayOptions<T>) -> Result<Trajectory<T>> {
    let n_steps = check_steps(opts.t_end, opts.dt)?;
    let dt = opts.dt;
    let l = setup.length();
    if dt > l / T::lit(10.0) {
        return Err(MofError::History(format!(
            "dt = {} does not resolve the delay 2L = {} (need dt <= L/10)",
            dt.as_f64(),
            (T::lit(2.0) * l).as_f64()
        )));
    }
    let p = *setup.mirosc();
    if !(p.m() > T::zero()) {
        return Err(MofError::param("m", "full-delay evolution needs a massive mirosc (m > 0)"));
    }
    let pump = Pump::new(setup)?;
    let delay = pump.delay;
    let mass = setup.mirror.mass();
    let w0 = setup.mirror.omega0_or_free();
    let pre = PreHistory { z0: opts.z0, v0: opts.v0, w0 };
    let lam = p.lambda();
    let lam2_half = lam * lam / T::lit(2.0);
    let m = p.m();
    let mw2 = p.kappa();
    let cap_z = l / T::lit(10.0);
    let record = opts.record_every.max(1);

    let kernel: Option<KernelTable<T>> = match opts.q1_route {
        Q1Route::DelayOde => None,
        Q1Route::Kernel(k) => Some(kernel_time_domain(&p, l, dt / T::lit(2.0), &k)?),
    };
    let hist_len = (delay / dt).ceil().to_usize().unwrap_or(0) + 4;
    let conv_len = kernel.as_ref().map_or(0, |k| k.values.len() / 2 + 2);
    let mut hist = History::new(hist_len.max(conv_len));

    // state: Z, V, q1, p1, I
    let mut y = [opts.z0, opts.v0, T::zero(), T::zero(), T::zero()];
    let mut traj = Trajectory::with_capacity(n_steps / record + 2, dt, "rk4-delay");

    // q₁ at t_n + c·dt from the stored sources (kernel route); c2 = 2c ∈ {0, 1, 2}
    let conv = |hist: &History<T>, n: usize, c2: usize| -> T {
        let Some(k) = kernel.as_ref() else { return T::zero() };
        let span = (k.values.len().saturating_sub(c2)) / 2;
        let first = n.saturating_sub(span);
        let mut acc = T::zero();
        for j in first..=n {
            let w = if j == n {
                (T::lit(2.0) + T::from_usize_lossy(c2)) / T::lit(4.0)
            } else if j == 0 {
                T::lit(0.5)
            } else {
                T::one()
            };
            let w = if n == 0 { T::from_usize_lossy(c2) / T::lit(4.0) } else { w };
            acc = acc + w * k.at_index(2 * (n - j) + c2) * hist.src[hist.slot(j)];
        }
        acc * dt
    };

    let deriv = |hist: &History<T>, t: T, y: &[T; 5], q1_conv: Option<T>| -> ([T; 5], T, T) {
        let s = pump.at(t);
        let look = Lookup { hist, pre, dt, hermite_q1: q1_conv.is_none() };
        let d = look.at(t - delay);
        let q1 = q1_conv.unwrap_or(y[2]);
        let src = pump.q1_source(&s, y[0], d.z);
        let f = pump.force(&s, y[0], d.z, d.v, q1, d.q1);
        let acc = -w0 * w0 * y[0] + f / mass;
        let dp1 = (-mw2 * y[2] + lam2_half * y[4] + src) / m;
        ([y[1], acc, y[3], dp1, y[2] - d.q1], src, q1)
    };

    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let axpy = |y: &[T; 5], k: &[T; 5], h: T| -> [T; 5] {
        let mut out = *y;
        for i in 0..5 {
            out[i] = y[i] + h * k[i];
        }
        out
    };
    let use_kernel = kernel.is_some();

    for n in 0..=n_steps {
        let t = dt * T::from_usize_lossy(n);
        // stage 1 doubles as the derivative sample stored in the history
        let q1_now = if use_kernel {
            let s = pump.at(t);
            let look = Lookup { hist: &hist, pre, dt, hermite_q1: false };
            let d = look.at(t - delay);
            let src = pump.q1_source(&s, y[0], d.z);
            hist.store(n, y[0], y[1], T::zero(), T::zero(), T::zero(), src);
            Some(conv(&hist, n, 0))
        } else {
            None
        };
        let (k1, src, q1) = deriv(&hist, t, &y, q1_now);
        let (q1_store, p1_store) = if use_kernel { (q1, T::zero()) } else { (y[2], y[3]) };
        hist.store(n, y[0], y[1], k1[1], q1_store, p1_store, src);
        if n % record == 0 {
            traj.push(t, y[0], y[1]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MofError::NonFinite(format!("full-delay state at t = {}", t.as_f64())));
        }
        if y[0].abs() > cap_z {
            traj.flags.expansion_invalid = true;
            if n % record != 0 {
                traj.push(t, y[0], y[1]);
            }
            break;
        }
        if n == n_steps {
            break;
        }
        let (q1_mid, q1_end) =
            if use_kernel { (Some(conv(&hist, n, 1)), Some(conv(&hist, n, 2))) } else { (None, None) };
        let (k2, _, _) = deriv(&hist, t + half * dt, &axpy(&y, &k1, half * dt), q1_mid);
        let (k3, _, _) = deriv(&hist, t + half * dt, &axpy(&y, &k2, half * dt), q1_mid);
        let (k4, _, _) = deriv(&hist, t + dt, &axpy(&y, &k3, dt), q1_end);
        for i in 0..5 {
            y[i] = y[i] + dt * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
    }
    let k = setup.mirror.omega0_or_free();
    traj.flags.unstable = super::cooling_coefficients(setup).map(|c| c.stiffness(k) < T::zero()).unwrap_or(false);
    Ok(traj)
}
