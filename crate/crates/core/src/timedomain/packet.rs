use crate::error::{MofError, Result};
use crate::params::{MiroscParams, MirrorConfig};
use crate::scalar::Real;
use crate::scattering::mof_scatter;

use super::{find_runaway_modes, step_nonrel, Boundary, Grid, LatticeMirror, RunawayOptions, SimState};

/// Gaussian-envelope carrier A·e^{−(x−x₀)²/2σ²}·cos(ω₀(x−x₀)) moving in `direction` (±1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacket<T = f64> {
    pub center: T,
    pub width: T,
    pub omega0: T,
    pub direction: i8,
    pub amplitude: T,
}

impl<T: Real> WavePacket<T> {
    pub fn new(center: T, width: T, omega0: T, direction: i8, amplitude: T) -> Result<Self> {
        if !(width > T::zero()) || !(omega0 > T::zero()) {
            return Err(MofError::param("packet", "width and omega0 must be > 0"));
        }
        if direction != 1 && direction != -1 {
            return Err(MofError::param("packet.direction", "must be +1 or -1"));
        }
        Ok(Self { center, width, omega0, direction, amplitude })
    }

    /// (Φ, ∂ₓΦ) of the packet profile at t = 0.
    pub fn profile(&self, x: T) -> (T, T) {
        let u = x - self.center;
        let s2 = self.width * self.width;
        let g = self.amplitude * (-(u * u) / (T::lit(2.0) * s2)).exp();
        let (sn, cs) = (self.omega0 * u).sin_cos();
        (g * cs, g * (-(u / s2) * cs - self.omega0 * sn))
    }

    /// Add the packet to Φ and Π of a lattice state.
    pub fn imprint(&self, state: &mut SimState<T>) {
        let dir = if self.direction > 0 { T::one() } else { -T::one() };
        for i in 0..state.grid.n {
            let (f, df) = self.profile(state.grid.x(i));
            state.phi[i] = state.phi[i] + f;
            state.pi[i] = state.pi[i] - dir * df;
        }
    }
}

/// Lattice resolution and mirror placement for a packet-scattering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterGrid<T = f64> {
    pub dx: T,
    /// dt/dx
    pub courant: T,
    pub mirror_z: T,
    /// Project out the runaway solution during the run.
    pub suppress_runaway: bool,
}

impl<T: Real> ScatterGrid<T> {
    pub fn new(dx: T) -> Self {
        // mirror off the nodes so the hat weights are exercised
        Self { dx, courant: T::lit(0.5), mirror_z: T::lit(0.37) * dx, suppress_runaway: true }
    }
}

/// Energy fractions after the packet has separated into reflected and transmitted lobes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketScatter<T = f64> {
    pub reflected: T,
    pub transmitted: T,
    /// Energy still in the mirosc, its coupling, and the field within 2σ of the mirror.
    pub residual: T,
    /// |R + T + residual − 1|, the lattice energy bookkeeping error.
    pub balance_error: T,
    pub t_measure: T,
    pub steps: usize,
}

/// Scatter a packet off a pinned MOF mirror on the lattice and measure energy fractions.
pub fn scatter_wavepacket<T: Real>(
    p: &MiroscParams<T>,
    packet: &WavePacket<T>,
    grid: &ScatterGrid<T>,
) -> Result<PacketScatter<T>> {
    let sigma = packet.width;
    if sigma * packet.omega0 < T::lit(20.0) {
        return Err(MofError::param("packet", "narrowband probe needs width·omega0 >= 20"));
    }
    if sigma < T::lit(8.0) * grid.dx {
        return Err(MofError::param("packet.width", "must be at least 8 dx"));
    }
    if !(grid.courant > T::zero()) || grid.courant > T::one() {
        return Err(MofError::Courant { ratio: grid.courant.as_f64() });
    }
    let z = grid.mirror_z;
    let dir = if packet.direction > 0 { T::one() } else { -T::one() };
    let d = dir * (z - packet.center);
    if d < T::lit(5.0) * sigma {
        return Err(MofError::param("packet.center", "must be at least 5 widths before the mirror"));
    }
    let six = T::lit(6.0) * sigma;
    let twelve = T::lit(12.0) * sigma;
    // snap the lattice to multiples of dx so the mirror sits at fraction frac(z/dx) of its cell
    let lo = ((packet.center - six).min(z - twelve) / grid.dx).floor() * grid.dx;
    let hi = (packet.center + six).max(z + twelve);
    let mut state = SimState::new(Grid::new(lo, hi, grid.dx)?, (Boundary::Absorbing, Boundary::Absorbing));
    let cfg = MirrorConfig::new(*p, T::one(), z, None)?;
    state.add_mirror(LatticeMirror::pinned(cfg, z))?;
    packet.imprint(&mut state);
    let e0 = state.nonrel_energy();

    let dt = grid.courant * grid.dx;
    let t_measure = d + six;
    let steps = (t_measure / dt).ceil().to_usize().unwrap_or(0);
    let modes =
        if grid.suppress_runaway { Some(find_runaway_modes(&state, dt, &RunawayOptions::default())?) } else { None };
    let every = modes.as_ref().map_or(usize::MAX, |m| m.interval(dt, T::one()));
    for n in 0..steps {
        if let Some(m) = &modes {
            if n % every == 0 {
                m.project(&mut state);
            }
        }
        step_nonrel(&mut state, dt)?;
    }
    if let Some(m) = &modes {
        m.project(&mut state);
    }
    let w = T::lit(2.0) * sigma;
    let e_left = state.field_energy_in(T::neg_infinity(), z - w);
    let e_right = state.field_energy_in(z + w, T::infinity());
    let e_mid = state.field_energy_in(z - w, z + w);
    if e_mid > T::lit(5e-3) * e0 {
        return Err(MofError::LobeOverlap);
    }
    let m = &state.mirrors[0];
    let e_osc = m.internal_energy() + state.interaction_energy(0);
    let (inc, other) = if dir > T::zero() { (e_left, e_right) } else { (e_right, e_left) };
    let reflected = inc / e0;
    let transmitted = other / e0;
    let residual = (e_mid + e_osc) / e0;
    Ok(PacketScatter {
        reflected,
        transmitted,
        residual,
        balance_error: (reflected + transmitted + residual - T::one()).abs(),
        t_measure: state.t,
        steps,
    })
}

/// |R(ω)|² averaged over the packet's energy spectrum ∝ k²e^{−σ²(k−ω₀)²}.
pub fn packet_expected_reflectance<T: Real>(p: &MiroscParams<T>, packet: &WavePacket<T>) -> Result<T> {
    let n = 4000;
    let span = T::lit(8.0) / packet.width;
    let a = (packet.omega0 - span).max(packet.omega0 * T::lit(1e-3));
    let b = packet.omega0 + span;
    let h = (b - a) / T::from_usize_lossy(n);
    let (mut num, mut den) = (T::zero(), T::zero());
    for i in 0..=n {
        let k = a + h * T::from_usize_lossy(i);
        let u = packet.width * (k - packet.omega0);
        let wgt = if i == 0 || i == n {
            T::one()
        } else if i % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        let s = wgt * k * k * (-(u * u)).exp();
        num = num + s * mof_scatter(p, k)?.reflectance();
        den = den + s;
    }
    Ok(num / den)
}
