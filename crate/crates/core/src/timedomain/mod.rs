//! Leapfrog lattice for the field coupled to point mirrors.
//!
//! Φ lives on nodes x_i = x_min + i·dx. A mirror at Z = x_j + θ·dx couples through a
//! linear hat over nodes j, j+1 and samples Φ(Z) and ∂ₓΦ(Z) from the same interpolant.
//! Hat-averaging the kink of the mirror's own field shifts its self-interaction by
//! −θ(1−θ)dx·λ²q² relative to a point source, an O(dx) error whenever the mirror is off
//! a node. The lattice Hamiltonian carries the counter-term ½λ²θ(1−θ)dx·q², which
//! restores second-order accuracy; its Z-gradient also cancels the self-force of the
//! kink, so the worldline force is the exact gradient of the lattice Hamiltonian.
//! Stepping is kick-drift-kick, so Π, p and P are synchronized with Φ, q and Z at
//! integer steps.

mod cavity_drive;
mod io;
mod packet;
mod runaway;

pub use cavity_drive::{driven_cavity_enhancement, CavityDriveOptions, CavityDriveResult};
pub use io::{load_checkpoint, save_checkpoint, write_field_csv, write_mirrors_csv, CHECKPOINT_VERSION};
pub use packet::{packet_expected_reflectance, scatter_wavepacket, PacketScatter, ScatterGrid, WavePacket};
pub use runaway::{find_runaway_modes, RunawayModes, RunawayOptions};

use crate::error::{MofError, Result};
use crate::params::MirrorConfig;
use crate::scalar::Real;

/// Minimum distance, in cells, between a mirror and either end of the lattice.
pub const MIRROR_MARGIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// First-order one-way (Mur) condition.
    Absorbing,
    /// Φ = 0 at the end node.
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T = f64> {
    pub x_min: T,
    pub dx: T,
    pub n: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, dx: T) -> Result<Self> {
        if !(dx > T::zero()) || !(x_max > x_min) {
            return Err(MofError::param("grid", "need dx > 0 and x_max > x_min"));
        }
        let cells = ((x_max - x_min) / dx).round().to_usize().unwrap_or(0);
        if cells < 2 * MIRROR_MARGIN_CELLS + 2 {
            return Err(MofError::param("grid", format!("needs at least {} cells", 2 * MIRROR_MARGIN_CELLS + 2)));
        }
        Ok(Self { x_min, dx, n: cells + 1 })
    }

    pub fn x(&self, i: usize) -> T {
        self.x_min + self.dx * T::from_usize_lossy(i)
    }

    pub fn x_max(&self) -> T {
        self.x(self.n - 1)
    }

    /// Cell index j and fraction θ with x = x_j + θ·dx.
    pub fn locate(&self, x: T) -> (usize, T) {
        let s = (x - self.x_min) / self.dx;
        let j = s.floor().max(T::zero()).to_usize().unwrap_or(0).min(self.n - 2);
        (j, s - T::from_usize_lossy(j))
    }
}

/// A lattice mirror: mirosc coordinates (q, p) and worldline (Z, P).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeMirror<T = f64> {
    pub config: MirrorConfig<T>,
    pub q: T,
    pub p: T,
    pub z: T,
    pub big_p: T,
    /// Pinned mirrors keep Z fixed and ignore P.
    pub pinned: bool,
    /// M_eff/√(P² + M_eff²) at the previous step; drives the half-step extrapolation.
    w_prev: Option<T>,
}

impl<T: Real> LatticeMirror<T> {
    pub fn new(config: MirrorConfig<T>, z: T) -> Self {
        Self { config, q: T::zero(), p: T::zero(), z, big_p: T::zero(), pinned: false, w_prev: None }
    }

    pub fn pinned(config: MirrorConfig<T>, z: T) -> Self {
        Self { pinned: true, ..Self::new(config, z) }
    }

    pub fn with_velocity(mut self, v: T) -> Self {
        self.big_p = self.config.mass() * v;
        self
    }

    fn trap_force(&self) -> T {
        let w0 = self.config.omega0_or_free();
        -self.config.mass() * w0 * w0 * (self.z - self.config.z_eq())
    }

    fn trap_energy(&self) -> T {
        let w0 = self.config.omega0_or_free();
        let d = self.z - self.config.z_eq();
        T::lit(0.5) * self.config.mass() * w0 * w0 * d * d
    }

    /// p²/2m + ½mΩ²q² (zero-mass mirosc is not representable on the lattice).
    pub fn internal_energy(&self) -> T {
        let mp = self.config.mirosc;
        self.p * self.p / (T::lit(2.0) * mp.m()) + T::lit(0.5) * mp.kappa() * self.q * self.q
    }
}

/// External current J(x, t) = A·r(t)·cos(ωt)·profile(x) with a raised-cosine switch-on r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeDrive<T = f64> {
    pub amplitude: T,
    pub omega: T,
    pub profile: SourceProfile<T>,
    pub ramp_periods: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceProfile<T = f64> {
    /// δ(x − x_s), hat-spread.
    Point(T),
    /// 1 on [from, to].
    Uniform { from: T, to: T },
}

impl<T: Real> LatticeDrive<T> {
    pub fn new(amplitude: T, omega: T, profile: SourceProfile<T>) -> Self {
        Self { amplitude, omega, profile, ramp_periods: T::lit(5.0) }
    }

    pub fn envelope(&self, t: T) -> T {
        let t_ramp = self.ramp_periods * T::TAU() / self.omega;
        if t <= T::zero() {
            T::zero()
        } else if t >= t_ramp {
            T::one()
        } else {
            T::lit(0.5) * (T::one() - (T::PI() * t / t_ramp).cos())
        }
    }

    pub fn value(&self, t: T) -> T {
        self.amplitude * self.envelope(t) * (self.omega * t).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T = f64> {
    pub grid: Grid<T>,
    pub phi: Vec<T>,
    pub pi: Vec<T>,
    pub mirrors: Vec<LatticeMirror<T>>,
    pub t: T,
    /// (left, right)
    pub boundary: (Boundary, Boundary),
    pub drive: Option<LatticeDrive<T>>,
}

/// Field value and gradient at a point, supplied instead of the lattice.
pub trait PrescribedField<T> {
    fn sample(&self, t: T, x: T) -> (T, T);
}

impl<T, F: Fn(T, T) -> (T, T)> PrescribedField<T> for F {
    fn sample(&self, t: T, x: T) -> (T, T) {
        self(t, x)
    }
}

#[derive(Clone, Copy)]
enum Dynamics {
    Nonrel,
    Relativistic,
}

impl<T: Real> SimState<T> {
    pub fn new(grid: Grid<T>, boundary: (Boundary, Boundary)) -> Self {
        Self {
            phi: vec![T::zero(); grid.n],
            pi: vec![T::zero(); grid.n],
            grid,
            mirrors: Vec::new(),
            t: T::zero(),
            boundary,
            drive: None,
        }
    }

    pub fn add_mirror(&mut self, mirror: LatticeMirror<T>) -> Result<()> {
        self.check_margin(mirror.z)?;
        self.mirrors.push(mirror);
        Ok(())
    }

    fn check_margin(&self, z: T) -> Result<()> {
        let margin = self.grid.dx * T::from_usize_lossy(MIRROR_MARGIN_CELLS);
        if !(z >= self.grid.x_min + margin && z <= self.grid.x_max() - margin) {
            return Err(MofError::MirrorMargin { position: z.as_f64(), margin: MIRROR_MARGIN_CELLS });
        }
        Ok(())
    }

    /// Hat-interpolated Φ(Z).
    pub fn phi_at(&self, z: T) -> T {
        let (j, th) = self.grid.locate(z);
        (T::one() - th) * self.phi[j] + th * self.phi[j + 1]
    }

    /// Slope of the hat interpolant at Z.
    pub fn dphi_at(&self, z: T) -> T {
        let (j, _) = self.grid.locate(z);
        (self.phi[j + 1] - self.phi[j]) / self.grid.dx
    }

    /// Counter-term coefficient c = θ(1−θ)dx at Z and its slope dc/dZ = 1 − 2θ.
    pub fn self_energy_coefficient(&self, z: T) -> (T, T) {
        let (_, th) = self.grid.locate(z);
        (th * (T::one() - th) * self.grid.dx, T::one() - T::lit(2.0) * th)
    }

    /// −λqΦ(Z) − ½λ²θ(1−θ)dx·q² for mirror `a`.
    pub fn interaction_energy(&self, a: usize) -> T {
        let m = &self.mirrors[a];
        let lam = m.config.mirosc.lambda();
        let (c, _) = self.self_energy_coefficient(m.z);
        -lam * m.q * self.phi_at(m.z) - T::lit(0.5) * lam * lam * c * m.q * m.q
    }

    /// Field energy ½∫(Π² + Φ′²) over nodes (and bond midpoints) in [a, b].
    pub fn field_energy_in(&self, a: T, b: T) -> T {
        let dx = self.grid.dx;
        let half = T::lit(0.5);
        let mut e = T::zero();
        for i in 0..self.grid.n {
            let x = self.grid.x(i);
            if x >= a && x <= b {
                e = e + half * self.pi[i] * self.pi[i] * dx;
            }
            if i + 1 < self.grid.n {
                let xm = x + half * dx;
                if xm >= a && xm <= b {
                    let g = self.phi[i + 1] - self.phi[i];
                    e = e + half * g * g / dx;
                }
            }
        }
        e
    }

    pub fn field_energy(&self) -> T {
        self.field_energy_in(T::neg_infinity(), T::infinity())
    }

    /// Lattice M_eff of mirror `a`: M + p²/2m + ½mΩ²q² plus its interaction energy.
    pub fn effective_mass_of(&self, a: usize) -> T {
        let m = &self.mirrors[a];
        effective_mass(m.q, m.p, T::zero(), &m.config) + self.interaction_energy(a)
    }

    /// Field + mirosc + interaction + P²/2M + trap.
    pub fn nonrel_energy(&self) -> T {
        let mut e = self.field_energy();
        for (a, m) in self.mirrors.iter().enumerate() {
            e = e + m.internal_energy() + self.interaction_energy(a) + m.trap_energy();
            if !m.pinned {
                e = e + m.big_p * m.big_p / (T::lit(2.0) * m.config.mass());
            }
        }
        e
    }

    /// Energy conserved exactly by [`step_nonrel`] for a linear system (pinned mirrors,
    /// Dirichlet ends, no drive): `nonrel_energy − (dt²/8)·Σ F²/mass` over all
    /// generalized forces. With moving mirrors it is conserved to O(dt⁴).
    pub fn shadow_energy(&self, dt: T) -> T {
        let ones = vec![T::one(); self.mirrors.len()];
        let mut accel = vec![T::zero(); self.grid.n];
        self.field_accel(self.t, &ones, &mut accel);
        let dx = self.grid.dx;
        let mut f2 = accel.iter().fold(T::zero(), |s, &a| s + a * a * dx);
        for m in &self.mirrors {
            let lam = m.config.mirosc.lambda();
            let s = self.sample(None, self.t, m.z);
            let fq = -(m.config.mirosc.kappa() * m.q - lam * s.phi - lam * lam * s.c * m.q);
            f2 = f2 + fq * fq / m.config.mirosc.m();
            if !m.pinned {
                let fz = lam * m.q * s.dphi + T::lit(0.5) * lam * lam * s.dc * m.q * m.q + m.trap_force();
                f2 = f2 + fz * fz / m.config.mass();
            }
        }
        self.nonrel_energy() - dt * dt / T::lit(8.0) * f2
    }

    /// ½∫(Π² + Φ′²) + Σ √(P² + M_eff²) (+ trap).
    pub fn relativistic_hamiltonian(&self) -> T {
        let mut e = self.field_energy();
        for (a, m) in self.mirrors.iter().enumerate() {
            let me = self.effective_mass_of(a);
            e = e + (m.big_p * m.big_p + me * me).sqrt() + m.trap_energy();
        }
        e
    }

    /// Largest stable dt for the lattice (Courant number 1).
    pub fn max_dt(&self) -> T {
        self.grid.dx
    }

    fn check_step(&self, dt: T) -> Result<()> {
        let ratio = dt / self.grid.dx;
        if !(dt > T::zero()) || !(ratio <= T::one()) {
            return Err(MofError::Courant { ratio: ratio.as_f64() });
        }
        for m in &self.mirrors {
            if m.config.mirosc.m() <= T::zero() {
                return Err(MofError::param("m", "lattice mirrors need m > 0"));
            }
            self.check_margin(m.z)?;
        }
        Ok(())
    }

    /// Π̇ from the lattice Laplacian, mirror sources and the drive, at time t.
    fn field_accel(&self, t: T, weights: &[T], out: &mut [T]) {
        let n = self.grid.n;
        let dx = self.grid.dx;
        let inv_dx2 = T::one() / (dx * dx);
        out[0] = T::zero();
        out[n - 1] = T::zero();
        for i in 1..n - 1 {
            out[i] = (self.phi[i + 1] - T::lit(2.0) * self.phi[i] + self.phi[i - 1]) * inv_dx2;
        }
        for (m, &w) in self.mirrors.iter().zip(weights) {
            let (j, th) = self.grid.locate(m.z);
            let s = w * m.config.mirosc.lambda() * m.q / dx;
            out[j] = out[j] + (T::one() - th) * s;
            out[j + 1] = out[j + 1] + th * s;
        }
        if let Some(d) = &self.drive {
            let j = d.value(t);
            match d.profile {
                SourceProfile::Point(xs) => {
                    let (k, th) = self.grid.locate(xs);
                    out[k] = out[k] + (T::one() - th) * j / dx;
                    out[k + 1] = out[k + 1] + th * j / dx;
                }
                SourceProfile::Uniform { from, to } => {
                    for (i, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
                        let x = self.grid.x(i);
                        if x >= from && x <= to {
                            *o = *o + j;
                        }
                    }
                }
            }
        }
        out[0] = T::zero();
        out[n - 1] = T::zero();
    }

    fn sample(&self, field: Option<&dyn PrescribedField<T>>, t: T, z: T) -> Sample<T> {
        match field {
            Some(f) => {
                let (phi, dphi) = f.sample(t, z);
                Sample { phi, dphi, c: T::zero(), dc: T::zero() }
            }
            None => {
                let (c, dc) = self.self_energy_coefficient(z);
                Sample { phi: self.phi_at(z), dphi: self.dphi_at(z), c, dc }
            }
        }
    }

    fn meff_with(&self, a: usize, s: &Sample<T>, q: T) -> T {
        let m = &self.mirrors[a];
        let lam = m.config.mirosc.lambda();
        effective_mass(q, m.p, s.phi, &m.config) - T::lit(0.5) * lam * lam * s.c * q * q
    }

    fn clock_rate(&self, a: usize, field: Option<&dyn PrescribedField<T>>) -> T {
        let m = &self.mirrors[a];
        let me = self.meff_with(a, &self.sample(field, self.t, m.z), m.q);
        me / (m.big_p * m.big_p + me * me).sqrt()
    }

    /// Half kick of every momentum with the forces at the current configuration.
    fn kick(&mut self, h: T, weights: &[T], field: Option<&dyn PrescribedField<T>>, scratch: &mut Vec<T>) {
        if field.is_none() {
            scratch.resize(self.grid.n, T::zero());
            self.field_accel(self.t, weights, scratch);
            for (p, a) in self.pi.iter_mut().zip(scratch.iter()) {
                *p = *p + h * *a;
            }
        }
        for a in 0..self.mirrors.len() {
            let s = self.sample(field, self.t, self.mirrors[a].z);
            let w = weights[a];
            let m = &mut self.mirrors[a];
            let mp = m.config.mirosc;
            let lam = mp.lambda();
            m.p = m.p - h * w * (mp.kappa() * m.q - lam * s.phi - lam * lam * s.c * m.q);
            if !m.pinned {
                let f = w * (lam * m.q * s.dphi + T::lit(0.5) * lam * lam * s.dc * m.q * m.q) + m.trap_force();
                m.big_p = m.big_p + h * f;
            }
        }
    }

    fn step(&mut self, dt: T, dynamics: Dynamics, field: Option<&dyn PrescribedField<T>>) -> Result<()> {
        self.check_step(dt)?;
        let half = T::lit(0.5);
        // mirosc clock rate M_eff/E, extrapolated to the half step
        let w_now: Vec<T> = match dynamics {
            Dynamics::Nonrel => vec![T::one(); self.mirrors.len()],
            Dynamics::Relativistic => (0..self.mirrors.len()).map(|a| self.clock_rate(a, field)).collect(),
        };
        let weights: Vec<T> = match dynamics {
            Dynamics::Nonrel => w_now.clone(),
            Dynamics::Relativistic => w_now
                .iter()
                .zip(&self.mirrors)
                .map(|(&w, m)| m.w_prev.map_or(w, |prev| T::lit(1.5) * w - half * prev))
                .collect(),
        };
        let mut scratch = Vec::new();
        self.kick(half * dt, &weights, field, &mut scratch);

        // drift
        let before: Vec<Sample<T>> = self.mirrors.iter().map(|m| self.sample(field, self.t, m.z)).collect();
        let n = self.grid.n;
        let (b0, b1) = (self.phi[0], self.phi[n - 1]);
        let (c0, c1) = (self.phi[1], self.phi[n - 2]);
        if field.is_none() {
            for i in 1..n - 1 {
                self.phi[i] = self.phi[i] + dt * self.pi[i];
            }
            let mur = (dt - self.grid.dx) / (dt + self.grid.dx);
            self.phi[0] = match self.boundary.0 {
                Boundary::Dirichlet => T::zero(),
                Boundary::Absorbing => c0 + mur * (self.phi[1] - b0),
            };
            self.phi[n - 1] = match self.boundary.1 {
                Boundary::Dirichlet => T::zero(),
                Boundary::Absorbing => c1 + mur * (self.phi[n - 2] - b1),
            };
            self.pi[0] = (self.phi[0] - b0) / dt;
            self.pi[n - 1] = (self.phi[n - 1] - b1) / dt;
        }
        let t_mid = self.t + half * dt;
        for a in 0..self.mirrors.len() {
            let q_old = self.mirrors[a].q;
            let q_new = q_old + dt * weights[a] * self.mirrors[a].p / self.mirrors[a].config.mirosc.m();
            let v = if self.mirrors[a].pinned {
                T::zero()
            } else {
                match dynamics {
                    Dynamics::Nonrel => self.mirrors[a].big_p / self.mirrors[a].config.mass(),
                    Dynamics::Relativistic => {
                        let z = self.mirrors[a].z;
                        let mut mid = match field {
                            Some(_) => self.sample(field, t_mid, z),
                            None => self.sample(None, self.t, z),
                        };
                        if field.is_none() {
                            mid.phi = half * (before[a].phi + mid.phi);
                        }
                        let me = self.meff_with(a, &mid, half * (q_old + q_new));
                        let bp = self.mirrors[a].big_p;
                        bp / (bp * bp + me * me).sqrt()
                    }
                }
            };
            if v.abs() * dt > self.grid.dx {
                return Err(MofError::Superluminal { ratio: (v.abs() * dt / self.grid.dx).as_f64() });
            }
            let m = &mut self.mirrors[a];
            m.q = q_new;
            m.z = m.z + dt * v;
        }
        self.t = self.t + dt;
        for m in &self.mirrors {
            self.check_margin(m.z)?;
        }
        self.kick(half * dt, &weights, field, &mut scratch);
        if let Dynamics::Relativistic = dynamics {
            for (m, w) in self.mirrors.iter_mut().zip(w_now) {
                m.w_prev = Some(w);
            }
        }
        if self.phi.iter().chain(&self.pi).any(|v| !v.is_finite())
            || self
                .mirrors
                .iter()
                .any(|m| !(m.q.is_finite() && m.p.is_finite() && m.z.is_finite() && m.big_p.is_finite()))
        {
            return Err(MofError::NonFinite(format!("lattice state at t = {}", self.t.as_f64())));
        }
        Ok(())
    }
}

/// Field data seen by a mirror: Φ(Z), ∂ₓΦ(Z) and the counter-term coefficient with its
/// θ-slope (both zero for a prescribed field).
struct Sample<T> {
    phi: T,
    dphi: T,
    c: T,
    dc: T,
}

/// M_eff = M + p²/2m + ½mΩ²q² − λqΦ(Z).
pub fn effective_mass<T: Real>(q: T, p: T, phi_at_z: T, cfg: &MirrorConfig<T>) -> T {
    let mp = cfg.mirosc;
    let mut e = cfg.mass() + T::lit(0.5) * mp.kappa() * q * q - mp.lambda() * q * phi_at_z;
    if mp.m() > T::zero() {
        e = e + p * p / (T::lit(2.0) * mp.m());
    }
    e
}

/// One kick-drift-kick step of the nonrelativistic equations.
pub fn step_nonrel<T: Real>(state: &mut SimState<T>, dt: T) -> Result<()> {
    state.step(dt, Dynamics::Nonrel, None)
}

/// One step of the relativistic Hamilton equations (Ż = P/√(P² + M_eff²), mirosc clock
/// and field source scaled by M_eff/√(P² + M_eff²)). With `prescribed_field` the lattice
/// is frozen and the mirrors sample the given field instead.
pub fn step_relativistic<T: Real>(
    state: &mut SimState<T>,
    dt: T,
    prescribed_field: Option<&dyn PrescribedField<T>>,
) -> Result<()> {
    state.step(dt, Dynamics::Relativistic, prescribed_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MiroscParams;

    fn mirror(lam: f64) -> MirrorConfig {
        MirrorConfig::new(MiroscParams::new(1.0, 2.0, lam).unwrap(), 50.0, 0.0, None).unwrap()
    }

    #[test]
    fn courant_and_margin_errors() {
        let mut s = SimState::new(Grid::new(-5.0, 5.0, 0.1).unwrap(), (Boundary::Dirichlet, Boundary::Dirichlet));
        assert!(matches!(step_nonrel(&mut s, 0.2), Err(MofError::Courant { .. })));
        assert!(matches!(s.add_mirror(LatticeMirror::new(mirror(1.0), 4.5)), Err(MofError::MirrorMargin { .. })));
        assert!(s.add_mirror(LatticeMirror::new(mirror(1.0), 0.0)).is_ok());
    }

    #[test]
    fn meff_limits() {
        let cfg = mirror(1.0);
        assert_eq!(effective_mass(0.0, 0.0, 3.0, &cfg), 50.0);
        assert!((effective_mass(0.5, 0.0, 0.0, &cfg) - (50.0 + 0.5 * 4.0 * 0.25)).abs() < 1e-14);
    }

    #[test]
    fn self_kink_force_cancels() {
        let mut s = SimState::new(Grid::new(-5.0, 5.0, 0.1).unwrap(), (Boundary::Dirichlet, Boundary::Dirichlet));
        // kink of a unit source, Φ = −|x − Z|/2, against the counter-term slope
        for &z in &[0.237f64, 0.31, -1.04] {
            for i in 0..s.grid.n {
                s.phi[i] = -0.5 * (s.grid.x(i) - z).abs();
            }
            let (_, dc) = s.self_energy_coefficient(z);
            assert!((s.dphi_at(z) + 0.5 * dc).abs() < 1e-12);
        }
    }

    #[test]
    fn relativistic_free_particle_in_static_field() {
        let mut s = SimState::new(Grid::new(-5.0, 5.0, 0.1).unwrap(), (Boundary::Dirichlet, Boundary::Dirichlet));
        s.add_mirror(LatticeMirror::new(mirror(0.0), 0.0)).unwrap();
        s.mirrors[0].big_p = 30.0;
        let f = |_t: f64, x: f64| (0.3 * x, 0.3);
        for _ in 0..100 {
            step_relativistic(&mut s, 0.05, Some(&f)).unwrap();
        }
        let v = 30.0 / (30.0f64 * 30.0 + 2500.0).sqrt();
        assert_eq!(s.mirrors[0].big_p, 30.0);
        assert!((s.mirrors[0].z - 5.0 * v).abs() < 1e-12);
    }
}
