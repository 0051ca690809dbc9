use num_complex::Complex;

use crate::cavity::CavityConfig;
use crate::error::{MofError, Result};
use crate::scalar::{cis, Real};

use super::{
    find_runaway_modes, step_nonrel, Boundary, Grid, LatticeDrive, LatticeMirror, RunawayOptions, SimState,
    SourceProfile,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityDriveOptions<T = f64> {
    /// Nodes per vacuum wavelength.
    pub points_per_wavelength: usize,
    /// Upper bound on dt/dx; the actual dt divides the drive period exactly.
    pub courant: T,
    /// Periods discarded before demodulation (includes the 5-period ramp).
    pub settle_periods: usize,
    pub average_periods: usize,
    /// Minimum probe distance from either mirror; `None` uses 12/s with s the fastest
    /// runaway rate, where the bound profile e^{−s|x−L_a|} has died out.
    pub clearance: Option<T>,
}

impl<T: Real> Default for CavityDriveOptions<T> {
    fn default() -> Self {
        Self {
            points_per_wavelength: 60,
            courant: T::lit(0.5),
            settle_periods: 200,
            average_periods: 20,
            clearance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityDriveResult<T = f64> {
    /// Forward (e^{ikx}) amplitude between the source and mirror 1.
    pub incident: Complex<T>,
    pub inside_forward: Complex<T>,
    pub inside_backward: Complex<T>,
    /// |inside_forward| / |incident|
    pub enhancement: T,
    /// Lattice wavenumber used for the plane-wave decomposition.
    pub k_lattice: T,
    pub steps: usize,
}

/// Least-squares fit of Φ̂(x) = a e^{ikx} + b e^{−ikx}.
fn decompose<T: Real>(xs: &[T], vals: &[Complex<T>], k: T) -> Result<(Complex<T>, Complex<T>)> {
    let zero = Complex::new(T::zero(), T::zero());
    let (mut g11, mut g12, mut g22, mut r1, mut r2) = (zero, zero, zero, zero, zero);
    for (&x, &v) in xs.iter().zip(vals) {
        let e1 = cis(k * x);
        let e2 = cis(-k * x);
        g11 = g11 + e1.conj() * e1;
        g12 = g12 + e1.conj() * e2;
        g22 = g22 + e2.conj() * e2;
        r1 = r1 + e1.conj() * v;
        r2 = r2 + e2.conj() * v;
    }
    let det = g11 * g22 - g12 * g12.conj();
    if det.norm() <= T::lit(1e-12) * g11.norm() * g22.norm() {
        return Err(MofError::Degenerate("probe nodes cannot separate the two directions".into()));
    }
    Ok(((g22 * r1 - g12 * r2) / det, (g11 * r2 - g12.conj() * r1) / det))
}

fn probe_nodes<T: Real>(grid: &Grid<T>, a: T, b: T, count: usize) -> Vec<usize> {
    let (ia, _) = grid.locate(a);
    let (ib, _) = grid.locate(b);
    let (ia, ib) = (ia + 1, ib);
    if ib <= ia {
        return Vec::new();
    }
    let span = ib - ia;
    let count = count.min(span + 1).max(2);
    (0..count).map(|j| ia + j * span / (count - 1)).collect()
}

/// Drive the static two-mirror cavity from the left with a monochromatic point source
/// and measure the interior forward amplitude relative to the incident one.
pub fn driven_cavity_enhancement<T: Real>(
    c: &CavityConfig<T>,
    omega: T,
    opts: &CavityDriveOptions<T>,
) -> Result<CavityDriveResult<T>> {
    if !(omega > T::zero()) {
        return Err(MofError::param("omega", "must be > 0"));
    }
    if opts.points_per_wavelength < 8 {
        return Err(MofError::param("points_per_wavelength", "must be >= 8"));
    }
    let l = c.length();
    let wavelength = T::TAU() / omega;
    let dx = wavelength / T::from_usize_lossy(opts.points_per_wavelength);
    let period = wavelength;
    let per_period = (period / (opts.courant * dx)).ceil().to_usize().unwrap_or(1).max(1);
    let dt = period / T::from_usize_lossy(per_period);

    let two = T::lit(2.0);
    let mut probe = SimState::new(
        Grid::new(-two * wavelength, l + two * wavelength, dx)?,
        (Boundary::Absorbing, Boundary::Absorbing),
    );
    probe.add_mirror(LatticeMirror::pinned(c.mirror1.at(T::zero())?, T::zero()))?;
    probe.add_mirror(LatticeMirror::pinned(c.mirror2.at(l)?, l))?;
    let quarter = wavelength / T::lit(4.0);
    let s_max = find_runaway_modes(&probe, dt, &RunawayOptions::default())?.max_rate();
    let clearance =
        opts.clearance.unwrap_or_else(|| if s_max > T::zero() { T::lit(12.0) / s_max } else { quarter }).max(quarter);
    if l < two * clearance + two * quarter {
        return Err(MofError::param(
            "L",
            format!("cavity too short for probes {} away from the mirrors", clearance.as_f64()),
        ));
    }

    let x_src = -clearance - two * wavelength - T::lit(0.31) * dx;
    let lo = x_src - wavelength;
    let hi = l + two * wavelength;
    let mut state = SimState::new(Grid::new(lo, hi, dx)?, (Boundary::Absorbing, Boundary::Absorbing));
    state.add_mirror(LatticeMirror::pinned(c.mirror1.at(T::zero())?, T::zero()))?;
    state.add_mirror(LatticeMirror::pinned(c.mirror2.at(l)?, l))?;
    state.drive = Some(LatticeDrive::new(T::one(), omega, SourceProfile::Point(x_src)));

    let inc_nodes = probe_nodes(&state.grid, x_src + quarter, -clearance, 24);
    let in_nodes = probe_nodes(&state.grid, clearance, l - clearance, 24);
    if inc_nodes.len() < 2 || in_nodes.len() < 2 {
        return Err(MofError::param("L", "cavity too short to place probes"));
    }

    let modes = find_runaway_modes(&state, dt, &RunawayOptions::default())?;
    let every = modes.interval(dt, T::one());
    let settle = opts.settle_periods * per_period;
    let avg = opts.average_periods.max(1) * per_period;
    for n in 0..settle {
        if n % every == 0 {
            modes.project(&mut state);
        }
        step_nonrel(&mut state, dt)?;
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut acc_inc = vec![zero; inc_nodes.len()];
    let mut acc_in = vec![zero; in_nodes.len()];
    for n in 0..avg {
        if (settle + n).is_multiple_of(every) {
            modes.project(&mut state);
        }
        step_nonrel(&mut state, dt)?;
        let e = cis(omega * state.t);
        for (a, &i) in acc_inc.iter_mut().zip(&inc_nodes) {
            *a = *a + e * state.phi[i];
        }
        for (a, &i) in acc_in.iter_mut().zip(&in_nodes) {
            *a = *a + e * state.phi[i];
        }
    }
    let norm = two / T::from_usize_lossy(avg);
    let scale = |v: Vec<Complex<T>>| -> Vec<Complex<T>> { v.into_iter().map(|a| a * norm).collect() };
    let (acc_inc, acc_in) = (scale(acc_inc), scale(acc_in));

    let s = (dx / dt) * (omega * dt / two).sin();
    if s.abs() >= T::one() {
        return Err(MofError::Degenerate("drive above the lattice cutoff".into()));
    }
    let k = two / dx * s.asin();
    let xs = |nodes: &[usize]| -> Vec<T> { nodes.iter().map(|&i| state.grid.x(i)).collect() };
    let (incident, _) = decompose(&xs(&inc_nodes), &acc_inc, k)?;
    let (inside_forward, inside_backward) = decompose(&xs(&in_nodes), &acc_in, k)?;
    Ok(CavityDriveResult {
        incident,
        inside_forward,
        inside_backward,
        enhancement: inside_forward.norm() / incident.norm(),
        k_lattice: k,
        steps: settle + avg,
    })
}
