//! CSV snapshots and a little-endian binary checkpoint of [`SimState`].
//!
//! Checkpoint layout: magic `MOFSIMCK`, u32 version, u8 scalar width (4 or 8), then
//! t, x_min, dx as scalars, u64 node count, u8 left/right boundary (0 absorbing,
//! 1 Dirichlet), u64 mirror count and per mirror m, Ω, λ, M, z_eq, trap flag (u8) and
//! trap Ω₀, pinned (u8), q, p, Z, P; a drive flag (u8) with A, ω, ramp periods, profile
//! tag (u8) and two profile scalars; finally Φ and Π as raw scalar arrays.

use std::io::{Read, Write};

use crate::error::{MofError, Result};
use crate::params::{MiroscParams, MirrorConfig};
use crate::scalar::Real;

use super::{Boundary, Grid, LatticeDrive, LatticeMirror, SimState, SourceProfile};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"MOFSIMCK";

fn io_err(e: std::io::Error) -> MofError {
    MofError::Format(e.to_string())
}

/// Rows `t,x,phi`.
pub fn write_field_csv<T: Real, W: Write>(state: &SimState<T>, out: &mut W, header: bool) -> Result<()> {
    if header {
        writeln!(out, "t,x,phi").map_err(io_err)?;
    }
    for i in 0..state.grid.n {
        writeln!(out, "{},{},{}", state.t, state.grid.x(i), state.phi[i]).map_err(io_err)?;
    }
    Ok(())
}

/// Rows `t,mirror,q,p,Z,P`.
pub fn write_mirrors_csv<T: Real, W: Write>(state: &SimState<T>, out: &mut W, header: bool) -> Result<()> {
    if header {
        writeln!(out, "t,mirror,q,p,Z,P").map_err(io_err)?;
    }
    for (a, m) in state.mirrors.iter().enumerate() {
        writeln!(out, "{},{},{},{},{},{}", state.t, a, m.q, m.p, m.z, m.big_p).map_err(io_err)?;
    }
    Ok(())
}

struct Enc<'a, W: Write> {
    w: &'a mut W,
    wide: bool,
}

impl<W: Write> Enc<'_, W> {
    fn scalar<T: Real>(&mut self, v: T) -> Result<()> {
        if self.wide {
            self.w.write_all(&v.as_f64().to_le_bytes())
        } else {
            self.w.write_all(&(v.as_f64() as f32).to_le_bytes())
        }
        .map_err(io_err)
    }

    fn u8(&mut self, v: u8) -> Result<()> {
        self.w.write_all(&[v]).map_err(io_err)
    }

    fn u64(&mut self, v: u64) -> Result<()> {
        self.w.write_all(&v.to_le_bytes()).map_err(io_err)
    }
}

struct Dec<'a, R: Read> {
    r: &'a mut R,
    wide: bool,
}

impl<R: Read> Dec<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(io_err)?;
        Ok(b)
    }

    fn scalar<T: Real>(&mut self) -> Result<T> {
        let v = if self.wide { f64::from_le_bytes(self.bytes()?) } else { f32::from_le_bytes(self.bytes()?) as f64 };
        T::from_f64(v).ok_or_else(|| MofError::Format("scalar out of range".into()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
}

fn boundary_code(b: Boundary) -> u8 {
    match b {
        Boundary::Absorbing => 0,
        Boundary::Dirichlet => 1,
    }
}

fn boundary_from(c: u8) -> Result<Boundary> {
    match c {
        0 => Ok(Boundary::Absorbing),
        1 => Ok(Boundary::Dirichlet),
        _ => Err(MofError::Format(format!("unknown boundary code {c}"))),
    }
}

pub fn save_checkpoint<T: Real, W: Write>(state: &SimState<T>, out: &mut W) -> Result<()> {
    let wide = std::mem::size_of::<T>() == 8;
    out.write_all(MAGIC).map_err(io_err)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io_err)?;
    let mut e = Enc { w: out, wide };
    e.u8(if wide { 8 } else { 4 })?;
    e.scalar(state.t)?;
    e.scalar(state.grid.x_min)?;
    e.scalar(state.grid.dx)?;
    e.u64(state.grid.n as u64)?;
    e.u8(boundary_code(state.boundary.0))?;
    e.u8(boundary_code(state.boundary.1))?;
    e.u64(state.mirrors.len() as u64)?;
    for m in &state.mirrors {
        let c = &m.config;
        for v in [c.mirosc.m(), c.mirosc.omega(), c.mirosc.lambda(), c.mass(), c.z_eq()] {
            e.scalar(v)?;
        }
        e.u8(u8::from(c.trap_omega0().is_some()))?;
        e.scalar(c.omega0_or_free())?;
        e.u8(u8::from(m.pinned))?;
        for v in [m.q, m.p, m.z, m.big_p] {
            e.scalar(v)?;
        }
    }
    match &state.drive {
        None => e.u8(0)?,
        Some(d) => {
            e.u8(1)?;
            e.scalar(d.amplitude)?;
            e.scalar(d.omega)?;
            e.scalar(d.ramp_periods)?;
            let (tag, a, b) = match d.profile {
                SourceProfile::Point(x) => (0, x, T::zero()),
                SourceProfile::Uniform { from, to } => (1, from, to),
            };
            e.u8(tag)?;
            e.scalar(a)?;
            e.scalar(b)?;
        }
    }
    for &v in state.phi.iter().chain(&state.pi) {
        e.scalar(v)?;
    }
    Ok(())
}

pub fn load_checkpoint<T: Real, R: Read>(input: &mut R) -> Result<SimState<T>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(MofError::Format("not a checkpoint (bad magic)".into()));
    }
    let mut vb = [0u8; 4];
    input.read_exact(&mut vb).map_err(io_err)?;
    let version = u32::from_le_bytes(vb);
    if version != CHECKPOINT_VERSION {
        return Err(MofError::Format(format!("unsupported checkpoint version {version}")));
    }
    let mut d = Dec { r: input, wide: true };
    d.wide = match d.u8()? {
        8 => true,
        4 => false,
        w => return Err(MofError::Format(format!("bad scalar width {w}"))),
    };
    let t = d.scalar()?;
    let x_min = d.scalar()?;
    let dx = d.scalar()?;
    let n = d.u64()? as usize;
    if !(2..=1 << 32).contains(&n) {
        return Err(MofError::Format(format!("bad node count {n}")));
    }
    let boundary = (boundary_from(d.u8()?)?, boundary_from(d.u8()?)?);
    let grid = Grid { x_min, dx, n };
    let mut state = SimState::new(grid, boundary);
    state.t = t;
    let count = d.u64()? as usize;
    for _ in 0..count {
        let (m, w, lam, mass, z_eq): (T, T, T, T, T) =
            (d.scalar()?, d.scalar()?, d.scalar()?, d.scalar()?, d.scalar()?);
        let has_trap = d.u8()? != 0;
        let w0: T = d.scalar()?;
        let pinned = d.u8()? != 0;
        let cfg = MirrorConfig::new(MiroscParams::new(m, w, lam)?, mass, z_eq, has_trap.then_some(w0))?;
        let mut mirror = LatticeMirror::new(cfg, T::zero());
        mirror.pinned = pinned;
        mirror.q = d.scalar()?;
        mirror.p = d.scalar()?;
        mirror.z = d.scalar()?;
        mirror.big_p = d.scalar()?;
        state.mirrors.push(mirror);
    }
    if d.u8()? != 0 {
        let amplitude = d.scalar()?;
        let omega = d.scalar()?;
        let ramp_periods = d.scalar()?;
        let tag = d.u8()?;
        let (a, b): (T, T) = (d.scalar()?, d.scalar()?);
        let profile = match tag {
            0 => SourceProfile::Point(a),
            1 => SourceProfile::Uniform { from: a, to: b },
            _ => return Err(MofError::Format(format!("unknown source profile {tag}"))),
        };
        state.drive = Some(LatticeDrive { amplitude, omega, profile, ramp_periods });
    }
    for i in 0..n {
        state.phi[i] = d.scalar()?;
    }
    for i in 0..n {
        state.pi[i] = d.scalar()?;
    }
    Ok(state)
}
