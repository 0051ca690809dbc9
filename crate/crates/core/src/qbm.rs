//! Static and slowly moving mirrors as quantum-Brownian-motion coefficient sets.
//!
//! Field modes in a box of size V: u¹ = (2Vω)^{−1/2} cos kx, u² = (2Vω)^{−1/2} sin kx,
//! ω = k, on the ladder k_n = 2πn/V. Which family survives depends on boundary
//! conditions the model leaves open, so both are exported. Rows are ordered with k
//! ascending inside each polarization and the σ = 1 block before σ = 2.

use std::fmt::Write as _;

use crate::error::{MofError, Result};
use crate::params::MirrorConfig;
use crate::scalar::Real;

/// u_k^σ(x)
pub fn mode_function<T: Real>(v: T, k: T, sigma: u8, x: T) -> T {
    let norm = (T::lit(2.0) * v * k).sqrt().recip();
    match sigma {
        1 => norm * (k * x).cos(),
        _ => norm * (k * x).sin(),
    }
}

/// ∂ₓu_k^σ(x)
pub fn mode_function_dx<T: Real>(v: T, k: T, sigma: u8, x: T) -> T {
    let norm = (T::lit(2.0) * v * k).sqrt().recip();
    match sigma {
        1 => -norm * k * (k * x).sin(),
        _ => norm * k * (k * x).cos(),
    }
}

/// One system oscillator: the mirosc of a mirror at `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOscillator<T = f64> {
    pub m: T,
    pub omega: T,
    pub lambda: T,
    pub position: T,
    pub mass: T,
    pub trap_omega0: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QbmExport<T = f64> {
    pub box_size: T,
    pub cutoff: T,
    pub system: Vec<SystemOscillator<T>>,
    /// ω_k, k ascending; each frequency carries both σ = 1 and σ = 2.
    pub bath: Vec<T>,
    /// couplings[σ−1][k][a] = λ_a u_k^σ(L_a)
    pub couplings: [Vec<Vec<T>>; 2],
    /// λ_a ∂ₓu_k^σ(L_a), present for slow-motion exports; O(Z²) terms are dropped.
    pub displacement_couplings: Option<[Vec<Vec<T>>; 2]>,
}

/// Classical phase-space point: mirosc (q, p), optional worldline (Z, P) and mode
/// amplitudes φ[σ−1][k], π[σ−1][k].
#[derive(Debug, Clone, PartialEq)]
pub struct QbmState<T = f64> {
    pub q: Vec<T>,
    pub p: Vec<T>,
    pub z: Vec<T>,
    pub big_p: Vec<T>,
    pub phi: [Vec<T>; 2],
    pub pi: [Vec<T>; 2],
}

fn ladder<T: Real>(v: T, cutoff: T, mode_count: usize) -> Vec<T> {
    let dk = T::TAU() / v;
    (1..=mode_count).map(|n| dk * T::from_usize_lossy(n)).take_while(|&k| k <= cutoff).collect()
}

fn validate<T: Real>(mirrors: &[(MirrorConfig<T>, T)], v: T, cutoff: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(MofError::param("V", "box size must be finite and > 0"));
    }
    if !(cutoff > T::zero()) || !cutoff.is_finite() {
        return Err(MofError::param("Lambda", "cutoff must be finite and > 0"));
    }
    for &(_, l) in mirrors {
        if !(l >= T::zero() && l <= v) {
            return Err(MofError::OutOfBox { position: l.as_f64(), extent: v.as_f64() });
        }
    }
    Ok(())
}

fn coupling_matrix<T: Real>(
    mirrors: &[(MirrorConfig<T>, T)],
    v: T,
    bath: &[T],
    f: fn(T, T, u8, T) -> T,
) -> [Vec<Vec<T>>; 2] {
    let block = |sigma: u8| -> Vec<Vec<T>> {
        bath.iter().map(|&k| mirrors.iter().map(|(c, l)| c.mirosc.lambda() * f(v, k, sigma, *l)).collect()).collect()
    };
    [block(1), block(2)]
}

/// Mirrors held at rest at the given positions.
pub fn export_static<T: Real>(
    mirrors: &[(MirrorConfig<T>, T)],
    box_size: T,
    cutoff: T,
    mode_count: usize,
) -> Result<QbmExport<T>> {
    validate(mirrors, box_size, cutoff)?;
    let bath = ladder(box_size, cutoff, mode_count);
    let couplings = coupling_matrix(mirrors, box_size, &bath, mode_function);
    let system = mirrors
        .iter()
        .map(|(c, l)| SystemOscillator {
            m: c.mirosc.m(),
            omega: c.mirosc.omega(),
            lambda: c.mirosc.lambda(),
            position: *l,
            mass: c.mass(),
            trap_omega0: c.trap_omega0(),
        })
        .collect();
    Ok(QbmExport { box_size, cutoff, system, bath, couplings, displacement_couplings: None })
}

/// Static export plus the first-order displacement couplings.
pub fn export_slow_motion<T: Real>(
    mirrors: &[(MirrorConfig<T>, T)],
    box_size: T,
    cutoff: T,
    mode_count: usize,
) -> Result<QbmExport<T>> {
    if mirrors.iter().any(|(c, _)| c.trap_omega0().is_none()) {
        return Err(MofError::param("trap_omega0", "slow-motion export needs a trap frequency for every mirror"));
    }
    let mut e = export_static(mirrors, box_size, cutoff, mode_count)?;
    e.displacement_couplings = Some(coupling_matrix(mirrors, box_size, &e.bath, mode_function_dx));
    Ok(e)
}

impl<T: Real> QbmExport<T> {
    pub fn mode_count(&self) -> usize {
        self.bath.len()
    }

    pub fn mirror_count(&self) -> usize {
        self.system.len()
    }

    pub fn zero_state(&self) -> QbmState<T> {
        let n = self.mirror_count();
        let k = self.mode_count();
        QbmState {
            q: vec![T::zero(); n],
            p: vec![T::zero(); n],
            z: vec![T::zero(); n],
            big_p: vec![T::zero(); n],
            phi: [vec![T::zero(); k], vec![T::zero(); k]],
            pi: [vec![T::zero(); k], vec![T::zero(); k]],
        }
    }

    /// ½Σ(π² + ω²φ²) + Σ_a(p²/2m + ½mΩ²q²) − Σ C φ q.
    pub fn hamiltonian(&self, s: &QbmState<T>) -> T {
        let half = T::lit(0.5);
        let mut h = T::zero();
        for sg in 0..2 {
            for (k, &w) in self.bath.iter().enumerate() {
                h = h + half * (s.pi[sg][k] * s.pi[sg][k] + w * w * s.phi[sg][k] * s.phi[sg][k]);
            }
        }
        for (a, o) in self.system.iter().enumerate() {
            h = h + s.p[a] * s.p[a] / (T::lit(2.0) * o.m) + half * o.m * o.omega * o.omega * s.q[a] * s.q[a];
        }
        for sg in 0..2 {
            for (k, row) in self.couplings[sg].iter().enumerate() {
                for (a, &c) in row.iter().enumerate() {
                    h = h - c * s.q[a] * s.phi[sg][k];
                }
            }
        }
        h
    }

    /// Static part plus P²/2M + ½MΩ₀²Z² − Σ Z_a λ_a ∂ₓu q_a φ, with Z measured from L_a.
    pub fn hamiltonian_slow(&self, s: &QbmState<T>) -> Result<T> {
        let d = self
            .displacement_couplings
            .as_ref()
            .ok_or_else(|| MofError::param("displacement_couplings", "export has no slow-motion block"))?;
        let half = T::lit(0.5);
        let mut h = self.hamiltonian(s);
        for (a, o) in self.system.iter().enumerate() {
            let w0 = o.trap_omega0.unwrap_or_else(T::zero);
            h = h + s.big_p[a] * s.big_p[a] / (T::lit(2.0) * o.mass) + half * o.mass * w0 * w0 * s.z[a] * s.z[a];
        }
        for sg in 0..2 {
            for (k, row) in d[sg].iter().enumerate() {
                for (a, &c) in row.iter().enumerate() {
                    h = h - s.z[a] * c * s.q[a] * s.phi[sg][k];
                }
            }
        }
        Ok(h)
    }

    /// Structured text: key-value header, then one block per matrix.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mofsim qbm export");
        let _ = writeln!(out, "# rows: k index ascending, sigma=1 block before sigma=2; columns: mirrors a = 1..N");
        let _ = writeln!(out, "V = {}", self.box_size);
        let _ = writeln!(out, "Lambda = {}", self.cutoff);
        let _ = writeln!(out, "N = {}", self.mirror_count());
        let _ = writeln!(out, "K = {}", self.mode_count());
        let _ = writeln!(
            out,
            "displacement_order = {}",
            if self.displacement_couplings.is_some() { "1 (O(Z^2) truncated)" } else { "none" }
        );
        let _ = writeln!(out, "[system] m Omega lambda L M Omega0");
        for o in &self.system {
            let w0 = o.trap_omega0.map_or_else(|| "free".to_string(), |w| w.to_string());
            let _ = writeln!(out, "{} {} {} {} {} {}", o.m, o.omega, o.lambda, o.position, o.mass, w0);
        }
        let _ = writeln!(out, "[bath] n omega_k");
        for (n, w) in self.bath.iter().enumerate() {
            let _ = writeln!(out, "{} {}", n + 1, w);
        }
        let block = |out: &mut String, name: &str, m: &[Vec<Vec<T>>; 2]| {
            let _ = writeln!(out, "[{name}] sigma n C_1 .. C_N");
            for (sg, rows) in m.iter().enumerate() {
                for (n, row) in rows.iter().enumerate() {
                    let cols: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                    let _ = writeln!(out, "{} {} {}", sg + 1, n + 1, cols.join(" "));
                }
            }
        };
        block(&mut out, "couplings", &self.couplings);
        if let Some(d) = &self.displacement_couplings {
            block(&mut out, "displacement_couplings", d);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| MofError::Format(format!("qbm export: {msg}"));
        let num = |s: &str| -> Result<T> {
            s.parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| MofError::Format(format!("qbm export: bad number {s:?}")))
        };
        let mut header = std::collections::HashMap::new();
        let mut section = String::new();
        let mut system = Vec::new();
        let mut bath = Vec::new();
        let mut blocks: std::collections::HashMap<String, [Vec<Vec<T>>; 2]> = std::collections::HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix('[') {
                section = rest.split(']').next().unwrap_or_default().to_string();
                continue;
            }
            if section.is_empty() {
                let (k, v) = line.split_once('=').ok_or_else(|| bad("header lines need key = value"))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            match section.as_str() {
                "system" => {
                    if f.len() != 6 {
                        return Err(bad("system rows need 6 columns"));
                    }
                    system.push(SystemOscillator {
                        m: num(f[0])?,
                        omega: num(f[1])?,
                        lambda: num(f[2])?,
                        position: num(f[3])?,
                        mass: num(f[4])?,
                        trap_omega0: if f[5] == "free" { None } else { Some(num(f[5])?) },
                    });
                }
                "bath" => bath.push(num(f.get(1).ok_or_else(|| bad("bath rows need 2 columns"))?)?),
                name => {
                    let sg: usize = f
                        .first()
                        .and_then(|s| s.parse().ok())
                        .filter(|s| *s == 1 || *s == 2)
                        .ok_or_else(|| bad("sigma must be 1 or 2"))?;
                    let row = f[2..].iter().map(|s| num(s)).collect::<Result<Vec<T>>>()?;
                    blocks.entry(name.to_string()).or_insert_with(|| [Vec::new(), Vec::new()])[sg - 1].push(row);
                }
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(&format!("missing header key {k}")));
        let box_size = num(get("V")?)?;
        let cutoff = num(get("Lambda")?)?;
        let n: usize = get("N")?.parse().map_err(|_| bad("N must be an integer"))?;
        let k: usize = get("K")?.parse().map_err(|_| bad("K must be an integer"))?;
        if system.len() != n || bath.len() != k {
            return Err(bad("N or K does not match the data"));
        }
        let couplings = blocks.remove("couplings").ok_or_else(|| bad("missing couplings block"))?;
        let displacement_couplings = blocks.remove("displacement_couplings");
        for m in std::iter::once(&couplings).chain(displacement_couplings.as_ref()) {
            if m.iter().any(|b| b.len() != k || b.iter().any(|r| r.len() != n)) {
                return Err(bad("coupling block is not K x N per polarization"));
            }
        }
        Ok(Self { box_size, cutoff, system, bath, couplings, displacement_couplings })
    }
}

/// Mode-restricted Hamiltonian evaluated from the field: Φ(L_a) = Σ φ_k^σ u_k^σ(L_a), then
/// ½Σ(π² + k²φ²) + Σ_a(p²/2m + ½mΩ²q² − λ_a q_a Φ(L_a)).
pub fn mode_hamiltonian_direct<T: Real>(mirrors: &[(MirrorConfig<T>, T)], box_size: T, ks: &[T], s: &QbmState<T>) -> T {
    let half = T::lit(0.5);
    let mut h = T::zero();
    for sg in 0..2 {
        for (i, &k) in ks.iter().enumerate() {
            h = h + half * (s.pi[sg][i] * s.pi[sg][i] + k * k * s.phi[sg][i] * s.phi[sg][i]);
        }
    }
    for (a, (c, l)) in mirrors.iter().enumerate() {
        let mp = c.mirosc;
        let field: T = (0..2u8)
            .flat_map(|sg| ks.iter().enumerate().map(move |(i, &k)| (sg, i, k)))
            .map(|(sg, i, k)| s.phi[sg as usize][i] * mode_function(box_size, k, sg + 1, *l))
            .sum();
        h = h + s.p[a] * s.p[a] / (T::lit(2.0) * mp.m()) + half * mp.kappa() * s.q[a] * s.q[a]
            - mp.lambda() * s.q[a] * field;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::MiroscParams;

    fn cfg(lam: f64) -> MirrorConfig {
        MirrorConfig::new(MiroscParams::new(1.0, 3.0, lam).unwrap(), 10.0, 0.0, Some(0.5)).unwrap()
    }

    #[test]
    fn mode_function_at_origin() {
        assert_eq!(mode_function(4.0, 2.0, 2, 0.0), 0.0);
        assert!((mode_function(4.0, 2.0, 1, 0.0) - (16.0f64).sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn mirror_at_origin_decouples_sine_modes() {
        let e = export_slow_motion(&[(cfg(2.0), 0.0)], 10.0, 50.0, 20).unwrap();
        assert!(e.couplings[1].iter().all(|r| r[0] == 0.0));
        for (row, &k) in e.displacement_couplings.as_ref().unwrap()[1].iter().zip(&e.bath) {
            assert!((row[0] - 2.0 * k / (20.0 * k).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_coupling_and_bounds() {
        let e = export_static(&[(cfg(0.0), 3.0)], 10.0, 50.0, 20).unwrap();
        assert!(e.couplings.iter().flatten().flatten().all(|&c| c == 0.0));
        assert!(e.bath.iter().all(|&w| w <= 50.0));
        assert!(matches!(export_static(&[(cfg(1.0), 11.0)], 10.0, 50.0, 20), Err(MofError::OutOfBox { .. })));
    }

    #[test]
    fn text_round_trip() {
        let e = export_slow_motion(&[(cfg(2.0), 1.3), (cfg(0.7), 6.1)], 10.0, 30.0, 12).unwrap();
        let back = QbmExport::<f64>::from_text(&e.to_text()).unwrap();
        assert_eq!(back.bath.len(), e.bath.len());
        for (a, b) in back.couplings[1].iter().flatten().zip(e.couplings[1].iter().flatten()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1e-300));
        }
    }
}
