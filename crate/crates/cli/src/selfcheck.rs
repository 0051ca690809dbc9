//! Quick invariant battery: each check prints one line and the run fails if any does.

use std::io::Write;

use mofsim_core::cavity::{mode_overlap, modes_with_strength, two_mirror_scatter, CavityConfig};
use mofsim_core::params::{mirosc_with_rp, MiroscParams, MirrorConfig};
use mofsim_core::qbm::{export_static, mode_hamiltonian_direct};
use mofsim_core::scattering::{bc_scatter, mof_scatter, mof_to_bc_max_deviation};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Check = mofsim_core::Result<(bool, String)>;

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn unitarity(rng: &mut StdRng, draws: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let p =
            MiroscParams::new(log_uniform(rng, 1e-3, 1e3), log_uniform(rng, 1e-2, 1e2), log_uniform(rng, 1e-3, 1e2))?;
        let s = mof_scatter(&p, log_uniform(rng, 1e-3, 1e2) * p.omega())?;
        worst = worst.max((s.reflectance() + s.transmittance() - 1.0).abs());
        let b = bc_scatter(log_uniform(rng, 1e-3, 1e3), log_uniform(rng, 1e-3, 1e3))?;
        worst = worst.max((b.reflectance() + b.transmittance() - 1.0).abs());
        let mut mirror = || -> mofsim_core::Result<MirrorConfig> {
            let p = MiroscParams::new(
                log_uniform(rng, 1e-2, 1e2),
                log_uniform(rng, 1e-1, 1e1),
                log_uniform(rng, 1e-2, 1e1),
            )?;
            MirrorConfig::new(p, 1.0, 0.0, None)
        };
        let (m1, m2) = (mirror()?, mirror()?);
        let c =
            two_mirror_scatter(&CavityConfig::new(m1, m2, log_uniform(rng, 1e-2, 1e2))?, log_uniform(rng, 1e-2, 1e1))?;
        worst = worst.max((c.r1.norm_sqr() + c.t1.norm_sqr() - 1.0).abs());
        worst = worst.max((c.r2.norm_sqr() + c.t2.norm_sqr() - 1.0).abs());
    }
    Ok((worst <= 1e-12, format!("max ||R|^2+|T|^2-1| = {worst:.2e} over {draws} draws")))
}

fn half_reflection_point() -> Check {
    let p = mirosc_with_rp(1.0, 1.0, 1.0)?;
    let r = mof_scatter(&p, 1.0 / 3f64.sqrt())?.reflectance();
    Ok(((r - 0.5).abs() <= 1e-10, format!("r_p = 1: |R(Omega/sqrt3)|^2 = {r:.12}")))
}

fn bc_limit() -> Check {
    let omegas: Vec<f64> = (1..=100).map(|i| i as f64 * 5e-3).collect();
    let masses: Vec<f64> = (0..=6).map(|j| 10f64.powi(-j)).collect();
    let d = mof_to_bc_max_deviation(1.0, 1.0, &omegas, &masses)?;
    let ok = d.windows(2).all(|w| w[1] < w[0]) && d[d.len() - 1] < 1e-5;
    Ok((ok, format!("max |R_MOF-R_BC| falls from {:.1e} to {:.1e} over six decades of m", d[0], d[d.len() - 1])))
}

fn boxed_modes(rng: &mut StdRng) -> Check {
    let l = rng.gen_range(0.5..3.0);
    let x = l + rng.gen_range(0.5..3.0);
    let modes = modes_with_strength(l, x, rng.gen_range(0.0..30.0), 8)?;
    let mut worst: f64 = 0.0;
    for (i, u) in modes.iter().enumerate() {
        worst = worst.max(u.jump_residual());
        for (j, v) in modes.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((mode_overlap(u, v) - target).abs());
        }
    }
    Ok((worst < 1e-8, format!("jump residual and orthonormality defect {worst:.2e} over 8 modes")))
}

fn qbm_hamiltonian(rng: &mut StdRng, draws: usize) -> Check {
    let p = MiroscParams::new(1.0, 2.0, 0.7)?;
    let mirrors = vec![(MirrorConfig::new(p, 1.0, 0.0, None)?, 1.3), (MirrorConfig::new(p, 1.0, 0.0, None)?, 3.1)];
    let ex = export_static(&mirrors, 5.0, 30.0, 64)?;
    let mut worst: f64 = 0.0;
    for _ in 0..draws.min(100) {
        let mut s = ex.zero_state();
        for a in 0..2 {
            s.q[a] = rng.gen_range(-1.0..1.0);
            s.p[a] = rng.gen_range(-1.0..1.0);
        }
        for sg in 0..2 {
            for k in 0..ex.mode_count() {
                s.phi[sg][k] = rng.gen_range(-1.0..1.0);
                s.pi[sg][k] = rng.gen_range(-1.0..1.0);
            }
        }
        let direct: f64 = mode_hamiltonian_direct(&mirrors, 5.0, &ex.bath, &s);
        worst = worst.max((ex.hamiltonian(&s) - direct).abs() / direct.abs().max(1e-300));
    }
    Ok((worst < 1e-10, format!("export vs field-space Hamiltonian, max relative error {worst:.2e}")))
}

/// Run every check; `true` when all pass.
pub fn run(seed: u64, draws: usize) -> bool {
    let mut rng = StdRng::seed_from_u64(seed);
    let results: Vec<(&str, Check)> = vec![
        ("unitarity", unitarity(&mut rng, draws)),
        ("half-reflection", half_reflection_point()),
        ("bc-limit", bc_limit()),
        ("boxed-modes", boxed_modes(&mut rng)),
        ("qbm-hamiltonian", qbm_hamiltonian(&mut rng, draws)),
    ];
    let mut all = true;
    for (name, r) in results {
        let (ok, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        // a closed pipe (e.g. `| head`) should not abort the run
        let _ = writeln!(std::io::stdout(), "{name:<16} {} {detail}", if ok { "PASS" } else { "FAIL" });
    }
    all
}
