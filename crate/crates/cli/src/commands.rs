use std::path::Path;

use mofsim_core::cavity::{cavity_modes_boxed, nx_coupling, two_mirror_scatter, CavityConfig};
use mofsim_core::cooling::{
    cooling_coefficients, evolve_averaged, evolve_full_delay, CoolingSetup, FullDelayOptions, Trajectory,
};
use mofsim_core::params::{bc_gamma_from_kappa, DriveParams, MiroscParams, MirrorConfig};
use mofsim_core::qbm::{export_slow_motion, export_static};
use mofsim_core::scattering::{bc_scatter, mof_scatter};
use mofsim_core::timedomain::{
    effective_mass, find_runaway_modes, packet_expected_reflectance, save_checkpoint, scatter_wavepacket, step_nonrel,
    step_relativistic, write_field_csv, Boundary, Grid, LatticeDrive, LatticeMirror, RunawayModes, RunawayOptions,
    ScatterGrid, SimState, SourceProfile, WavePacket,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{need, MirrorSpec, Scenario, Units};
use crate::error::CliError;
use crate::output::{ensure_dir, write_atomic, write_echo, write_echo_at, Provenance, Table};
use crate::{
    BcArgs, CavityArgs, ConfigArgs, CoolingEvolveArgs, CoolingMethod, EvolveArgs, FreqGrid, PacketArgs, QbmArgs,
    ScatterArgs,
};

fn frequencies(g: &FreqGrid) -> Result<Vec<f64>, CliError> {
    if !(g.wmin > 0.0) || !(g.wmax >= g.wmin) || !g.wmax.is_finite() {
        return Err(CliError::Usage(format!("need 0 < --wmin <= --wmax (got {} and {})", g.wmin, g.wmax)));
    }
    if g.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    if g.n == 1 {
        return Ok(vec![g.wmin]);
    }
    let step = (g.wmax - g.wmin) / (g.n - 1) as f64;
    Ok((0..g.n).map(|i| if i + 1 == g.n { g.wmax } else { g.wmin + step * i as f64 }).collect())
}

fn mirror_config(s: &MirrorSpec, units: Units) -> Result<MirrorConfig, CliError> {
    let p = MiroscParams::new(s.m, units.to_angular(s.omega), s.lambda)?;
    Ok(MirrorConfig::new(p, s.mass, s.position, s.trap_omega0.map(|w| units.to_angular(w)))?)
}

fn finish(table: &Table, prov: &Provenance, output: &Path) -> Result<(), CliError> {
    write_atomic(output, &table.render(prov))?;
    write_echo(output, prov)
}

fn with_suffix(output: &Path, suffix: &str) -> std::path::PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    output.with_file_name(name)
}

fn spectrum_rows(
    table: &mut Table,
    units: Units,
    ws: &[f64],
    f: impl Fn(f64) -> mofsim_core::Result<mofsim_core::ScatterResult>,
) -> Result<(), CliError> {
    for &w in ws {
        let s = f(units.to_angular(w))?;
        table.push(vec![w, s.r.re, s.r.im, s.reflectance(), s.transmittance()]);
    }
    Ok(())
}

fn spectrum_table(units: Units) -> Table {
    let mut t = Table::new(["omega", "re_r", "im_r", "abs_r2", "abs_t2"]);
    t.notes.push(format!("omega in {}; R uses the e^(+i omega t) phase convention", units_name(units)));
    t
}

fn units_name(u: Units) -> &'static str {
    match u {
        Units::RadPerS => "rad/s",
        Units::Hz => "Hz",
    }
}

fn gnuplot_r2(table: &Table, prov: &Provenance, output: &Path) -> Result<(), CliError> {
    if output.as_os_str() == "-" {
        return Err(CliError::Usage("--gnuplot needs a file output (-o)".into()));
    }
    write_atomic(&with_suffix(output, ".r2.dat"), &table.render_pair(prov, 0, 3))
}

pub fn scatter(a: &ScatterArgs) -> Result<(), CliError> {
    let units = Units::from(a.units);
    let p = MiroscParams::new(a.m, units.to_angular(a.omega), a.lambda)?;
    let ws = frequencies(&a.grid)?;
    let prov = Provenance::new("scatter", serde_json::to_value(a).expect("args serialize"));
    let mut t = spectrum_table(units);
    spectrum_rows(&mut t, units, &ws, |w| mof_scatter(&p, w))?;
    if a.gnuplot {
        gnuplot_r2(&t, &prov, &a.output)?;
    }
    finish(&t, &prov, &a.output)
}

pub fn bc(a: &BcArgs) -> Result<(), CliError> {
    let units = Units::from(a.units);
    let gamma = match (a.gamma, a.kappa, a.lambda) {
        (Some(g), _, _) => g,
        (None, Some(k), Some(l)) => bc_gamma_from_kappa(k, l)?,
        _ => return Err(CliError::Usage("give --gamma, or --kappa with --lambda".into())),
    };
    let ws = frequencies(&a.grid)?;
    let mut echo = serde_json::to_value(a).expect("args serialize");
    echo["gamma_resolved"] = json!(gamma);
    let prov = Provenance::new("bc", echo);
    let mut t = spectrum_table(units);
    spectrum_rows(&mut t, units, &ws, |w| bc_scatter(gamma, w))?;
    if a.gnuplot {
        gnuplot_r2(&t, &prov, &a.output)?;
    }
    finish(&t, &prov, &a.output)
}

fn cavity_config(sc: &Scenario, why: &str) -> Result<CavityConfig, CliError> {
    let ms = sc.need_mirrors(2, why)?;
    let l = need(sc.grid.length, "grid.length", why)?;
    let m1 = mirror_config(&ms[0], sc.units)?.at(0.0)?;
    let m2 = mirror_config(&ms[1], sc.units)?.at(l)?;
    Ok(CavityConfig::new(m1, m2, l)?)
}

pub fn cavity(a: &CavityArgs) -> Result<(), CliError> {
    let sc = Scenario::load(&a.config)?;
    let c = cavity_config(&sc, "cavity")?;
    let ws = frequencies(&a.grid)?;
    let mut echo = sc.echo();
    echo["scan"] = serde_json::to_value(&a.grid).expect("grid serializes");
    let prov = Provenance::new("cavity", echo);
    let mut t = Table::new(["omega", "abs_r2", "abs_t2", "interior_gain", "abs_r1_2", "abs_r2_2"]);
    t.notes.push(format!("omega in {}; mirror 1 at x = 0, mirror 2 at x = L", units_name(sc.units)));
    for &w in &ws {
        let s = two_mirror_scatter(&c, sc.units.to_angular(w))?;
        t.push(vec![
            w,
            s.total_reflection().norm_sqr(),
            s.total_transmission().norm_sqr(),
            s.interior_gain(),
            s.r1.norm_sqr(),
            s.r2.norm_sqr(),
        ]);
    }
    finish(&t, &prov, &a.output)
}

pub fn modes(a: &ConfigArgs, with_nx: bool) -> Result<(), CliError> {
    let why = if with_nx { "nx" } else { "modes" };
    let sc = Scenario::load(&a.config)?;
    let c = cavity_config(&sc, why)?;
    let x = need(sc.grid.box_size, "grid.box_size", why)?;
    let n = sc.grid.n_modes.unwrap_or(20);
    let modes = cavity_modes_boxed(&c, x, n)?;
    let prov = Provenance::new(if with_nx { "nx" } else { "modes" }, sc.echo());
    let mut t = if with_nx {
        Table::new(["index", "k", "g_nx"])
    } else {
        Table::new(["index", "k", "node_count", "interior_weight", "jump_residual"])
    };
    t.notes.push("k in rad per unit length (c = 1); box [0, grid.box_size], delta at grid.length".into());
    for (i, u) in modes.iter().enumerate() {
        if with_nx {
            t.push(vec![i as f64, u.k, nx_coupling(u, &c.mirror2.mirosc)?]);
        } else {
            t.push(vec![i as f64, u.k, u.node_count() as f64, u.interior_weight(), u.jump_residual()]);
        }
    }
    finish(&t, &prov, &a.output)
}

fn cooling_setup(sc: &Scenario, length: f64, why: &str) -> Result<CoolingSetup, CliError> {
    let m = mirror_config(&sc.need_mirrors(1, why)?[0], sc.units)?;
    let d = sc.need_drive(why)?;
    Ok(CoolingSetup::new(m, length, DriveParams::new(d.amplitude, sc.units.to_angular(d.omega_d))?)?)
}

pub fn cooling_sweep(a: &ConfigArgs) -> Result<(), CliError> {
    let why = "cooling-sweep";
    let sc = Scenario::load(&a.config)?;
    let lo = need(sc.grid.l_min, "grid.l_min", why)?;
    let hi = need(sc.grid.l_max, "grid.l_max", why)?;
    let n = need(sc.grid.n_lengths, "grid.n_lengths", why)?;
    if n == 0 {
        return Err(CliError::config("grid.n_lengths", "must be >= 1"));
    }
    let base = cooling_setup(&sc, lo, why)?;
    if a.output.as_os_str() == "-" {
        return Err(CliError::Usage("cooling-sweep writes a directory; pass -o <dir>".into()));
    }
    let dir = ensure_dir(&a.output)?;
    let points = ensure_dir(&dir.join("points"))?;
    let prov = Provenance::new("cooling-sweep", sc.echo());
    let w0 = base.mirror.omega0_or_free();
    let units = sc.units;
    let columns = ["L", "F_rad", "Gamma", "Gamma_single", "dOmega2", "stiffness", "omega_eff"];
    let lengths: Vec<f64> =
        (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect();

    let rows = lengths
        .par_iter()
        .enumerate()
        .map(|(i, &l)| -> Result<(Vec<f64>, Vec<String>), CliError> {
            let c = cooling_coefficients(&base.with_length(l)?)?;
            let k = c.stiffness(w0);
            let w_eff = c.effective_frequency.stable().map_or(f64::NAN, |w| units.in_units(w));
            let row = vec![l, c.f_rad, c.gamma, c.gamma_single, c.d_omega2, k, w_eff];
            let notes: Vec<String> = c.warnings.iter().map(|w| format!("L = {l}: {w:?}")).collect();
            let mut point = Table::new(columns);
            point.notes = notes.clone();
            point.push(row.clone());
            write_atomic(&points.join(format!("point_{i:05}.csv")), &point.render(&prov))?;
            Ok((row, notes))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut t = Table::new(columns);
    t.notes.push(format!(
        "omega_eff = sqrt(Omega0^2 - dOmega^2) in {} (NaN where unstable); Gamma is the damping coefficient, twice Gamma_single",
        units_name(units)
    ));
    for (row, notes) in rows {
        t.notes.extend(notes);
        t.push(row);
    }
    write_atomic(&dir.join("sweep.csv"), &t.render(&prov))?;
    if sc.outputs.gnuplot {
        write_atomic(&dir.join("f_rad.dat"), &t.render_pair(&prov, 0, 1))?;
        write_atomic(&dir.join("gamma.dat"), &t.render_pair(&prov, 0, 2))?;
        write_atomic(&dir.join("omega_eff.dat"), &t.render_pair(&prov, 0, 6))?;
    }
    write_echo_at(&dir.join("config.echo.json"), &prov)
}

fn trajectory_table(tr: &Trajectory, every: usize) -> Table {
    let mut t = Table::new(["t", "z", "zdot"]);
    t.notes.push(format!("integrator: {}, dt = {}", tr.integrator, tr.dt));
    if tr.flags.unstable {
        t.notes.push("warning: negative effective stiffness, motion grows exponentially".into());
    }
    if tr.flags.expansion_invalid {
        t.notes.push("warning: |Z| exceeded L/10, integration stopped".into());
    }
    for i in (0..tr.len()).step_by(every) {
        t.push(vec![tr.times[i], tr.z[i], tr.zdot[i]]);
    }
    t
}

pub fn cooling_evolve(a: &CoolingEvolveArgs) -> Result<(), CliError> {
    let why = "cooling-evolve";
    let mut sc = Scenario::load(&a.config)?;
    let l = need(sc.grid.length, "grid.length", why)?;
    let setup = cooling_setup(&sc, l, why)?;
    let it = &mut sc.integrator;
    if let Some(t) = a.t_end {
        it.t_end = Some(t);
    }
    if let Some(dt) = a.dt {
        it.dt = Some(dt);
    }
    if let Some(m) = a.method {
        it.method = Some(
            match m {
                CoolingMethod::Averaged => "averaged",
                CoolingMethod::Full => "full",
            }
            .into(),
        );
    }
    let method = it.method.clone().unwrap_or_else(|| "averaged".into());
    it.method = Some(method.clone());
    let t_end = need(it.t_end, "integrator.t_end", why)?;
    let dt = need(it.dt, "integrator.dt", why)?;
    let (z0, v0, every) = (it.z0, it.v0, it.record_every);
    let prov = Provenance::new("cooling-evolve", sc.echo());
    let t = match method.as_str() {
        "averaged" => {
            let c = cooling_coefficients(&setup)?;
            trajectory_table(&evolve_averaged(&setup, &c, z0, v0, t_end, dt)?, every)
        }
        "full" => {
            let mut o = FullDelayOptions::new(z0, v0, t_end, dt);
            o.record_every = every;
            trajectory_table(&evolve_full_delay(&setup, &o)?, 1)
        }
        other => {
            return Err(CliError::config(
                "integrator.method",
                format!("{other:?} is not a cooling method (averaged, full)"),
            ))
        }
    };
    finish(&t, &prov, &a.output)
}

pub fn evolve(a: &EvolveArgs) -> Result<(), CliError> {
    let why = "evolve";
    let mut sc = Scenario::load(&a.config)?;
    if let Some(t) = a.t_end {
        sc.integrator.t_end = Some(t);
    }
    if let Some(dt) = a.dt {
        sc.integrator.dt = Some(dt);
    }
    let method = sc.integrator.method.clone().unwrap_or_else(|| "relativistic".into());
    let relativistic = match method.as_str() {
        "relativistic" => true,
        "nonrel" => false,
        other => {
            return Err(CliError::config(
                "integrator.method",
                format!("{other:?} is not a lattice stepper (relativistic, nonrel)"),
            ))
        }
    };
    sc.integrator.method = Some(method);
    let g = &sc.grid;
    let grid =
        Grid::new(need(g.x_min, "grid.x_min", why)?, need(g.x_max, "grid.x_max", why)?, need(g.dx, "grid.dx", why)?)?;
    let boundary = match g.boundary.as_deref().unwrap_or("absorbing") {
        "dirichlet" => Boundary::Dirichlet,
        _ => Boundary::Absorbing,
    };
    sc.grid.boundary = Some(if boundary == Boundary::Dirichlet { "dirichlet" } else { "absorbing" }.into());
    let t_end = need(sc.integrator.t_end, "integrator.t_end", why)?;
    let dt = need(sc.integrator.dt, "integrator.dt", why)?;
    let every = sc.integrator.record_every;

    let mut state = SimState::new(grid, (boundary, boundary));
    for (i, ms) in sc.mirrors.iter().enumerate() {
        let cfg = mirror_config(ms, sc.units)?;
        let mut m =
            if ms.pinned { LatticeMirror::pinned(cfg, ms.position) } else { LatticeMirror::new(cfg, ms.position) };
        m.q = ms.q0;
        if !ms.pinned && ms.velocity != 0.0 {
            let inertia = if relativistic { effective_mass(m.q, m.p, 0.0, &cfg) } else { cfg.mass() };
            let gamma = if relativistic { 1.0 / (1.0 - ms.velocity * ms.velocity).sqrt() } else { 1.0 };
            m.big_p = inertia * ms.velocity * gamma;
        }
        state.add_mirror(m).map_err(|e| CliError::config(&format!("mirrors[{i}].position"), e.to_string()))?;
    }
    if let Some(d) = &sc.drive {
        let x_s = need(d.source_x, "drive.source_x", why)?;
        state.drive = Some(LatticeDrive::new(d.amplitude, sc.units.to_angular(d.omega_d), SourceProfile::Point(x_s)));
    }
    let prov = Provenance::new("evolve", sc.echo());

    let mut columns = vec!["t".to_string()];
    for i in 0..state.mirrors.len() {
        columns.extend([format!("z{i}"), format!("p_z{i}"), format!("q{i}")]);
    }
    columns.push("energy".into());
    let mut t = Table::new(columns);
    t.notes.push(format!(
        "stepper: {}; energy is {}",
        if relativistic { "relativistic" } else { "nonrelativistic" },
        if relativistic {
            "the relativistic Hamiltonian (rest mass included)"
        } else {
            "field + mirosc + kinetic + trap"
        }
    ));
    let record = |s: &SimState, t: &mut Table| {
        let mut row = vec![s.t];
        for m in &s.mirrors {
            row.extend([m.z, m.big_p, m.q]);
        }
        row.push(if relativistic { s.relativistic_hamiltonian() } else { s.nonrel_energy() });
        t.push(row);
    };
    // the bound runaway solution of each mirror is projected out; its shape follows the
    // mirror's cell offset, so the basis is rebuilt once a mirror has moved dx/8. Whether
    // anything binds at all varies only on the scale of the box, so an empty set is
    // rechecked after 16 cells.
    let find = |s: &SimState| -> Result<(RunawayModes, Vec<f64>, usize), CliError> {
        let mut pinned = s.clone();
        pinned.mirrors.iter_mut().for_each(|m| m.pinned = true);
        let modes = find_runaway_modes(&pinned, dt, &RunawayOptions::default())?;
        let interval = modes.interval(dt, 1.0);
        Ok((modes, s.mirrors.iter().map(|m| m.z).collect(), interval))
    };
    let mut runaway = if a.keep_runaway { None } else { Some(find(&state)?) };
    t.notes.push(if a.keep_runaway { "runaway solutions kept" } else { "runaway solutions projected out" }.into());
    if let Some((modes, _, _)) = &runaway {
        modes.project(&mut state);
    }
    record(&state, &mut t);
    let steps = (t_end / dt).round() as usize;
    for i in 0..steps {
        if let Some((modes, zs, interval)) = &mut runaway {
            let reach = if modes.is_empty() { 16.0 } else { 0.125 } * state.grid.dx;
            let moved = state.mirrors.iter().zip(zs.iter()).any(|(m, z)| (m.z - z).abs() > reach);
            if moved {
                (*modes, *zs, *interval) = find(&state)?;
            }
            if moved || i % *interval == 0 {
                modes.project(&mut state);
            }
        }
        if relativistic {
            step_relativistic(&mut state, dt, None)?;
        } else {
            step_nonrel(&mut state, dt)?;
        }
        if (i + 1) % every == 0 {
            record(&state, &mut t);
        }
    }
    if let Some(path) = &a.field {
        let mut body = Vec::new();
        write_field_csv(&state, &mut body, true)?;
        let mut text = prov.header(&[]);
        text.push_str(&String::from_utf8(body).expect("csv is utf-8"));
        write_atomic(path, &text)?;
    }
    if let Some(path) = &a.checkpoint {
        let mut bytes = Vec::new();
        save_checkpoint(&state, &mut bytes)?;
        let tmp = with_suffix(path, ".partial");
        std::fs::write(&tmp, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    finish(&t, &prov, &a.output)
}

pub fn scatter_packet(a: &PacketArgs) -> Result<(), CliError> {
    let units = Units::from(a.units);
    let p = MiroscParams::new(a.m, units.to_angular(a.omega), a.lambda)?;
    let w0 = units.to_angular(a.omega0);
    let sigma = a.sigma.unwrap_or_else(|| f64::max(30.0, 25.0 / w0));
    let mut grid = ScatterGrid::new(a.dx);
    grid.courant = a.courant;
    let pk = WavePacket::new(grid.mirror_z - 5.3 * sigma, sigma, w0, 1, 1.0)?;
    let r = scatter_wavepacket(&p, &pk, &grid)?;
    let mut echo = serde_json::to_value(a).expect("args serialize");
    echo["sigma"] = json!(sigma);
    let prov = Provenance::new("scatter-packet", echo);
    let mut t = Table::new([
        "omega0",
        "sigma",
        "dx",
        "reflected",
        "transmitted",
        "residual",
        "balance_error",
        "closed_form_r2",
        "spectrum_avg_r2",
    ]);
    t.notes.push(format!("omega0 in {}; energy fractions measured at t = {}", units_name(units), r.t_measure));
    t.push(vec![
        a.omega0,
        sigma,
        a.dx,
        r.reflected,
        r.transmitted,
        r.residual,
        r.balance_error,
        mof_scatter(&p, w0)?.reflectance(),
        packet_expected_reflectance(&p, &pk)?,
    ]);
    finish(&t, &prov, &a.output)
}

pub fn qbm_export(a: &QbmArgs) -> Result<(), CliError> {
    let why = "qbm-export";
    let sc = Scenario::load(&a.config)?;
    sc.need_mirrors(1, why)?;
    let x = need(sc.grid.box_size, "grid.box_size", why)?;
    let cutoff = sc.units.to_angular(need(sc.grid.cutoff, "grid.cutoff", why)?);
    let count = sc.grid.n_modes.unwrap_or(usize::MAX);
    let mirrors = sc
        .mirrors
        .iter()
        .map(|m| Ok((mirror_config(m, sc.units)?, m.position)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let ex = if a.slow {
        export_slow_motion(&mirrors, x, cutoff, count)?
    } else {
        export_static(&mirrors, x, cutoff, count)?
    };
    let mut echo = sc.echo();
    echo["slow"] = json!(a.slow);
    let prov = Provenance::new("qbm-export", echo);
    let mut text = prov.header(&[]);
    text.push_str(&ex.to_text());
    write_atomic(&a.output, &text)?;
    write_echo(&a.output, &prov)
}
