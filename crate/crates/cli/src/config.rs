//! JSON scenario files.
//!
//! Top-level keys: `units` (required), `mirrors`, `drive`, `grid`, `integrator`,
//! `outputs`, `seed`. Unknown keys are rejected so typos do not silently fall back to
//! defaults. Frequencies (`omega`, `trap_omega0`, `omega_d`) are read in the declared
//! units and converted to rad/s; everything else is taken as given (c = 1).

use std::f64::consts::TAU;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    RadPerS,
    Hz,
}

impl Units {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rad_per_s" => Some(Units::RadPerS),
            "hz" => Some(Units::Hz),
            _ => None,
        }
    }

    /// User value to rad/s.
    pub fn to_angular(self, f: f64) -> f64 {
        match self {
            Units::RadPerS => f,
            Units::Hz => TAU * f,
        }
    }

    /// rad/s back to the user's units.
    pub fn in_units(self, w: f64) -> f64 {
        match self {
            Units::RadPerS => w,
            Units::Hz => w / TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorSpec {
    pub m: f64,
    pub omega: f64,
    pub lambda: f64,
    pub mass: f64,
    pub position: f64,
    /// `None` is a free mirror.
    pub trap_omega0: Option<f64>,
    pub pinned: bool,
    pub velocity: f64,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveSpec {
    pub amplitude: f64,
    pub omega_d: f64,
    /// Point-source position for lattice runs.
    pub source_x: Option<f64>,
}

/// Geometry and sampling. Each subcommand requires the subset it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GridSpec {
    pub length: Option<f64>,
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub n_lengths: Option<usize>,
    pub box_size: Option<f64>,
    pub n_modes: Option<usize>,
    pub cutoff: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub dx: Option<f64>,
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntegratorSpec {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub method: Option<String>,
    pub record_every: usize,
    pub z0: f64,
    pub v0: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutputSpec {
    pub gnuplot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub units: Units,
    pub mirrors: Vec<MirrorSpec>,
    pub drive: Option<DriveSpec>,
    pub grid: GridSpec,
    pub integrator: IntegratorSpec,
    pub outputs: OutputSpec,
    pub seed: u64,
}

/// A JSON object being read, with its key path for error messages.
struct Obj<'a> {
    map: &'a Map<String, Value>,
    path: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, path: String) -> Result<Self, CliError> {
        match v.as_object() {
            Some(map) => Ok(Self { map, path }),
            None => Err(CliError::config(&path, "must be an object")),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<(), CliError> {
        match self.map.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => {
                Err(CliError::config(&self.key(k), format!("unknown key (expected one of: {})", keys.join(", "))))
            }
            None => Ok(()),
        }
    }

    fn opt_f64(&self, k: &str) -> Result<Option<f64>, CliError> {
        match self.map.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(CliError::config(&self.key(k), "must be a finite number")),
            },
        }
    }

    fn f64(&self, k: &str) -> Result<f64, CliError> {
        self.opt_f64(k)?.ok_or_else(|| CliError::config(&self.key(k), "required"))
    }

    fn opt_usize(&self, k: &str) -> Result<Option<usize>, CliError> {
        match self.map.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .map(Some)
                .ok_or_else(|| CliError::config(&self.key(k), "must be a non-negative integer")),
        }
    }

    fn opt_bool(&self, k: &str) -> Result<Option<bool>, CliError> {
        match self.map.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_bool().map(Some).ok_or_else(|| CliError::config(&self.key(k), "must be true or false")),
        }
    }

    fn opt_str(&self, k: &str, choices: &[&str]) -> Result<Option<String>, CliError> {
        match self.map.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) if choices.contains(&s.as_str()) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::config(&self.key(k), format!("must be one of: {}", choices.join(", ")))),
        }
    }

    fn child(&self, k: &str) -> Result<Option<Obj<'a>>, CliError> {
        match self.map.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => Obj::new(v, self.key(k)).map(Some),
        }
    }
}

fn positive(path: &str, what: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(CliError::config(path, format!("{what} must be > 0 (got {x})")))
    }
}

fn non_negative(path: &str, what: &str, x: f64) -> Result<f64, CliError> {
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(CliError::config(path, format!("{what} must be >= 0 (got {x})")))
    }
}

fn mirror(o: &Obj) -> Result<MirrorSpec, CliError> {
    o.allow(&["m", "omega", "lambda", "mass", "position", "trap_omega0", "pinned", "velocity", "q0"])?;
    let m = positive(&o.key("m"), "mirosc mass m", o.f64("m")?)?;
    let omega = positive(&o.key("omega"), "mirosc frequency", o.f64("omega")?)?;
    let lambda = non_negative(&o.key("lambda"), "coupling lambda", o.f64("lambda")?)?;
    let mass = positive(&o.key("mass"), "mirror mass M", o.opt_f64("mass")?.unwrap_or(1.0))?;
    let trap_omega0 = match o.opt_f64("trap_omega0")? {
        Some(w) => Some(non_negative(&o.key("trap_omega0"), "trap frequency", w)?),
        None => None,
    };
    let velocity = o.opt_f64("velocity")?.unwrap_or(0.0);
    if velocity.abs() >= 1.0 {
        return Err(CliError::config(&o.key("velocity"), format!("|v| must be < 1 (got {velocity})")));
    }
    Ok(MirrorSpec {
        m,
        omega,
        lambda,
        mass,
        position: o.opt_f64("position")?.unwrap_or(0.0),
        trap_omega0,
        pinned: o.opt_bool("pinned")?.unwrap_or(false),
        velocity,
        q0: o.opt_f64("q0")?.unwrap_or(0.0),
    })
}

fn grid(o: &Obj) -> Result<GridSpec, CliError> {
    o.allow(&[
        "length",
        "l_min",
        "l_max",
        "n_lengths",
        "box_size",
        "n_modes",
        "cutoff",
        "x_min",
        "x_max",
        "dx",
        "boundary",
    ])?;
    let pos =
        |k: &str| -> Result<Option<f64>, CliError> { o.opt_f64(k)?.map(|x| positive(&o.key(k), k, x)).transpose() };
    let g = GridSpec {
        length: pos("length")?,
        l_min: pos("l_min")?,
        l_max: pos("l_max")?,
        n_lengths: o.opt_usize("n_lengths")?,
        box_size: pos("box_size")?,
        n_modes: o.opt_usize("n_modes")?,
        cutoff: pos("cutoff")?,
        x_min: o.opt_f64("x_min")?,
        x_max: o.opt_f64("x_max")?,
        dx: pos("dx")?,
        boundary: o.opt_str("boundary", &["absorbing", "dirichlet"])?,
    };
    if let (Some(a), Some(b)) = (g.l_min, g.l_max) {
        if b < a {
            return Err(CliError::config(&o.key("l_max"), format!("must be >= grid.l_min (got {b} < {a})")));
        }
    }
    if let (Some(a), Some(b)) = (g.x_min, g.x_max) {
        if b <= a {
            return Err(CliError::config(&o.key("x_max"), format!("must be > grid.x_min (got {b} <= {a})")));
        }
    }
    if let (Some(l), Some(x)) = (g.length, g.box_size) {
        if x <= l {
            return Err(CliError::config(&o.key("box_size"), format!("must exceed grid.length (got {x} <= {l})")));
        }
    }
    Ok(g)
}

fn integrator(o: &Obj) -> Result<IntegratorSpec, CliError> {
    o.allow(&["dt", "t_end", "method", "record_every", "z0", "v0"])?;
    let dt = o.opt_f64("dt")?.map(|x| positive(&o.key("dt"), "dt", x)).transpose()?;
    let t_end = o.opt_f64("t_end")?.map(|x| non_negative(&o.key("t_end"), "t_end", x)).transpose()?;
    let record_every = o.opt_usize("record_every")?.unwrap_or(1);
    if record_every == 0 {
        return Err(CliError::config(&o.key("record_every"), "must be >= 1"));
    }
    Ok(IntegratorSpec {
        dt,
        t_end,
        method: o.opt_str("method", &["averaged", "full", "relativistic", "nonrel"])?,
        record_every,
        z0: o.opt_f64("z0")?.unwrap_or(0.0),
        v0: o.opt_f64("v0")?.unwrap_or(0.0),
    })
}

impl Scenario {
    pub fn from_value(v: &Value) -> Result<Self, CliError> {
        let root = Obj::new(v, String::new())?;
        root.allow(&["units", "mirrors", "drive", "grid", "integrator", "outputs", "seed"])?;
        let units = match root.map.get("units") {
            None => return Err(CliError::config("units", "required (\"rad_per_s\" or \"hz\")")),
            Some(Value::String(s)) => Units::parse(s)
                .ok_or_else(|| CliError::config("units", format!("must be \"rad_per_s\" or \"hz\" (got {s:?})")))?,
            Some(_) => return Err(CliError::config("units", "must be a string")),
        };
        let mirrors = match root.map.get("mirrors") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, item)| mirror(&Obj::new(item, format!("mirrors[{i}]"))?))
                .collect::<Result<_, _>>()?,
            Some(_) => return Err(CliError::config("mirrors", "must be an array")),
        };
        let drive = match root.child("drive")? {
            Some(o) => {
                o.allow(&["amplitude", "omega_d", "source_x"])?;
                Some(DriveSpec {
                    amplitude: o.f64("amplitude")?,
                    omega_d: positive(&o.key("omega_d"), "pump frequency", o.f64("omega_d")?)?,
                    source_x: o.opt_f64("source_x")?,
                })
            }
            None => None,
        };
        let grid = root.child("grid")?.map(|o| grid(&o)).transpose()?.unwrap_or_default();
        let integrator = match root.child("integrator")? {
            Some(o) => integrator(&o)?,
            None => IntegratorSpec { record_every: 1, ..Default::default() },
        };
        let outputs = match root.child("outputs")? {
            Some(o) => {
                o.allow(&["gnuplot"])?;
                OutputSpec { gnuplot: o.opt_bool("gnuplot")?.unwrap_or(false) }
            }
            None => OutputSpec::default(),
        };
        let seed = match root.map.get("seed") {
            None | Some(Value::Null) => 0,
            Some(v) => v.as_u64().ok_or_else(|| CliError::config("seed", "must be a non-negative integer"))?,
        };
        Ok(Scenario { units, mirrors, drive, grid, integrator, outputs, seed })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::config("", format!("malformed JSON: {e}")))?;
        Self::from_value(&v)
    }

    /// The resolved scenario with every default filled in.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("scenario serializes");
        if let Some(ms) = v.get_mut("mirrors").and_then(Value::as_array_mut) {
            for m in ms {
                if m.get("trap_omega0").is_some_and(Value::is_null) {
                    m["trap_omega0"] = Value::String("free".into());
                }
            }
        }
        v
    }

    pub fn need_mirrors(&self, n: usize, why: &str) -> Result<&[MirrorSpec], CliError> {
        if self.mirrors.len() < n {
            return Err(CliError::config(
                "mirrors",
                format!("{why} needs at least {n} mirror(s), got {}", self.mirrors.len()),
            ));
        }
        Ok(&self.mirrors[..n])
    }

    pub fn need_drive(&self, why: &str) -> Result<&DriveSpec, CliError> {
        self.drive.as_ref().ok_or_else(|| CliError::config("drive", format!("required by {why}")))
    }
}

/// `grid.<key>` or a "required by" error.
pub fn need<T: Copy>(value: Option<T>, key: &str, why: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(key, format!("required by {why}")))
}
