//! Run configuration: a sectioned key-value (TOML) file.
//!
//! ```toml
//! mode = "sweep"            # ym-evolve | tau | double-slit | sweep
//! master_seed = 42
//! output_dir = "out"
//!
//! [lattice]                 # ym-evolve, and tau with enl_from_lattice
//! [collapse]                # tau, double-slit, sweep
//! [double_slit]             # double-slit, sweep
//! [sweep]                   # sweep
//! ```
//!
//! Every key of every section is listed in [`LATTICE_KEYS`] and friends;
//! unknown sections and keys are errors. Validation reports every problem
//! found, not just the first. [`RunConfig::to_toml`] emits the canonical
//! form with all defaults filled in, and parsing it yields the same config.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use toml::{Table, Value};

use crate::collapse::{CollapseParams, HbarUnits, IntervalMode, RateSource, LAMBDA_QCD_GEV};
use crate::experiments::{DoubleSlitGeometry, GridBinding};
use crate::gauge_algebra::{GaugeGroup, GroupKind};
use crate::ym_lattice::{LatticeError, LatticeSpec};

/// `ħc` in GeV·fm, for converting lattice energies with a spacing in fm.
pub const HBARC_GEV_FM: f64 = 0.197_326_980_4;

pub const TOP_KEYS: &[&str] = &["mode", "master_seed", "output_dir"];
pub const LATTICE_KEYS: &[&str] = &[
    "group",
    "spatial_dims",
    "sites_per_dim",
    "spacing",
    "coupling",
    "dt",
    "steps",
    "record_every",
    "amplitude",
    "wave_amplitude",
    "modes",
    "snapshot",
];
pub const COLLAPSE_KEYS: &[&str] = &[
    "hbar_units",
    "rate",
    "lambda_t",
    "enl_gev",
    "enl_from_lattice",
    "lattice_spacing_fm",
    "r_c",
    "interval_mode",
];
pub const DOUBLE_SLIT_KEYS: &[&str] = &[
    "grid_points",
    "dx",
    "mass",
    "hbar",
    "slit_separation",
    "slit_width",
    "flight_time",
    "min_steps",
    "trajectories",
    "workers",
    "hit_log",
];
pub const SWEEP_KEYS: &[&str] = &["rates", "lambda_t"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("lattice", LATTICE_KEYS),
    ("collapse", COLLAPSE_KEYS),
    ("double_slit", DOUBLE_SLIT_KEYS),
    ("sweep", SWEEP_KEYS),
];

/// All validation problems of one configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    YmEvolve,
    Tau,
    DoubleSlit,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::YmEvolve => "ym-evolve",
            Mode::Tau => "tau",
            Mode::DoubleSlit => "double-slit",
            Mode::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ym-evolve" => Ok(Mode::YmEvolve),
            "tau" => Ok(Mode::Tau),
            "double-slit" => Ok(Mode::DoubleSlit),
            "sweep" => Ok(Mode::Sweep),
            _ => Err(format!(
                "unknown mode `{s}` (expected ym-evolve, tau, double-slit or sweep)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeConfig {
    pub group: GroupKind,
    pub spatial_dims: usize,
    pub sites_per_dim: usize,
    pub spacing: f64,
    pub coupling: f64,
    pub dt: f64,
    pub steps: u64,
    pub record_every: u64,
    /// Homogeneous amplitude of the constraint-satisfying initial data.
    pub amplitude: f64,
    pub wave_amplitude: f64,
    pub modes: usize,
    /// Write the final configuration as a text snapshot.
    pub snapshot: bool,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            group: GroupKind::SU2,
            spatial_dims: 1,
            sites_per_dim: 16,
            spacing: 1.0,
            coupling: 1.0,
            dt: 0.01,
            steps: 1000,
            record_every: 1,
            amplitude: 0.1,
            wave_amplitude: 0.002,
            modes: 1,
            snapshot: false,
        }
    }
}

impl LatticeConfig {
    pub fn spec(&self) -> Result<LatticeSpec, LatticeError> {
        LatticeSpec::new(
            GaugeGroup::new(self.group),
            self.spatial_dims,
            self.sites_per_dim,
            self.spacing,
            self.coupling,
            self.dt,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TauSource {
    /// `E_NL` in the energy unit of `hbar_units` (GeV when physical).
    Energy(f64),
    Rate(f64),
    /// `E_NL` measured on a lattice run, converted with `ħc / a`.
    Lattice {
        lattice: LatticeConfig,
        spacing_fm: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauConfig {
    pub hbar_units: HbarUnits,
    pub source: TauSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub geometry: DoubleSlitGeometry,
    pub trajectories: usize,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    pub hit_log: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleSlitConfig {
    pub ensemble: EnsembleConfig,
    pub collapse: CollapseParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ensemble: EnsembleConfig,
    /// `r_C` and interval mode shared by every row.
    pub template: CollapseParams,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeConfig {
    YmEvolve(LatticeConfig),
    Tau(TauConfig),
    DoubleSlit(DoubleSlitConfig),
    Sweep(SweepConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub mode: ModeConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub master_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub trajectories: Option<usize>,
}

impl RunConfig {
    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeConfig::YmEvolve(_) => Mode::YmEvolve,
            ModeConfig::Tau(_) => Mode::Tau,
            ModeConfig::DoubleSlit(_) => Mode::DoubleSlit,
            ModeConfig::Sweep(_) => Mode::Sweep,
        }
    }

    /// Canonical TOML text with every effective value spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables always serialize")
    }

    pub fn to_table(&self) -> Table {
        let mut top = Table::new();
        top.insert("mode".into(), self.mode().name().into());
        top.insert("master_seed".into(), Value::Integer(self.master_seed as i64));
        top.insert(
            "output_dir".into(),
            self.output_dir.to_string_lossy().into_owned().into(),
        );
        match &self.mode {
            ModeConfig::YmEvolve(l) => {
                top.insert("lattice".into(), lattice_table(l).into());
            }
            ModeConfig::Tau(t) => {
                let mut c = Table::new();
                c.insert("hbar_units".into(), t.hbar_units.name().into());
                match &t.source {
                    TauSource::Energy(e) => {
                        c.insert("enl_gev".into(), (*e).into());
                    }
                    TauSource::Rate(r) => {
                        c.insert("rate".into(), (*r).into());
                    }
                    TauSource::Lattice {
                        lattice,
                        spacing_fm,
                    } => {
                        c.insert("enl_from_lattice".into(), true.into());
                        c.insert("lattice_spacing_fm".into(), (*spacing_fm).into());
                        top.insert("lattice".into(), lattice_table(lattice).into());
                    }
                }
                top.insert("collapse".into(), c.into());
            }
            ModeConfig::DoubleSlit(d) => {
                let mut c = collapse_table(&d.collapse);
                if let RateSource::FixedRate(r) = d.collapse.rate_source {
                    c.insert("rate".into(), r.into());
                }
                top.insert("collapse".into(), c.into());
                top.insert("double_slit".into(), ensemble_table(&d.ensemble).into());
            }
            ModeConfig::Sweep(s) => {
                top.insert("collapse".into(), collapse_table(&s.template).into());
                top.insert("double_slit".into(), ensemble_table(&s.ensemble).into());
                let mut sw = Table::new();
                sw.insert(
                    "rates".into(),
                    Value::Array(s.rates.iter().map(|&r| Value::Float(r)).collect()),
                );
                top.insert("sweep".into(), sw.into());
            }
        }
        top
    }
}

fn lattice_table(l: &LatticeConfig) -> Table {
    let mut t = Table::new();
    t.insert("group".into(), l.group.name().into());
    t.insert("spatial_dims".into(), Value::Integer(l.spatial_dims as i64));
    t.insert("sites_per_dim".into(), Value::Integer(l.sites_per_dim as i64));
    t.insert("spacing".into(), l.spacing.into());
    t.insert("coupling".into(), l.coupling.into());
    t.insert("dt".into(), l.dt.into());
    t.insert("steps".into(), Value::Integer(l.steps as i64));
    t.insert("record_every".into(), Value::Integer(l.record_every as i64));
    t.insert("amplitude".into(), l.amplitude.into());
    t.insert("wave_amplitude".into(), l.wave_amplitude.into());
    t.insert("modes".into(), Value::Integer(l.modes as i64));
    t.insert("snapshot".into(), l.snapshot.into());
    t
}

fn collapse_table(c: &CollapseParams) -> Table {
    let mut t = Table::new();
    t.insert("hbar_units".into(), c.hbar_units.name().into());
    t.insert("r_c".into(), c.r_c.into());
    t.insert("interval_mode".into(), c.interval_mode.name().into());
    t
}

fn ensemble_table(e: &EnsembleConfig) -> Table {
    let g = &e.geometry;
    let mut t = Table::new();
    t.insert("grid_points".into(), Value::Integer(g.grid.points as i64));
    t.insert("dx".into(), g.grid.dx.into());
    t.insert("mass".into(), g.grid.mass.into());
    t.insert("hbar".into(), g.grid.hbar.into());
    t.insert("slit_separation".into(), g.slit_separation.into());
    t.insert("slit_width".into(), g.slit_width.into());
    t.insert("flight_time".into(), g.flight_time.into());
    t.insert("min_steps".into(), Value::Integer(g.min_steps as i64));
    t.insert("trajectories".into(), Value::Integer(e.trajectories as i64));
    t.insert("workers".into(), Value::Integer(e.workers as i64));
    t.insert("hit_log".into(), e.hit_log.into());
    t
}

/// Typed reads from one section, accumulating errors.
struct Reader<'a> {
    section: &'static str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn path(&self, key: &str) -> String {
        if self.section.is_empty() {
            format!("`{key}`")
        } else {
            format!("`{}.{key}`", self.section)
        }
    }

    fn has(&self, key: &str) -> bool {
        self.table.is_some_and(|t| t.contains_key(key))
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            other => {
                let msg = format!("{} must be a number (got {})", self.path(key), other.type_str());
                self.errors.push(msg);
                None
            }
        }
    }

    fn float_or(&mut self, key: &str, default: f64) -> f64 {
        self.float(key).unwrap_or(default)
    }

    fn uint(&mut self, key: &str) -> Option<u64> {
        match self.raw(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            other => {
                let msg = format!(
                    "{} must be a non-negative integer (got {other})",
                    self.path(key)
                );
                self.errors.push(msg);
                None
            }
        }
    }

    fn uint_or(&mut self, key: &str, default: u64) -> u64 {
        self.uint(key).unwrap_or(default)
    }

    fn boolean_or(&mut self, key: &str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                let msg = format!("{} must be true or false (got {other})", self.path(key));
                self.errors.push(msg);
                default
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<&'a str> {
        match self.raw(key)? {
            Value::String(s) => Some(s.as_str()),
            other => {
                let msg = format!("{} must be a string (got {other})", self.path(key));
                self.errors.push(msg);
                None
            }
        }
    }

    fn parsed_or<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        match self.string(key) {
            None => default,
            Some(s) => match s.parse() {
                Ok(v) => v,
                Err(e) => {
                    let msg = format!("{}: {e}", self.path(key));
                    self.errors.push(msg);
                    default
                }
            },
        }
    }

    fn float_list(&mut self, key: &str) -> Option<Vec<f64>> {
        match self.raw(key)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v {
                        Value::Float(f) => out.push(*f),
                        Value::Integer(i) => out.push(*i as f64),
                        other => {
                            let msg = format!("{} entries must be numbers (got {other})", self.path(key));
                            self.errors.push(msg);
                            return None;
                        }
                    }
                }
                Some(out)
            }
            other => {
                let msg = format!("{} must be a list of numbers (got {other})", self.path(key));
                self.errors.push(msg);
                None
            }
        }
    }

    fn error(&mut self, msg: String) {
        self.errors.push(msg);
    }
}

fn section<'a>(root: &'a Table, name: &str, errors: &mut Vec<String>) -> Option<&'a Table> {
    match root.get(name) {
        None => None,
        Some(Value::Table(t)) => Some(t),
        Some(_) => {
            errors.push(format!("`{name}` must be a section ([{name}])"));
            None
        }
    }
}

fn check_unknown_keys(root: &Table, errors: &mut Vec<String>) {
    for (key, value) in root {
        if TOP_KEYS.contains(&key.as_str()) {
            continue;
        }
        match SECTIONS.iter().find(|(name, _)| name == key) {
            Some((name, allowed)) => {
                if let Value::Table(t) = value {
                    for k in t.keys() {
                        if !allowed.contains(&k.as_str()) {
                            errors.push(format!("unknown key `{name}.{k}`"));
                        }
                    }
                }
            }
            None if value.is_table() => errors.push(format!("unknown section [{key}]")),
            None => errors.push(format!("unknown key `{key}`")),
        }
    }
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_with(text, &Overrides::default())
}

/// Parses configuration text, applying command-line overrides before
/// validation.
pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigErrors> {
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors(vec![format!("syntax: {e}")]))?;
    apply_overrides(&mut root, overrides);
    from_table(&root)
}

fn apply_overrides(root: &mut Table, o: &Overrides) {
    if let Some(m) = o.mode {
        root.insert("mode".into(), m.name().into());
    }
    if let Some(s) = o.master_seed {
        // out-of-range seeds are reported by validation
        let v = i64::try_from(s).map(Value::Integer).unwrap_or_else(|_| s.to_string().into());
        root.insert("master_seed".into(), v);
    }
    if let Some(d) = &o.output_dir {
        root.insert("output_dir".into(), d.to_string_lossy().into_owned().into());
    }
    if let Some(n) = o.trajectories {
        let entry = root
            .entry("double_slit")
            .or_insert_with(|| Value::Table(Table::new()));
        if let Value::Table(t) = entry {
            t.insert("trajectories".into(), Value::Integer(n as i64));
        }
    }
}

pub fn from_table(root: &Table) -> Result<RunConfig, ConfigErrors> {
    let mut errors = Vec::new();
    check_unknown_keys(root, &mut errors);

    let mut top = Reader {
        section: "",
        table: Some(root),
        errors: &mut errors,
    };
    let mode = match top.string("mode") {
        Some(s) => match s.parse::<Mode>() {
            Ok(m) => Some(m),
            Err(e) => {
                top.error(e);
                None
            }
        },
        None => {
            if !top.has("mode") {
                top.error("missing required key `mode`".into());
            }
            None
        }
    };
    let master_seed = match top.raw("master_seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(other) => {
            top.error(format!(
                "`master_seed` must be an integer in 0..={} (got {other})",
                i64::MAX
            ));
            0
        }
    };
    let output_dir = PathBuf::from(top.string("output_dir").unwrap_or("out"));

    let lattice_t = section(root, "lattice", &mut errors);
    let collapse_t = section(root, "collapse", &mut errors);
    let slit_t = section(root, "double_slit", &mut errors);
    let sweep_t = section(root, "sweep", &mut errors);

    let mode_config = match mode {
        None => None,
        Some(Mode::YmEvolve) => Some(ModeConfig::YmEvolve(read_lattice(lattice_t, &mut errors))),
        Some(Mode::Tau) => Some(ModeConfig::Tau(read_tau(collapse_t, lattice_t, &mut errors))),
        Some(Mode::DoubleSlit) => {
            let ensemble = read_ensemble(slit_t, &mut errors);
            let collapse = read_collapse(collapse_t, &ensemble.geometry, true, &mut errors);
            Some(ModeConfig::DoubleSlit(DoubleSlitConfig { ensemble, collapse }))
        }
        Some(Mode::Sweep) => {
            let ensemble = read_ensemble(slit_t, &mut errors);
            let template = read_collapse(collapse_t, &ensemble.geometry, false, &mut errors);
            let rates = read_rates(sweep_t, &ensemble.geometry, &mut errors);
            Some(ModeConfig::Sweep(SweepConfig {
                ensemble,
                template,
                rates,
            }))
        }
    };

    match mode_config {
        Some(mode) if errors.is_empty() => Ok(RunConfig {
            master_seed,
            output_dir,
            mode,
        }),
        _ => Err(ConfigErrors(errors)),
    }
}

fn read_lattice(t: Option<&Table>, errors: &mut Vec<String>) -> LatticeConfig {
    let d = LatticeConfig::default();
    let mut r = Reader {
        section: "lattice",
        table: t,
        errors,
    };
    let cfg = LatticeConfig {
        group: r.parsed_or("group", d.group),
        spatial_dims: r.uint_or("spatial_dims", d.spatial_dims as u64) as usize,
        sites_per_dim: r.uint_or("sites_per_dim", d.sites_per_dim as u64) as usize,
        spacing: r.float_or("spacing", d.spacing),
        coupling: r.float_or("coupling", d.coupling),
        dt: r.float_or("dt", d.dt),
        steps: r.uint_or("steps", d.steps),
        record_every: r.uint_or("record_every", d.record_every),
        amplitude: r.float_or("amplitude", d.amplitude),
        wave_amplitude: r.float_or("wave_amplitude", d.wave_amplitude),
        modes: r.uint_or("modes", d.modes as u64) as usize,
        snapshot: r.boolean_or("snapshot", d.snapshot),
    };
    if let Err(e) = cfg.spec() {
        r.error(format!("[lattice]: {e}"));
    }
    if cfg.record_every == 0 {
        r.error("`lattice.record_every` must be at least 1".into());
    }
    for (key, v) in [("amplitude", cfg.amplitude), ("wave_amplitude", cfg.wave_amplitude)] {
        if !(v >= 0.0 && v.is_finite()) {
            r.error(format!("`lattice.{key}` must be finite and non-negative (got {v})"));
        }
    }
    cfg
}

fn read_tau(collapse: Option<&Table>, lattice: Option<&Table>, errors: &mut Vec<String>) -> TauConfig {
    let mut r = Reader {
        section: "collapse",
        table: collapse,
        errors,
    };
    let hbar_units = r.parsed_or("hbar_units", HbarUnits::Physical);
    let from_lattice = r.boolean_or("enl_from_lattice", false);
    let given: Vec<&str> = ["enl_gev", "rate"]
        .into_iter()
        .filter(|k| r.has(k))
        .chain(from_lattice.then_some("enl_from_lattice"))
        .collect();
    if given.len() > 1 {
        r.error(format!(
            "tau mode takes one rate source, got {}",
            given.join(", ")
        ));
    }
    for key in ["lambda_t", "r_c", "interval_mode"] {
        if r.has(key) {
            r.error(format!("`collapse.{key}` is not used in tau mode"));
        }
    }
    if !from_lattice && r.has("lattice_spacing_fm") {
        r.error("`collapse.lattice_spacing_fm` requires enl_from_lattice = true".into());
    }

    let source = if from_lattice {
        let spacing_fm = match r.float("lattice_spacing_fm") {
            Some(a) => a,
            None => {
                if !r.has("lattice_spacing_fm") {
                    r.error("missing required key `collapse.lattice_spacing_fm` (enl_from_lattice)".into());
                }
                1.0
            }
        };
        if !(spacing_fm > 0.0 && spacing_fm.is_finite()) {
            r.error(format!("`collapse.lattice_spacing_fm` must be positive (got {spacing_fm})"));
        }
        if hbar_units != HbarUnits::Physical {
            r.error("enl_from_lattice converts to GeV and needs hbar_units = \"physical\"".into());
        }
        let errors = r.errors;
        TauSource::Lattice {
            lattice: read_lattice(lattice, errors),
            spacing_fm,
        }
    } else if r.has("rate") {
        let rate = r.float("rate").unwrap_or(0.0);
        if !(rate >= 0.0 && rate.is_finite()) {
            r.error(format!("`collapse.rate` must be non-negative (got {rate})"));
        }
        TauSource::Rate(rate)
    } else {
        let enl = r.float_or("enl_gev", LAMBDA_QCD_GEV);
        if !(enl >= 0.0 && enl.is_finite()) {
            r.error(format!("`collapse.enl_gev` must be non-negative (got {enl})"));
        }
        TauSource::Energy(enl)
    };
    TauConfig { hbar_units, source }
}

fn read_ensemble(t: Option<&Table>, errors: &mut Vec<String>) -> EnsembleConfig {
    let d = DoubleSlitGeometry::default();
    let mut r = Reader {
        section: "double_slit",
        table: t,
        errors,
    };
    let grid = GridBinding {
        points: r.uint_or("grid_points", d.grid.points as u64) as usize,
        dx: r.float_or("dx", d.grid.dx),
        mass: r.float_or("mass", d.grid.mass),
        hbar: r.float_or("hbar", d.grid.hbar),
    };
    // width, separation and flight time default relative to the grid
    let slit_width = r.float_or("slit_width", 8.0 * grid.dx);
    let slit_separation = r.float_or("slit_separation", 10.0 * slit_width);
    let flight_time = r.float_or(
        "flight_time",
        grid.mass * slit_width * slit_width / grid.hbar,
    );
    let geometry = DoubleSlitGeometry {
        slit_separation,
        slit_width,
        flight_time,
        grid,
        min_steps: r.uint_or("min_steps", d.min_steps),
    };
    let trajectories = r.uint_or("trajectories", 2000) as usize;
    let workers = r.uint_or("workers", 0) as usize;
    let hit_log = r.boolean_or("hit_log", true);

    if !grid.points.is_power_of_two() || grid.points < 2 {
        r.error(format!(
            "`double_slit.grid_points` must be a power of two (got {})",
            grid.points
        ));
    }
    for (key, v) in [("dx", grid.dx), ("mass", grid.mass), ("hbar", grid.hbar)] {
        if !(v > 0.0 && v.is_finite()) {
            r.error(format!("`double_slit.{key}` must be positive (got {v})"));
        }
    }
    if let Err(e) = geometry.validate() {
        r.error(format!("[double_slit]: {e}"));
    }
    if trajectories == 0 {
        r.error("`double_slit.trajectories` must be at least 1".into());
    }
    EnsembleConfig {
        geometry,
        trajectories,
        workers,
        hit_log,
    }
}

fn read_collapse(
    t: Option<&Table>,
    geom: &DoubleSlitGeometry,
    needs_rate: bool,
    errors: &mut Vec<String>,
) -> CollapseParams {
    let mut r = Reader {
        section: "collapse",
        table: t,
        errors,
    };
    for key in ["enl_gev", "enl_from_lattice", "lattice_spacing_fm"] {
        if r.has(key) {
            r.error(format!(
                "`collapse.{key}` is only used in tau mode; ensembles take `rate` or `lambda_t`"
            ));
        }
    }
    let mut rate = 0.0;
    if needs_rate {
        match (r.has("rate"), r.has("lambda_t")) {
            (true, true) => r.error("give either `collapse.rate` or `collapse.lambda_t`, not both".into()),
            (false, false) => r.error("missing required key `collapse.rate` (or `collapse.lambda_t`)".into()),
            (true, false) => rate = r.float("rate").unwrap_or(0.0),
            (false, true) => rate = r.float("lambda_t").unwrap_or(0.0) / geom.flight_time,
        }
        if !(rate >= 0.0 && rate.is_finite()) {
            r.error(format!("collapse rate must be non-negative (got {rate})"));
        }
    } else {
        for key in ["rate", "lambda_t"] {
            if r.has(key) {
                r.error(format!("`collapse.{key}` is not used in sweep mode; list rates in [sweep]"));
            }
        }
    }
    let r_c = r.float_or("r_c", 0.1 * geom.slit_separation);
    if !(r_c > 0.0 && r_c.is_finite()) {
        r.error(format!("`collapse.r_c` must be positive (got {r_c})"));
    }
    CollapseParams {
        hbar_units: r.parsed_or("hbar_units", HbarUnits::Natural),
        rate_source: RateSource::FixedRate(rate),
        r_c,
        interval_mode: r.parsed_or("interval_mode", IntervalMode::Poisson),
    }
}

fn read_rates(t: Option<&Table>, geom: &DoubleSlitGeometry, errors: &mut Vec<String>) -> Vec<f64> {
    let mut r = Reader {
        section: "sweep",
        table: t,
        errors,
    };
    let rates = match (r.has("rates"), r.has("lambda_t")) {
        (true, true) => {
            r.error("give either `sweep.rates` or `sweep.lambda_t`, not both".into());
            Vec::new()
        }
        (false, false) => {
            r.error("missing required key `sweep.rates` (or `sweep.lambda_t`)".into());
            Vec::new()
        }
        (true, false) => r.float_list("rates").unwrap_or_default(),
        (false, true) => r
            .float_list("lambda_t")
            .unwrap_or_default()
            .into_iter()
            .map(|lt| lt / geom.flight_time)
            .collect(),
    };
    if r.has("rates") || r.has("lambda_t") {
        if rates.is_empty() && r.errors.is_empty() {
            r.error("sweep needs at least one rate".into());
        }
        if rates.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            r.error("sweep rates must be finite and non-negative".into());
        }
        if rates.windows(2).any(|w| w[0] > w[1]) {
            r.error("sweep rates must be sorted ascending".into());
        }
    }
    rates
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_tau_config() {
        let cfg = parse_config("mode = \"tau\"\n[collapse]\nenl_gev = 0.2\n").unwrap();
        assert_eq!(cfg.mode(), Mode::Tau);
        assert_eq!(
            cfg.mode,
            ModeConfig::Tau(TauConfig {
                hbar_units: HbarUnits::Physical,
                source: TauSource::Energy(0.2),
            })
        );
    }

    #[test]
    fn tau_defaults_to_qcd_scale() {
        let cfg = parse_config("mode = \"tau\"").unwrap();
        match cfg.mode {
            ModeConfig::Tau(t) => assert_eq!(t.source, TauSource::Energy(LAMBDA_QCD_GEV)),
            _ => panic!("wrong mode"),
        }
    }

    #[test]
    fn stability_guard_reported() {
        let err = parse_config("mode = \"ym-evolve\"\n[lattice]\ndt = 0.6\nspacing = 1.0\n").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].contains("stability guard"), "{err}");
    }

    #[test]
    fn all_errors_listed() {
        let text = r#"
mode = "sweep"
colour = 3
[double_slit]
trajectories = 0
gird_points = 1024
[collapse]
r_c = -1.0
[extra]
x = 1
"#;
        let err = parse_config(text).unwrap_err();
        let joined = err.0.join("\n");
        for needle in [
            "unknown key `colour`",
            "unknown key `double_slit.gird_points`",
            "unknown section [extra]",
            "trajectories` must be at least 1",
            "r_c` must be positive",
            "missing required key `sweep.rates`",
        ] {
            assert!(joined.contains(needle), "missing `{needle}` in:\n{joined}");
        }
    }

    #[test]
    fn missing_mode_reported() {
        let err = parse_config("master_seed = 3").unwrap_err();
        assert!(err.0[0].contains("missing required key `mode`"));
        assert!(parse_config("mode = \"walk\"").is_err());
    }

    #[test]
    fn round_trip_full_sweep() {
        let text = r#"
mode = "sweep"
master_seed = 99
output_dir = "runs/sweep"
[double_slit]
grid_points = 1024
trajectories = 500
workers = 2
[collapse]
interval_mode = "fixed"
[sweep]
lambda_t = [0, 0.5, 1, 2, 4]
"#;
        let cfg = parse_config(text).unwrap();
        let emitted = cfg.to_toml();
        let again = parse_config(&emitted).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), emitted);
        match &cfg.mode {
            ModeConfig::Sweep(s) => {
                assert_eq!(s.rates.len(), 5);
                assert_eq!(s.rates[2] * s.ensemble.geometry.flight_time, 1.0);
                assert_eq!(s.template.r_c, 8.0);
            }
            _ => panic!("wrong mode"),
        }
    }

    #[test]
    fn round_trip_every_mode() {
        for text in [
            "mode = \"ym-evolve\"\n[lattice]\ngroup = \"SU3\"\nsnapshot = true\n",
            "mode = \"tau\"\n[collapse]\nrate = 2.5\nhbar_units = \"natural\"\n",
            "mode = \"tau\"\n[collapse]\nenl_from_lattice = true\nlattice_spacing_fm = 0.1\n",
            "mode = \"double-slit\"\n[collapse]\nlambda_t = 1.0\n",
        ] {
            let cfg = parse_config(text).unwrap();
            assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides {
            mode: Some(Mode::DoubleSlit),
            master_seed: Some(7),
            output_dir: Some("elsewhere".into()),
            trajectories: Some(12),
        };
        let cfg = parse_config_with("mode = \"tau\"\n[collapse]\nrate = 0.0\n", &o).unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        match cfg.mode {
            ModeConfig::DoubleSlit(d) => assert_eq!(d.ensemble.trajectories, 12),
            _ => panic!("wrong mode"),
        }
    }

    #[test]
    fn seed_out_of_range_rejected() {
        let o = Overrides {
            master_seed: Some(u64::MAX),
            ..Overrides::default()
        };
        assert!(parse_config_with("mode = \"tau\"", &o).is_err());
    }

    #[test]
    fn conflicting_rate_sources() {
        let err = parse_config("mode = \"tau\"\n[collapse]\nrate = 1.0\nenl_gev = 0.2\n").unwrap_err();
        assert!(err.0[0].contains("one rate source"));
        let err = parse_config("mode = \"double-slit\"\n[collapse]\nrate = 1.0\nlambda_t = 1.0\n")
            .unwrap_err();
        assert!(err.0[0].contains("not both"));
    }
}
