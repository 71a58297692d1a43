//! Executes a [`RunConfig`] and writes its artifacts.
//!
//! | mode        | files                                                        |
//! |-------------|--------------------------------------------------------------|
//! | ym-evolve   | `energy.csv`, `snapshot.txt` (optional)                      |
//! | tau         | `tau.csv`, plus `energy.csv` when measured on a lattice      |
//! | double-slit | `density.csv`, `visibility.csv`, `hits.csv` (optional)       |
//! | sweep       | `sweep.csv`, `density_row<r>.csv`, `hits_row<r>.csv` (opt.)  |
//!
//! Every run also writes `manifest.json` with the canonical config, the
//! derived seeds and step sizes, and the crate version. Nothing in the
//! outputs depends on the clock, so equal configs give equal bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use thiserror::Error;

use crate::collapse::{decoherence_time, write_hit_log, CollapseError, HbarUnits, RateSource};
use crate::config::{
    ConfigErrors, EnsembleConfig, LatticeConfig, ModeConfig, RunConfig, TauSource, HBARC_GEV_FM,
};
use crate::experiments::{
    coherence_sweep, sweep_row_seed, with_workers, ExperimentError, SweepResult,
};
use crate::format::fmt_f64;
use crate::seed::{derive_seed, stream_rng};
use crate::ym_lattice::{evolve, write_energy_csv, write_snapshot, EnergyRecord, FieldConfiguration, LatticeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUN: i32 = 3;

pub const MANIFEST_VERSION: u32 = 1;
pub const TAU_CSV_HEADER: &str = "hbar_units,enl,rate,tau";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("ym_lattice: {0}")]
    Lattice(#[from] LatticeError),
    #[error("collapse: {0}")]
    Collapse(#[from] CollapseError),
    #[error("experiments: {0}")]
    Experiment(#[from] ExperimentError),
    #[error("output {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUN,
        }
    }
}

/// Files written and one-line summaries of the results.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Output<'a> {
    dir: &'a Path,
    report: RunReport,
}

impl Output<'_> {
    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let io = |source| RunError::Io {
            path: path.clone(),
            source,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.report.files.push(path);
        Ok(())
    }
}

/// Runs the configured mode, writing into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunReport, RunError> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Output {
        dir,
        report: RunReport::default(),
    };
    let derived = match &config.mode {
        ModeConfig::YmEvolve(l) => run_lattice(l, config.master_seed, &mut out)?,
        ModeConfig::Tau(t) => run_tau(t.hbar_units, &t.source, config.master_seed, &mut out)?,
        ModeConfig::DoubleSlit(d) => {
            let rate = match d.collapse.rate_source {
                RateSource::FixedRate(r) => r,
                RateSource::DerivedFromEnergy(_) => d.collapse.rate()?,
            };
            let result = run_sweep(&d.ensemble, &d.collapse, &[rate], config.master_seed)?;
            write_ensemble_files(&result, &d.ensemble, false, &mut out)?;
            out.write("visibility.csv", |w| result.write_csv(w))?;
            let row = &result.rows[0];
            let low = result.ensembles[0].visibility.low_contrast;
            out.report.summary.push(format!(
                "lambda_T = {}  V = {} ± {}{}",
                fmt_f64(row.lambda_t),
                fmt_f64(row.v),
                fmt_f64(row.stderr),
                if low { "  (low contrast)" } else { "" }
            ));
            ensemble_manifest(&d.ensemble, &result, config.master_seed)
        }
        ModeConfig::Sweep(s) => {
            let result = run_sweep(&s.ensemble, &s.template, &s.rates, config.master_seed)?;
            write_ensemble_files(&result, &s.ensemble, true, &mut out)?;
            out.write("sweep.csv", |w| result.write_csv(w))?;
            for row in &result.rows {
                out.report.summary.push(format!(
                    "lambda_T = {}  V = {} ± {}",
                    fmt_f64(row.lambda_t),
                    fmt_f64(row.v),
                    fmt_f64(row.stderr)
                ));
            }
            let mut m = ensemble_manifest(&s.ensemble, &result, config.master_seed);
            if let Some(tc) = result.coherence_time() {
                m["coherence_time"] = json!(tc);
                out.report
                    .summary
                    .push(format!("coherence time 1/lambda_e = {}", fmt_f64(tc)));
            }
            m
        }
    };
    let manifest = manifest(config, derived);
    out.write("manifest.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)
    })?;
    Ok(out.report)
}

/// Full manifest document for `config` with mode-specific `derived` values.
pub fn manifest(config: &RunConfig, derived: Value) -> Value {
    json!({
        "manifest_version": MANIFEST_VERSION,
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": config.mode().name(),
        "master_seed": config.master_seed,
        "seed_scheme": "stream i: ChaCha8 seeded with splitmix64(master ^ splitmix64(i))",
        "config": config.to_table(),
        "derived": derived,
    })
}

fn lattice_records(
    l: &LatticeConfig,
    master_seed: u64,
) -> Result<(Vec<EnergyRecord>, FieldConfiguration), RunError> {
    let spec = l.spec()?;
    let mut rng = stream_rng(master_seed, 0);
    let mut cfg =
        FieldConfiguration::constrained_random(&spec, l.amplitude, l.wave_amplitude, l.modes, &mut rng);
    let records = evolve(&mut cfg, &spec, l.steps, l.record_every)?;
    Ok((records, cfg))
}

fn run_lattice(l: &LatticeConfig, master_seed: u64, out: &mut Output) -> Result<Value, RunError> {
    let (records, cfg) = lattice_records(l, master_seed)?;
    out.write("energy.csv", |w| write_energy_csv(w, &records))?;
    if l.snapshot {
        let spec = l.spec()?;
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &spec, &cfg)?;
        out.write("snapshot.txt", |w| w.write_all(&buf))?;
    }
    let drift = crate::ym_lattice::max_relative_energy_drift(&records);
    let gauss = records.iter().map(|r| r.gauss_max).fold(0.0, f64::max);
    out.report.summary.push(format!(
        "{} steps, max relative energy drift {}, max Gauss residual {}",
        l.steps,
        fmt_f64(drift),
        fmt_f64(gauss)
    ));
    Ok(json!({
        "lattice_seed": derive_seed(master_seed, 0),
        "records": records.len(),
        "max_relative_energy_drift": drift,
        "max_gauss_residual": gauss,
    }))
}

fn run_tau(
    units: HbarUnits,
    source: &TauSource,
    master_seed: u64,
    out: &mut Output,
) -> Result<Value, RunError> {
    let hbar = units.hbar();
    let mut derived = json!({ "hbar": hbar });
    let (enl, tau) = match source {
        TauSource::Energy(e) => (*e, decoherence_time(*e, hbar)?),
        TauSource::Rate(r) => {
            let tau = if *r == 0.0 { f64::INFINITY } else { 1.0 / r };
            (r * hbar, tau)
        }
        TauSource::Lattice {
            lattice,
            spacing_fm,
        } => {
            let (records, _) = lattice_records(lattice, master_seed)?;
            out.write("energy.csv", |w| write_energy_csv(w, &records))?;
            let mean = records.iter().map(|r| r.energy.nonlinear).sum::<f64>() / records.len() as f64;
            // lattice energies are in units of 1/length; one length unit is
            // spacing_fm / spacing femtometres
            let to_gev = HBARC_GEV_FM * lattice.spacing / spacing_fm;
            let enl = mean * to_gev;
            derived["lattice_seed"] = json!(derive_seed(master_seed, 0));
            derived["mean_enl_lattice_units"] = json!(mean);
            derived["gev_per_lattice_unit"] = json!(to_gev);
            (enl, decoherence_time(enl, hbar)?)
        }
    };
    let rate = if tau.is_finite() { 1.0 / tau } else { 0.0 };
    out.write("tau.csv", |w| {
        writeln!(w, "{TAU_CSV_HEADER}")?;
        writeln!(
            w,
            "{},{},{},{}",
            units.name(),
            fmt_f64(enl),
            fmt_f64(rate),
            fmt_f64(tau)
        )
    })?;
    let unit = match units {
        HbarUnits::Physical => " s",
        HbarUnits::Natural => "",
    };
    out.report.summary.push(format!("tau = {}{unit}", fmt_f64(tau)));
    derived["enl"] = json!(enl);
    derived["tau"] = if tau.is_finite() { json!(tau) } else { json!("inf") };
    Ok(derived)
}

fn run_sweep(
    e: &EnsembleConfig,
    template: &crate::collapse::CollapseParams,
    rates: &[f64],
    master_seed: u64,
) -> Result<SweepResult, RunError> {
    let result = with_workers(e.workers, || {
        coherence_sweep(&e.geometry, template, rates, e.trajectories, master_seed)
    })??;
    Ok(result)
}

fn write_ensemble_files(
    result: &SweepResult,
    e: &EnsembleConfig,
    per_row: bool,
    out: &mut Output,
) -> Result<(), RunError> {
    for (r, ens) in result.ensembles.iter().enumerate() {
        let suffix = if per_row { format!("_row{r}") } else { String::new() };
        out.write(&format!("density{suffix}.csv"), |w| ens.write_density_csv(w))?;
        if e.hit_log {
            out.write(&format!("hits{suffix}.csv"), |w| write_hit_log(w, &ens.hit_logs))?;
        }
    }
    Ok(())
}

fn ensemble_manifest(e: &EnsembleConfig, result: &SweepResult, master_seed: u64) -> Value {
    let g = &e.geometry;
    let rows: Vec<Value> = result
        .rows
        .iter()
        .zip(&result.ensembles)
        .enumerate()
        .map(|(r, (row, ens))| {
            json!({
                "row": r,
                "seed": sweep_row_seed(master_seed, r),
                "rate": row.rate,
                "lambda_t": row.lambda_t,
                "steps": g.steps_for_rate(row.rate),
                "dt": g.dt_for_rate(row.rate),
                "trajectories_completed": ens.visibility.n_trajectories,
                "aborted_trajectories": ens.aborted,
                "low_contrast": ens.visibility.low_contrast,
            })
        })
        .collect();
    json!({
        "screen_scale": g.screen_scale(),
        "fringe_spacing": g.fringe_spacing(),
        "rows": rows,
    })
}
