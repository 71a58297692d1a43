//! In-silico double slit: two-path state, stochastic ensembles, fringe
//! visibility and visibility-versus-rate sweeps.
//!
//! The transverse state starts as two Gaussian paths at `±d/2`. During the
//! flight time `T` it evolves freely while collapse hits act on it. The
//! screen is read in the far field: the transverse momentum density,
//! mapped onto the screen coordinate `x = ħkT/m`. On that axis the fringe
//! spacing is `2πħT/(md)`.
//!
//! A hit during the flight lands on one path (`r_C ≪ d`) and removes all
//! interference from that trajectory, so the ensemble visibility follows
//! the no-hit survival probability, `V/V₀ = e^{−λT}`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collapse::{CollapseError, CollapseParams, HitEvent, RateSource};
use crate::format::fmt_f64;
use crate::quantum_grid::{
    evolve_with_collapse_using, Propagator, PotentialGrid, QuantumError, WavefunctionGrid,
};
use crate::seed::{derive_seed, stream_rng};

/// Largest admissible `λ·dt`; sets the number of steps per trajectory.
pub const MAX_RATE_STEP: f64 = 0.01;

/// Visibilities below this are flagged as having no detectable fringes.
pub const LOW_CONTRAST: f64 = 0.02;

/// Largest tolerated fraction of aborted trajectories.
pub const MAX_ABORT_FRACTION: f64 = 0.01;

/// Trajectories per aggregation block. Fixed, so the reduction tree does
/// not depend on the worker count.
const BLOCK: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("ensemble needs at least one trajectory")]
    EmptyEnsemble,
    #[error("rates must be finite, non-negative and sorted ascending")]
    InvalidRates,
    #[error("{aborted} of {total} trajectories aborted (limit 1%)")]
    TooManyAborts { aborted: usize, total: usize },
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Collapse(#[from] CollapseError),
}

/// Grid parameters the geometry is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBinding {
    pub points: usize,
    pub dx: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl Default for GridBinding {
    fn default() -> Self {
        GridBinding {
            points: 4096,
            dx: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSlitGeometry {
    /// Path separation `d`.
    pub slit_separation: f64,
    /// Gaussian width `w` of each path amplitude, `ψ ∝ e^{−(x∓d/2)²/2w²}`;
    /// the position standard deviation is `w/√2`.
    pub slit_width: f64,
    /// Flight time `T` during which collapse acts.
    pub flight_time: f64,
    pub grid: GridBinding,
    /// Lower bound on split steps per trajectory.
    pub min_steps: u64,
}

impl Default for DoubleSlitGeometry {
    /// `w = 8 dx`, `d = 10 w`, `T = m w² / ħ`, 4096 points.
    fn default() -> Self {
        let grid = GridBinding::default();
        let w = 8.0 * grid.dx;
        DoubleSlitGeometry {
            slit_separation: 10.0 * w,
            slit_width: w,
            flight_time: grid.mass * w * w / grid.hbar,
            grid,
            min_steps: 100,
        }
    }
}

impl DoubleSlitGeometry {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidGeometry(m));
        let (d, w, t) = (self.slit_separation, self.slit_width, self.flight_time);
        let dx = self.grid.dx;
        if !(d.is_finite() && w.is_finite() && t > 0.0 && t.is_finite()) {
            return bad("separation, width and flight time must be finite, T > 0".into());
        }
        if d <= 2.0 * w {
            return bad(format!("slits not resolved: d = {d} ≤ 2w = {}", 2.0 * w));
        }
        if w < 4.0 * dx || d < 4.0 * dx {
            return bad(format!("d and w must be at least 4 dx = {}", 4.0 * dx));
        }
        if self.min_steps == 0 {
            return bad("min_steps must be at least 1".into());
        }
        // 10σ(T) of clearance keeps periodic images far below 1e-6
        let half_box = 0.5 * self.grid.points as f64 * dx;
        if 0.5 * d + 10.0 * self.width_at(t) > half_box {
            return bad(format!(
                "grid too small: paths reach ±{} at T, box is ±{half_box}",
                0.5 * d + 10.0 * self.width_at(t)
            ));
        }
        Ok(())
    }

    /// Position standard deviation of one path at `t = 0`, `w/√2`.
    pub fn path_sigma(&self) -> f64 {
        self.slit_width / std::f64::consts::SQRT_2
    }

    /// Free-packet position standard deviation `σ √(1 + (ħt / 2mσ²)²)`,
    /// `σ = w/√2`.
    pub fn width_at(&self, t: f64) -> f64 {
        let sigma = self.path_sigma();
        let s = self.grid.hbar * t / (2.0 * self.grid.mass * sigma * sigma);
        sigma * (1.0 + s * s).sqrt()
    }

    /// Screen coordinate per unit wavenumber, `ħT/m`.
    pub fn screen_scale(&self) -> f64 {
        self.grid.hbar * self.flight_time / self.grid.mass
    }

    /// Far-field fringe spacing on the screen, `2πħT/(md)`.
    pub fn fringe_spacing(&self) -> f64 {
        2.0 * PI * self.screen_scale() / self.slit_separation
    }

    /// Steps per trajectory for a given rate, keeping `λ dt ≤ 0.01`.
    pub fn steps_for_rate(&self, rate: f64) -> u64 {
        let needed = (rate * self.flight_time / MAX_RATE_STEP).ceil();
        self.min_steps.max(needed as u64)
    }

    pub fn dt_for_rate(&self, rate: f64) -> f64 {
        self.flight_time / self.steps_for_rate(rate) as f64
    }

    pub fn empty_grid(&self) -> Result<WavefunctionGrid, QuantumError> {
        WavefunctionGrid::zeros(&[self.grid.points], self.grid.dx, self.grid.mass, self.grid.hbar)
    }
}

/// Equal superposition of Gaussian paths at `±d/2`, zero mean momentum.
pub fn prepare_two_slit_state(geom: &DoubleSlitGeometry) -> Result<WavefunctionGrid, ExperimentError> {
    geom.validate()?;
    let g = &geom.grid;
    let half = 0.5 * geom.slit_separation;
    let w = geom.slit_width;
    let mut psi = WavefunctionGrid::from_fn(&[g.points], g.dx, g.mass, g.hbar, |x| {
        let path = |c: f64| (-(x[0] - c).powi(2) / (2.0 * w * w)).exp();
        Complex64::new(path(half) + path(-half), 0.0)
    })?;
    psi.normalize()?;
    Ok(psi)
}

/// Single path at `center`, same width; for incoherent references.
pub fn prepare_single_slit_state(
    geom: &DoubleSlitGeometry,
    center: f64,
) -> Result<WavefunctionGrid, ExperimentError> {
    geom.validate()?;
    let g = &geom.grid;
    let w = geom.slit_width;
    let mut psi = WavefunctionGrid::from_fn(&[g.points], g.dx, g.mass, g.hbar, |x| {
        Complex64::new((-(x[0] - center).powi(2) / (2.0 * w * w)).exp(), 0.0)
    })?;
    psi.normalize()?;
    Ok(psi)
}

/// Screen coordinates and density (per unit screen length) of a state.
pub fn screen_density(
    geom: &DoubleSlitGeometry,
    psi: &WavefunctionGrid,
) -> Result<(Vec<f64>, Vec<f64>), ExperimentError> {
    let (k, rho_k) = psi.momentum_density()?;
    let scale = geom.screen_scale();
    let x = k.iter().map(|k| k * scale).collect();
    let rho = rho_k.iter().map(|r| r / scale).collect();
    Ok((x, rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityMeasurement {
    pub v: f64,
    /// Set when no fringe structure is detectable.
    pub low_contrast: bool,
}

/// Complex fringe amplitude `Σ ρ(x) e^{iqx} Δx`, `q = 2π / spacing`.
fn fringe_amplitude(x: &[f64], density: &[f64], spacing: f64) -> Complex64 {
    let q = 2.0 * PI / spacing;
    let dx = if x.len() > 1 { x[1] - x[0] } else { 1.0 };
    x.iter()
        .zip(density)
        .map(|(x, r)| Complex64::from_polar(*r, q * x))
        .sum::<Complex64>()
        * dx
}

/// Fringe visibility of a screen density.
///
/// The pattern `I(x) = B(x) [1 + V cos(2πx/s)]` is demodulated at the
/// known fringe spacing `s`: `V = 2 |Σ I e^{i2πx/s}| / Σ I`. For a smooth
/// envelope `B` wider than a few fringes its own contribution at the
/// fringe frequency is negligible, so the result is the fringe contrast
/// `(I_max − I_min)/(I_max + I_min)` without envelope-curvature bias.
pub fn visibility(x: &[f64], density: &[f64], fringe_spacing: f64) -> VisibilityMeasurement {
    let dx = if x.len() > 1 { x[1] - x[0] } else { 1.0 };
    let total: f64 = density.iter().sum::<f64>() * dx;
    if !(total > 0.0) {
        return VisibilityMeasurement {
            v: 0.0,
            low_contrast: true,
        };
    }
    // the envelope's own spectrum can lift the estimate above 1 by
    // ~e^{-(qσ)²/2}; contrast is bounded by 1 by definition
    let v = (2.0 * fringe_amplitude(x, density, fringe_spacing).norm() / total).min(1.0);
    VisibilityMeasurement {
        v,
        low_contrast: v < LOW_CONTRAST,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub v: f64,
    pub stderr: f64,
    pub n_trajectories: usize,
    pub mean_hits: f64,
    pub low_contrast: bool,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub rate: f64,
    pub screen_x: Vec<f64>,
    pub mean_density: Vec<f64>,
    pub visibility: VisibilityResult,
    /// `(trajectory index, hits)` for every completed trajectory.
    pub hit_logs: Vec<(u64, Vec<HitEvent>)>,
    pub aborted: Vec<u64>,
}

impl EnsembleResult {
    /// `Σ ρ Δx` of the mean screen density.
    pub fn screen_norm(&self) -> f64 {
        let dx = self.screen_x[1] - self.screen_x[0];
        self.mean_density.iter().sum::<f64>() * dx
    }

    pub fn write_density_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,mean_density")?;
        for (x, r) in self.screen_x.iter().zip(&self.mean_density) {
            writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*r))?;
        }
        Ok(())
    }
}

struct TrajectoryOutcome {
    index: u64,
    completed: bool,
    amplitude: Complex64,
    hits: Vec<HitEvent>,
}

struct BlockSum {
    density: Vec<f64>,
    outcomes: Vec<TrajectoryOutcome>,
}

/// Runs `f` on a rayon pool with `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(
    workers: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::WorkerPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Ensemble of `n` stochastic trajectories at the collapse rate in
/// `params`. Trajectory `i` draws from stream `(master_seed, i)`.
///
/// Densities are summed in fixed blocks of trajectory indices and the block
/// sums are combined in index order, so the output does not depend on the
/// worker count or scheduling.
pub fn run_ensemble(
    geom: &DoubleSlitGeometry,
    params: &CollapseParams,
    n: usize,
    master_seed: u64,
) -> Result<EnsembleResult, ExperimentError> {
    if n == 0 {
        return Err(ExperimentError::EmptyEnsemble);
    }
    params.validate()?;
    let rate = params.rate()?;
    let psi0 = prepare_two_slit_state(geom)?;
    let dt = geom.dt_for_rate(rate);
    let prop = Propagator::new(&psi0, &PotentialGrid::zeros(psi0.extent()), dt)?;
    let spacing = geom.fringe_spacing();
    let (screen_x, _) = screen_density(geom, &psi0)?;

    let blocks: Vec<Result<BlockSum, ExperimentError>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut sum = vec![0.0; psi0.len()];
            let mut outcomes = Vec::with_capacity(BLOCK);
            for i in (b * BLOCK)..((b + 1) * BLOCK).min(n) {
                let index = i as u64;
                let mut rng = stream_rng(master_seed, index);
                match evolve_with_collapse_using(&prop, &psi0, geom.flight_time, params, &mut rng) {
                    Ok(traj) => {
                        let (_, rho) = screen_density(geom, &traj.state)?;
                        sum.iter_mut().zip(&rho).for_each(|(s, r)| *s += r);
                        outcomes.push(TrajectoryOutcome {
                            index,
                            amplitude: fringe_amplitude(&screen_x, &rho, spacing),
                            completed: true,
                            hits: traj.hits,
                        });
                    }
                    Err(QuantumError::TrajectoryAborted { .. }) => outcomes.push(TrajectoryOutcome {
                        index,
                        completed: false,
                        amplitude: Complex64::new(0.0, 0.0),
                        hits: Vec::new(),
                    }),
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(BlockSum {
                density: sum,
                outcomes,
            })
        })
        .collect();

    let mut total = vec![0.0; psi0.len()];
    let mut amplitudes = Vec::with_capacity(n);
    let mut hit_logs = Vec::with_capacity(n);
    let mut aborted = Vec::new();
    for block in blocks {
        let block = block?;
        total.iter_mut().zip(&block.density).for_each(|(t, b)| *t += b);
        for o in block.outcomes {
            if o.completed {
                amplitudes.push(o.amplitude);
                hit_logs.push((o.index, o.hits));
            } else {
                aborted.push(o.index);
            }
        }
    }
    if aborted.len() as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(ExperimentError::TooManyAborts {
            aborted: aborted.len(),
            total: n,
        });
    }

    let kept = amplitudes.len();
    let mean_density: Vec<f64> = total.iter().map(|t| t / kept as f64).collect();
    let measured = visibility(&screen_x, &mean_density, spacing);
    let stderr = visibility_stderr(&amplitudes, &screen_x, &mean_density);
    let mean_hits = hit_logs.iter().map(|(_, h)| h.len() as f64).sum::<f64>() / kept as f64;

    Ok(EnsembleResult {
        rate,
        screen_x,
        mean_density,
        visibility: VisibilityResult {
            v: measured.v,
            stderr,
            n_trajectories: kept,
            mean_hits,
            low_contrast: measured.low_contrast,
        },
        hit_logs,
        aborted,
    })
}

/// Standard error of the ensemble visibility.
///
/// Each trajectory's fringe amplitude is projected onto the phase of the
/// ensemble amplitude; the visibility is the mean of those projections
/// (times `2 / Σρ`), and its error is their sample standard deviation
/// over `√n`.
fn visibility_stderr(amplitudes: &[Complex64], x: &[f64], mean_density: &[f64]) -> f64 {
    let n = amplitudes.len();
    if n < 2 {
        return 0.0;
    }
    let dx = x[1] - x[0];
    let norm: f64 = mean_density.iter().sum::<f64>() * dx;
    let mean: Complex64 = amplitudes.iter().sum::<Complex64>() / n as f64;
    let phase = if mean.norm() > 0.0 {
        mean.conj() / mean.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let proj: Vec<f64> = amplitudes
        .iter()
        .map(|a| 2.0 * (a * phase).re / norm)
        .collect();
    let m = proj.iter().sum::<f64>() / n as f64;
    let var = proj.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Visibility of the same geometry with collapse disabled.
pub fn reference_visibility(geom: &DoubleSlitGeometry) -> Result<f64, ExperimentError> {
    let psi0 = prepare_two_slit_state(geom)?;
    let dt = geom.dt_for_rate(0.0);
    let prop = Propagator::new(&psi0, &PotentialGrid::zeros(psi0.extent()), dt)?;
    let mut psi = psi0;
    prop.run(&mut psi, geom.steps_for_rate(0.0));
    let (x, rho) = screen_density(geom, &psi)?;
    Ok(visibility(&x, &rho, geom.fringe_spacing()).v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate: f64,
    pub lambda_t: f64,
    pub v: f64,
    pub stderr: f64,
    pub mean_hits: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub ensembles: Vec<EnsembleResult>,
}

impl SweepResult {
    /// Effective coherence time `1/λ_e`, where `λ_e` is the rate at which
    /// the visibility falls to `V(0)/e`, interpolating `ln V` linearly in
    /// `λ` between bracketing rows. `None` without a zero-rate row or when
    /// the sweep never reaches `V(0)/e`.
    pub fn coherence_time(&self) -> Option<f64> {
        let v0 = self.rows.iter().find(|r| r.rate == 0.0)?.v;
        let target = v0 / std::f64::consts::E;
        self.rows.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.v >= target && b.v < target && b.v > 0.0 {
                let (la, lb) = (a.v.ln(), b.v.ln());
                let f = (la - target.ln()) / (la - lb);
                Some(1.0 / (a.rate + f * (b.rate - a.rate)))
            } else {
                None
            }
        })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rate,lambda_T,V,stderr,mean_hits")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(r.rate),
                fmt_f64(r.lambda_t),
                fmt_f64(r.v),
                fmt_f64(r.stderr),
                fmt_f64(r.mean_hits)
            )?;
        }
        Ok(())
    }
}

/// Seed of sweep row `row`: an independent substream of `master_seed`.
pub fn sweep_row_seed(master_seed: u64, row: usize) -> u64 {
    derive_seed(master_seed, row as u64)
}

/// One ensemble per rate, shared geometry, independent seed substreams.
/// `template` supplies `r_C` and the interval mode; its rate is replaced.
pub fn coherence_sweep(
    geom: &DoubleSlitGeometry,
    template: &CollapseParams,
    rates: &[f64],
    n: usize,
    master_seed: u64,
) -> Result<SweepResult, ExperimentError> {
    if rates.is_empty()
        || rates.iter().any(|r| !(r.is_finite() && *r >= 0.0))
        || rates.windows(2).any(|w| w[0] > w[1])
    {
        return Err(ExperimentError::InvalidRates);
    }
    let mut rows = Vec::with_capacity(rates.len());
    let mut ensembles = Vec::with_capacity(rates.len());
    for (row, &rate) in rates.iter().enumerate() {
        let params = CollapseParams {
            rate_source: RateSource::FixedRate(rate),
            ..*template
        };
        let result = run_ensemble(geom, &params, n, sweep_row_seed(master_seed, row))?;
        rows.push(SweepRow {
            rate,
            lambda_t: rate * geom.flight_time,
            v: result.visibility.v,
            stderr: result.visibility.stderr,
            mean_hits: result.visibility.mean_hits,
        });
        ensembles.push(result);
    }
    Ok(SweepResult { rows, ensembles })
}
