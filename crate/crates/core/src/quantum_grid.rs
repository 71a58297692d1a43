//! Split-operator Schrödinger evolution on a periodic 1D or 2D grid, and
//! the stochastic trajectory driver that interleaves it with collapse hits.
//!
//! One Strang step is `e^{-iVdt/2ħ} · F⁻¹ e^{-iħk²dt/2m} F · e^{-iVdt/2ħ}`.
//! Each factor is a pointwise phase, so the step is unitary up to rounding.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::collapse::{self, CollapseError, CollapseParams, HitEvent, IntervalMode};
use crate::format::fmt_f64;

/// Normalization tolerance promised after every public operation.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Attempts at redrawing a hit center before a trajectory is abandoned.
pub const MAX_HIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: wavefunction {wavefunction:?} vs potential {potential:?}")]
    ShapeMismatch {
        wavefunction: Vec<usize>,
        potential: Vec<usize>,
    },
    #[error("time step must be positive and finite (got {0})")]
    InvalidTimeStep(f64),
    #[error("duration {duration} is not an integer multiple of dt = {dt}")]
    NonIntegerSteps { duration: f64, dt: f64 },
    #[error("potential contains non-finite values")]
    NonFinitePotential,
    #[error("trajectory aborted at t = {time}: {attempts} degenerate hit draws in a row")]
    TrajectoryAborted { time: f64, attempts: usize },
    #[error(transparent)]
    Collapse(#[from] CollapseError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    amplitudes: Vec<Complex64>,
    /// Points per dimension, row-major (last axis fastest).
    extent: Vec<usize>,
    dx: f64,
    mass: f64,
    hbar: f64,
}

impl WavefunctionGrid {
    /// All-zero state. Each extent must be a power of two.
    pub fn zeros(extent: &[usize], dx: f64, mass: f64, hbar: f64) -> Result<Self, QuantumError> {
        if extent.is_empty() || extent.len() > 2 {
            return Err(QuantumError::InvalidGrid(format!(
                "1 or 2 dimensions supported (got {})",
                extent.len()
            )));
        }
        if let Some(&n) = extent.iter().find(|n| !n.is_power_of_two() || **n < 2) {
            return Err(QuantumError::InvalidGrid(format!(
                "extent {n} is not a power of two ≥ 2"
            )));
        }
        for (name, v) in [("dx", dx), ("mass", mass), ("hbar", hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QuantumError::InvalidGrid(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        Ok(WavefunctionGrid {
            amplitudes: vec![Complex64::new(0.0, 0.0); extent.iter().product()],
            extent: extent.to_vec(),
            dx,
            mass,
            hbar,
        })
    }

    /// Samples `f` at every grid point; `f` receives the coordinate vector.
    pub fn from_fn<F>(extent: &[usize], dx: f64, mass: f64, hbar: f64, f: F) -> Result<Self, QuantumError>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let mut psi = Self::zeros(extent, dx, mass, hbar)?;
        let mut coords = vec![0.0; extent.len()];
        for idx in 0..psi.amplitudes.len() {
            psi.coords_into(idx, &mut coords);
            psi.amplitudes[idx] = f(&coords);
        }
        Ok(psi)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn dims(&self) -> usize {
        self.extent.len()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `dx^D`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dims() as i32)
    }

    /// Side length of the periodic box along `axis`.
    pub fn box_length(&self, axis: usize) -> f64 {
        self.extent[axis] as f64 * self.dx
    }

    /// Coordinate of index `j` along an axis of `n` points: `(j − n/2)·dx`.
    #[inline]
    pub fn axis_coordinate(&self, n: usize, j: usize) -> f64 {
        (j as f64 - (n / 2) as f64) * self.dx
    }

    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        let n = self.extent[axis];
        (0..n).map(|j| self.axis_coordinate(n, j)).collect()
    }

    /// Coordinates of flat index `idx`.
    pub fn coords_into(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for axis in (0..self.dims()).rev() {
            let n = self.extent[axis];
            out[axis] = self.axis_coordinate(n, rest % n);
            rest /= n;
        }
    }

    /// Wraps a coordinate into the box `[-L/2, L/2)`.
    pub fn wrap(&self, axis: usize, x: f64) -> f64 {
        let l = self.box_length(axis);
        let lo = self.axis_coordinate(self.extent[axis], 0);
        lo + (x - lo).rem_euclid(l)
    }

    /// Minimum-image separation `x − z` on the periodic axis.
    pub fn periodic_delta(&self, axis: usize, x: f64, z: f64) -> f64 {
        let l = self.box_length(axis);
        let d = (x - z).rem_euclid(l);
        if d >= 0.5 * l {
            d - l
        } else {
            d
        }
    }

    /// `Σ |ψ|² dx^D`.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell_volume()
    }

    pub fn normalize(&mut self) -> Result<(), QuantumError> {
        let n = self.norm_sq();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QuantumError::InvalidGrid(format!(
                "cannot normalize state with norm² {n}"
            )));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|c| *c *= s);
        Ok(())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sq() - 1.0).abs() <= tol
    }

    /// Probability density `|ψ|²` (per unit volume).
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.iter_mut().for_each(|c| *c *= factor);
    }

    /// `⟨ψ|φ⟩ = Σ ψ* φ dx^D`.
    pub fn overlap(&self, other: &WavefunctionGrid) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.cell_volume()
    }

    /// `⟨x_axis⟩` and the standard deviation along `axis`, assuming the
    /// state is localized away from the box edges.
    pub fn position_moments(&self, axis: usize) -> (f64, f64) {
        let mut coords = vec![0.0; self.dims()];
        let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (idx, c) in self.amplitudes.iter().enumerate() {
            self.coords_into(idx, &mut coords);
            let p = c.norm_sqr();
            w += p;
            m1 += p * coords[axis];
            m2 += p * coords[axis] * coords[axis];
        }
        let mean = m1 / w;
        (mean, (m2 / w - mean * mean).max(0.0).sqrt())
    }

    fn same_layout(&self, v: &PotentialGrid) -> Result<(), QuantumError> {
        if self.extent != v.extent {
            return Err(QuantumError::ShapeMismatch {
                wavefunction: self.extent.clone(),
                potential: v.extent.clone(),
            });
        }
        Ok(())
    }

    /// Angular wavenumber of FFT bin `j` on an axis of `n` points.
    pub fn wavenumber(&self, n: usize, j: usize) -> f64 {
        let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * std::f64::consts::PI * signed / (n as f64 * self.dx)
    }

    /// Momentum-space density of a 1D state, in ascending wavenumber order.
    ///
    /// Returns `(k, ρ(k))` with `Σ ρ Δk = ‖ψ‖²`.
    pub fn momentum_density(&self) -> Result<(Vec<f64>, Vec<f64>), QuantumError> {
        if self.dims() != 1 {
            return Err(QuantumError::InvalidGrid(
                "momentum density is only provided for 1D grids".into(),
            ));
        }
        let n = self.extent[0];
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        // ψ̃(k) = dx/√(2π) Σ ψ e^{-ikx}, up to a phase; Δk = 2π/(n dx)
        let scale = self.dx * self.dx / (2.0 * std::f64::consts::PI);
        let mut k = Vec::with_capacity(n);
        let mut rho = Vec::with_capacity(n);
        for s in 0..n {
            let j = (s + n / 2) % n;
            k.push(self.wavenumber(n, j));
            rho.push(buf[j].norm_sqr() * scale);
        }
        Ok((k, rho))
    }

    /// `⟨ψ|H|ψ⟩` with the spectral kinetic operator.
    pub fn energy(&self, v: &PotentialGrid) -> Result<f64, QuantumError> {
        self.same_layout(v)?;
        let mut buf = self.amplitudes.clone();
        let k2 = kinetic_k2(self);
        let plans = plans_for(&self.extent, true);
        fft_nd(&mut buf, &self.extent, &plans);
        let total_n = self.len() as f64;
        let kinetic: f64 = buf
            .iter()
            .zip(&k2)
            .map(|(c, k2)| c.norm_sqr() * k2)
            .sum::<f64>()
            * self.hbar
            * self.hbar
            / (2.0 * self.mass)
            * self.cell_volume()
            / total_n;
        let potential: f64 = self
            .amplitudes
            .iter()
            .zip(&v.values)
            .map(|(c, v)| c.norm_sqr() * v)
            .sum::<f64>()
            * self.cell_volume();
        Ok(kinetic + potential)
    }

    /// Writes `x, |ψ|²` for a 1D state.
    pub fn write_density_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,density")?;
        let x = self.axis_coordinates(0);
        for (xi, c) in x.iter().zip(&self.amplitudes) {
            writeln!(w, "{},{}", fmt_f64(*xi), fmt_f64(c.norm_sqr()))?;
        }
        Ok(())
    }
}

/// Real potential sampled on the wavefunction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    values: Vec<f64>,
    extent: Vec<usize>,
}

impl PotentialGrid {
    pub fn zeros(extent: &[usize]) -> Self {
        PotentialGrid {
            values: vec![0.0; extent.iter().product()],
            extent: extent.to_vec(),
        }
    }

    pub fn new(extent: &[usize], values: Vec<f64>) -> Result<Self, QuantumError> {
        if values.len() != extent.iter().product::<usize>() {
            return Err(QuantumError::InvalidGrid(format!(
                "potential has {} values for extent {extent:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QuantumError::NonFinitePotential);
        }
        Ok(PotentialGrid {
            values,
            extent: extent.to_vec(),
        })
    }

    /// Samples `f` at the coordinates of `like`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(like: &WavefunctionGrid, f: F) -> Result<Self, QuantumError> {
        let mut coords = vec![0.0; like.dims()];
        let values = (0..like.len())
            .map(|idx| {
                like.coords_into(idx, &mut coords);
                f(&coords)
            })
            .collect();
        Self::new(like.extent(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

fn kinetic_k2(psi: &WavefunctionGrid) -> Vec<f64> {
    let mut k2 = vec![0.0; psi.len()];
    for (idx, slot) in k2.iter_mut().enumerate() {
        let mut rest = idx;
        let mut s = 0.0;
        for axis in (0..psi.dims()).rev() {
            let n = psi.extent[axis];
            let k = psi.wavenumber(n, rest % n);
            s += k * k;
            rest /= n;
        }
        *slot = s;
    }
    k2
}

fn plans_for(extent: &[usize], forward: bool) -> Vec<Arc<dyn Fft<f64>>> {
    let mut planner = FftPlanner::new();
    extent
        .iter()
        .map(|&n| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .collect()
}

/// Unnormalized multidimensional transform, one axis at a time.
fn fft_nd(buf: &mut [Complex64], extent: &[usize], plans: &[Arc<dyn Fft<f64>>]) {
    match extent.len() {
        1 => plans[0].process(buf),
        2 => {
            let (rows, cols) = (extent[0], extent[1]);
            // last axis: contiguous rows
            plans[1].process(buf);
            let mut column = vec![Complex64::new(0.0, 0.0); rows];
            for c in 0..cols {
                for r in 0..rows {
                    column[r] = buf[r * cols + c];
                }
                plans[0].process(&mut column);
                for r in 0..rows {
                    buf[r * cols + c] = column[r];
                }
            }
        }
        _ => unreachable!("grid dimensionality is validated on construction"),
    }
}

/// Precomputed Strang step for fixed grid, potential and `dt`.
pub struct Propagator {
    extent: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// `e^{-iħk²dt/2m} / N` (inverse-transform normalization folded in).
    kinetic_phase: Vec<Complex64>,
    /// `e^{-iVdt/2ħ}`, `None` when the potential vanishes everywhere.
    half_potential: Option<Vec<Complex64>>,
    dt: f64,
}

impl Propagator {
    pub fn new(psi: &WavefunctionGrid, v: &PotentialGrid, dt: f64) -> Result<Self, QuantumError> {
        psi.same_layout(v)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QuantumError::InvalidTimeStep(dt));
        }
        let n = psi.len() as f64;
        let c = psi.hbar * dt / (2.0 * psi.mass);
        let kinetic_phase = kinetic_k2(psi)
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0 / n, -c * k2))
            .collect();
        let half_potential = if v.is_zero() {
            None
        } else {
            Some(
                v.values
                    .iter()
                    .map(|&v| Complex64::from_polar(1.0, -v * dt / (2.0 * psi.hbar)))
                    .collect(),
            )
        };
        Ok(Propagator {
            extent: psi.extent.clone(),
            forward: plans_for(&psi.extent, true),
            inverse: plans_for(&psi.extent, false),
            kinetic_phase,
            half_potential,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One Strang step in place.
    pub fn step(&self, psi: &mut WavefunctionGrid) {
        debug_assert_eq!(psi.extent, self.extent);
        let amps = &mut psi.amplitudes;
        if let Some(h) = &self.half_potential {
            amps.iter_mut().zip(h).for_each(|(a, p)| *a *= p);
        }
        fft_nd(amps, &self.extent, &self.forward);
        amps.iter_mut()
            .zip(&self.kinetic_phase)
            .for_each(|(a, p)| *a *= p);
        fft_nd(amps, &self.extent, &self.inverse);
        if let Some(h) = &self.half_potential {
            amps.iter_mut().zip(h).for_each(|(a, p)| *a *= p);
        }
    }

    pub fn run(&self, psi: &mut WavefunctionGrid, steps: u64) {
        for _ in 0..steps {
            self.step(psi);
        }
    }
}

/// One split-operator step.
pub fn split_step(
    psi: &WavefunctionGrid,
    v: &PotentialGrid,
    dt: f64,
) -> Result<WavefunctionGrid, QuantumError> {
    let prop = Propagator::new(psi, v, dt)?;
    let mut out = psi.clone();
    prop.step(&mut out);
    Ok(out)
}

/// Number of steps `T / dt`, rejecting durations that are not an integer
/// multiple of `dt` (relative tolerance 1e-9).
pub fn step_count(duration: f64, dt: f64) -> Result<u64, QuantumError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(QuantumError::InvalidTimeStep(dt));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(QuantumError::NonIntegerSteps { duration, dt });
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-9 * duration.max(dt) {
        return Err(QuantumError::NonIntegerSteps { duration, dt });
    }
    Ok(n as u64)
}

/// `T / dt` split steps.
pub fn evolve_unitary(
    psi: &WavefunctionGrid,
    v: &PotentialGrid,
    duration: f64,
    dt: f64,
) -> Result<WavefunctionGrid, QuantumError> {
    let steps = step_count(duration, dt)?;
    let prop = Propagator::new(psi, v, dt)?;
    let mut out = psi.clone();
    prop.run(&mut out, steps);
    Ok(out)
}

/// Final state of one stochastic trajectory plus its hit log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: WavefunctionGrid,
    pub hits: Vec<HitEvent>,
}

/// Hit times for `[0, T]` under the configured interval law.
pub fn draw_hit_times<R: Rng + ?Sized>(
    params: &CollapseParams,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<f64>, CollapseError> {
    let rate = params.rate()?;
    match params.interval_mode {
        IntervalMode::Poisson => collapse::sample_hit_times(rate, duration, rng),
        IntervalMode::Fixed => collapse::fixed_hit_times(rate, duration),
    }
}

/// Unitary evolution punctuated by collapse hits.
///
/// Hit times are drawn first from `rng`, snapped to the nearest step
/// boundary (bias at most `dt/2`) and applied in order; each hit draws its
/// center from the same stream. The logged hit time is the snapped one.
/// With rate zero no random numbers are consumed and the result is
/// bit-identical to [`evolve_unitary`].
pub fn evolve_with_collapse<R: Rng + ?Sized>(
    psi: &WavefunctionGrid,
    v: &PotentialGrid,
    duration: f64,
    dt: f64,
    params: &CollapseParams,
    rng: &mut R,
) -> Result<Trajectory, QuantumError> {
    let prop = Propagator::new(psi, v, dt)?;
    evolve_with_collapse_using(&prop, psi, duration, params, rng)
}

/// [`evolve_with_collapse`] with a prebuilt propagator, for ensembles.
pub fn evolve_with_collapse_using<R: Rng + ?Sized>(
    prop: &Propagator,
    psi: &WavefunctionGrid,
    duration: f64,
    params: &CollapseParams,
    rng: &mut R,
) -> Result<Trajectory, QuantumError> {
    params.validate()?;
    let dt = prop.dt();
    let steps = step_count(duration, dt)?;
    let times = draw_hit_times(params, duration, rng)?;
    let hit_steps: Vec<u64> = times
        .iter()
        .map(|t| ((t / dt).round() as u64).min(steps))
        .collect();
    apply_schedule(prop, psi, steps, &hit_steps, params.r_c, rng)
}

/// Runs `steps` split steps, applying one hit after each listed step index
/// (index 0 means before the first step). Indices must be ascending.
pub fn apply_schedule<R: Rng + ?Sized>(
    prop: &Propagator,
    psi: &WavefunctionGrid,
    steps: u64,
    hit_steps: &[u64],
    r_c: f64,
    rng: &mut R,
) -> Result<Trajectory, QuantumError> {
    let dt = prop.dt();
    let mut state = psi.clone();
    let mut hits = Vec::with_capacity(hit_steps.len());
    let mut done = 0u64;
    for &s in hit_steps {
        prop.run(&mut state, s - done);
        done = s;
        let time = s as f64 * dt;
        let mut attempts = 0;
        loop {
            attempts += 1;
            let center = collapse::sample_hit_center(&state, r_c, rng)?;
            match collapse::apply_hit(&state, &center, r_c) {
                Ok(next) => {
                    state = next;
                    hits.push(HitEvent { time, center });
                    break;
                }
                Err(CollapseError::DegenerateHit { .. }) if attempts < MAX_HIT_ATTEMPTS => {}
                Err(CollapseError::DegenerateHit { .. }) => {
                    return Err(QuantumError::TrajectoryAborted { time, attempts })
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    prop.run(&mut state, steps - done);
    Ok(Trajectory { state, hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian(n: usize, dx: f64, x0: f64, sigma: f64, k0: f64) -> WavefunctionGrid {
        let mut psi = WavefunctionGrid::from_fn(&[n], dx, 1.0, 1.0, |x| {
            let d = x[0] - x0;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), k0 * x[0])
        })
        .unwrap();
        psi.normalize().unwrap();
        psi
    }

    #[test]
    fn grid_validation() {
        assert!(WavefunctionGrid::zeros(&[100], 1.0, 1.0, 1.0).is_err());
        assert!(WavefunctionGrid::zeros(&[64, 64, 64], 1.0, 1.0, 1.0).is_err());
        assert!(WavefunctionGrid::zeros(&[64], 0.0, 1.0, 1.0).is_err());
        assert!(WavefunctionGrid::zeros(&[64, 32], 0.5, 2.0, 1.0).is_ok());
    }

    #[test]
    fn coordinates_are_centered() {
        let psi = WavefunctionGrid::zeros(&[8], 0.5, 1.0, 1.0).unwrap();
        assert_eq!(psi.axis_coordinates(0)[0], -2.0);
        assert_eq!(psi.axis_coordinates(0)[4], 0.0);
        assert_eq!(psi.wrap(0, 2.25), -1.75);
        assert_eq!(psi.periodic_delta(0, 1.75, -1.75), -0.5);
    }

    #[test]
    fn step_count_rejects_fractional() {
        assert_eq!(step_count(1.0, 0.1).unwrap(), 10);
        assert_eq!(step_count(0.0, 0.1).unwrap(), 0);
        assert!(matches!(
            step_count(1.05, 0.1),
            Err(QuantumError::NonIntegerSteps { .. })
        ));
        assert!(step_count(1.0, 0.0).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let psi = gaussian(64, 1.0, 0.0, 4.0, 0.0);
        let v = PotentialGrid::zeros(&[32]);
        assert!(matches!(
            split_step(&psi, &v, 0.1),
            Err(QuantumError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn plane_wave_acquires_exact_phase() {
        let n = 64;
        let dx = 0.5;
        let m = 5;
        let k = 2.0 * PI * m as f64 / (n as f64 * dx);
        let mut psi = WavefunctionGrid::from_fn(&[n], dx, 1.0, 1.0, |x| {
            Complex64::from_polar(1.0, k * x[0])
        })
        .unwrap();
        psi.normalize().unwrap();
        let dt = 0.037;
        let out = split_step(&psi, &PotentialGrid::zeros(&[n]), dt).unwrap();
        let phase = Complex64::from_polar(1.0, -k * k * dt / 2.0);
        for (a, b) in psi.amplitudes().iter().zip(out.amplitudes()) {
            assert!((a * phase - b).norm() < 1e-13);
        }
    }

    #[test]
    fn momentum_density_normalized_and_centered() {
        let psi = gaussian(256, 0.5, 3.0, 2.0, 1.5);
        let (k, rho) = psi.momentum_density().unwrap();
        let dk = k[1] - k[0];
        let total: f64 = rho.iter().sum::<f64>() * dk;
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = k.iter().zip(&rho).map(|(k, r)| k * r).sum::<f64>() * dk;
        assert!((mean - 1.5).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional_step_is_unitary() {
        let mut psi = WavefunctionGrid::from_fn(&[32, 16], 0.5, 1.0, 1.0, |x| {
            Complex64::from_polar(
                (-(x[0] * x[0] + (x[1] - 1.0).powi(2)) / 4.0).exp(),
                0.3 * x[1],
            )
        })
        .unwrap();
        psi.normalize().unwrap();
        let v = PotentialGrid::from_fn(&psi, |x| 0.1 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let out = evolve_unitary(&psi, &v, 1.0, 0.01).unwrap();
        assert!((out.norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_of_plane_wave() {
        let n = 128;
        let dx = 0.25;
        let k = 2.0 * PI * 3.0 / (n as f64 * dx);
        let mut psi =
            WavefunctionGrid::from_fn(&[n], dx, 2.0, 1.0, |x| Complex64::from_polar(1.0, k * x[0])).unwrap();
        psi.normalize().unwrap();
        let e = psi.energy(&PotentialGrid::zeros(&[n])).unwrap();
        assert!((e - k * k / 4.0).abs() < 1e-12);
    }
}
