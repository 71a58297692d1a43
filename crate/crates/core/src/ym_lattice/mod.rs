//! Classical Yang-Mills evolution on a periodic spatial lattice.
//!
//! Non-compact formulation in temporal gauge (`A_0 = 0`). The gauge
//! potential always carries three spatial vector components; the lattice
//! itself spans the first `spatial_dims` directions and fields are constant
//! along the remaining ones, so a one-dimensional lattice still carries the
//! transverse components that make the dynamics nonlinear.
//!
//! With central periodic differences `Δ_i`:
//!
//! ```text
//!     F_ij^a   = Δ_i A_j^a − Δ_j A_i^a + g f^{abc} A_i^b A_j^c
//!     ∂_t A_i  = E_i
//!     ∂_t E_i^a = Σ_j [ Δ_j F_ji^a + g f^{abc} A_j^b F_ji^c ]
//!     H        = Σ_x a^D [ ½ Σ E² + ¼ Σ_{ij} F_ij² ]
//! ```
//!
//! The force is the exact gradient of the discrete `H`, so the leapfrog
//! integrator conserves a shadow Hamiltonian.

mod snapshot;

pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_VERSION};

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::format::fmt_f64;
use crate::gauge_algebra::{AdjointVector, GaugeGroup};

/// Number of spatial vector components carried by `A` and `E`.
pub const VECTOR_COMPONENTS: usize = 3;

/// Largest admissible `dt / a`.
pub const MAX_COURANT: f64 = 0.5;

/// Sites per parallel work item in the force kernel.
const PAR_MIN_SITES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("invalid lattice parameter: {0}")]
    InvalidSpec(String),
    #[error("stability guard violated: dt/a = {ratio} exceeds {MAX_COURANT}")]
    StabilityGuard { ratio: f64 },
    #[error("field configuration has {got} entries, lattice expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("field strength requires distinct directions (got i = j = {0})")]
    SameDirection(usize),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("evolution diverged at step {step}: non-finite field value")]
    EvolutionDiverged { step: u64 },
    #[error("snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    group: GaugeGroup,
    spatial_dims: usize,
    sites_per_dim: usize,
    spacing: f64,
    coupling: f64,
    dt: f64,
}

impl LatticeSpec {
    pub fn new(
        group: GaugeGroup,
        spatial_dims: usize,
        sites_per_dim: usize,
        spacing: f64,
        coupling: f64,
        dt: f64,
    ) -> Result<Self, LatticeError> {
        if !(1..=3).contains(&spatial_dims) {
            return Err(LatticeError::InvalidSpec(format!(
                "spatial_dims must be 1, 2 or 3 (got {spatial_dims})"
            )));
        }
        if sites_per_dim < 4 || sites_per_dim % 2 != 0 {
            return Err(LatticeError::InvalidSpec(format!(
                "sites_per_dim must be even and at least 4 (got {sites_per_dim})"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(LatticeError::InvalidSpec(format!(
                "spacing must be positive (got {spacing})"
            )));
        }
        if !coupling.is_finite() {
            return Err(LatticeError::InvalidSpec(format!(
                "coupling must be finite (got {coupling})"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LatticeError::InvalidSpec(format!(
                "dt must be positive (got {dt})"
            )));
        }
        let ratio = dt / spacing;
        if ratio > MAX_COURANT {
            return Err(LatticeError::StabilityGuard { ratio });
        }
        Ok(LatticeSpec {
            group,
            spatial_dims,
            sites_per_dim,
            spacing,
            coupling,
            dt,
        })
    }

    pub fn group(&self) -> &GaugeGroup {
        &self.group
    }

    pub fn spatial_dims(&self) -> usize {
        self.spatial_dims
    }

    pub fn sites_per_dim(&self) -> usize {
        self.sites_per_dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Same lattice with a different coupling; used for the abelianized
    /// energy and for scaling checks.
    pub fn with_coupling(&self, coupling: f64) -> LatticeSpec {
        LatticeSpec {
            coupling,
            ..self.clone()
        }
    }

    pub fn with_dt(&self, dt: f64) -> Result<LatticeSpec, LatticeError> {
        LatticeSpec::new(
            self.group.clone(),
            self.spatial_dims,
            self.sites_per_dim,
            self.spacing,
            self.coupling,
            dt,
        )
    }

    pub fn n_sites(&self) -> usize {
        self.sites_per_dim.pow(self.spatial_dims as u32)
    }

    /// Values per site: vector components × adjoint components.
    pub fn site_len(&self) -> usize {
        VECTOR_COMPONENTS * self.group.dim_adjoint()
    }

    pub fn field_len(&self) -> usize {
        self.n_sites() * self.site_len()
    }

    /// Flat offset of `(site, i, a)`.
    #[inline]
    pub fn index(&self, site: usize, i: usize, a: usize) -> usize {
        (site * VECTOR_COMPONENTS + i) * self.group.dim_adjoint() + a
    }

    /// Lattice coordinates of a site; unused directions are zero.
    pub fn coords(&self, site: usize) -> [usize; 3] {
        let mut c = [0; 3];
        let mut rest = site;
        for d in c.iter_mut().take(self.spatial_dims) {
            *d = rest % self.sites_per_dim;
            rest /= self.sites_per_dim;
        }
        c
    }

    /// Periodic neighbour of `site` one step forward (`+1`) or backward
    /// (`-1`) along direction `dir < spatial_dims`.
    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize, forward: bool) -> usize {
        let n = self.sites_per_dim;
        let stride = n.pow(dir as u32);
        let coord = (site / stride) % n;
        let shifted = if forward {
            (coord + 1) % n
        } else {
            (coord + n - 1) % n
        };
        site - coord * stride + shifted * stride
    }

    /// Volume element `a^D`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.spatial_dims as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfiguration {
    /// Gauge potential, laid out as `(site, i, a)`.
    pub a: Vec<f64>,
    /// Conjugate momenta `∂_t A`, same layout.
    pub e: Vec<f64>,
    pub time: f64,
    pub steps: u64,
}

impl FieldConfiguration {
    pub fn vacuum(spec: &LatticeSpec) -> Self {
        FieldConfiguration {
            a: vec![0.0; spec.field_len()],
            e: vec![0.0; spec.field_len()],
            time: 0.0,
            steps: 0,
        }
    }

    pub fn from_fields(
        spec: &LatticeSpec,
        a: Vec<f64>,
        e: Vec<f64>,
    ) -> Result<Self, LatticeError> {
        let cfg = FieldConfiguration {
            a,
            e,
            time: 0.0,
            steps: 0,
        };
        cfg.check_shape(spec)?;
        Ok(cfg)
    }

    /// Independent uniform entries in `[-amplitude, amplitude]` for both
    /// `A` and `E`. Does not satisfy the Gauss constraint.
    pub fn random<R: Rng + ?Sized>(spec: &LatticeSpec, amplitude: f64, rng: &mut R) -> Self {
        let n = spec.field_len();
        let mut draw = || -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(-amplitude..=amplitude))
                .collect()
        };
        let a = draw();
        let e = draw();
        FieldConfiguration {
            a,
            e,
            time: 0.0,
            steps: 0,
        }
    }

    /// Constraint-satisfying initial data: smooth random `A`, `E = 0`.
    ///
    /// Every `(i, a)` component of `A` is a homogeneous term uniform in
    /// `[-amplitude, amplitude]` plus cosine and sine waves with wavenumbers
    /// `2πm/L`, `m = 1..=modes`, along each lattice direction, with
    /// coefficients uniform in `[-wave_amplitude, wave_amplitude]`. With
    /// `E = 0` the Gauss residual vanishes identically at `t = 0`.
    pub fn constrained_random<R: Rng + ?Sized>(
        spec: &LatticeSpec,
        amplitude: f64,
        wave_amplitude: f64,
        modes: usize,
        rng: &mut R,
    ) -> Self {
        let dim = spec.group().dim_adjoint();
        let n = spec.sites_per_dim() as f64;
        let mut a = vec![0.0; spec.field_len()];
        for i in 0..VECTOR_COMPONENTS {
            for c in 0..dim {
                let offset = rng.random_range(-amplitude..=amplitude);
                let mut waves = Vec::new();
                for d in 0..spec.spatial_dims() {
                    for m in 1..=modes {
                        let cos_coef = rng.random_range(-wave_amplitude..=wave_amplitude);
                        let sin_coef = rng.random_range(-wave_amplitude..=wave_amplitude);
                        waves.push((d, m as f64, cos_coef, sin_coef));
                    }
                }
                for site in 0..spec.n_sites() {
                    let coords = spec.coords(site);
                    let mut value = offset;
                    for &(d, m, cc, sc) in &waves {
                        let phase = 2.0 * std::f64::consts::PI * m * coords[d] as f64 / n;
                        value += cc * phase.cos() + sc * phase.sin();
                    }
                    a[spec.index(site, i, c)] = value;
                }
            }
        }
        FieldConfiguration {
            a,
            e: vec![0.0; spec.field_len()],
            time: 0.0,
            steps: 0,
        }
    }

    pub fn check_shape(&self, spec: &LatticeSpec) -> Result<(), LatticeError> {
        for len in [self.a.len(), self.e.len()] {
            if len != spec.field_len() {
                return Err(LatticeError::ShapeMismatch {
                    expected: spec.field_len(),
                    got: len,
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().chain(&self.e).all(|x| x.is_finite())
    }

    /// `A^a_i` at `site` as an adjoint vector.
    pub fn potential(&self, spec: &LatticeSpec, site: usize, i: usize) -> AdjointVector {
        let start = spec.index(site, i, 0);
        AdjointVector(self.a[start..start + spec.group().dim_adjoint()].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// Energy of the same configuration with the coupling set to zero.
    pub quadratic: f64,
    /// `total − quadratic`: energy stored in the nonlinear configuration.
    pub nonlinear: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussResidual {
    /// Residual laid out as `(site, a)`.
    pub field: Vec<f64>,
    pub max_abs: f64,
}

/// Central periodic difference of component `(i, a)` along `dir`.
#[inline]
fn central_diff(spec: &LatticeSpec, field: &[f64], site: usize, dir: usize, i: usize, a: usize) -> f64 {
    if dir >= spec.spatial_dims {
        return 0.0;
    }
    let fwd = spec.neighbor(site, dir, true);
    let bwd = spec.neighbor(site, dir, false);
    (field[spec.index(fwd, i, a)] - field[spec.index(bwd, i, a)]) / (2.0 * spec.spacing)
}

#[inline]
fn nonlinear_active(spec: &LatticeSpec, coupling: f64) -> bool {
    coupling != 0.0 && !spec.group.is_abelian()
}

/// Field strength at every site, laid out as `(site, i, j, a)` with the
/// full antisymmetric `3 × 3` block stored.
fn field_strength_all(spec: &LatticeSpec, a_field: &[f64], coupling: f64) -> Vec<f64> {
    let dim = spec.group.dim_adjoint();
    let block = VECTOR_COMPONENTS * VECTOR_COMPONENTS * dim;
    let mut out = vec![0.0; spec.n_sites() * block];
    let nonlinear = nonlinear_active(spec, coupling);
    out.par_chunks_mut(block)
        .with_min_len(PAR_MIN_SITES)
        .enumerate()
        .for_each(|(site, f)| {
            for i in 0..VECTOR_COMPONENTS {
                for j in (i + 1)..VECTOR_COMPONENTS {
                    let off = (i * VECTOR_COMPONENTS + j) * dim;
                    let fij = &mut f[off..off + dim];
                    for (c, x) in fij.iter_mut().enumerate() {
                        *x = central_diff(spec, a_field, site, i, j, c)
                            - central_diff(spec, a_field, site, j, i, c);
                    }
                    if nonlinear {
                        let ai = &a_field[spec.index(site, i, 0)..spec.index(site, i, 0) + dim];
                        let aj = &a_field[spec.index(site, j, 0)..spec.index(site, j, 0) + dim];
                        spec.group.add_commutator(coupling, ai, aj, fij);
                    }
                    let offt = (j * VECTOR_COMPONENTS + i) * dim;
                    for c in 0..dim {
                        f[offt + c] = -f[off + c];
                    }
                }
            }
        });
    out
}

#[inline]
fn strength_offset(spec: &LatticeSpec, site: usize, i: usize, j: usize) -> usize {
    let dim = spec.group.dim_adjoint();
    ((site * VECTOR_COMPONENTS + i) * VECTOR_COMPONENTS + j) * dim
}

/// `F_ij` at one site.
pub fn field_strength(
    cfg: &FieldConfiguration,
    spec: &LatticeSpec,
    site: usize,
    i: usize,
    j: usize,
) -> Result<AdjointVector, LatticeError> {
    cfg.check_shape(spec)?;
    if i == j {
        return Err(LatticeError::SameDirection(i));
    }
    if i >= VECTOR_COMPONENTS || j >= VECTOR_COMPONENTS {
        return Err(LatticeError::OutOfRange(format!(
            "direction pair ({i}, {j}) outside 0..{VECTOR_COMPONENTS}"
        )));
    }
    if site >= spec.n_sites() {
        return Err(LatticeError::OutOfRange(format!(
            "site {site} outside 0..{}",
            spec.n_sites()
        )));
    }
    let dim = spec.group.dim_adjoint();
    let mut f = vec![0.0; dim];
    for (c, x) in f.iter_mut().enumerate() {
        *x = central_diff(spec, &cfg.a, site, i, j, c) - central_diff(spec, &cfg.a, site, j, i, c);
    }
    if nonlinear_active(spec, spec.coupling) {
        let ai = &cfg.a[spec.index(site, i, 0)..spec.index(site, i, 0) + dim];
        let aj = &cfg.a[spec.index(site, j, 0)..spec.index(site, j, 0) + dim];
        spec.group.add_commutator(spec.coupling, ai, aj, &mut f);
    }
    Ok(AdjointVector(f))
}

/// `∂_t E` for the given potential, written into `out`.
fn force_into(spec: &LatticeSpec, a_field: &[f64], out: &mut [f64]) {
    let dim = spec.group.dim_adjoint();
    let coupling = spec.coupling;
    let nonlinear = nonlinear_active(spec, coupling);
    let strength = field_strength_all(spec, a_field, coupling);
    let two_a = 2.0 * spec.spacing;
    out.par_chunks_mut(spec.site_len())
        .with_min_len(PAR_MIN_SITES)
        .enumerate()
        .for_each(|(site, de)| {
            de.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..VECTOR_COMPONENTS {
                let dei = &mut de[i * dim..(i + 1) * dim];
                for j in 0..VECTOR_COMPONENTS {
                    if j == i {
                        continue;
                    }
                    // Δ_j F_ji
                    if j < spec.spatial_dims {
                        let fwd = strength_offset(spec, spec.neighbor(site, j, true), j, i);
                        let bwd = strength_offset(spec, spec.neighbor(site, j, false), j, i);
                        for c in 0..dim {
                            dei[c] += (strength[fwd + c] - strength[bwd + c]) / two_a;
                        }
                    }
                    // g [A_j, F_ji]
                    if nonlinear {
                        let aj = &a_field[spec.index(site, j, 0)..spec.index(site, j, 0) + dim];
                        let off = strength_offset(spec, site, j, i);
                        spec.group
                            .add_commutator(coupling, aj, &strength[off..off + dim], dei);
                    }
                }
            }
        });
}

/// Time derivatives `(∂_t A, ∂_t E)`; `∂_t A` is a copy of `E`.
pub fn equations_of_motion(
    cfg: &FieldConfiguration,
    spec: &LatticeSpec,
) -> Result<(Vec<f64>, Vec<f64>), LatticeError> {
    cfg.check_shape(spec)?;
    let mut de = vec![0.0; spec.field_len()];
    force_into(spec, &cfg.a, &mut de);
    Ok((cfg.e.clone(), de))
}

/// One kick-drift-kick leapfrog step.
pub fn step(cfg: &FieldConfiguration, spec: &LatticeSpec) -> Result<FieldConfiguration, LatticeError> {
    let mut next = cfg.clone();
    step_in_place(&mut next, spec)?;
    Ok(next)
}

/// In-place variant of [`step`].
pub fn step_in_place(cfg: &mut FieldConfiguration, spec: &LatticeSpec) -> Result<(), LatticeError> {
    cfg.check_shape(spec)?;
    let half = 0.5 * spec.dt;
    let mut force = vec![0.0; spec.field_len()];

    force_into(spec, &cfg.a, &mut force);
    cfg.e.iter_mut().zip(&force).for_each(|(e, f)| *e += half * f);
    cfg.a.iter_mut().zip(&cfg.e).for_each(|(a, e)| *a += spec.dt * e);
    force_into(spec, &cfg.a, &mut force);
    cfg.e.iter_mut().zip(&force).for_each(|(e, f)| *e += half * f);

    cfg.time += spec.dt;
    cfg.steps += 1;
    if !cfg.is_finite() {
        return Err(LatticeError::EvolutionDiverged { step: cfg.steps });
    }
    Ok(())
}

fn electric_energy(spec: &LatticeSpec, e: &[f64]) -> f64 {
    let per_site: Vec<f64> = e
        .par_chunks(spec.site_len())
        .with_min_len(PAR_MIN_SITES)
        .map(|s| 0.5 * s.iter().map(|x| x * x).sum::<f64>())
        .collect();
    per_site.iter().sum::<f64>() * spec.cell_volume()
}

fn magnetic_energy(spec: &LatticeSpec, a_field: &[f64], coupling: f64) -> f64 {
    let dim = spec.group.dim_adjoint();
    let strength = field_strength_all(spec, a_field, coupling);
    let block = VECTOR_COMPONENTS * VECTOR_COMPONENTS * dim;
    let per_site: Vec<f64> = strength
        .par_chunks(block)
        .with_min_len(PAR_MIN_SITES)
        .map(|f| {
            let mut s = 0.0;
            for i in 0..VECTOR_COMPONENTS {
                for j in (i + 1)..VECTOR_COMPONENTS {
                    let off = (i * VECTOR_COMPONENTS + j) * dim;
                    s += f[off..off + dim].iter().map(|x| x * x).sum::<f64>();
                }
            }
            // ¼ Σ_{i,j} F_ij² = ½ Σ_{i<j} F_ij²
            0.5 * s
        })
        .collect();
    per_site.iter().sum::<f64>() * spec.cell_volume()
}

/// Total energy and its split into the abelianized (quadratic) part and
/// the remainder `E_NL`.
pub fn total_energy(cfg: &FieldConfiguration, spec: &LatticeSpec) -> EnergyBreakdown {
    let electric = electric_energy(spec, &cfg.e);
    let total = electric + magnetic_energy(spec, &cfg.a, spec.coupling);
    let quadratic = electric + magnetic_energy(spec, &cfg.a, 0.0);
    EnergyBreakdown {
        total,
        quadratic,
        nonlinear: total - quadratic,
    }
}

/// Gauss-law residual `Σ_i Δ_i E_i^a + g f^{abc} Σ_i A_i^b E_i^c`.
pub fn gauss_residual(cfg: &FieldConfiguration, spec: &LatticeSpec) -> GaussResidual {
    let dim = spec.group.dim_adjoint();
    let nonlinear = nonlinear_active(spec, spec.coupling);
    let mut field = vec![0.0; spec.n_sites() * dim];
    field
        .par_chunks_mut(dim)
        .with_min_len(PAR_MIN_SITES)
        .enumerate()
        .for_each(|(site, r)| {
            for i in 0..VECTOR_COMPONENTS {
                for (c, x) in r.iter_mut().enumerate() {
                    *x += central_diff(spec, &cfg.e, site, i, i, c);
                }
                if nonlinear {
                    let start = spec.index(site, i, 0);
                    spec.group.add_commutator(
                        spec.coupling,
                        &cfg.a[start..start + dim],
                        &cfg.e[start..start + dim],
                        r,
                    );
                }
            }
        });
    let max_abs = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    GaussResidual { field, max_abs }
}

/// One row of the energy time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub step: u64,
    pub time: f64,
    pub energy: EnergyBreakdown,
    pub gauss_max: f64,
}

impl EnergyRecord {
    pub fn measure(cfg: &FieldConfiguration, spec: &LatticeSpec) -> Self {
        EnergyRecord {
            step: cfg.steps,
            time: cfg.time,
            energy: total_energy(cfg, spec),
            gauss_max: gauss_residual(cfg, spec).max_abs,
        }
    }
}

/// Evolves `cfg` for `n_steps`, recording every `record_every` steps
/// (and always the initial and final states).
pub fn evolve(
    cfg: &mut FieldConfiguration,
    spec: &LatticeSpec,
    n_steps: u64,
    record_every: u64,
) -> Result<Vec<EnergyRecord>, LatticeError> {
    let record_every = record_every.max(1);
    let mut records = vec![EnergyRecord::measure(cfg, spec)];
    for k in 1..=n_steps {
        step_in_place(cfg, spec)?;
        if k % record_every == 0 || k == n_steps {
            records.push(EnergyRecord::measure(cfg, spec));
        }
    }
    Ok(records)
}

/// Largest `|total(t) − total(0)| / total(0)` over the records.
pub fn max_relative_energy_drift(records: &[EnergyRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let e0 = first.energy.total;
    records
        .iter()
        .map(|r| ((r.energy.total - e0) / e0).abs())
        .fold(0.0, f64::max)
}

pub const ENERGY_CSV_HEADER: &str = "step,time,total,quadratic,nonlinear,gauss_max";

pub fn write_energy_csv<W: Write>(mut w: W, records: &[EnergyRecord]) -> std::io::Result<()> {
    writeln!(w, "{ENERGY_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.time),
            fmt_f64(r.energy.total),
            fmt_f64(r.energy.quadratic),
            fmt_f64(r.energy.nonlinear),
            fmt_f64(r.gauss_max)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge_algebra::GroupKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: GroupKind, sites: usize, g: f64) -> LatticeSpec {
        LatticeSpec::new(GaugeGroup::new(kind), 1, sites, 1.0, g, 0.01).unwrap()
    }

    #[test]
    fn spec_validation() {
        let g = GaugeGroup::su2();
        assert!(matches!(
            LatticeSpec::new(g.clone(), 1, 16, 1.0, 1.0, 0.6),
            Err(LatticeError::StabilityGuard { .. })
        ));
        assert!(LatticeSpec::new(g.clone(), 1, 15, 1.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::new(g.clone(), 1, 2, 1.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::new(g.clone(), 4, 8, 1.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::new(g.clone(), 1, 8, 0.0, 1.0, 0.1).is_err());
        assert!(LatticeSpec::new(g, 1, 8, 1.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn neighbors_wrap() {
        let s = LatticeSpec::new(GaugeGroup::u1(), 2, 4, 1.0, 0.0, 0.1).unwrap();
        assert_eq!(s.neighbor(3, 0, true), 0);
        assert_eq!(s.neighbor(0, 0, false), 3);
        assert_eq!(s.neighbor(13, 1, true), 1);
        assert_eq!(s.neighbor(1, 1, false), 13);
        assert_eq!(s.coords(13), [1, 3, 0]);
    }

    #[test]
    fn field_strength_rejects_bad_queries() {
        let s = spec(GroupKind::SU2, 4, 1.0);
        let cfg = FieldConfiguration::vacuum(&s);
        assert_eq!(
            field_strength(&cfg, &s, 0, 1, 1),
            Err(LatticeError::SameDirection(1))
        );
        assert!(field_strength(&cfg, &s, 0, 0, 3).is_err());
        assert!(field_strength(&cfg, &s, 4, 0, 1).is_err());
    }

    #[test]
    fn constant_fields_give_commutator() {
        let s = spec(GroupKind::SU2, 4, 0.7);
        let mut cfg = FieldConfiguration::vacuum(&s);
        let ax = [0.3, -0.2, 0.5];
        let ay = [0.1, 0.4, -0.6];
        for site in 0..s.n_sites() {
            for c in 0..3 {
                cfg.a[s.index(site, 0, c)] = ax[c];
                cfg.a[s.index(site, 1, c)] = ay[c];
            }
        }
        let expect = s
            .group()
            .commutator(&AdjointVector(ax.to_vec()), &AdjointVector(ay.to_vec()))
            .unwrap()
            .scale(0.7);
        for site in 0..s.n_sites() {
            let f = field_strength(&cfg, &s, site, 0, 1).unwrap();
            for c in 0..3 {
                assert!((f.0[c] - expect.0[c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn vacuum_is_fixed_point() {
        let s = spec(GroupKind::SU3, 4, 1.0);
        let cfg = FieldConfiguration::vacuum(&s);
        let (da, de) = equations_of_motion(&cfg, &s).unwrap();
        assert!(da.iter().chain(&de).all(|&x| x == 0.0));
        let next = step(&cfg, &s).unwrap();
        assert!(next.a.iter().chain(&next.e).all(|&x| x == 0.0));
        assert_eq!(next.steps, 1);
        assert!((next.time - 0.01).abs() < 1e-15);
        assert_eq!(total_energy(&cfg, &s), EnergyBreakdown { total: 0.0, quadratic: 0.0, nonlinear: 0.0 });
        assert_eq!(gauss_residual(&cfg, &s).max_abs, 0.0);
    }

    #[test]
    fn gauss_residual_vanishes_without_momenta() {
        let s = spec(GroupKind::SU2, 8, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfg = FieldConfiguration::random(&s, 1.0, &mut rng);
        cfg.e.iter_mut().for_each(|x| *x = 0.0);
        assert_eq!(gauss_residual(&cfg, &s).max_abs, 0.0);
    }

    #[test]
    fn divergence_is_reported_with_step() {
        let s = spec(GroupKind::SU2, 4, 1.0);
        let mut cfg = FieldConfiguration::vacuum(&s);
        cfg.e[0] = f64::INFINITY;
        cfg.steps = 41;
        assert_eq!(
            step(&cfg, &s).unwrap_err(),
            LatticeError::EvolutionDiverged { step: 42 }
        );
    }

    #[test]
    fn shape_mismatch_rejected() {
        let s = spec(GroupKind::SU2, 4, 1.0);
        let other = spec(GroupKind::SU3, 4, 1.0);
        let cfg = FieldConfiguration::vacuum(&other);
        assert!(matches!(
            equations_of_motion(&cfg, &s),
            Err(LatticeError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn energy_csv_layout() {
        let s = spec(GroupKind::SU2, 4, 1.0);
        let mut cfg = FieldConfiguration::vacuum(&s);
        let records = evolve(&mut cfg, &s, 2, 1).unwrap();
        let mut buf = Vec::new();
        write_energy_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ENERGY_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,0,0,0,0");
    }
}
