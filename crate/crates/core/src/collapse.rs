//! Self-decoherence time, hit statistics and the localization operator.
//!
//! The decoherence time is `τ = ħ / E_NL`; hits arrive at average rate
//! `λ = 1/τ`. A hit multiplies the wavefunction by a normalized Gaussian
//! of width `r_C`,
//!
//! ```text
//!     L_z(x) = (π r_C²)^(-1/4) exp(-(x − z)² / (2 r_C²))      (per dimension)
//! ```
//!
//! with the center drawn from `p(z) = ‖L_z ψ‖²`, then renormalizes.
//! Because `∫ L_z(x)² dz = 1` for every `x`, the hit-averaged density equals
//! the pre-hit density.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::fmt_f64;
use crate::quantum_grid::{WavefunctionGrid, NORM_TOLERANCE};

/// ħ in GeV·s.
pub const HBAR_GEV_S: f64 = 6.582_119_569e-25;

/// Characteristic QCD energy scale in GeV, the default `E_NL` estimate.
pub const LAMBDA_QCD_GEV: f64 = 0.2;

/// Norm below which a hit counts as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollapseError {
    #[error("energy must be finite and non-negative (got {0})")]
    NegativeEnergy(f64),
    #[error("rate must be finite and non-negative (got {0})")]
    NegativeRate(f64),
    #[error("duration must be positive and finite (got {0})")]
    InvalidDuration(f64),
    #[error("localization width r_C must be positive (got {0})")]
    InvalidWidth(f64),
    #[error("wavefunction is not normalized: ‖ψ‖² = {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("hit center has {got} coordinates, grid has {expected} dimensions")]
    CenterDimension { expected: usize, got: usize },
    #[error("degenerate hit: post-hit norm² {norm_sq:e} below threshold")]
    DegenerateHit { norm_sq: f64 },
    #[error("unknown {what} `{value}`")]
    UnknownVariant { what: &'static str, value: String },
}

/// Unit system for ħ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HbarUnits {
    /// ħ = 1.
    #[default]
    Natural,
    /// ħ in GeV·s; energies in GeV, times in seconds.
    Physical,
}

impl HbarUnits {
    pub fn hbar(self) -> f64 {
        match self {
            HbarUnits::Natural => 1.0,
            HbarUnits::Physical => HBAR_GEV_S,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HbarUnits::Natural => "natural",
            HbarUnits::Physical => "physical",
        }
    }
}

impl fmt::Display for HbarUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HbarUnits {
    type Err = CollapseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(HbarUnits::Natural),
            "physical" => Ok(HbarUnits::Physical),
            _ => Err(CollapseError::UnknownVariant {
                what: "hbar_units",
                value: s.to_string(),
            }),
        }
    }
}

/// How hit intervals are laid out in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMode {
    /// Exponential inter-arrival times.
    #[default]
    Poisson,
    /// Hits at `1/λ, 2/λ, …`.
    Fixed,
}

impl IntervalMode {
    pub fn name(self) -> &'static str {
        match self {
            IntervalMode::Poisson => "poisson",
            IntervalMode::Fixed => "fixed",
        }
    }
}

impl fmt::Display for IntervalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IntervalMode {
    type Err = CollapseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "poisson" => Ok(IntervalMode::Poisson),
            "fixed" => Ok(IntervalMode::Fixed),
            _ => Err(CollapseError::UnknownVariant {
                what: "interval_mode",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RateSource {
    /// Hit rate given directly, in inverse time units.
    FixedRate(f64),
    /// Rate derived as `E_NL / ħ`.
    DerivedFromEnergy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseParams {
    pub hbar_units: HbarUnits,
    pub rate_source: RateSource,
    pub r_c: f64,
    pub interval_mode: IntervalMode,
}

impl CollapseParams {
    pub fn with_rate(rate: f64, r_c: f64) -> Self {
        CollapseParams {
            hbar_units: HbarUnits::Natural,
            rate_source: RateSource::FixedRate(rate),
            r_c,
            interval_mode: IntervalMode::Poisson,
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar_units.hbar()
    }

    pub fn validate(&self) -> Result<(), CollapseError> {
        if !(self.r_c > 0.0 && self.r_c.is_finite()) {
            return Err(CollapseError::InvalidWidth(self.r_c));
        }
        self.rate().map(|_| ())
    }

    /// Effective hit rate; exactly zero when `E_NL = 0`.
    pub fn rate(&self) -> Result<f64, CollapseError> {
        match self.rate_source {
            RateSource::FixedRate(l) if l >= 0.0 && l.is_finite() => Ok(l),
            RateSource::FixedRate(l) => Err(CollapseError::NegativeRate(l)),
            RateSource::DerivedFromEnergy(e) => {
                let tau = decoherence_time(e, self.hbar())?;
                Ok(if tau.is_infinite() { 0.0 } else { e / self.hbar() })
            }
        }
    }

    /// `1/λ`, infinite for a zero rate.
    pub fn decoherence_time(&self) -> Result<f64, CollapseError> {
        match self.rate_source {
            RateSource::DerivedFromEnergy(e) => decoherence_time(e, self.hbar()),
            RateSource::FixedRate(_) => {
                let l = self.rate()?;
                Ok(if l == 0.0 { f64::INFINITY } else { 1.0 / l })
            }
        }
    }
}

/// `τ = ħ / E_NL`; `E_NL = 0` yields `f64::INFINITY`.
pub fn decoherence_time(enl: f64, hbar: f64) -> Result<f64, CollapseError> {
    if !(enl >= 0.0 && enl.is_finite()) {
        return Err(CollapseError::NegativeEnergy(enl));
    }
    if enl == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hbar / enl)
}

/// Ordered arrival times of a homogeneous Poisson process on `[0, T]`,
/// built from exponential inter-arrival gaps.
pub fn sample_hit_times<R: Rng + ?Sized>(
    rate: f64,
    duration: f64,
    rng: &mut R,
) -> Result<Vec<f64>, CollapseError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(CollapseError::NegativeRate(rate));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CollapseError::InvalidDuration(duration));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    let gap = Exp::new(rate).map_err(|_| CollapseError::NegativeRate(rate))?;
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > duration {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

/// Deterministic-interval variant: hits at `k/λ` for `k = 1, 2, …` up to `T`.
pub fn fixed_hit_times(rate: f64, duration: f64) -> Result<Vec<f64>, CollapseError> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(CollapseError::NegativeRate(rate));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CollapseError::InvalidDuration(duration));
    }
    if rate == 0.0 {
        return Ok(Vec::new());
    }
    Ok((1..)
        .map(|k| k as f64 / rate)
        .take_while(|&t| t <= duration)
        .collect())
}

fn check_normalized(psi: &WavefunctionGrid) -> Result<(), CollapseError> {
    let norm_sq = psi.norm_sq();
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        return Err(CollapseError::NotNormalized { norm_sq });
    }
    Ok(())
}

fn check_width(r_c: f64) -> Result<(), CollapseError> {
    if !(r_c > 0.0 && r_c.is_finite()) {
        return Err(CollapseError::InvalidWidth(r_c));
    }
    Ok(())
}

/// Draws a hit center from `p(z) = ‖L_z ψ‖²`.
///
/// On the grid `p(z) = Σ_j |ψ_j|² dx^D L_z(x_j)²`, a mixture of Gaussians
/// of standard deviation `r_C/√2` about the grid points. The draw picks a
/// point with Born weights and adds the Gaussian offset, which samples
/// `p` exactly. Centers are wrapped into the periodic box.
pub fn sample_hit_center<R: Rng + ?Sized>(
    psi: &WavefunctionGrid,
    r_c: f64,
    rng: &mut R,
) -> Result<Vec<f64>, CollapseError> {
    check_width(r_c)?;
    check_normalized(psi)?;
    let vol = psi.cell_volume();
    let u: f64 = rng.random::<f64>() * psi.norm_sq();
    let mut acc = 0.0;
    let mut chosen = psi.len() - 1;
    for (idx, c) in psi.amplitudes().iter().enumerate() {
        acc += c.norm_sqr() * vol;
        if u < acc {
            chosen = idx;
            break;
        }
    }
    let mut center = vec![0.0; psi.dims()];
    psi.coords_into(chosen, &mut center);
    let offset = Normal::new(0.0, r_c / std::f64::consts::SQRT_2)
        .map_err(|_| CollapseError::InvalidWidth(r_c))?;
    for (axis, z) in center.iter_mut().enumerate() {
        *z = psi.wrap(axis, *z + offset.sample(rng));
    }
    Ok(center)
}

/// Localization envelope `L_z(x)` with minimum-image distances.
pub fn localization_envelope(psi: &WavefunctionGrid, center: &[f64], r_c: f64) -> Vec<f64> {
    let norm = (std::f64::consts::PI * r_c * r_c).powf(-0.25);
    let axes: Vec<Vec<f64>> = (0..psi.dims())
        .map(|axis| {
            psi.axis_coordinates(axis)
                .into_iter()
                .map(|x| {
                    let d = psi.periodic_delta(axis, x, center[axis]);
                    norm * (-d * d / (2.0 * r_c * r_c)).exp()
                })
                .collect()
        })
        .collect();
    match psi.dims() {
        1 => axes[0].clone(),
        _ => {
            let cols = psi.extent()[1];
            (0..psi.len())
                .map(|idx| axes[0][idx / cols] * axes[1][idx % cols])
                .collect()
        }
    }
}

/// `ψ' = L_z ψ / ‖L_z ψ‖`.
pub fn apply_hit(
    psi: &WavefunctionGrid,
    center: &[f64],
    r_c: f64,
) -> Result<WavefunctionGrid, CollapseError> {
    check_width(r_c)?;
    check_normalized(psi)?;
    if center.len() != psi.dims() {
        return Err(CollapseError::CenterDimension {
            expected: psi.dims(),
            got: center.len(),
        });
    }
    let envelope = localization_envelope(psi, center, r_c);
    let mut out = psi.clone();
    out.amplitudes_mut()
        .iter_mut()
        .zip(&envelope)
        .for_each(|(a, l)| *a *= l);
    let norm_sq = out.norm_sq();
    if !(norm_sq >= DEGENERATE_NORM) {
        return Err(CollapseError::DegenerateHit { norm_sq });
    }
    let s = 1.0 / norm_sq.sqrt();
    out.amplitudes_mut().iter_mut().for_each(|a| *a *= s);
    Ok(out)
}

/// One hit: `t` and the localization center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitEvent {
    pub time: f64,
    pub center: Vec<f64>,
}

pub const HIT_LOG_HEADER: &str = "trajectory_id,hit_time,center";

/// Hit log rows; multi-dimensional centers are joined with `;`.
pub fn write_hit_log<W: Write>(
    mut w: W,
    logs: &[(u64, Vec<HitEvent>)],
) -> std::io::Result<()> {
    writeln!(w, "{HIT_LOG_HEADER}")?;
    for (id, hits) in logs {
        for h in hits {
            let center: Vec<String> = h.center.iter().map(|z| fmt_f64(*z)).collect();
            writeln!(w, "{id},{},{}", fmt_f64(h.time), center.join(";"))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn packet(n: usize, dx: f64, x0: f64, sigma: f64) -> WavefunctionGrid {
        let mut psi = WavefunctionGrid::from_fn(&[n], dx, 1.0, 1.0, |x| {
            let d = x[0] - x0;
            Complex64::new((-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap();
        psi.normalize().unwrap();
        psi
    }

    #[test]
    fn tau_for_qcd_scale() {
        let tau = decoherence_time(LAMBDA_QCD_GEV, HBAR_GEV_S).unwrap();
        assert!((tau - 3.291_059_784_5e-24).abs() < 1e-33);
        assert!((1e-24..=1e-23).contains(&tau));
    }

    #[test]
    fn tau_edge_cases() {
        assert_eq!(decoherence_time(0.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(decoherence_time(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(
            decoherence_time(-0.1, 1.0),
            Err(CollapseError::NegativeEnergy(-0.1))
        );
        assert!(decoherence_time(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn tau_halves_when_energy_doubles() {
        for e in [1e-3, 0.2, 7.0, 123.456] {
            let t1 = decoherence_time(e, HBAR_GEV_S).unwrap();
            let t2 = decoherence_time(2.0 * e, HBAR_GEV_S).unwrap();
            assert_eq!(t2, t1 / 2.0);
            assert!(t2 < t1);
        }
    }

    #[test]
    fn zero_energy_means_zero_rate() {
        let p = CollapseParams {
            hbar_units: HbarUnits::Physical,
            rate_source: RateSource::DerivedFromEnergy(0.0),
            r_c: 1.0,
            interval_mode: IntervalMode::Poisson,
        };
        assert_eq!(p.rate().unwrap(), 0.0);
        assert_eq!(p.decoherence_time().unwrap(), f64::INFINITY);
        let p = CollapseParams {
            rate_source: RateSource::DerivedFromEnergy(0.2),
            ..p
        };
        assert!((p.rate().unwrap() * p.decoherence_time().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(CollapseParams::with_rate(-1.0, 1.0).validate().is_err());
        assert!(CollapseParams::with_rate(1.0, 0.0).validate().is_err());
        assert!(CollapseParams::with_rate(0.0, 1.0).validate().is_ok());
    }

    #[test]
    fn zero_rate_gives_no_hits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_hit_times(0.0, 10.0, &mut rng).unwrap().is_empty());
        assert!(fixed_hit_times(0.0, 10.0).unwrap().is_empty());
        assert!(sample_hit_times(1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn fixed_interval_times() {
        assert_eq!(fixed_hit_times(2.0, 2.0).unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn hit_times_sorted_and_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = sample_hit_times(3.0, 5.0, &mut rng).unwrap();
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.iter().all(|&x| x > 0.0 && x <= 5.0));
    }

    #[test]
    fn unnormalized_state_rejected() {
        let mut psi = packet(64, 1.0, 0.0, 3.0);
        psi.scale(Complex64::new(1.1, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_hit_center(&psi, 1.0, &mut rng),
            Err(CollapseError::NotNormalized { .. })
        ));
        assert!(matches!(
            apply_hit(&psi, &[0.0], 1.0),
            Err(CollapseError::NotNormalized { .. })
        ));
    }

    #[test]
    fn degenerate_hit_detected() {
        let psi = packet(1024, 1.0, 0.0, 1.0);
        // 512 cells away from a width-1 packet with a width-1 envelope
        let err = apply_hit(&psi, &[-512.0], 1.0).unwrap_err();
        assert!(matches!(err, CollapseError::DegenerateHit { .. }));
    }

    #[test]
    fn hit_output_unit_norm() {
        let psi = packet(256, 0.5, 3.0, 5.0);
        for z in [-10.0, 0.0, 3.0, 7.5] {
            let out = apply_hit(&psi, &[z], 1.5).unwrap();
            assert!((out.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn center_dimension_checked() {
        let psi = packet(64, 1.0, 0.0, 3.0);
        assert!(matches!(
            apply_hit(&psi, &[0.0, 1.0], 1.0),
            Err(CollapseError::CenterDimension { .. })
        ));
    }

    #[test]
    fn hit_log_csv() {
        let logs = vec![
            (0, vec![]),
            (
                3,
                vec![HitEvent {
                    time: 0.5,
                    center: vec![-1.25],
                }],
            ),
        ];
        let mut buf = Vec::new();
        write_hit_log(&mut buf, &logs).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "trajectory_id,hit_time,center\n3,0.5,-1.25\n"
        );
    }
}
