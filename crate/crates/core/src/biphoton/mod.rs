//! Joint spectral amplitude of the entangled pair, its two-time transform and
//! the narrow-distribution limit.

mod export;
mod time;

pub use export::{IntensityMatrix, LatticeAxis, ParseMatrixError};
pub use time::{Support, TimeDomain};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;
use thiserror::Error;

/// Minimum fraction of L² mass the grid must hold.
pub const COVERAGE_THRESHOLD: f64 = 1.0 - 1e-3;

/// Width of the Gaussian stand-in for sinc, matched at half maximum of sinc².
pub const GAUSSIAN_PM_GAMMA: f64 = 0.193;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BiphotonError {
    #[error("pump: {0}")]
    Pump(String),
    #[error("crystal: {0}")]
    Crystal(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error(
        "grid coverage {coverage:.6} below {threshold}: enlarge the frequency span (axis a spans {span_a:.4} rad/fs, axis b {span_b:.4} rad/fs)"
    )]
    Coverage {
        coverage: f64,
        threshold: f64,
        span_a: f64,
        span_b: f64,
    },
    #[error("amplitude vanishes on the grid")]
    Degenerate,
    #[error("time-domain cache missing; call to_time_domain first")]
    NoTimeDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub omega_p: f64,
    pub sigma_p: f64,
}

impl PumpSpec {
    pub fn new(omega_p: f64, sigma_p: f64) -> Result<Self, BiphotonError> {
        if !(omega_p > 0.0 && omega_p.is_finite()) {
            return Err(BiphotonError::Pump(format!("omega_p = {omega_p} must be > 0")));
        }
        if !(sigma_p > 0.0 && sigma_p.is_finite()) {
            return Err(BiphotonError::Pump(format!("sigma_p = {sigma_p} must be > 0")));
        }
        Ok(Self { omega_p, sigma_p })
    }

    pub fn envelope(&self, omega: f64) -> f64 {
        let x = (omega - self.omega_p) / self.sigma_p;
        (-x * x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMatching {
    #[default]
    Sinc,
    /// exp(−γx²) with γ = [`GAUSSIAN_PM_GAMMA`].
    Gaussian,
}

impl PhaseMatching {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            PhaseMatching::Sinc => sinc(x),
            PhaseMatching::Gaussian => (-GAUSSIAN_PM_GAMMA * x * x).exp(),
        }
    }
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub omega_a: f64,
    pub omega_b: f64,
    pub t_a: f64,
    pub t_b: f64,
    #[serde(default)]
    pub phase_matching: PhaseMatching,
}

impl CrystalSpec {
    pub fn new(omega_a: f64, omega_b: f64, t_a: f64, t_b: f64) -> Result<Self, BiphotonError> {
        for (name, v) in [("omega_a", omega_a), ("omega_b", omega_b), ("t_a", t_a), ("t_b", t_b)] {
            if !v.is_finite() {
                return Err(BiphotonError::Crystal(format!("{name} must be finite")));
            }
        }
        Ok(Self {
            omega_a,
            omega_b,
            t_a,
            t_b,
            phase_matching: PhaseMatching::Sinc,
        })
    }

    pub fn with_phase_matching(mut self, pm: PhaseMatching) -> Self {
        self.phase_matching = pm;
        self
    }

    /// Whether the single-channel amplitude differs from its exchange.
    pub fn is_exchange_asymmetric(&self) -> bool {
        self.t_a != self.t_b || self.omega_a != self.omega_b
    }

    /// φ(ω_a, ω_b) before symmetrization.
    pub fn phi(&self, pump: &PumpSpec, wa: f64, wb: f64) -> f64 {
        let x = (wa - self.omega_a) * self.t_a + (wb - self.omega_b) * self.t_b;
        pump.envelope(wa + wb) * self.phase_matching.eval(x)
    }
}

/// Uniform frequency axis ω_k = center + (k − size/2)·spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAxis {
    pub center: f64,
    pub spacing: f64,
    pub size: usize,
}

impl FrequencyAxis {
    pub fn new(center: f64, spacing: f64, size: usize) -> Result<Self, BiphotonError> {
        if !(spacing > 0.0 && spacing.is_finite()) || !center.is_finite() {
            return Err(BiphotonError::Grid(format!(
                "spacing {spacing} must be > 0 and center finite"
            )));
        }
        if size < 2 {
            return Err(BiphotonError::Grid(format!("size {size} must be >= 2")));
        }
        Ok(Self { center, spacing, size })
    }

    /// Axis whose conjugate time lattice has step `dt` before padding.
    pub fn for_time_step(center: f64, dt: f64, size: usize) -> Result<Self, BiphotonError> {
        Self::new(center, 2.0 * PI / (size as f64 * dt), size)
    }

    pub fn offset(&self, k: usize) -> f64 {
        (k as f64 - (self.size / 2) as f64) * self.spacing
    }

    pub fn value(&self, k: usize) -> f64 {
        self.center + self.offset(k)
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub a: FrequencyAxis,
    pub b: FrequencyAxis,
}

impl FrequencyGrid {
    pub fn square(center: f64, spacing: f64, size: usize) -> Result<Self, BiphotonError> {
        let ax = FrequencyAxis::new(center, spacing, size)?;
        Ok(Self { a: ax, b: ax })
    }

    pub fn is_square(&self) -> bool {
        self.a == self.b
    }

    pub fn len(&self) -> usize {
        self.a.size * self.b.size
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn extended(&self, factor: usize) -> Self {
        let ext = |ax: FrequencyAxis| FrequencyAxis {
            center: ax.center,
            spacing: ax.spacing,
            size: ax.size * factor,
        };
        Self {
            a: ext(self.a),
            b: ext(self.b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayArm {
    #[default]
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    #[default]
    AreaOne,
    ValueOne,
}

/// e^{iθ}, exact at multiples of π/2 so that symmetric and antisymmetric
/// combinations cancel bit-for-bit.
pub fn exchange_phase(theta: f64) -> Complex64 {
    let q = theta / (PI / 2.0);
    let r = q.round();
    if (q - r).abs() < 1e-12 {
        match (r as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    } else {
        Complex64::from_polar(1.0, theta)
    }
}

#[derive(Debug, Clone)]
pub struct BiphotonAmplitude {
    theta: f64,
    delay: f64,
    delay_arm: DelayArm,
    grid: FrequencyGrid,
    /// Normalized Φ_θ(ω_a, ω_b) without the delay phase, row-major in ω_a.
    values: Vec<Complex64>,
    time: Option<Arc<TimeDomain>>,
}

impl PartialEq for BiphotonAmplitude {
    fn eq(&self, other: &Self) -> bool {
        self.theta == other.theta
            && self.delay == other.delay
            && self.delay_arm == other.delay_arm
            && self.grid == other.grid
            && self.values == other.values
    }
}

/// Builds the normalized, exchange-symmetrized JSA and checks grid coverage.
pub fn build_jsa(
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    theta: f64,
    grid: &FrequencyGrid,
) -> Result<BiphotonAmplitude, BiphotonError> {
    for (name, ax) in [("a", grid.a), ("b", grid.b)] {
        if ax.span() < 6.0 * pump.sigma_p {
            return Err(BiphotonError::Grid(format!(
                "axis {name} spans {:.4} rad/fs, less than 6 sigma_p = {:.4}",
                ax.span(),
                6.0 * pump.sigma_p
            )));
        }
    }
    let f = |wa: f64, wb: f64| Complex64::new(crystal.phi(pump, wa, wb), 0.0);
    let coverage = coverage(grid, theta, &f);
    if !(coverage >= COVERAGE_THRESHOLD) {
        return Err(BiphotonError::Coverage {
            coverage,
            threshold: COVERAGE_THRESHOLD,
            span_a: grid.a.span(),
            span_b: grid.b.span(),
        });
    }
    BiphotonAmplitude::from_jsa_fn(grid, theta, f)
}

fn symmetrized(
    grid: &FrequencyGrid,
    theta: f64,
    f: &impl Fn(f64, f64) -> Complex64,
) -> Vec<Complex64> {
    let ph = exchange_phase(theta);
    let mut out = Vec::with_capacity(grid.len());
    for ia in 0..grid.a.size {
        let wa = grid.a.value(ia);
        for ib in 0..grid.b.size {
            let wb = grid.b.value(ib);
            out.push((f(wa, wb) + ph * f(wb, wa)) * FRAC_1_SQRT_2);
        }
    }
    out
}

/// Fraction of the mass on a 3× wider lattice that falls on `grid`.
fn coverage(grid: &FrequencyGrid, theta: f64, f: &impl Fn(f64, f64) -> Complex64) -> f64 {
    let ext = grid.extended(3);
    let ph = exchange_phase(theta);
    let (lo_a, hi_a) = (grid.a.size, 2 * grid.a.size);
    let (lo_b, hi_b) = (grid.b.size, 2 * grid.b.size);
    let mut inner = 0.0;
    let mut total = 0.0;
    for ia in 0..ext.a.size {
        let wa = ext.a.value(ia);
        for ib in 0..ext.b.size {
            let wb = ext.b.value(ib);
            let m = ((f(wa, wb) + ph * f(wb, wa)) * FRAC_1_SQRT_2).norm_sqr();
            total += m;
            if (lo_a..hi_a).contains(&ia) && (lo_b..hi_b).contains(&ib) {
                inner += m;
            }
        }
    }
    if total > 0.0 {
        inner / total
    } else {
        0.0
    }
}

impl BiphotonAmplitude {
    /// Φ_θ = [f(ω_a,ω_b) + e^{iθ} f(ω_b,ω_a)]/√2, L²-normalized on the grid.
    pub fn from_jsa_fn(
        grid: &FrequencyGrid,
        theta: f64,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self, BiphotonError> {
        let values = symmetrized(grid, theta, &f);
        Self::from_values(*grid, theta, values)
    }

    /// Uses the given samples as Φ_θ after L² normalization.
    pub fn from_values(
        grid: FrequencyGrid,
        theta: f64,
        mut values: Vec<Complex64>,
    ) -> Result<Self, BiphotonError> {
        if values.len() != grid.len() {
            return Err(BiphotonError::Grid(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.a.size,
                grid.b.size
            )));
        }
        let cell = grid.a.spacing * grid.b.spacing;
        let norm2: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell;
        if !(norm2 > 0.0 && norm2.is_finite()) {
            return Err(BiphotonError::Degenerate);
        }
        let scale = 1.0 / norm2.sqrt();
        for z in values.iter_mut() {
            *z *= scale;
        }
        Ok(Self {
            theta,
            delay: 0.0,
            delay_arm: DelayArm::A,
            grid,
            values,
            time: None,
        })
    }

    /// Sets the inter-photon delay. An existing time cache is carried over
    /// by the shift theorem.
    pub fn with_delay(&self, s: f64, arm: DelayArm) -> Self {
        let time = self.time.as_ref().map(|td| {
            let mut shifted = td.rebased(self.delay, self.delay_arm);
            shifted.shift(s, arm);
            Arc::new(shifted)
        });
        Self {
            delay: s,
            delay_arm: arm,
            time,
            ..self.clone()
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn delay(&self) -> f64 {
        self.delay
    }
    pub fn delay_arm(&self) -> DelayArm {
        self.delay_arm
    }
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, ia: usize, ib: usize) -> Complex64 {
        self.values[ia * self.grid.b.size + ib]
    }

    /// Frequency-domain value including the delay phase.
    pub fn delayed_value(&self, ia: usize, ib: usize) -> Complex64 {
        let w = match self.delay_arm {
            DelayArm::A => self.grid.a.value(ia),
            DelayArm::B => self.grid.b.value(ib),
        };
        self.value(ia, ib) * Complex64::from_polar(1.0, w * self.delay)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.a.spacing * self.grid.b.spacing
    }

    /// Mean carrier used as the default rotating frame.
    pub fn mean_carrier(&self) -> f64 {
        0.5 * (self.grid.a.center + self.grid.b.center)
    }

    /// Fills the time-domain cache with the default padding (2×).
    pub fn to_time_domain(&self) -> Self {
        self.to_time_domain_padded(2)
    }

    pub fn to_time_domain_padded(&self, pad: usize) -> Self {
        let td = TimeDomain::from_amplitude(self, pad.max(1));
        Self {
            time: Some(Arc::new(td)),
            ..self.clone()
        }
    }

    pub fn time_domain(&self) -> Result<&TimeDomain, BiphotonError> {
        self.time.as_deref().ok_or(BiphotonError::NoTimeDomain)
    }

    pub fn has_time_domain(&self) -> bool {
        self.time.is_some()
    }

    /// Stable byte encoding used for content hashing.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 * self.values.len() + 64);
        for x in [
            self.theta,
            self.delay,
            self.grid.a.center,
            self.grid.a.spacing,
            self.grid.b.center,
            self.grid.b.spacing,
        ] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(&(self.grid.a.size as u64).to_le_bytes());
        out.extend_from_slice(&(self.grid.b.size as u64).to_le_bytes());
        out.push(self.delay_arm as u8);
        for z in &self.values {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    /// |Φ(ω_a, ω_b)|² as an exportable matrix.
    pub fn spectral_intensity(&self) -> IntensityMatrix {
        let ax = |a: &FrequencyAxis| LatticeAxis {
            start: a.value(0),
            step: a.spacing,
            len: a.size,
        };
        IntensityMatrix {
            domain: "frequency".into(),
            axis_a: ax(&self.grid.a),
            axis_b: ax(&self.grid.b),
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

/// Discrete δ(t₁ − t₂ − s) on a lattice of the given spacing.
pub fn delta_limit_amplitude(t1: f64, t2: f64, s: f64, grid_spacing: f64) -> f64 {
    delta_limit_with(t1, t2, s, grid_spacing, DeltaConvention::AreaOne)
}

pub fn delta_limit_with(t1: f64, t2: f64, s: f64, grid_spacing: f64, conv: DeltaConvention) -> f64 {
    if (t1 - t2 - s).abs() < 0.5 * grid_spacing {
        match conv {
            DeltaConvention::AreaOne => 1.0 / grid_spacing,
            DeltaConvention::ValueOne => 1.0,
        }
    } else {
        0.0
    }
}

/// RMS width of |Φ(t₁,t₂)|² along t₁ − t₂.
pub fn entanglement_time(amp: &BiphotonAmplitude) -> Result<f64, BiphotonError> {
    amp.time_domain()?.difference_width()
}

#[cfg(test)]
mod tests;
