//! TOML run configuration. Key names carry their units.

use super::ConfigError;
use crate::biphoton::{
    build_jsa, BiphotonAmplitude, CrystalSpec, DelayArm, DeltaConvention, FrequencyAxis, FrequencyGrid, PhaseMatching,
    PumpSpec,
};
use crate::model::{Dephasing, ExcitonSystem, Level, LiouvilleOperatorSet, Manifold};
use crate::pathways::HomSpec;
use crate::signal::{Mode, QuadratureSpec, ReferenceTime, Rule, ScanAxes};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub system: SystemConfig,
    #[serde(default)]
    pub dephasing: DephasingConfig,
    pub pump: PumpConfig,
    pub crystal: CrystalConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub preparation: PreparationConfig,
    #[serde(default)]
    pub hom: HomConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("signal.tsv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub label: String,
    pub manifold: Manifold,
    pub energy_rad_per_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub levels: Vec<LevelConfig>,
    /// Rows are e levels, columns g levels.
    pub dipoles_ge: Vec<Vec<f64>>,
    /// Rows are f levels, columns e levels.
    #[serde(default)]
    pub dipoles_ef: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRate {
    pub i: usize,
    pub j: usize,
    pub rate_per_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingConfig {
    #[serde(default = "default_eta")]
    pub default_per_fs: f64,
    #[serde(default)]
    pub pairs: Vec<PairRate>,
}

fn default_eta() -> f64 {
    0.02
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self {
            default_per_fs: default_eta(),
            pairs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub omega_p_rad_per_fs: f64,
    pub sigma_p_rad_per_fs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalConfig {
    /// Defaults to half the pump frequency.
    pub omega_a_rad_per_fs: Option<f64>,
    pub omega_b_rad_per_fs: Option<f64>,
    pub t_a_fs: f64,
    pub t_b_fs: f64,
    #[serde(default)]
    pub phase_matching: PhaseMatching,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Frequency samples per axis.
    pub size: Option<usize>,
    /// Defaults to the narrowest span 12 σ_p · 2^k that covers the amplitude.
    pub spacing_rad_per_fs: Option<f64>,
    /// Zero-padding factor of the time-domain transform.
    pub pad: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    #[serde(default)]
    pub theta_rad: f64,
    #[serde(default)]
    pub delay_arm: DelayArm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    #[serde(default = "half_root")]
    pub t: f64,
    #[serde(default = "half_root")]
    pub r: f64,
    #[serde(default)]
    pub bs_removed: bool,
}

fn half_root() -> f64 {
    FRAC_1_SQRT_2
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            t: FRAC_1_SQRT_2,
            r: FRAC_1_SQRT_2,
            bs_removed: false,
        }
    }
}

/// Either explicit values or an arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_fs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_fs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

impl Default for AxisConfig {
    fn default() -> Self {
        Self::values(vec![0.0])
    }
}

impl AxisConfig {
    pub fn values(v: Vec<f64>) -> Self {
        Self {
            values_fs: Some(v),
            start_fs: None,
            step_fs: None,
            count: None,
        }
    }

    fn resolve(&self, field: &str) -> Result<Vec<f64>, ConfigError> {
        let v = match (self.values_fs.as_ref(), self.start_fs, self.step_fs, self.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(_), Some(_), Some(n)) if n > MAX_AXIS => {
                return Err(invalid(field, format!("count must be <= {MAX_AXIS}")))
            }
            (None, Some(a), Some(h), Some(n)) => ScanAxes::range(a, h, n),
            _ => {
                return Err(invalid(
                    field,
                    "give either `values_fs` or all of `start_fs`, `step_fs`, `count`",
                ))
            }
        };
        if v.is_empty() {
            return Err(invalid(field, "axis must be non-empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid(field, "axis values must be finite"));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(invalid(field, "axis values must be strictly monotone"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default)]
    pub tau: AxisConfig,
    #[serde(default, rename = "T")]
    pub big_t: AxisConfig,
    #[serde(default)]
    pub s: AxisConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Centroid,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Defaults to 12/η_min.
    pub cutoff_fs: Option<f64>,
    /// Defaults to 0.05·2π/ω_max in the rotating frame.
    pub step_fs: Option<f64>,
    pub rule: Option<Rule>,
    pub reference: Option<ReferenceKind>,
    /// Centroid offset or fixed detection time.
    pub reference_t_fs: Option<f64>,
    pub delta: Option<DeltaConvention>,
    /// Defaults to the mean carrier.
    pub frame_rad_per_fs: Option<f64>,
}

const MAX_GRID: usize = 8192;
const MAX_AXIS: usize = 1 << 20;

/// Key paths that have no default.
const REQUIRED: &[&str] = &[
    "system.levels",
    "system.dipoles_ge",
    "pump.omega_p_rad_per_fs",
    "pump.sigma_p_rad_per_fs",
    "crystal.t_a_fs",
    "crystal.t_b_fs",
];

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn matrix(field: &str, rows: &[Vec<f64>], shape: (usize, usize)) -> Result<Array2<Complex64>, ConfigError> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(invalid(
            field,
            format!("expected a {}x{} matrix (rows x columns)", shape.0, shape.1),
        ));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(Array2::from_shape_fn(shape, |(i, j)| Complex64::new(rows[i][j], 0.0)))
}

/// Domain objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub ops: LiouvilleOperatorSet,
    /// Undelayed amplitude with its time-domain cache.
    pub amplitude: BiphotonAmplitude,
    pub hom: HomSpec,
    pub quadrature: QuadratureSpec,
    pub axes: ScanAxes,
    pub mode: Mode,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for path in REQUIRED {
            let mut node = Some(&table);
            let mut parts = path.split('.').peekable();
            while let Some(p) = parts.next() {
                let t = node.expect("walked past a leaf");
                match t.get(p) {
                    None => return Err(ConfigError::Missing(path.to_string())),
                    Some(v) if parts.peek().is_some() => {
                        node = Some(v.as_table().ok_or_else(|| invalid(p, "must be a table"))?);
                    }
                    Some(_) => {}
                }
            }
        }
        let raw: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        raw.resolve_defaults()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every defaulted field and checks all invariants.
    fn resolve_defaults(mut self) -> Result<Self, ConfigError> {
        if self.hom.bs_removed {
            match self.mode {
                Mode::Full => self.mode = Mode::BsRemoved,
                Mode::BsRemoved => {}
                Mode::ShortTe => return Err(invalid("hom.bs_removed", "cannot be combined with mode short_Te")),
            }
        }
        if self.mode == Mode::BsRemoved {
            self.hom.bs_removed = true;
        }
        let sigma = self.pump.sigma_p_rad_per_fs;
        positive("pump.sigma_p_rad_per_fs", sigma)?;
        positive("pump.omega_p_rad_per_fs", self.pump.omega_p_rad_per_fs)?;
        let half = 0.5 * self.pump.omega_p_rad_per_fs;
        self.crystal.omega_a_rad_per_fs.get_or_insert(half);
        self.crystal.omega_b_rad_per_fs.get_or_insert(half);
        let size = *self.grid.size.get_or_insert(64);
        if !(2..=MAX_GRID).contains(&size) {
            return Err(invalid("grid.size", format!("must be in 2..={MAX_GRID}")));
        }
        if self.grid.spacing_rad_per_fs.is_none() {
            self.grid.spacing_rad_per_fs = Some(self.default_spacing(size)?);
        }
        let pad = *self.grid.pad.get_or_insert(2);
        if pad == 0 || pad * size > MAX_GRID {
            return Err(invalid("grid.pad", format!("must be >= 1 with pad * size <= {MAX_GRID}")));
        }
        for (name, a) in [("scan.tau", &mut self.scan.tau), ("scan.T", &mut self.scan.big_t), ("scan.s", &mut self.scan.s)] {
            *a = AxisConfig::values(a.resolve(name)?);
        }
        finite("preparation.theta_rad", self.preparation.theta_rad)?;
        let frame = self.frame();
        self.quadrature.frame_rad_per_fs = Some(frame);
        let ops = self.operators()?;
        let q = &mut self.quadrature;
        q.cutoff_fs.get_or_insert(12.0 / ops.min_eta());
        let w = ops.max_frequency();
        q.step_fs.get_or_insert(if w > 0.0 { 0.05 * 2.0 * PI / w } else { 0.5 });
        q.rule.get_or_insert(Rule::Trapezoid);
        q.reference.get_or_insert(ReferenceKind::Centroid);
        q.reference_t_fs.get_or_insert(0.0);
        q.delta.get_or_insert(DeltaConvention::ValueOne);
        self.resolve()?;
        Ok(self)
    }

    fn default_spacing(&self, size: usize) -> Result<f64, ConfigError> {
        let pump = PumpSpec::new(self.pump.omega_p_rad_per_fs, self.pump.sigma_p_rad_per_fs)
            .map_err(|e| invalid("pump", e.to_string()))?;
        let c = &self.crystal;
        let (wa, wb) = (c.omega_a_rad_per_fs.unwrap_or(0.0), c.omega_b_rad_per_fs.unwrap_or(0.0));
        let crystal = CrystalSpec::new(wa, wb, c.t_a_fs, c.t_b_fs)
            .map_err(|e| invalid("crystal", e.to_string()))?
            .with_phase_matching(c.phase_matching);
        let mut last = None;
        for k in 0..6 {
            let spacing = 12.0 * self.pump.sigma_p_rad_per_fs * f64::from(1 << k) / size as f64;
            let axis = |w| FrequencyAxis::new(w, spacing, size).map_err(|e| invalid("grid", e.to_string()));
            let grid = FrequencyGrid { a: axis(wa)?, b: axis(wb)? };
            match build_jsa(&pump, &crystal, self.preparation.theta_rad, &grid) {
                Ok(_) => return Ok(spacing),
                Err(e) => last = Some(e),
            }
        }
        Err(invalid(
            "grid.spacing_rad_per_fs",
            format!("no default spacing covers the amplitude ({}); set grid.size and grid.spacing_rad_per_fs", last.expect("tried")),
        ))
    }

    fn system(&self) -> Result<ExcitonSystem, ConfigError> {
        let s = &self.system;
        let count = |m| s.levels.iter().filter(|l| l.manifold == m).count();
        let (ng, ne, nf) = (count(Manifold::G), count(Manifold::E), count(Manifold::F));
        let ge = matrix("system.dipoles_ge", &s.dipoles_ge, (ne, ng))?;
        let ef = matrix("system.dipoles_ef", &s.dipoles_ef, (nf, ne))?;
        let d = &self.dephasing;
        if !(d.default_per_fs >= 0.0 && d.default_per_fs.is_finite()) {
            return Err(invalid(
                "dephasing.default_per_fs",
                format!("must be finite and >= 0, got {}", d.default_per_fs),
            ));
        }
        let mut deph = Dephasing::uniform(d.default_per_fs);
        for (k, p) in d.pairs.iter().enumerate() {
            let field = format!("dephasing.pairs[{k}]");
            if !(p.rate_per_fs >= 0.0 && p.rate_per_fs.is_finite()) {
                return Err(invalid(&field, format!("rate_per_fs must be finite and >= 0, got {}", p.rate_per_fs)));
            }
            if p.i >= s.levels.len() || p.j >= s.levels.len() {
                return Err(invalid(&field, "level index out of range"));
            }
            deph = deph.with_pair(p.i, p.j, p.rate_per_fs);
        }
        let levels = s
            .levels
            .iter()
            .map(|l| Level::new(l.label.clone(), l.manifold, l.energy_rad_per_fs))
            .collect();
        ExcitonSystem::new(levels, ge, ef, deph).map_err(|e| invalid("system", e.to_string()))
    }

    fn frame(&self) -> f64 {
        let c = &self.crystal;
        self.quadrature.frame_rad_per_fs.unwrap_or_else(|| {
            let half = 0.5 * self.pump.omega_p_rad_per_fs;
            0.5 * (c.omega_a_rad_per_fs.unwrap_or(half) + c.omega_b_rad_per_fs.unwrap_or(half))
        })
    }

    fn operators(&self) -> Result<LiouvilleOperatorSet, ConfigError> {
        let frame = self.frame();
        finite("quadrature.frame_rad_per_fs", frame)?;
        Ok(LiouvilleOperatorSet::in_frame(self.system()?, frame))
    }

    /// Builds the domain objects; requires a config returned by `load_config`.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let missing = |f: &str| invalid(f, "unresolved default; load the config through load_config");
        let ops = self.operators()?;
        let c = &self.crystal;
        let pump = PumpSpec::new(self.pump.omega_p_rad_per_fs, self.pump.sigma_p_rad_per_fs)
            .map_err(|e| invalid("pump", e.to_string()))?;
        let wa = c.omega_a_rad_per_fs.ok_or_else(|| missing("crystal.omega_a_rad_per_fs"))?;
        let wb = c.omega_b_rad_per_fs.ok_or_else(|| missing("crystal.omega_b_rad_per_fs"))?;
        let crystal = CrystalSpec::new(wa, wb, c.t_a_fs, c.t_b_fs)
            .map_err(|e| invalid("crystal", e.to_string()))?
            .with_phase_matching(c.phase_matching);
        let size = self.grid.size.ok_or_else(|| missing("grid.size"))?;
        let spacing = self.grid.spacing_rad_per_fs.ok_or_else(|| missing("grid.spacing_rad_per_fs"))?;
        positive("grid.spacing_rad_per_fs", spacing)?;
        let axis = |w| FrequencyAxis::new(w, spacing, size).map_err(|e| invalid("grid", e.to_string()));
        let grid = FrequencyGrid { a: axis(wa)?, b: axis(wb)? };
        let amplitude = build_jsa(&pump, &crystal, self.preparation.theta_rad, &grid)
            .map_err(|e| invalid("grid", e.to_string()))?
            .with_delay(0.0, self.preparation.delay_arm)
            .to_time_domain_padded(self.grid.pad.ok_or_else(|| missing("grid.pad"))?);
        let h = &self.hom;
        let hom = HomSpec {
            bs_removed: h.bs_removed,
            ..HomSpec::new(0.0, h.t, h.r).map_err(|e| invalid("hom", e.to_string()))?
        };
        let q = &self.quadrature;
        let t = q.reference_t_fs.ok_or_else(|| missing("quadrature.reference_t_fs"))?;
        let reference = match q.reference.ok_or_else(|| missing("quadrature.reference"))? {
            ReferenceKind::Centroid => ReferenceTime::Centroid { offset: t },
            ReferenceKind::Fixed => ReferenceTime::Fixed { t },
        };
        let mut quadrature = QuadratureSpec::new(
            q.cutoff_fs.ok_or_else(|| missing("quadrature.cutoff_fs"))?,
            q.step_fs.ok_or_else(|| missing("quadrature.step_fs"))?,
        )
        .with_rule(q.rule.ok_or_else(|| missing("quadrature.rule"))?)
        .with_reference(reference);
        quadrature.delta = q.delta.ok_or_else(|| missing("quadrature.delta"))?;
        quadrature.validate(&ops).map_err(|e| invalid("quadrature", e.to_string()))?;
        let axes = ScanAxes {
            tau: self.scan.tau.resolve("scan.tau")?,
            big_t: self.scan.big_t.resolve("scan.T")?,
            s: self.scan.s.resolve("scan.s")?,
        };
        Ok(Resolved {
            ops,
            amplitude,
            hom,
            quadrature,
            axes,
            mode: self.mode,
        })
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml(&text)
}
