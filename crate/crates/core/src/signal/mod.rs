//! Coincidence signal assembly: per-term double quadrature over (τ₃, τ₄),
//! the signed pathway sum, the short entanglement-time closed form and
//! parallel lattice scans.

mod grid;
mod quad;
mod short_te;

pub use grid::{scan, ParseGridError, ScanAxes, SignalGrid};
pub use quad::{coincidence, coincidence_breakdown, term_value, Breakdown, Evaluator};
pub use short_te::{coincidence_short_te, short_te_terms, short_te_zero_delay, ShortTeTerms};

use crate::biphoton::{BiphotonError, DeltaConvention};
use crate::model::LiouvilleOperatorSet;
use crate::pathways::HomError;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("point (tau={tau}, T={big_t}, s={s}): {reason}")]
    Domain {
        tau: f64,
        big_t: f64,
        s: f64,
        reason: String,
    },
    #[error("axis {0}: {1}")]
    Axis(&'static str, String),
    #[error(transparent)]
    Biphoton(#[from] BiphotonError),
    #[error(transparent)]
    Hom(#[from] HomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    Trapezoid,
    Simpson,
}

/// Detection reference time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceTime {
    /// ⟨t₁⟩ of the delayed amplitude plus an offset.
    Centroid { offset: f64 },
    Fixed { t: f64 },
}

impl Default for ReferenceTime {
    fn default() -> Self {
        ReferenceTime::Centroid { offset: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Upper limit of τ₃ and τ₄ (fs).
    pub cutoff: f64,
    pub step: f64,
    #[serde(default)]
    pub rule: Rule,
    #[serde(default)]
    pub reference: ReferenceTime,
    /// Lattice delta used by the short-T_e gates.
    #[serde(default = "value_one")]
    pub delta: DeltaConvention,
}

fn value_one() -> DeltaConvention {
    DeltaConvention::ValueOne
}

impl QuadratureSpec {
    pub fn new(cutoff: f64, step: f64) -> Self {
        Self {
            cutoff,
            step,
            rule: Rule::Trapezoid,
            reference: ReferenceTime::default(),
            delta: DeltaConvention::ValueOne,
        }
    }

    /// Cutoff 12/η_min with the given step.
    pub fn for_system(ops: &LiouvilleOperatorSet, step: f64) -> Self {
        Self::new(12.0 / ops.min_eta(), step)
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_reference(mut self, reference: ReferenceTime) -> Self {
        self.reference = reference;
        self
    }

    pub fn validate(&self, ops: &LiouvilleOperatorSet) -> Result<(), SignalError> {
        let bad = |m: String| Err(SignalError::Quadrature(m));
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step = {} must be finite and > 0", self.step));
        }
        if !self.cutoff.is_finite() {
            return bad(format!("cutoff = {} must be finite", self.cutoff));
        }
        let min_cutoff = 10.0 / ops.min_eta();
        if self.cutoff < min_cutoff * (1.0 - 1e-12) {
            return bad(format!(
                "cutoff = {} fs is below 10/eta_min = {min_cutoff} fs",
                self.cutoff
            ));
        }
        let w = ops.max_frequency();
        if w > 0.0 {
            let max_step = 0.1 * 2.0 * std::f64::consts::PI / w;
            if self.step > max_step * (1.0 + 1e-12) {
                return bad(format!(
                    "step = {} fs exceeds 0.1*2pi/omega_max = {max_step} fs",
                    self.step
                ));
            }
        }
        let t = match self.reference {
            ReferenceTime::Centroid { offset } => offset,
            ReferenceTime::Fixed { t } => t,
        };
        if !t.is_finite() {
            return bad("reference time must be finite".into());
        }
        Ok(())
    }

    /// Number of panels; the rule spans [0, panels·step].
    pub fn panels(&self) -> usize {
        let n = (self.cutoff / self.step - 1e-9).ceil().max(1.0) as usize;
        match self.rule {
            Rule::Trapezoid => n,
            Rule::Simpson => n + (n % 2),
        }
    }

    /// Weight of node k of the rule.
    pub fn weight(&self, k: usize) -> f64 {
        let n = self.panels();
        let h = self.step;
        if k > n {
            return 0.0;
        }
        match self.rule {
            Rule::Trapezoid => {
                if k == 0 || k == n {
                    0.5 * h
                } else {
                    h
                }
            }
            Rule::Simpson => {
                if k == 0 || k == n {
                    h / 3.0
                } else if k % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                }
            }
        }
    }
}

impl fmt::Display for QuadratureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            Rule::Trapezoid => "trapezoid",
            Rule::Simpson => "simpson",
        };
        let reference = match self.reference {
            ReferenceTime::Centroid { offset } => format!("centroid{offset:+e}"),
            ReferenceTime::Fixed { t } => format!("fixed{t:+e}"),
        };
        let delta = match self.delta {
            DeltaConvention::ValueOne => "value_one",
            DeltaConvention::AreaOne => "area_one",
        };
        write!(
            f,
            "cutoff={:e} step={:e} rule={rule} t={reference} delta={delta}",
            self.cutoff, self.step
        )
    }
}

impl FromStr for QuadratureSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut q = QuadratureSpec::new(f64::NAN, f64::NAN);
        let num = |v: &str| match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("invalid number `{v}`")),
        };
        for kv in s.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("malformed field `{kv}`"))?;
            match k {
                "cutoff" => q.cutoff = num(v)?,
                "step" => q.step = num(v)?,
                "rule" => {
                    q.rule = match v {
                        "trapezoid" => Rule::Trapezoid,
                        "simpson" => Rule::Simpson,
                        _ => return Err(format!("unknown rule `{v}`")),
                    }
                }
                "t" => {
                    q.reference = if let Some(x) = v.strip_prefix("centroid") {
                        ReferenceTime::Centroid { offset: num(x)? }
                    } else if let Some(x) = v.strip_prefix("fixed") {
                        ReferenceTime::Fixed { t: num(x)? }
                    } else {
                        return Err(format!("unknown reference `{v}`"));
                    }
                }
                "delta" => {
                    q.delta = match v {
                        "value_one" => DeltaConvention::ValueOne,
                        "area_one" => DeltaConvention::AreaOne,
                        _ => return Err(format!("unknown delta convention `{v}`")),
                    }
                }
                _ => return Err(format!("unknown field `{k}`")),
            }
        }
        if q.cutoff.is_nan() || q.step.is_nan() {
            return Err("quadrature needs cutoff and step".into());
        }
        Ok(q)
    }
}

/// Which signal a scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Mode {
    #[default]
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "short_Te")]
    ShortTe,
    #[serde(rename = "bs_removed")]
    BsRemoved,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::ShortTe => "short_Te",
            Mode::BsRemoved => "bs_removed",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "short_Te" | "short_te" => Ok(Mode::ShortTe),
            "bs_removed" => Ok(Mode::BsRemoved),
            _ => Err(format!("unknown mode `{s}` (full, short_Te, bs_removed)")),
        }
    }
}

#[cfg(test)]
mod tests;
