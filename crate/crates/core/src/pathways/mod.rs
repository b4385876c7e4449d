//! Detection transformation, Liouville pathway enumeration, the per-pathway
//! term recipes and pathway-entropy diagnostics.

mod detection;
mod entropy;
mod enumerate;
mod table;

pub use detection::{
    detection_combinations, detection_pathways, Channel, DetectionCombination, DetectionPathway, Mode, Nu,
};
pub use entropy::{
    kl_divergence, pathway_entropy, pathway_probabilities, EntropyError, MagnitudeWeighting,
    PathwayWeighting,
};
pub use enumerate::{enumerate_interaction_pathways, Arrow, Filter, InteractionPathway};
pub use table::{term_table, Affine, PathwayTerm, SubTerm, TimeVars};

use crate::biphoton::BiphotonAmplitude;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomError {
    #[error("hom: t_coeff² + r_coeff² = {0}, expected 1")]
    NotUnitary(f64),
    #[error("hom: {0} must be finite")]
    NonFinite(&'static str),
    #[error("bare coincidence needs a square frequency grid")]
    NonSquareGrid,
}

/// Beam-splitter stage: delay T (fs) and real transmission/reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomSpec {
    pub delay: f64,
    pub t_coeff: f64,
    pub r_coeff: f64,
    /// Detect without the beam splitter (direct O_I channel only).
    #[serde(default)]
    pub bs_removed: bool,
}

impl Default for HomSpec {
    fn default() -> Self {
        Self {
            delay: 0.0,
            t_coeff: std::f64::consts::FRAC_1_SQRT_2,
            r_coeff: std::f64::consts::FRAC_1_SQRT_2,
            bs_removed: false,
        }
    }
}

impl HomSpec {
    pub fn new(delay: f64, t_coeff: f64, r_coeff: f64) -> Result<Self, HomError> {
        let s = Self {
            delay,
            t_coeff,
            r_coeff,
            bs_removed: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn balanced(delay: f64) -> Self {
        Self {
            delay,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HomError> {
        for (name, v) in [("T", self.delay), ("t_coeff", self.t_coeff), ("r_coeff", self.r_coeff)] {
            if !v.is_finite() {
                return Err(HomError::NonFinite(name));
            }
        }
        let n = self.t_coeff * self.t_coeff + self.r_coeff * self.r_coeff;
        if (n - 1.0).abs() > 1e-12 {
            return Err(HomError::NotUnitary(n));
        }
        Ok(())
    }
}

pub type Matrix2 = [[Complex64; 2]; 2];

/// [[t, i·r·e^{iωT}], [i·r·e^{−iωT}, t]].
pub fn hom_matrix(omega: f64, hom: &HomSpec) -> Matrix2 {
    let t = Complex64::new(hom.t_coeff, 0.0);
    let ir = Complex64::new(0.0, hom.r_coeff);
    let ph = Complex64::from_polar(1.0, omega * hom.delay);
    [[t, ir * ph], [ir * ph.conj(), t]]
}

/// Zeroth-order coincidence probability of the bare pair after the beam
/// splitter, summed over both output frequencies.
pub fn bare_hom_coincidence(amp: &BiphotonAmplitude, hom: &HomSpec) -> Result<f64, HomError> {
    let g = amp.grid();
    if !g.is_square() {
        return Err(HomError::NonSquareGrid);
    }
    let n = g.a.size;
    let cell = g.a.spacing * g.b.spacing;
    let m: Vec<Matrix2> = (0..n).map(|k| hom_matrix(g.a.value(k), hom)).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let amp_ij = m[i][0][0] * m[j][1][1] * amp.value(i, j) + m[i][0][1] * m[j][1][0] * amp.value(j, i);
            total += amp_ij.norm_sqr();
        }
    }
    Ok(total * cell)
}

#[cfg(test)]
mod tests;
