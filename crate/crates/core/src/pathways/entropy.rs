use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("probability {index} is {value}, expected a finite value ≥ 0")]
    Negative { index: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("Q[{0}] = 0 where P[{0}] > 0")]
    NotAbsolutelyContinuous(usize),
    #[error("all pathway weights vanish")]
    ZeroWeight,
}

fn check(p: &[f64]) -> Result<(), EntropyError> {
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(EntropyError::Negative { index, value });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(EntropyError::NotNormalized(sum));
    }
    Ok(())
}

/// Shannon entropy in nats.
pub fn pathway_entropy(p: &[f64]) -> Result<f64, EntropyError> {
    check(p)?;
    Ok(-p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>())
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, EntropyError> {
    if p.len() != q.len() {
        return Err(EntropyError::Length(p.len(), q.len()));
    }
    check(p)?;
    check(q)?;
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(EntropyError::NotAbsolutelyContinuous(i));
        }
        d += pi * (pi / qi).ln();
    }
    Ok(d.max(0.0))
}

/// Maps per-correlator summed contributions to unnormalized weights.
pub trait PathwayWeighting {
    fn weight(&self, contribution: Complex64) -> f64;
}

/// Weight |Σ_ν S_{ν,i}|.
#[derive(Debug, Clone, Copy, Default)]
pub struct MagnitudeWeighting;

impl PathwayWeighting for MagnitudeWeighting {
    fn weight(&self, contribution: Complex64) -> f64 {
        contribution.norm()
    }
}

pub fn pathway_probabilities(
    contributions: &[Complex64],
    weighting: &dyn PathwayWeighting,
) -> Result<Vec<f64>, EntropyError> {
    let w: Vec<f64> = contributions.iter().map(|c| weighting.weight(*c)).collect();
    for (index, &value) in w.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(EntropyError::Negative { index, value });
        }
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(EntropyError::ZeroWeight);
    }
    Ok(w.into_iter().map(|x| x / total).collect())
}
