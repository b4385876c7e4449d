use super::{QuadratureSpec, SignalError};
use crate::biphoton::DeltaConvention;
use crate::model::{Correlator, CorrelatorExpansion, LiouvilleOperatorSet};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Individual contributions of the short entanglement-time closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShortTeTerms {
    /// F₁(T, τ+T−s, 2s−T)
    pub f1: Complex64,
    /// F₂(2T+τ−s, s−T−τ, τ+s)
    pub f2: Complex64,
    /// F₃(T, τ+s, T−2s)
    pub f3_first: Complex64,
    /// F₃(T+τ, s−2T−τ, T+τ)
    pub f3_second: Complex64,
    /// δ_{τ,s}·∫dτ₃ F₅(|τ|, τ₃, |τ|)
    pub f5_direct: Complex64,
    /// δ_{2T+τ,s}·∫dτ₃ F₅(|τ|, τ₃, 2T+τ)
    pub f5_exchange: Complex64,
}

impl ShortTeTerms {
    pub fn value(&self) -> f64 {
        let bracket = -(self.f1 + self.f2 + self.f3_first + self.f3_second) + 2.0 * self.f5_direct
            - 2.0 * self.f5_exchange;
        2.0 * bracket.re
    }

    pub fn as_array(&self) -> [Complex64; 6] {
        [
            self.f1,
            self.f2,
            self.f3_first,
            self.f3_second,
            self.f5_direct,
            self.f5_exchange,
        ]
    }
}

fn gate(x: f64, s: f64, q: &QuadratureSpec) -> f64 {
    if (x - s).abs() < 0.5 * q.step {
        match q.delta {
            DeltaConvention::ValueOne => 1.0,
            DeltaConvention::AreaOne => 1.0 / q.step,
        }
    } else {
        0.0
    }
}

fn line_integral(f5: &CorrelatorExpansion, a: f64, c: f64, q: &QuadratureSpec) -> Complex64 {
    (0..=q.panels())
        .map(|k| f5.eval(a, k as f64 * q.step, c) * q.weight(k))
        .sum()
}

/// Term-by-term closed form without domain guards.
pub fn short_te_terms(
    tau: f64,
    big_t: f64,
    s: f64,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
) -> Result<ShortTeTerms, SignalError> {
    q.validate(ops)?;
    let f = |c: Correlator| CorrelatorExpansion::new(c, ops);
    let (f1, f2, f3, f5) = (f(Correlator::F1), f(Correlator::F2), f(Correlator::F3), f(Correlator::F5));
    let on = tau + big_t >= 0.0;
    let step = |v: Complex64| if on { v } else { ZERO };
    let at = tau.abs();
    let g_direct = gate(tau, s, q);
    let g_exchange = gate(2.0 * big_t + tau, s, q);
    Ok(ShortTeTerms {
        f1: step(f1.eval(big_t, tau + big_t - s, 2.0 * s - big_t)),
        f2: step(f2.eval(2.0 * big_t + tau - s, s - big_t - tau, tau + s)),
        f3_first: step(f3.eval(big_t, tau + s, big_t - 2.0 * s)),
        f3_second: step(f3.eval(big_t + tau, s - 2.0 * big_t - tau, big_t + tau)),
        f5_direct: if g_direct != 0.0 && at > 0.0 {
            line_integral(&f5, at, at, q) * g_direct
        } else {
            ZERO
        },
        f5_exchange: if g_exchange != 0.0 {
            line_integral(&f5, at, 2.0 * big_t + tau, q) * g_exchange
        } else {
            ZERO
        },
    })
}

/// Closed-form signal, valid for τ ≥ −T and s > 0.
pub fn coincidence_short_te(
    tau: f64,
    big_t: f64,
    s: f64,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
) -> Result<f64, SignalError> {
    let domain = |reason: &str| SignalError::Domain {
        tau,
        big_t,
        s,
        reason: reason.into(),
    };
    if !(s > 0.0) {
        return Err(domain("short_Te requires s > 0"));
    }
    if !(tau >= -big_t) {
        return Err(domain("short_Te requires tau >= -T"));
    }
    Ok(short_te_terms(tau, big_t, s, ops, q)?.value())
}

/// The s = 0 case: only −θ(τ+T)·F₃(T, τ, T) remains.
pub fn short_te_zero_delay(
    tau: f64,
    big_t: f64,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
) -> Result<f64, SignalError> {
    q.validate(ops)?;
    if tau + big_t < 0.0 {
        return Ok(0.0);
    }
    let f3 = CorrelatorExpansion::new(Correlator::F3, ops);
    Ok(-2.0 * f3.eval(big_t, tau, big_t).re)
}
