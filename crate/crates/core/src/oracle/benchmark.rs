//! Named oracle cross-checks against the Liouville pipeline.

use super::{evolve_perturbative, fourth_order, DetectionModel, DiscretizedField, OracleError};
use crate::biphoton::{build_jsa, BiphotonAmplitude, BiphotonError, CrystalSpec, FrequencyAxis, FrequencyGrid, PhaseMatching, PumpSpec};
use crate::model::{ExcitonSystem, LiouvilleOperatorSet, ModelError};
use crate::pathways::HomSpec;
use crate::signal::{coincidence, QuadratureSpec, ReferenceTime, SignalError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}` (known: {1})")]
    Unknown(String, String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Biphoton(#[from] BiphotonError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A closed three-level ladder probed on a 32-mode, 64-bin lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: &'static str,
    pub omega_eg: f64,
    pub omega_fe: f64,
    pub sigma_p: f64,
    pub entanglement: f64,
    pub modes: usize,
    pub spacing: f64,
    pub bs_removed: bool,
    /// (τ, T, s) in lattice bins.
    pub points: [(u32, u32, u32); 5],
}

const POINTS: [(u32, u32, u32); 5] = [(1, 4, 1), (2, 5, 2), (5, 3, 2), (7, 2, 3), (8, 2, 1)];

pub const BENCHMARKS: &[Benchmark] = &[
    Benchmark {
        name: "ladder3",
        omega_eg: 1.5,
        omega_fe: 1.4,
        sigma_p: 0.2,
        entanglement: 4.0,
        modes: 32,
        spacing: 0.125,
        bs_removed: false,
        points: POINTS,
    },
    Benchmark {
        name: "ladder3_bs_removed",
        omega_eg: 1.5,
        omega_fe: 1.4,
        sigma_p: 0.2,
        entanglement: 4.0,
        modes: 32,
        spacing: 0.125,
        bs_removed: true,
        points: POINTS,
    },
];

pub fn find_benchmark(name: &str) -> Result<&'static Benchmark, BenchmarkError> {
    BENCHMARKS.iter().find(|b| b.name == name).ok_or_else(|| {
        let known: Vec<_> = BENCHMARKS.iter().map(|b| b.name).collect();
        BenchmarkError::Unknown(name.into(), known.join(", "))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub tau: f64,
    pub big_t: f64,
    pub s: f64,
    pub pipeline: f64,
    pub oracle: f64,
}

impl BenchmarkRow {
    pub fn relative_error(&self) -> f64 {
        (self.pipeline - self.oracle).abs() / self.oracle.abs()
    }
}

impl Benchmark {
    /// Mean carrier, also the rotating frame of both routes.
    pub fn carrier(&self) -> f64 {
        0.5 * (self.omega_eg + self.omega_fe)
    }

    pub fn amplitude(&self) -> Result<BiphotonAmplitude, BenchmarkError> {
        let w = self.carrier();
        let ax = FrequencyAxis::new(w, self.spacing, self.modes)?;
        let crystal = CrystalSpec::new(w, w, self.entanglement, -self.entanglement)?
            .with_phase_matching(PhaseMatching::Gaussian);
        Ok(build_jsa(&PumpSpec::new(2.0 * w, self.sigma_p)?, &crystal, 0.0, &FrequencyGrid { a: ax, b: ax })?)
    }

    pub fn run(&self) -> Result<Vec<BenchmarkRow>, BenchmarkError> {
        let frame = self.carrier();
        let base = self.amplitude()?;
        let dt = DiscretizedField::from_amplitude(&base, frame)?.dt;
        let closed = ExcitonSystem::ladder(self.omega_eg, self.omega_fe, 1.0, 1.0, 0.0)?;
        // The pipeline needs η > 0; its floor stands in for the closed system.
        let ops = LiouvilleOperatorSet::in_frame(
            ExcitonSystem::ladder(self.omega_eg, self.omega_fe, 1.0, 1.0, crate::model::ETA_FLOOR)?,
            frame,
        );
        let t = 0.0;
        let q = QuadratureSpec::new(10.0 / ops.min_eta(), dt).with_reference(ReferenceTime::Fixed { t });
        let mut rows = Vec::with_capacity(self.points.len());
        for &(a, b, c) in &self.points {
            let (tau, big_t, s) = (f64::from(a) * dt, f64::from(b) * dt, f64::from(c) * dt);
            let amp = base.with_delay(s, base.delay_arm());
            let hom = HomSpec {
                delay: big_t,
                bs_removed: self.bs_removed,
                ..HomSpec::default()
            };
            let pipeline = coincidence(tau, big_t, s, &amp.to_time_domain_padded(2), &ops, &q, &hom)?;
            let field = DiscretizedField::from_amplitude(&amp, frame)?;
            let ket = evolve_perturbative(&closed, &field, field.time(field.bins - 1), 4)?;
            let oracle = fourth_order(&ket, &hom, t + tau, t, DetectionModel::PathwaySum)?.pipeline_convention();
            rows.push(BenchmarkRow {
                tau,
                big_t,
                s,
                pipeline,
                oracle,
            });
        }
        Ok(rows)
    }
}
