//! Exciton level structure, Liouville-space propagation and the four-point
//! dipole correlators.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Smallest dephasing rate used in propagation (1/fs).
pub const ETA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("system needs at least one {0} level")]
    MissingManifold(&'static str),
    #[error("level `{label}` has non-finite energy")]
    NonFiniteEnergy { label: String },
    #[error("manifold ordering violated: {0}")]
    ManifoldOrder(String),
    #[error("dipole matrix `{name}` has shape {got:?}, expected {expected:?}")]
    DipoleShape {
        name: &'static str,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("dipole matrix `{0}` has non-finite entries")]
    NonFiniteDipole(&'static str),
    #[error("dephasing: {0}")]
    Dephasing(String),
    #[error("initial state: {0}")]
    InitialState(String),
    #[error("state dimension {got} does not match system dimension {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("correlator index {0} outside 1..=5")]
    CorrelatorIndex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    G,
    E,
    F,
}

impl Manifold {
    /// Number of excitations carried by the manifold.
    pub fn excitations(self) -> u8 {
        match self {
            Manifold::G => 0,
            Manifold::E => 1,
            Manifold::F => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub label: String,
    pub manifold: Manifold,
    /// Angular frequency in rad/fs.
    pub energy: f64,
}

impl Level {
    pub fn new(label: impl Into<String>, manifold: Manifold, energy: f64) -> Self {
        Self {
            label: label.into(),
            manifold,
            energy,
        }
    }
}

/// Pair-resolved dephasing rates with a uniform default.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dephasing {
    pub default: f64,
    /// Keys are unordered level-index pairs stored as (min, max).
    pub pairs: BTreeMap<(usize, usize), f64>,
}

impl Dephasing {
    pub fn uniform(eta: f64) -> Self {
        Self {
            default: eta,
            pairs: BTreeMap::new(),
        }
    }

    pub fn with_pair(mut self, i: usize, j: usize, eta: f64) -> Self {
        self.pairs.insert((i.min(j), i.max(j)), eta);
        self
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        *self.pairs.get(&(i.min(j), i.max(j))).unwrap_or(&self.default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonSystem {
    levels: Vec<Level>,
    dipoles_ge: Array2<Complex64>,
    dipoles_ef: Array2<Complex64>,
    dephasing: Dephasing,
    /// Populations over the g levels (in g-index order); sums to one.
    initial_weights: Vec<f64>,
    g_idx: Vec<usize>,
    e_idx: Vec<usize>,
    f_idx: Vec<usize>,
}

impl ExcitonSystem {
    /// Builds a system whose initial state is the lowest g level.
    pub fn new(
        levels: Vec<Level>,
        dipoles_ge: Array2<Complex64>,
        dipoles_ef: Array2<Complex64>,
        dephasing: Dephasing,
    ) -> Result<Self, ModelError> {
        let idx = |m: Manifold| -> Vec<usize> {
            levels
                .iter()
                .enumerate()
                .filter(|(_, l)| l.manifold == m)
                .map(|(k, _)| k)
                .collect()
        };
        let (g_idx, e_idx, f_idx) = (idx(Manifold::G), idx(Manifold::E), idx(Manifold::F));
        if g_idx.is_empty() {
            return Err(ModelError::MissingManifold("g"));
        }
        if e_idx.is_empty() {
            return Err(ModelError::MissingManifold("e"));
        }
        for l in &levels {
            if !l.energy.is_finite() {
                return Err(ModelError::NonFiniteEnergy {
                    label: l.label.clone(),
                });
            }
        }
        let max_of = |ix: &[usize]| ix.iter().map(|&k| levels[k].energy).fold(f64::MIN, f64::max);
        let min_of = |ix: &[usize]| ix.iter().map(|&k| levels[k].energy).fold(f64::MAX, f64::min);
        if min_of(&e_idx) < max_of(&g_idx) {
            return Err(ModelError::ManifoldOrder(
                "every e energy must be >= every g energy".into(),
            ));
        }
        if !f_idx.is_empty() && min_of(&f_idx) < max_of(&e_idx) {
            return Err(ModelError::ManifoldOrder(
                "every f energy must be >= every e energy".into(),
            ));
        }
        let check_shape = |name, m: &Array2<Complex64>, expected: (usize, usize)| {
            if m.dim() != expected {
                return Err(ModelError::DipoleShape {
                    name,
                    got: m.dim(),
                    expected,
                });
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ModelError::NonFiniteDipole(name));
            }
            Ok(())
        };
        check_shape("dipoles_ge", &dipoles_ge, (e_idx.len(), g_idx.len()))?;
        check_shape("dipoles_ef", &dipoles_ef, (f_idx.len(), e_idx.len()))?;
        if !(dephasing.default >= 0.0 && dephasing.default.is_finite()) {
            return Err(ModelError::Dephasing(format!(
                "default rate {} must be finite and >= 0",
                dephasing.default
            )));
        }
        for (&(i, j), &r) in &dephasing.pairs {
            if i >= levels.len() || j >= levels.len() {
                return Err(ModelError::Dephasing(format!("pair ({i},{j}) out of range")));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return Err(ModelError::Dephasing(format!(
                    "rate {r} for pair ({i},{j}) must be finite and >= 0"
                )));
            }
        }
        let lowest = (0..g_idx.len())
            .min_by(|&a, &b| levels[g_idx[a]].energy.total_cmp(&levels[g_idx[b]].energy))
            .unwrap_or(0);
        let mut initial_weights = vec![0.0; g_idx.len()];
        initial_weights[lowest] = 1.0;
        Ok(Self {
            levels,
            dipoles_ge,
            dipoles_ef,
            dephasing,
            initial_weights,
            g_idx,
            e_idx,
            f_idx,
        })
    }

    /// Replaces the initial state by a mixture over g levels.
    pub fn with_initial_weights(mut self, weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() != self.g_idx.len() {
            return Err(ModelError::InitialState(format!(
                "{} weights for {} g levels",
                weights.len(),
                self.g_idx.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(ModelError::InitialState("weights must be >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ModelError::InitialState(format!("weights sum to {total}, not 1")));
        }
        self.initial_weights = weights;
        Ok(self)
    }

    /// Three-level ladder g, e, f with real dipoles.
    pub fn ladder(omega_eg: f64, omega_fe: f64, mu_ge: f64, mu_ef: f64, eta: f64) -> Result<Self, ModelError> {
        Self::new(
            vec![
                Level::new("g", Manifold::G, 0.0),
                Level::new("e", Manifold::E, omega_eg),
                Level::new("f", Manifold::F, omega_eg + omega_fe),
            ],
            Array2::from_elem((1, 1), Complex64::new(mu_ge, 0.0)),
            Array2::from_elem((1, 1), Complex64::new(mu_ef, 0.0)),
            Dephasing::uniform(eta),
        )
    }

    /// Two-level system g, e.
    pub fn two_level(omega_eg: f64, mu: f64, eta: f64) -> Result<Self, ModelError> {
        Self::new(
            vec![
                Level::new("g", Manifold::G, 0.0),
                Level::new("e", Manifold::E, omega_eg),
            ],
            Array2::from_elem((1, 1), Complex64::new(mu, 0.0)),
            Array2::zeros((0, 1)),
            Dephasing::uniform(eta),
        )
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }
    pub fn dim(&self) -> usize {
        self.levels.len()
    }
    pub fn dipoles_ge(&self) -> &Array2<Complex64> {
        &self.dipoles_ge
    }
    pub fn dipoles_ef(&self) -> &Array2<Complex64> {
        &self.dipoles_ef
    }
    pub fn dephasing(&self) -> &Dephasing {
        &self.dephasing
    }
    pub fn initial_weights(&self) -> &[f64] {
        &self.initial_weights
    }
    pub fn g_levels(&self) -> &[usize] {
        &self.g_idx
    }
    pub fn e_levels(&self) -> &[usize] {
        &self.e_idx
    }
    pub fn f_levels(&self) -> &[usize] {
        &self.f_idx
    }

    /// Lowering operator V = Σ μ_ij |i⟩⟨j| (i below j) in the level basis.
    pub fn lowering_operator(&self) -> Array2<Complex64> {
        let n = self.dim();
        let mut v = Array2::zeros((n, n));
        for (ei, &e) in self.e_idx.iter().enumerate() {
            for (gi, &g) in self.g_idx.iter().enumerate() {
                v[[g, e]] = self.dipoles_ge[[ei, gi]];
            }
        }
        for (fi, &f) in self.f_idx.iter().enumerate() {
            for (ei, &e) in self.e_idx.iter().enumerate() {
                v[[e, f]] = self.dipoles_ef[[fi, ei]];
            }
        }
        v
    }

    /// Initial density matrix as a Liouville state.
    pub fn initial_state(&self) -> LiouvilleState {
        let n = self.dim();
        let mut rho = Array2::zeros((n, n));
        for (k, &g) in self.g_idx.iter().enumerate() {
            rho[[g, g]] = Complex64::new(self.initial_weights[k], 0.0);
        }
        LiouvilleState::from_matrix(rho)
    }

    /// Stable byte encoding used for content hashing.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for l in &self.levels {
            out.extend_from_slice(l.label.as_bytes());
            out.push(0);
            out.push(l.manifold.excitations());
            out.extend_from_slice(&l.energy.to_le_bytes());
        }
        for z in self.dipoles_ge.iter().chain(self.dipoles_ef.iter()) {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out.extend_from_slice(&self.dephasing.default.to_le_bytes());
        for (&(i, j), r) in &self.dephasing.pairs {
            out.extend_from_slice(&(i as u64).to_le_bytes());
            out.extend_from_slice(&(j as u64).to_le_bytes());
            out.extend_from_slice(&r.to_le_bytes());
        }
        for w in &self.initial_weights {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }
}

/// Density-matrix-shaped carrier for pathway branches.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleState {
    coeffs: Array2<Complex64>,
}

impl LiouvilleState {
    pub fn from_matrix(coeffs: Array2<Complex64>) -> Self {
        assert_eq!(coeffs.nrows(), coeffs.ncols(), "Liouville state must be square");
        Self { coeffs }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: Array2::zeros((n, n)),
        }
    }

    /// The outer product |i⟩⟨j| with unit coefficient.
    pub fn outer(n: usize, i: usize, j: usize) -> Self {
        let mut s = Self::zeros(n);
        s.coeffs[[i, j]] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.coeffs
    }
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.coeffs[[i, j]]
    }
    pub fn trace(&self) -> Complex64 {
        self.coeffs.diag().sum()
    }
    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.mapv(|c| c * z),
        }
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Which dipole operator acts: `Lower` is V, `Raise` is V†.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Lower,
    Raise,
}

/// One superoperator slot of a correlator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Superop {
    pub side: Side,
    pub sense: Sense,
}

impl Superop {
    pub const fn new(side: Side, sense: Sense) -> Self {
        Self { side, sense }
    }

    /// Same operator dagger-conjugated and moved to the other side.
    pub fn mirrored(self) -> Self {
        let side = match self.side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        let sense = match self.sense {
            Sense::Lower => Sense::Raise,
            Sense::Raise => Sense::Lower,
        };
        Self { side, sense }
    }
}

impl fmt::Display for Superop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dag = if self.sense == Sense::Raise { "†" } else { "" };
        let side = if self.side == Side::Left { "L" } else { "R" };
        write!(f, "V{dag}_{side}")
    }
}

const VL: Superop = Superop::new(Side::Left, Sense::Lower);
const VLD: Superop = Superop::new(Side::Left, Sense::Raise);
const VR: Superop = Superop::new(Side::Right, Sense::Lower);
const VRD: Superop = Superop::new(Side::Right, Sense::Raise);

/// The five surviving correlators F₁..F₅.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Correlator {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl Correlator {
    pub const ALL: [Correlator; 5] = [
        Correlator::F1,
        Correlator::F2,
        Correlator::F3,
        Correlator::F4,
        Correlator::F5,
    ];

    pub fn from_index(i: usize) -> Result<Self, ModelError> {
        match i {
            1 => Ok(Correlator::F1),
            2 => Ok(Correlator::F2),
            3 => Ok(Correlator::F3),
            4 => Ok(Correlator::F4),
            5 => Ok(Correlator::F5),
            _ => Err(ModelError::CorrelatorIndex(i)),
        }
    }

    pub fn index(self) -> usize {
        self as usize + 1
    }

    /// Superoperators as written, leftmost first. The rightmost acts first.
    pub fn sequence(self) -> [Superop; 4] {
        match self {
            Correlator::F1 => [VL, VRD, VLD, VR],
            Correlator::F2 => [VL, VLD, VRD, VR],
            Correlator::F3 => [VL, VRD, VR, VLD],
            Correlator::F4 => [VL, VLD, VL, VLD],
            Correlator::F5 => [VL, VL, VLD, VLD],
        }
    }
}

impl fmt::Display for Correlator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.index())
    }
}

/// Propagation data and dipole operators for one system, optionally viewed
/// in a frame rotating at `frame` per excitation.
#[derive(Debug, Clone)]
pub struct LiouvilleOperatorSet {
    system: ExcitonSystem,
    frame: f64,
    omega: Vec<f64>,
    eta: Array2<f64>,
    v: Array2<Complex64>,
    vdag: Array2<Complex64>,
}

impl LiouvilleOperatorSet {
    pub fn new(system: ExcitonSystem) -> Self {
        Self::in_frame(system, 0.0)
    }

    /// Energies are shifted by −n·frame for a level with n excitations.
    pub fn in_frame(system: ExcitonSystem, frame: f64) -> Self {
        let n = system.dim();
        let omega = system
            .levels()
            .iter()
            .map(|l| l.energy - f64::from(l.manifold.excitations()) * frame)
            .collect();
        let eta = Array2::from_shape_fn((n, n), |(i, j)| system.dephasing().rate(i, j).max(ETA_FLOOR));
        let v = system.lowering_operator();
        let vdag = v.t().mapv(|z| z.conj());
        Self {
            system,
            frame,
            omega,
            eta,
            v,
            vdag,
        }
    }

    pub fn with_frame(&self, frame: f64) -> Self {
        Self::in_frame(self.system.clone(), frame)
    }

    pub fn system(&self) -> &ExcitonSystem {
        &self.system
    }
    pub fn frame(&self) -> f64 {
        self.frame
    }
    pub fn dim(&self) -> usize {
        self.omega.len()
    }
    /// Level energies in the current frame.
    pub fn energies(&self) -> &[f64] {
        &self.omega
    }
    /// Effective (floored) dephasing rate of the coherence |i⟩⟨j|.
    pub fn eta(&self, i: usize, j: usize) -> f64 {
        self.eta[[i, j]]
    }
    pub fn min_eta(&self) -> f64 {
        self.eta.iter().copied().fold(f64::INFINITY, f64::min)
    }
    /// Largest coherence frequency |ω_i − ω_j| in the current frame.
    pub fn max_frequency(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in &self.omega {
            for b in &self.omega {
                m = m.max((a - b).abs());
            }
        }
        m
    }
    pub fn lowering(&self) -> &Array2<Complex64> {
        &self.v
    }
    pub fn raising(&self) -> &Array2<Complex64> {
        &self.vdag
    }

    fn op(&self, sense: Sense) -> &Array2<Complex64> {
        match sense {
            Sense::Lower => &self.v,
            Sense::Raise => &self.vdag,
        }
    }

    /// Complex rate λ_ij with G(τ)|i⟩⟨j| = −i e^{λ_ij τ}|i⟩⟨j|.
    pub fn rate(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(-self.eta[[i, j]], -(self.omega[i] - self.omega[j]))
    }
}

/// Applies G(τ) = −iθ(τ)e^{−iLτ−ητ}.
pub fn propagate(state: &LiouvilleState, tau: f64, ops: &LiouvilleOperatorSet) -> LiouvilleState {
    let n = state.dim();
    if tau < 0.0 {
        return LiouvilleState::zeros(n);
    }
    let coeffs = Array2::from_shape_fn((n, n), |(i, j)| {
        state.coeffs[[i, j]] * MINUS_I * (ops.rate(i, j) * tau).exp()
    });
    LiouvilleState { coeffs }
}

pub fn apply_dipole(
    state: &LiouvilleState,
    side: Side,
    sense: Sense,
    ops: &LiouvilleOperatorSet,
) -> Result<LiouvilleState, ModelError> {
    if state.dim() != ops.dim() {
        return Err(ModelError::Dimension {
            got: state.dim(),
            expected: ops.dim(),
        });
    }
    let a = ops.op(sense);
    let coeffs = match side {
        Side::Left => a.dot(&state.coeffs),
        Side::Right => state.coeffs.dot(a),
    };
    Ok(LiouvilleState { coeffs })
}

/// tr{X₁ G(τ₁) X₂ G(τ₂) X₃ G(τ₃) X₄ ρ} for an arbitrary superoperator sequence.
pub fn correlator_sequence(
    seq: &[Superop; 4],
    tau1: f64,
    tau2: f64,
    tau3: f64,
    rho: &LiouvilleState,
    ops: &LiouvilleOperatorSet,
) -> Result<Complex64, ModelError> {
    if tau1 < 0.0 || tau2 < 0.0 || tau3 < 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut s = apply_dipole(rho, seq[3].side, seq[3].sense, ops)?;
    for (op, tau) in [(seq[2], tau3), (seq[1], tau2), (seq[0], tau1)] {
        s = propagate(&s, tau, ops);
        s = apply_dipole(&s, op.side, op.sense, ops)?;
    }
    Ok(s.trace())
}

/// F_i(τ₁, τ₂, τ₃) from the system's initial state.
pub fn correlator(
    i: usize,
    tau1: f64,
    tau2: f64,
    tau3: f64,
    ops: &LiouvilleOperatorSet,
) -> Result<Complex64, ModelError> {
    let c = Correlator::from_index(i)?;
    correlator_sequence(&c.sequence(), tau1, tau2, tau3, &ops.system().initial_state(), ops)
}

/// Conjugate partner of a sequence: every slot moved to the other side and
/// propagated with G* (prefactor +i). Its trace is the complex conjugate of
/// the original for Hermitian ρ.
pub fn correlator_sequence_partner(
    seq: &[Superop; 4],
    tau1: f64,
    tau2: f64,
    tau3: f64,
    rho: &LiouvilleState,
    ops: &LiouvilleOperatorSet,
) -> Result<Complex64, ModelError> {
    let mirrored = seq.map(Superop::mirrored);
    let raw = correlator_sequence(&mirrored, tau1, tau2, tau3, rho, ops)?;
    // (−i)³ → (+i)³ is a factor of −1.
    Ok(-raw)
}

fn apply_dipole_sum(
    state: &LiouvilleState,
    anticommutator: bool,
    ops: &LiouvilleOperatorSet,
) -> LiouvilleState {
    let vhat = &ops.v + &ops.vdag;
    let left = vhat.dot(&state.coeffs);
    let right = state.coeffs.dot(&vhat);
    let coeffs = if anticommutator { left + right } else { left - right };
    LiouvilleState { coeffs }
}

/// ⟨V̂₊ G(τ₁) V̂₋ G(τ₂) V̂₋ G(τ₃) V̂₋⟩ with V̂ = V + V†.
pub fn correlator_coherent(
    tau1: f64,
    tau2: f64,
    tau3: f64,
    ops: &LiouvilleOperatorSet,
) -> Result<Complex64, ModelError> {
    if tau1 < 0.0 || tau2 < 0.0 || tau3 < 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut s = apply_dipole_sum(&ops.system().initial_state(), false, ops);
    s = propagate(&s, tau3, ops);
    s = apply_dipole_sum(&s, false, ops);
    s = propagate(&s, tau2, ops);
    s = apply_dipole_sum(&s, false, ops);
    s = propagate(&s, tau1, ops);
    s = apply_dipole_sum(&s, true, ops);
    Ok(s.trace())
}

/// One separable exponential of a correlator: c·exp(λ₁τ₁ + λ₂τ₂ + λ₃τ₃).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coef: Complex64,
    pub lambda: [Complex64; 3],
}

/// Sum-over-states form of a correlator for fast repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorExpansion {
    pub terms: Vec<ExpTerm>,
}

impl CorrelatorExpansion {
    pub fn new(c: Correlator, ops: &LiouvilleOperatorSet) -> Self {
        Self::from_sequence(&c.sequence(), &ops.system().initial_state(), ops)
    }

    pub fn from_sequence(seq: &[Superop; 4], rho: &LiouvilleState, ops: &LiouvilleOperatorSet) -> Self {
        let n = ops.dim();
        // (i, j, coefficient, rates collected so far, last interval first)
        let mut paths: Vec<(usize, usize, Complex64, Vec<Complex64>)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let c = rho.get(i, j);
                if c.norm_sqr() > 0.0 {
                    paths.push((i, j, c, Vec::new()));
                }
            }
        }
        for (step, op) in seq.iter().rev().enumerate() {
            let a = ops.op(op.sense);
            let mut next = Vec::new();
            for (i, j, c, rates) in &paths {
                match op.side {
                    Side::Left => {
                        for k in 0..n {
                            let m = a[[k, *i]];
                            if m.norm_sqr() > 0.0 {
                                next.push((k, *j, c * m, rates.clone()));
                            }
                        }
                    }
                    Side::Right => {
                        for l in 0..n {
                            let m = a[[*j, l]];
                            if m.norm_sqr() > 0.0 {
                                next.push((*i, l, c * m, rates.clone()));
                            }
                        }
                    }
                }
            }
            if step < 3 {
                for p in next.iter_mut() {
                    p.3.push(ops.rate(p.0, p.1));
                    p.2 *= MINUS_I;
                }
            }
            paths = next;
        }
        let terms = paths
            .into_iter()
            .filter(|(i, j, _, _)| i == j)
            .map(|(_, _, coef, r)| ExpTerm {
                coef,
                lambda: [r[2], r[1], r[0]],
            })
            .collect();
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef.norm_sqr() == 0.0)
    }

    pub fn eval(&self, tau1: f64, tau2: f64, tau3: f64) -> Complex64 {
        if tau1 < 0.0 || tau2 < 0.0 || tau3 < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.terms
            .iter()
            .map(|t| t.coef * (t.lambda[0] * tau1 + t.lambda[1] * tau2 + t.lambda[2] * tau3).exp())
            .sum()
    }
}
