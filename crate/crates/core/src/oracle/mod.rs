//! Brute-force Hilbert-space reference: the joint light-matter wavefunction
//! is propagated bin by bin on a time lattice, perturbatively to fourth
//! order, and the coincidence probability is read off with Glauber
//! detection operators after the beam splitter.
//!
//! Each arm carries at most one photon. A photon in bin p passes the sample
//! during bin p and may be absorbed there; the sample may emit into an arm
//! only while that arm is empty, and emitted photons propagate freely to the
//! detectors without being re-absorbed. The radiative self-energy is thereby
//! left out, as in the Liouville pipeline. Bath-free systems only.

use crate::biphoton::BiphotonAmplitude;
use crate::model::ExcitonSystem;
use crate::pathways::HomSpec;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

mod benchmark;
pub use benchmark::{find_benchmark, Benchmark, BenchmarkError, BenchmarkRow, BENCHMARKS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle requires a closed system; dephasing of pair ({0}, {1}) is {2}")]
    Dephasing(usize, usize, f64),
    #[error("field: {0}")]
    Field(String),
    #[error("detection times must satisfy t_a > t_b (got t_a = {t_a}, t_b = {t_b})")]
    Ordering { t_a: f64, t_b: f64 },
    #[error("time {0} fs is not on the oracle lattice")]
    OffLattice(f64),
    #[error("order_max = {0} exceeds 4")]
    Order(usize),
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// Two-photon field on a uniform time-bin lattice shared by both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedField {
    /// Mode frequencies of the source grid (rad/fs), arm a then arm b.
    pub modes_a: Vec<f64>,
    pub modes_b: Vec<f64>,
    pub spacing: f64,
    /// Time-bin amplitudes c_pq = dt·Φ(t_p, t_q) in the rotating frame.
    pub coeffs: Vec<Complex64>,
    pub bins: usize,
    pub dt: f64,
    pub t0: f64,
    pub frame: f64,
}

impl DiscretizedField {
    /// Direct transform of a square frequency-grid amplitude (delay phase
    /// included) onto `2·modes` time bins.
    pub fn from_amplitude(amp: &BiphotonAmplitude, frame: f64) -> Result<Self, OracleError> {
        let g = amp.grid();
        if !g.is_square() {
            return Err(OracleError::Field("needs a square frequency grid".into()));
        }
        let m = g.a.size;
        let bins = 2 * m;
        let dw = g.a.spacing;
        let dt = 2.0 * PI / (bins as f64 * dw);
        let t0 = -((bins / 2) as f64) * dt;
        let modes: Vec<f64> = (0..m).map(|k| g.a.value(k)).collect();
        let times: Vec<f64> = (0..bins).map(|n| t0 + n as f64 * dt).collect();
        // e^{−iω t} per (time, mode)
        let ph: Vec<Complex64> = times
            .iter()
            .flat_map(|&t| modes.iter().map(move |&w| Complex64::from_polar(1.0, -w * t)))
            .collect();
        let scale = dw * dw / (2.0 * PI) * dt;
        // Separable two-stage sum: first over ω_b, then over ω_a.
        let mut half = vec![ZERO; m * bins];
        for i in 0..m {
            for q in 0..bins {
                let mut acc = ZERO;
                for j in 0..m {
                    acc += amp.delayed_value(i, j) * ph[q * m + j];
                }
                half[i * bins + q] = acc;
            }
        }
        let mut coeffs = vec![ZERO; bins * bins];
        for p in 0..bins {
            for q in 0..bins {
                let mut acc = ZERO;
                for i in 0..m {
                    acc += ph[p * m + i] * half[i * bins + q];
                }
                let rot = Complex64::from_polar(1.0, frame * (times[p] + times[q]));
                coeffs[p * bins + q] = acc * scale * rot;
            }
        }
        let field = Self {
            modes_a: modes.clone(),
            modes_b: modes,
            spacing: dw,
            coeffs,
            bins,
            dt,
            t0,
            frame,
        };
        let norm = field.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(OracleError::Field(format!("coefficient norm {norm} differs from 1")));
        }
        Ok(field)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    /// Bin index of a lattice time.
    pub fn bin(&self, t: f64) -> Result<i64, OracleError> {
        let x = (t - self.t0) / self.dt;
        let r = x.round();
        if (x - r).abs() > 1e-6 {
            return Err(OracleError::OffLattice(t));
        }
        Ok(r as i64)
    }

    pub fn coeff(&self, p: usize, q: usize) -> Complex64 {
        self.coeffs[p * self.bins + q]
    }
}

/// Occupation of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArmState {
    /// Photon absorbed and not replaced.
    Empty,
    /// Original photon in bin p.
    In(u16),
    /// Photon emitted by the sample in bin p.
    Out(u16),
}

impl ArmState {
    pub fn bin(self) -> Option<u16> {
        match self {
            ArmState::Empty => None,
            ArmState::In(p) | ArmState::Out(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Component {
    pub level: u8,
    pub arm_a: ArmState,
    pub arm_b: ArmState,
    /// Bin of the latest interaction, if any.
    pub last: Option<u16>,
    /// Bin of the first interaction, tracked while at most two have happened.
    pub first: Option<u16>,
    /// Bit i set when interaction i was an emission.
    pub emissions: u8,
}

/// Perturbative components |Ψ^{(k)}⟩, k = 0..=order_max.
#[derive(Debug, Clone)]
pub struct PerturbativeKet {
    pub orders: Vec<HashMap<Component, Complex64>>,
    pub field: DiscretizedField,
}

impl PerturbativeKet {
    pub fn norm_sqr(&self, k: usize) -> f64 {
        self.orders[k].values().map(|z| z.norm_sqr()).sum()
    }
}

struct Couplings {
    /// (to, from, element) for raising and lowering transitions.
    up: Vec<Vec<(usize, Complex64)>>,
    down: Vec<Vec<(usize, Complex64)>>,
    omega: Vec<f64>,
}

fn couplings(system: &ExcitonSystem, frame: f64) -> Couplings {
    let v = system.lowering_operator();
    let n = system.dim();
    let mut up = vec![Vec::new(); n];
    let mut down = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let z = v[[i, j]];
            if z.norm_sqr() > 0.0 {
                // V|j⟩ has component z on |i⟩; V† takes |i⟩ to |j⟩ with z*.
                down[j].push((i, z));
                up[i].push((j, z.conj()));
            }
        }
    }
    let omega = system
        .levels()
        .iter()
        .map(|l| l.energy - f64::from(l.manifold.excitations()) * frame)
        .collect();
    Couplings { up, down, omega }
}

/// One application of −i·dt·H in bin n.
fn interact(
    c: &Component,
    events: usize,
    amp: Complex64,
    n: u16,
    t: f64,
    kappa: Complex64,
    cp: &Couplings,
    out: &mut Vec<(Component, Complex64)>,
) {
    let lvl = c.level as usize;
    for arm in 0..2 {
        let state = if arm == 0 { c.arm_a } else { c.arm_b };
        let (targets, next, emit) = match state {
            ArmState::In(p) if p == n => (&cp.up[lvl], ArmState::Empty, 0u8),
            ArmState::Empty => (&cp.down[lvl], ArmState::Out(n), 1u8),
            _ => continue,
        };
        for &(to, z) in targets {
            let phase = Complex64::from_polar(1.0, (cp.omega[to] - cp.omega[lvl]) * t);
            let mut nc = *c;
            nc.level = to as u8;
            nc.last = Some(n);
            nc.emissions |= emit << events;
            nc.first = match events {
                0 => Some(n),
                1 => c.first,
                _ => None,
            };
            if arm == 0 {
                nc.arm_a = next;
            } else {
                nc.arm_b = next;
            }
            out.push((nc, amp * kappa * z * phase));
        }
    }
}

fn check_closed(system: &ExcitonSystem) -> Result<(), OracleError> {
    let n = system.dim();
    for i in 0..n {
        for j in 0..n {
            let eta = system.dephasing().rate(i, j);
            if eta != 0.0 {
                return Err(OracleError::Dephasing(i, j, eta));
            }
        }
    }
    Ok(())
}

/// Propagates through every bin with t_n ≤ t_end.
pub fn evolve_perturbative(
    system: &ExcitonSystem,
    field: &DiscretizedField,
    t_end: f64,
    order_max: usize,
) -> Result<PerturbativeKet, OracleError> {
    check_closed(system)?;
    if order_max > 4 {
        return Err(OracleError::Order(order_max));
    }
    let cp = couplings(system, field.frame);
    let g0 = system.g_levels()[0];
    let weights = system.initial_weights();
    if weights.iter().filter(|&&w| w > 0.0).count() != 1 || weights[g0] != 1.0 {
        return Err(OracleError::Field("oracle needs a pure ground-state start".into()));
    }
    let mut orders: Vec<HashMap<Component, Complex64>> = vec![HashMap::new(); order_max + 1];
    for p in 0..field.bins {
        for q in 0..field.bins {
            let c = field.coeff(p, q);
            if c != ZERO {
                orders[0].insert(
                    Component {
                        level: g0 as u8,
                        arm_a: ArmState::In(p as u16),
                        arm_b: ArmState::In(q as u16),
                        last: None,
                        first: None,
                        emissions: 0,
                    },
                    c,
                );
            }
        }
    }
    let kappa = MINUS_I * field.dt.sqrt();
    let factorial = [1.0, 1.0, 2.0, 6.0, 24.0];
    let mut adds: Vec<(usize, Component, Complex64)> = Vec::new();
    let mut frontier: Vec<(Component, Complex64)> = Vec::new();
    let mut next: Vec<(Component, Complex64)> = Vec::new();
    for n in 0..field.bins {
        let t = field.time(n);
        if t > t_end + 1e-9 * field.dt {
            break;
        }
        let bin = n as u16;
        adds.clear();
        for k in 0..order_max {
            for (c, &a) in &orders[k] {
                frontier.clear();
                frontier.push((*c, a));
                for j in 1..=(order_max - k) {
                    next.clear();
                    for (fc, fa) in &frontier {
                        interact(fc, k + j - 1, *fa, bin, t, kappa, &cp, &mut next);
                    }
                    if next.is_empty() {
                        break;
                    }
                    for (nc, na) in &next {
                        adds.push((k + j, *nc, *na / factorial[j]));
                    }
                    std::mem::swap(&mut frontier, &mut next);
                }
            }
        }
        for (k, c, a) in adds.drain(..) {
            *orders[k].entry(c).or_insert(ZERO) += a;
        }
    }
    Ok(PerturbativeKet {
        orders,
        field: field.clone(),
    })
}

/// How the detected field pairs are formed from the arm photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionModel {
    /// Beam-splitter transformation with the delay on every exchanged photon.
    #[default]
    Interferometer,
    /// Four-pathway observable in which the doubly exchanged pathway is read
    /// at the undelayed times and only the mixed pathways carry the delay.
    PathwaySum,
}

/// Arm-photon bins (A, B) picked out by one side of a detection pathway.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    bins: (i64, i64),
    weight: Complex64,
}

struct Slots {
    direct: Slot,
    exchange: Slot,
    exchange_undelayed: Slot,
}

/// Clicks: output a′ at `t_b`, output b′ at `t_a`.
fn slots(f: &DiscretizedField, hom: &HomSpec, t_a: f64, t_b: f64) -> Result<Slots, OracleError> {
    let direct = (f.bin(t_b)?, f.bin(t_a)?);
    let shift = (hom.delay / f.dt).round();
    if (hom.delay / f.dt - shift).abs() > 1e-6 {
        return Err(OracleError::OffLattice(hom.delay));
    }
    let shift = shift as i64;
    let (t2, ir2) = if hom.bs_removed {
        (Complex64::new(1.0, 0.0), ZERO)
    } else {
        let ir = Complex64::new(0.0, hom.r_coeff);
        (Complex64::new(hom.t_coeff * hom.t_coeff, 0.0), ir * ir)
    };
    Ok(Slots {
        direct: Slot { bins: direct, weight: t2 },
        exchange: Slot {
            bins: (direct.1 + shift, direct.0 - shift),
            weight: ir2,
        },
        exchange_undelayed: Slot {
            bins: (direct.1, direct.0),
            weight: ir2,
        },
    })
}

/// Final level plus the interaction history needed for ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct History {
    level: u8,
    last: Option<u16>,
    first: Option<u16>,
    emissions: u8,
}

/// Detection amplitudes of one order, keyed by history.
fn detection_amplitudes(ket: &PerturbativeKet, k: usize, slots: &[Slot]) -> HashMap<History, Complex64> {
    let dt = ket.field.dt;
    let mut out: HashMap<History, Complex64> = HashMap::new();
    for (c, &a) in &ket.orders[k] {
        let (Some(pa), Some(pb)) = (c.arm_a.bin(), c.arm_b.bin()) else {
            continue;
        };
        let bins = (i64::from(pa), i64::from(pb));
        let w: Complex64 = slots.iter().filter(|s| s.bins == bins).map(|s| s.weight).sum();
        if w != ZERO {
            let h = History {
                level: c.level,
                last: c.last,
                first: c.first,
                emissions: c.emissions,
            };
            *out.entry(h).or_insert(ZERO) += a * w / dt;
        }
    }
    out
}

fn check_order(t_a: f64, t_b: f64) -> Result<(), OracleError> {
    if !(t_a > t_b) {
        return Err(OracleError::Ordering { t_a, t_b });
    }
    Ok(())
}

/// Σ_{k,l} ⟨Ψ^{(l)}|E′†E′†E′E′|Ψ^{(k)}⟩ over every stored order with the
/// interferometer fields: the probability density for clicks at `t_b`
/// (output a′) and `t_a` (output b′).
pub fn coincidence_probability(
    ket: &PerturbativeKet,
    hom: &HomSpec,
    t_a: f64,
    t_b: f64,
) -> Result<f64, OracleError> {
    check_order(t_a, t_b)?;
    let sl = slots(&ket.field, hom, t_a, t_b)?;
    let both = [sl.direct, sl.exchange];
    let mut total: HashMap<u8, Complex64> = HashMap::new();
    for k in 0..ket.orders.len() {
        for (h, a) in detection_amplitudes(ket, k, &both) {
            *total.entry(h.level).or_insert(ZERO) += a;
        }
    }
    Ok(total.values().map(|z| z.norm_sqr()).sum())
}

/// Fourth-order part of the coincidence, split by which side carries the
/// latest interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourthOrder {
    /// Products whose ket history ends later than the bra history.
    pub left: Complex64,
    pub right: Complex64,
    /// Both histories end in the same bin.
    pub boundary: Complex64,
    /// Ratio between table weights and beam-splitter amplitudes.
    pub weight_scale: f64,
}

impl FourthOrder {
    /// Fourth-order probability density.
    pub fn total(&self) -> f64 {
        (self.left + self.right + self.boundary).re
    }

    /// The value comparable with the Liouville signal, 2Re(i·left) in the
    /// table's weight normalization.
    pub fn pipeline_convention(&self) -> f64 {
        2.0 * self.weight_scale * (Complex64::new(0.0, 1.0) * self.left).re
    }

    fn add(mut self, o: &FourthOrder) -> Self {
        self.left += o.left;
        self.right += o.right;
        self.boundary += o.boundary;
        self
    }
}

/// ⟨Ψ^{(l)}|…|Ψ^{(k)}⟩ with the interferometer fields.
pub fn cross_term(
    ket: &PerturbativeKet,
    hom: &HomSpec,
    t_a: f64,
    t_b: f64,
    k: usize,
    l: usize,
) -> Result<Complex64, OracleError> {
    check_order(t_a, t_b)?;
    let sl = slots(&ket.field, hom, t_a, t_b)?;
    let both = [sl.direct, sl.exchange];
    let ak = detection_amplitudes(ket, k, &both);
    let al = detection_amplitudes(ket, l, &both);
    let mut s = ZERO;
    for (hk, x) in &ak {
        for (hl, y) in &al {
            if hk.level == hl.level {
                s += y.conj() * x;
            }
        }
    }
    Ok(s)
}

/// Fourth-order parts per detection pathway, in `Nu::ALL` order.
pub fn fourth_order_by_pathway(
    ket: &PerturbativeKet,
    hom: &HomSpec,
    t_a: f64,
    t_b: f64,
    model: DetectionModel,
) -> Result<[FourthOrder; 4], OracleError> {
    check_order(t_a, t_b)?;
    if ket.orders.len() < 5 {
        return Err(OracleError::Order(ket.orders.len() - 1));
    }
    let sl = slots(&ket.field, hom, t_a, t_b)?;
    let swapped = match model {
        DetectionModel::Interferometer => sl.exchange,
        DetectionModel::PathwaySum => sl.exchange_undelayed,
    };
    let scale = if hom.bs_removed { 1.0 } else { 4.0 };
    let pair = |ket_slot: Slot, bra_slot: Slot| split(ket, &[ket_slot], &[bra_slot], scale);
    Ok([
        pair(sl.direct, sl.direct),
        pair(swapped, swapped),
        pair(sl.exchange, sl.direct),
        pair(sl.direct, sl.exchange),
    ])
}

/// Sum of the four detection pathways.
pub fn fourth_order(
    ket: &PerturbativeKet,
    hom: &HomSpec,
    t_a: f64,
    t_b: f64,
    model: DetectionModel,
) -> Result<FourthOrder, OracleError> {
    let parts = fourth_order_by_pathway(ket, hom, t_a, t_b, model)?;
    Ok(parts[1..].iter().fold(parts[0], |acc, p| acc.add(p)))
}

fn split(ket: &PerturbativeKet, ket_slots: &[Slot], bra_slots: &[Slot], weight_scale: f64) -> FourthOrder {
    let mut out = FourthOrder {
        left: ZERO,
        right: ZERO,
        boundary: ZERO,
        weight_scale,
    };
    for k in 0..=4 {
        let kets = detection_amplitudes(ket, k, ket_slots);
        let bras = detection_amplitudes(ket, 4 - k, bra_slots);
        for (hk, x) in &kets {
            for (hb, y) in &bras {
                if hk.level != hb.level {
                    continue;
                }
                let p = y.conj() * x;
                match hk.last.cmp(&hb.last) {
                    std::cmp::Ordering::Greater => out.left += p,
                    std::cmp::Ordering::Less => out.right += p,
                    std::cmp::Ordering::Equal => out.boundary += p,
                }
            }
        }
    }
    out
}

/// Left-ending order of a ket (k events) and bra (4 − k events) history,
/// as shares of the five absolute orderings F1..F5. Equal-bin events split
/// evenly between the orderings they border.
fn ordering_shares(ket: &History, bra: &History, k: usize) -> [f64; 5] {
    let mut out = [0.0; 5];
    match k {
        4 => match ket.emissions {
            0b1010 => out[3] = 1.0,
            0b1100 => out[4] = 1.0,
            _ => {}
        },
        2 => {
            let (Some(ak), Some(ab), Some(eb)) = (ket.first, bra.first, bra.last) else {
                return out;
            };
            let fits = [ab <= ak && ak <= eb, ab <= eb && eb <= ak, ak <= ab && ab <= eb];
            let n = fits.iter().filter(|&&f| f).count();
            for (slot, &f) in out.iter_mut().zip(&fits) {
                if f {
                    *slot = 1.0 / n as f64;
                }
            }
        }
        _ => {}
    }
    out
}

/// Left-ending fourth-order products re-sorted by absolute time order into
/// the five correlator classes, in the Liouville signal's normalization
/// (i·weight_scale·left per class, summed over detection pathways).
pub fn fourth_order_by_class(
    ket: &PerturbativeKet,
    hom: &HomSpec,
    t_a: f64,
    t_b: f64,
    model: DetectionModel,
) -> Result<[Complex64; 5], OracleError> {
    check_order(t_a, t_b)?;
    if ket.orders.len() < 5 {
        return Err(OracleError::Order(ket.orders.len() - 1));
    }
    let sl = slots(&ket.field, hom, t_a, t_b)?;
    let swapped = match model {
        DetectionModel::Interferometer => sl.exchange,
        DetectionModel::PathwaySum => sl.exchange_undelayed,
    };
    let scale = Complex64::new(0.0, if hom.bs_removed { 1.0 } else { 4.0 });
    let pairs = [
        (sl.direct, sl.direct),
        (swapped, swapped),
        (sl.exchange, sl.direct),
        (sl.direct, sl.exchange),
    ];
    let mut out = [ZERO; 5];
    for (ks, bs) in pairs {
        for k in [4, 2] {
            let kets = detection_amplitudes(ket, k, &[ks]);
            let bras = detection_amplitudes(ket, 4 - k, &[bs]);
            for (hk, x) in &kets {
                for (hb, y) in &bras {
                    if hk.level != hb.level || hk.last <= hb.last {
                        continue;
                    }
                    let p = y.conj() * x * scale;
                    for (slot, w) in out.iter_mut().zip(ordering_shares(hk, hb, k)) {
                        *slot += p * w;
                    }
                }
            }
        }
    }
    Ok(out)
}
