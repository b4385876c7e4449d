use super::{QuadratureSpec, ReferenceTime, SignalError};
use crate::biphoton::{BiphotonAmplitude, Support, TimeDomain};
use crate::model::{Correlator, CorrelatorExpansion, LiouvilleOperatorSet};
use crate::pathways::{detection_pathways, term_table, Affine, HomSpec, Nu, PathwayTerm, TimeVars};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// k + a·τ₃ + b·τ₄
#[derive(Debug, Clone, Copy)]
struct Lin {
    k: f64,
    a: f64,
    b: f64,
}

impl Lin {
    fn of(aff: &Affine, v: &TimeVars) -> Self {
        Self {
            k: aff.offset(v),
            a: f64::from(aff.t3),
            b: f64::from(aff.t4),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Constraint {
    f: Lin,
    lo: f64,
    hi: f64,
}

fn amplitude_constraints(out: &mut Vec<Constraint>, x: [Lin; 2], s: &Support) {
    let sum = |p: Lin, q: Lin, sign: f64| Lin {
        k: p.k + sign * q.k,
        a: p.a + sign * q.a,
        b: p.b + sign * q.b,
    };
    out.push(Constraint { f: x[0], lo: s.a.0, hi: s.a.1 });
    out.push(Constraint { f: x[1], lo: s.b.0, hi: s.b.1 });
    out.push(Constraint { f: sum(x[0], x[1], -1.0), lo: s.diff.0, hi: s.diff.1 });
    out.push(Constraint { f: sum(x[0], x[1], 1.0), lo: s.sum.0, hi: s.sum.1 });
}

/// Range of `coef·x` for x in `[lo, hi]`.
fn scaled(coef: f64, (lo, hi): (f64, f64)) -> (f64, f64) {
    let (p, q) = (coef * lo, coef * hi);
    (p.min(q), p.max(q))
}

/// Interval of x with lo ≤ k + c·x + r ≤ hi for r in `rest`.
fn solve(c: f64, k: f64, rest: (f64, f64), lo: f64, hi: f64) -> (f64, f64) {
    let (p, q) = ((lo - k - rest.1) / c, (hi - k - rest.0) / c);
    if c > 0.0 {
        (p, q)
    } else {
        (q, p)
    }
}

fn tighten(cs: &[Constraint], mut b3: (f64, f64), mut b4: (f64, f64)) -> Option<((f64, f64), (f64, f64))> {
    for _ in 0..4 {
        for c in cs {
            if c.f.a != 0.0 {
                let r = solve(c.f.a, c.f.k, scaled(c.f.b, b4), c.lo, c.hi);
                b3 = (b3.0.max(r.0), b3.1.min(r.1));
            }
            if c.f.b != 0.0 {
                let r = solve(c.f.b, c.f.k, scaled(c.f.a, b3), c.lo, c.hi);
                b4 = (b4.0.max(r.0), b4.1.min(r.1));
            }
            if c.f.a == 0.0 && c.f.b == 0.0 && !(c.f.k >= c.lo && c.f.k <= c.hi) {
                return None;
            }
        }
        if b3.0 > b3.1 || b4.0 > b4.1 {
            return None;
        }
    }
    Some((b3, b4))
}

fn node_range(lo: f64, hi: f64, h: f64, n: usize) -> Option<(usize, usize)> {
    let i0 = ((lo / h).floor() - 1.0).max(0.0);
    let i1 = ((hi / h).ceil() + 1.0).min(n as f64);
    if i0 > i1 {
        None
    } else {
        Some((i0 as usize, i1 as usize))
    }
}

/// Correlator argument that cuts through the interior of the domain.
fn interior_edge(aff: &Affine) -> bool {
    let pure = aff.t == 0 && aff.tau == 0 && aff.big_t == 0;
    let single = (aff.t3 == 1 && aff.t4 == 0) || (aff.t3 == 0 && aff.t4 == 1);
    (aff.t3 != 0 || aff.t4 != 0) && !(pure && single)
}

/// Per-term values at one (τ, T) point.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    /// Raw S_{ν,i} in term-table order, without sign or HOM weight.
    pub terms: Vec<Complex64>,
    /// Σ_ν weight·sign·S_{ν,i} for i = 1..5.
    pub per_correlator: [Complex64; 5],
    pub total: Complex64,
}

impl Breakdown {
    /// 2Re of the signed sum.
    pub fn coincidence(&self) -> f64 {
        2.0 * self.total.re
    }
}

/// Evaluates table terms for one delayed amplitude.
pub struct Evaluator<'a> {
    td: &'a TimeDomain,
    q: QuadratureSpec,
    frame: f64,
    expansions: Vec<CorrelatorExpansion>,
    t_ref: f64,
    weights: Vec<(Nu, f64)>,
}

impl<'a> Evaluator<'a> {
    pub fn new(
        amp: &'a BiphotonAmplitude,
        ops: &LiouvilleOperatorSet,
        q: &QuadratureSpec,
        hom: &HomSpec,
    ) -> Result<Self, SignalError> {
        Self::from_time_domain(amp.time_domain()?, ops, q, hom)
    }

    /// Uses a time-domain amplitude directly, e.g. a hand-built lattice delta.
    pub fn from_time_domain(
        td: &'a TimeDomain,
        ops: &LiouvilleOperatorSet,
        q: &QuadratureSpec,
        hom: &HomSpec,
    ) -> Result<Self, SignalError> {
        q.validate(ops)?;
        hom.validate()?;
        let t_ref = match q.reference {
            ReferenceTime::Centroid { offset } => td.centroid()?.0 + offset,
            ReferenceTime::Fixed { t } => t,
        };
        Ok(Self {
            td,
            q: *q,
            frame: ops.frame(),
            expansions: Correlator::ALL.iter().map(|c| CorrelatorExpansion::new(*c, ops)).collect(),
            t_ref,
            weights: detection_pathways(hom).iter().map(|p| (p.nu, p.weight)).collect(),
        })
    }

    pub fn reference_time(&self) -> f64 {
        self.t_ref
    }

    fn phi(&self, x1: f64, x2: f64) -> Complex64 {
        self.td.value_in_frame(x1, x2, self.frame)
    }

    /// Raw S for one term at (τ, T).
    pub fn term(&self, term: &PathwayTerm, tau: f64, big_t: f64) -> Complex64 {
        let corr = &self.expansions[term.interaction.index() - 1];
        if corr.is_zero() {
            return ZERO;
        }
        let mut acc = ZERO;
        for sub in &term.subterms {
            acc += self.subterm(corr, sub.conj_args, sub.amp_args, sub.corr_args, tau, big_t);
            if term.symmetrized {
                let swapped = [sub.amp_args[1], sub.amp_args[0]];
                acc += self.subterm(corr, sub.conj_args, swapped, sub.corr_args, tau, big_t);
            }
        }
        acc
    }

    fn subterm(
        &self,
        corr: &CorrelatorExpansion,
        conj_args: [Affine; 2],
        amp_args: [Affine; 2],
        corr_args: [Affine; 3],
        tau: f64,
        big_t: f64,
    ) -> Complex64 {
        let v0 = TimeVars {
            t: self.t_ref,
            tau,
            big_t,
            t3: 0.0,
            t4: 0.0,
        };
        let support = self.td.support();
        let mut cs = Vec::with_capacity(11);
        amplitude_constraints(&mut cs, [Lin::of(&conj_args[0], &v0), Lin::of(&conj_args[1], &v0)], support);
        amplitude_constraints(&mut cs, [Lin::of(&amp_args[0], &v0), Lin::of(&amp_args[1], &v0)], support);
        let h = self.q.step;
        let tol = 1e-9 * h;
        for a in &corr_args {
            cs.push(Constraint {
                f: Lin::of(a, &v0),
                lo: -tol,
                hi: f64::INFINITY,
            });
        }
        let n = self.q.panels();
        let top = n as f64 * h;
        let Some((b3, _)) = tighten(&cs, (0.0, top), (0.0, top)) else {
            return ZERO;
        };
        let Some((i0, i1)) = node_range(b3.0, b3.1, h, n) else {
            return ZERO;
        };
        let edges: Vec<bool> = corr_args.iter().map(interior_edge).collect();
        let mut acc = ZERO;
        for i in i0..=i1 {
            let t3 = i as f64 * h;
            let mut b4: (f64, f64) = (0.0, top);
            let mut feasible = true;
            for c in &cs {
                let k = c.f.k + c.f.a * t3;
                if c.f.b != 0.0 {
                    let r = solve(c.f.b, k, (0.0, 0.0), c.lo, c.hi);
                    b4 = (b4.0.max(r.0), b4.1.min(r.1));
                } else if !(k >= c.lo && k <= c.hi) {
                    feasible = false;
                    break;
                }
            }
            if !feasible || b4.0 > b4.1 {
                continue;
            }
            let Some((j0, j1)) = node_range(b4.0, b4.1, h, n) else {
                continue;
            };
            let w3 = self.q.weight(i);
            let mut row = ZERO;
            for j in j0..=j1 {
                let v = TimeVars { t3, t4: j as f64 * h, ..v0 };
                let mut args = [0.0; 3];
                let mut factor = 1.0;
                let mut causal = true;
                for (k, a) in corr_args.iter().enumerate() {
                    let x = a.eval(&v);
                    if x < -tol {
                        causal = false;
                        break;
                    }
                    if x.abs() <= tol {
                        args[k] = 0.0;
                        if edges[k] {
                            factor *= 0.5;
                        }
                    } else {
                        args[k] = x;
                    }
                }
                if !causal {
                    continue;
                }
                let ket = self.phi(amp_args[0].eval(&v), amp_args[1].eval(&v));
                if ket == ZERO {
                    continue;
                }
                let bra = self.phi(conj_args[0].eval(&v), conj_args[1].eval(&v));
                if bra == ZERO {
                    continue;
                }
                let f = corr.eval(args[0], args[1], args[2]);
                row += bra.conj() * ket * f * (factor * self.q.weight(j));
            }
            acc += row * w3;
        }
        acc
    }

    pub fn breakdown(&self, tau: f64, big_t: f64) -> Breakdown {
        let table = term_table();
        let mut terms = Vec::with_capacity(table.len());
        let mut per_correlator = [ZERO; 5];
        for term in table {
            let Some(&(_, w)) = self.weights.iter().find(|(nu, _)| *nu == term.nu) else {
                terms.push(ZERO);
                continue;
            };
            let s = self.term(term, tau, big_t);
            terms.push(s);
            per_correlator[term.interaction.index() - 1] += s * (w * term.sign);
        }
        let total = per_correlator.iter().sum();
        Breakdown {
            terms,
            per_correlator,
            total,
        }
    }

    pub fn coincidence(&self, tau: f64, big_t: f64) -> f64 {
        self.breakdown(tau, big_t).coincidence()
    }
}

fn delayed(amp: &BiphotonAmplitude, s: f64) -> Option<BiphotonAmplitude> {
    (amp.delay() != s).then(|| amp.with_delay(s, amp.delay_arm()))
}

/// Raw S_{ν,i}(τ, T, s): the double integral without sign or HOM weight.
pub fn term_value(
    term: &PathwayTerm,
    tau: f64,
    big_t: f64,
    s: f64,
    amp: &BiphotonAmplitude,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
) -> Result<Complex64, SignalError> {
    let shifted = delayed(amp, s);
    let amp = shifted.as_ref().unwrap_or(amp);
    let ev = Evaluator::new(amp, ops, q, &HomSpec::default())?;
    Ok(ev.term(term, tau, big_t))
}

pub fn coincidence_breakdown(
    tau: f64,
    big_t: f64,
    s: f64,
    amp: &BiphotonAmplitude,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
    hom: &HomSpec,
) -> Result<Breakdown, SignalError> {
    let shifted = delayed(amp, s);
    let amp = shifted.as_ref().unwrap_or(amp);
    Ok(Evaluator::new(amp, ops, q, hom)?.breakdown(tau, big_t))
}

/// C(τ, T, s) = 2Re Σ weight·sign·S. The HOM delay of `hom` is ignored in
/// favour of `big_t`.
pub fn coincidence(
    tau: f64,
    big_t: f64,
    s: f64,
    amp: &BiphotonAmplitude,
    ops: &LiouvilleOperatorSet,
    q: &QuadratureSpec,
    hom: &HomSpec,
) -> Result<f64, SignalError> {
    Ok(coincidence_breakdown(tau, big_t, s, amp, ops, q, hom)?.coincidence())
}
