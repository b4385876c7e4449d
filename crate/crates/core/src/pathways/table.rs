use super::detection::{Channel, Nu};
use crate::model::Correlator;
use std::fmt;
use std::sync::OnceLock;

/// Time variables entering the term recipes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeVars {
    pub t: f64,
    pub tau: f64,
    pub big_t: f64,
    pub t3: f64,
    pub t4: f64,
}

/// Integer-coefficient linear form c_t·t + c_τ·τ + c_T·T + c_3·τ₃ + c_4·τ₄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Affine {
    pub t: i8,
    pub tau: i8,
    pub big_t: i8,
    pub t3: i8,
    pub t4: i8,
}

impl Affine {
    pub const fn new(t: i8, tau: i8, big_t: i8, t3: i8, t4: i8) -> Self {
        Self {
            t,
            tau,
            big_t,
            t3,
            t4,
        }
    }

    pub fn eval(&self, v: &TimeVars) -> f64 {
        f64::from(self.t) * v.t
            + f64::from(self.tau) * v.tau
            + f64::from(self.big_t) * v.big_t
            + f64::from(self.t3) * v.t3
            + f64::from(self.t4) * v.t4
    }

    /// Value with τ₃ = τ₄ = 0.
    pub fn offset(&self, v: &TimeVars) -> f64 {
        f64::from(self.t) * v.t + f64::from(self.tau) * v.tau + f64::from(self.big_t) * v.big_t
    }

    /// Compact notation: `t`, `u` (τ), `T`, `a` (τ₃), `b` (τ₄) with optional
    /// integer prefixes, e.g. `t-T-a-b` or `2T+u-a`.
    pub fn parse(s: &str) -> Option<Self> {
        let mut out = Affine::default();
        let mut rest = s.trim();
        if rest.is_empty() {
            return None;
        }
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1i8, &rest[1..]),
                b'-' => (-1i8, &rest[1..]),
                _ => (1i8, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let tok = &body[..end];
            rest = &body[end..];
            let digits = tok.chars().take_while(|c| c.is_ascii_digit()).count();
            let coef: i8 = if digits == 0 { 1 } else { tok[..digits].parse().ok()? };
            let slot = match &tok[digits..] {
                "t" => &mut out.t,
                "u" => &mut out.tau,
                "T" => &mut out.big_t,
                "a" => &mut out.t3,
                "b" => &mut out.t4,
                _ => return None,
            };
            *slot = slot.checked_add(sign.checked_mul(coef)?)?;
        }
        Some(out)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts = [
            (self.t, "t"),
            (self.tau, "τ"),
            (self.big_t, "T"),
            (self.t3, "τ₃"),
            (self.t4, "τ₄"),
        ];
        let mut first = true;
        for (c, name) in parts {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "−" } else if first { "" } else { "+" };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}{name}")?;
            } else {
                write!(f, "{sign}{mag}{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubTerm {
    /// Arguments of Φ* (bra side).
    pub conj_args: [Affine; 2],
    /// Arguments of Φ (ket side).
    pub amp_args: [Affine; 2],
    pub corr_args: [Affine; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayTerm {
    pub nu: Nu,
    pub interaction: Correlator,
    pub sign: f64,
    pub channel: Channel,
    /// Φ(x, y) is replaced by Φ(x, y) + Φ(y, x).
    pub symmetrized: bool,
    pub subterms: Vec<SubTerm>,
}

impl PathwayTerm {
    pub fn label(&self) -> String {
        format!("S_{{{},{}}}", self.nu, self.interaction.index())
    }
}

impl fmt::Display for PathwayTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sgn = if self.sign < 0.0 { "−" } else { "+" };
        write!(f, "{:<9} {sgn} {:<9}", self.label(), self.channel.to_string())?;
        for (k, s) in self.subterms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            let amp = if self.symmetrized {
                format!(
                    "[Φ({}, {}) + Φ({}, {})]",
                    s.amp_args[0], s.amp_args[1], s.amp_args[1], s.amp_args[0]
                )
            } else {
                format!("Φ({}, {})", s.amp_args[0], s.amp_args[1])
            };
            write!(
                f,
                "Φ*({}, {})·{}·{}({}, {}, {})",
                s.conj_args[0],
                s.conj_args[1],
                amp,
                self.interaction,
                s.corr_args[0],
                s.corr_args[1],
                s.corr_args[2]
            )?;
        }
        Ok(())
    }
}

type Row = (Nu, Correlator, &'static [[&'static str; 7]]);

// Each sub-term: Φ* args, Φ args, F args.
const ROWS: &[Row] = &[
    (Nu::I, Correlator::F1, &[["t-a-b", "t+u", "t", "t-a", "u", "a", "b"]]),
    (Nu::II, Correlator::F1, &[["t+u", "t-a-b", "t-a", "t", "u", "a", "b"]]),
    (
        Nu::III,
        Correlator::F1,
        &[
            ["t", "t+u-a-b", "t+u-a", "t-T", "T", "a", "b"],
            ["t-a-b", "t+u", "t-a", "t-T", "T+u", "a", "b"],
        ],
    ),
    (
        Nu::IV,
        Correlator::F1,
        &[
            ["t+T+u", "t-T-a-b", "t-T-a", "t+u", "T", "a", "b"],
            ["t+T+u", "t-T-a-b", "t", "t-T-a", "u+T", "a", "b"],
        ],
    ),
    (Nu::I, Correlator::F2, &[["t-b", "t+u", "t", "t+a", "u-a", "a", "b"]]),
    (Nu::II, Correlator::F2, &[["t+u", "t-b", "t+a", "t", "u-a", "a", "b"]]),
    (
        Nu::III,
        Correlator::F2,
        &[
            ["t", "t+u-b", "t+u+a", "t-T", "T-a", "a", "b"],
            ["t-b", "t+u", "t+a", "t-T", "u+T-a", "a", "b"],
        ],
    ),
    (
        Nu::IV,
        Correlator::F2,
        &[
            ["t+T+u", "t-T-b", "t-T+a", "t+u", "T-a", "a", "b"],
            ["t+T+u", "t-T-b", "t", "t-T+a", "u+T-a", "a", "b"],
        ],
    ),
    (Nu::I, Correlator::F3, &[["t-a", "t+u", "t", "t-a-b", "u", "a", "b"]]),
    (Nu::II, Correlator::F3, &[["t+u", "t-a", "t-a-b", "t", "u", "a", "b"]]),
    (
        Nu::III,
        Correlator::F3,
        &[
            ["t", "t+u-a", "t+u-a-b", "t-T", "T", "a", "b"],
            ["t-a", "t+u", "t-a-b", "t-T", "u+T", "a", "b"],
        ],
    ),
    (
        Nu::IV,
        Correlator::F3,
        &[
            ["t+T+u", "t-T-a", "t-T-a-b", "t+u", "T", "a", "b"],
            ["t+T+u", "t-T-a", "t", "t-T-a-b", "T+u", "a", "b"],
        ],
    ),
    (Nu::I, Correlator::F4, &[["t", "t+u", "t-b", "t+a", "u-a", "a", "b"]]),
    (Nu::II, Correlator::F4, &[["t+u", "t", "t+a", "t-b", "u-a", "a", "b"]]),
    (Nu::III, Correlator::F4, &[["t", "t+u", "t-T+a", "t-T-b", "2T+u-a", "a", "b"]]),
    (Nu::IV, Correlator::F4, &[["t+T+u", "t-T", "t-b", "t+a", "u-a", "a", "b"]]),
    (Nu::I, Correlator::F5, &[["t", "t+u", "t-a", "t-a-b", "u", "a", "b"]]),
    (Nu::II, Correlator::F5, &[["t+u", "t", "t-a", "t-a-b", "u", "a", "b"]]),
    (Nu::III, Correlator::F5, &[["t", "t+u", "t-T-a-b", "t-T-a", "u+2T", "a", "b"]]),
    (Nu::IV, Correlator::F5, &[["t+T+u", "t-T", "t-a", "t-a-b", "u", "a", "b"]]),
];

fn aff(s: &str) -> Affine {
    Affine::parse(s).unwrap_or_else(|| panic!("bad recipe `{s}`"))
}

fn build() -> Vec<PathwayTerm> {
    ROWS.iter()
        .map(|(nu, corr, subs)| PathwayTerm {
            nu: *nu,
            interaction: *corr,
            sign: nu.sign(),
            channel: nu.channel(),
            symmetrized: *corr == Correlator::F5,
            subterms: subs
                .iter()
                .map(|r| SubTerm {
                    conj_args: [aff(r[0]), aff(r[1])],
                    amp_args: [aff(r[2]), aff(r[3])],
                    corr_args: [aff(r[4]), aff(r[5]), aff(r[6])],
                })
                .collect(),
        })
        .collect()
}

/// The 20 (ν, i) term recipes, ordered by correlator then detection pathway.
pub fn term_table() -> &'static [PathwayTerm] {
    static TABLE: OnceLock<Vec<PathwayTerm>> = OnceLock::new();
    TABLE.get_or_init(build)
}
