use super::table::Affine;
use super::HomSpec;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Detection pathway label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nu {
    I,
    II,
    III,
    IV,
}

impl Nu {
    pub const ALL: [Nu; 4] = [Nu::I, Nu::II, Nu::III, Nu::IV];

    pub fn sign(self) -> f64 {
        match self {
            Nu::I | Nu::II => 1.0,
            Nu::III | Nu::IV => -1.0,
        }
    }

    pub fn channel(self) -> Channel {
        match self {
            Nu::I | Nu::II => Channel::Direct,
            Nu::III | Nu::IV => Channel::Exchange,
        }
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nu::I => "I",
            Nu::II => "II",
            Nu::III => "III",
            Nu::IV => "IV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Direct,
    Exchange,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Direct => "direct",
            Channel::Exchange => "exchange",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    A,
    B,
}

/// Output-mode choice for the fields at (t, t+τ), ket and bra side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DetectionCombination {
    pub ket: [Mode; 2],
    pub bra: [Mode; 2],
}

impl DetectionCombination {
    /// One photon per output mode on both sides.
    pub fn is_coincidence(&self) -> bool {
        self.ket[0] != self.ket[1] && self.bra[0] != self.bra[1]
    }

    /// Label of a retained combination.
    pub fn nu(&self) -> Option<Nu> {
        if !self.is_coincidence() {
            return None;
        }
        let ket_direct = self.ket[0] == Mode::A;
        let bra_direct = self.bra[0] == Mode::A;
        Some(match (ket_direct, bra_direct) {
            (true, true) => Nu::I,
            (false, false) => Nu::II,
            (false, true) => Nu::III,
            (true, false) => Nu::IV,
        })
    }
}

/// All 16 mode assignments.
pub fn detection_combinations() -> Vec<DetectionCombination> {
    let m = [Mode::A, Mode::B];
    let mut out = Vec::with_capacity(16);
    for k0 in m {
        for k1 in m {
            for b0 in m {
                for b1 in m {
                    out.push(DetectionCombination {
                        ket: [k0, k1],
                        bra: [b0, b1],
                    });
                }
            }
        }
    }
    out
}

/// A retained detection pathway with the (mode a, mode b) source times on
/// each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPathway {
    pub nu: Nu,
    pub channel: Channel,
    pub sign: f64,
    /// Beam-splitter weight, normalized to 1 at 50:50.
    pub weight: f64,
    pub ket: [Affine; 2],
    pub bra: [Affine; 2],
}

const fn at(t: i8, tau: i8, big_t: i8) -> Affine {
    Affine::new(t, tau, big_t, 0, 0)
}

pub fn detection_pathways(hom: &HomSpec) -> Vec<DetectionPathway> {
    let (t2, r2) = (hom.t_coeff * hom.t_coeff, hom.r_coeff * hom.r_coeff);
    let direct = [at(1, 0, 0), at(1, 1, 0)];
    let swapped = [at(1, 1, 0), at(1, 0, 0)];
    let shifted = [at(1, 1, 1), at(1, 0, -1)];
    let mk = |nu: Nu, weight: f64, ket, bra| DetectionPathway {
        nu,
        channel: nu.channel(),
        sign: nu.sign(),
        weight,
        ket,
        bra,
    };
    if hom.bs_removed {
        return vec![mk(Nu::I, 1.0, direct, direct)];
    }
    vec![
        mk(Nu::I, 4.0 * t2 * t2, direct, direct),
        mk(Nu::II, 4.0 * r2 * r2, swapped, swapped),
        mk(Nu::III, 4.0 * t2 * r2, shifted, direct),
        mk(Nu::IV, 4.0 * t2 * r2, direct, shifted),
    ]
}
