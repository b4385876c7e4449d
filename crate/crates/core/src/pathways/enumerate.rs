use crate::model::{Correlator, Sense, Side, Superop};
use std::fmt;

/// Pruning stages, applied in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Filter {
    /// Pair E with V† and E† with V; fixes every arrow direction.
    Rwa,
    /// The matter walk starts in the ground manifold and never leaves
    /// the g/e/f ladder on either side.
    GroundStart,
    /// As many absorbed as emitted photons.
    PhotonNumber,
    /// No side carries exactly one interaction.
    TwoPerSide,
    /// The final interaction is an emission on the left.
    LeftTermination,
}

impl Filter {
    pub const ALL: [Filter; 5] = [
        Filter::Rwa,
        Filter::GroundStart,
        Filter::PhotonNumber,
        Filter::TwoPerSide,
        Filter::LeftTermination,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arrow {
    In,
    Out,
}

/// Arrow of a superoperator under the RWA pairing.
pub fn arrow(op: Superop) -> Arrow {
    match (op.side, op.sense) {
        (Side::Left, Sense::Raise) | (Side::Right, Sense::Lower) => Arrow::In,
        (Side::Left, Sense::Lower) | (Side::Right, Sense::Raise) => Arrow::Out,
    }
}

/// A chronologically ordered sequence of four interactions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InteractionPathway {
    pub chronological: [Superop; 4],
    /// Matching correlator once fully filtered.
    pub correlator: Option<Correlator>,
    /// The complex-conjugate diagram is implied.
    pub plus_cc: bool,
}

impl InteractionPathway {
    /// Superoperators as written in a correlator, last interaction first.
    pub fn written(&self) -> [Superop; 4] {
        let c = self.chronological;
        [c[3], c[2], c[1], c[0]]
    }
}

impl fmt::Display for InteractionPathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.written();
        write!(f, "{} {} {} {}", w[0], w[1], w[2], w[3])?;
        if let Some(c) = self.correlator {
            write!(f, " ({c})")?;
        }
        Ok(())
    }
}

fn candidates() -> Vec<[Superop; 4]> {
    let ops = [
        Superop::new(Side::Left, Sense::Lower),
        Superop::new(Side::Left, Sense::Raise),
        Superop::new(Side::Right, Sense::Lower),
        Superop::new(Side::Right, Sense::Raise),
    ];
    let mut out = Vec::with_capacity(256);
    for a in ops {
        for b in ops {
            for c in ops {
                for d in ops {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn walk_stays_on_ladder(seq: &[Superop; 4]) -> bool {
    let (mut ket, mut bra) = (0i32, 0i32);
    for op in seq {
        let step = if arrow(*op) == Arrow::In { 1 } else { -1 };
        match op.side {
            Side::Left => ket += step,
            Side::Right => bra += step,
        }
        if !(0..=2).contains(&ket) || !(0..=2).contains(&bra) {
            return false;
        }
    }
    true
}

fn passes(filter: Filter, seq: &[Superop; 4]) -> bool {
    match filter {
        Filter::Rwa => true,
        Filter::GroundStart => walk_stays_on_ladder(seq),
        Filter::PhotonNumber => seq.iter().filter(|o| arrow(**o) == Arrow::In).count() == 2,
        Filter::TwoPerSide => {
            let left = seq.iter().filter(|o| o.side == Side::Left).count();
            left != 1 && left != 3
        }
        Filter::LeftTermination => seq[3] == Superop::new(Side::Left, Sense::Lower),
    }
}

/// Candidates surviving the selected filters. Arrow-based filters need the
/// RWA pairing and imply it.
pub fn enumerate_interaction_pathways(filters: &[Filter]) -> Vec<InteractionPathway> {
    let mut active: Vec<Filter> = filters.to_vec();
    active.sort();
    active.dedup();
    let complete = Filter::ALL.iter().all(|f| active.contains(f));
    let mut out: Vec<InteractionPathway> = candidates()
        .into_iter()
        .filter(|seq| active.iter().all(|f| passes(*f, seq)))
        .map(|seq| {
            let written = [seq[3], seq[2], seq[1], seq[0]];
            let correlator = Correlator::ALL.into_iter().find(|c| c.sequence() == written);
            InteractionPathway {
                chronological: seq,
                correlator: if complete { correlator } else { None },
                plus_cc: complete,
            }
        })
        .collect();
    out.sort_by_key(|p| p.correlator);
    out
}
