use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Scalar operation counters for one phase.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCounts {
    pub mul: u64,
    pub add: u64,
    pub div: u64,
    pub cmp: u64,
}

impl OpCounts {
    pub const ZERO: OpCounts = OpCounts {
        mul: 0,
        add: 0,
        div: 0,
        cmp: 0,
    };

    pub fn new(mul: u64, add: u64, div: u64, cmp: u64) -> Self {
        OpCounts { mul, add, div, cmp }
    }

    /// Arithmetic operations (mul + add + div); comparisons are excluded.
    pub fn flops(&self) -> u64 {
        self.mul + self.add + self.div
    }

    pub fn is_zero(&self) -> bool {
        *self == OpCounts::ZERO
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mul: self.mul + rhs.mul,
            add: self.add + rhs.add,
            div: self.div + rhs.div,
            cmp: self.cmp + rhs.cmp,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, rhs: OpCounts) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for OpCounts {
    fn sum<I: Iterator<Item = OpCounts>>(iter: I) -> Self {
        iter.fold(OpCounts::ZERO, |acc, c| acc + c)
    }
}

/// The named phases of a prune run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Gram product, diagonal shift and SPD inversion.
    Hessian,
    /// Saliency scoring and top-k selection.
    Mask,
    /// Pruning-error columns written into the lazy buffer.
    Error,
    /// Rank-1 updates inside a lazy block.
    Inner,
    /// Batched rank-B update of the columns right of a lazy block.
    Outer,
    /// Final Hadamard product with the mask.
    Finalize,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Hessian,
        Phase::Mask,
        Phase::Error,
        Phase::Inner,
        Phase::Outer,
        Phase::Finalize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Hessian => "hessian",
            Phase::Mask => "mask",
            Phase::Error => "error",
            Phase::Inner => "inner",
            Phase::Outer => "outer",
            Phase::Finalize => "finalize",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Phase::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

/// Per-phase operation counters for one prune run.
///
/// Counters only ever grow, and for a fixed input, backend and configuration
/// they are identical from run to run.
#[derive(Debug, Default, Clone, PartialEq, Eq, Hash)]
pub struct FlopLedger {
    counts: [OpCounts; 6],
}

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self, phase: Phase) -> OpCounts {
        self.counts[phase.index()]
    }

    pub fn phase_mut(&mut self, phase: Phase) -> &mut OpCounts {
        &mut self.counts[phase.index()]
    }

    pub fn total(&self) -> OpCounts {
        self.counts.iter().copied().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Phase, OpCounts)> + '_ {
        Phase::ALL.into_iter().map(|p| (p, self.phase(p)))
    }
}

impl Serialize for FlopLedger {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(Phase::ALL.len()))?;
        for (phase, counts) in self.iter() {
            map.serialize_entry(phase.name(), &counts)?;
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_are_independent() {
        let mut ledger = FlopLedger::new();
        ledger.phase_mut(Phase::Inner).mul += 3;
        ledger.phase_mut(Phase::Outer).add += 2;
        assert_eq!(ledger.phase(Phase::Inner), OpCounts::new(3, 0, 0, 0));
        assert_eq!(ledger.phase(Phase::Outer), OpCounts::new(0, 2, 0, 0));
        assert_eq!(ledger.total().flops(), 5);
        assert!(ledger.phase(Phase::Mask).is_zero());
    }

    #[test]
    fn phase_names_round_trip() {
        for p in Phase::ALL {
            assert_eq!(p.name().parse::<Phase>().unwrap(), p);
        }
        assert!("lazy".parse::<Phase>().is_err());
    }
}
