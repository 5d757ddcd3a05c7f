use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

/// Reconciliation direction: whose data is the reference for error correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Alice's encoding is the reference.
    Direct,
    /// Bob's outcome is the reference.
    Reverse,
}

/// One of the four protocol variants (hom/het × DR/RR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variant {
    pub detection: Detection,
    pub direction: Direction,
}

impl Variant {
    pub const HOM_DR: Variant = Variant::new(Detection::Homodyne, Direction::Direct);
    pub const HOM_RR: Variant = Variant::new(Detection::Homodyne, Direction::Reverse);
    pub const HET_DR: Variant = Variant::new(Detection::Heterodyne, Direction::Direct);
    pub const HET_RR: Variant = Variant::new(Detection::Heterodyne, Direction::Reverse);

    pub const ALL: [Variant; 4] = [Self::HOM_DR, Self::HOM_RR, Self::HET_DR, Self::HET_RR];

    pub const fn new(detection: Detection, direction: Direction) -> Self {
        Variant { detection, direction }
    }

    /// Short column label such as `hom_rr`.
    pub fn label(&self) -> &'static str {
        match (self.detection, self.direction) {
            (Detection::Homodyne, Direction::Direct) => "hom_dr",
            (Detection::Homodyne, Direction::Reverse) => "hom_rr",
            (Detection::Heterodyne, Direction::Direct) => "het_dr",
            (Detection::Heterodyne, Direction::Reverse) => "het_rr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detection::Homodyne => "hom",
            Detection::Heterodyne => "het",
        })
    }
}

impl FromStr for Detection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hom" | "homodyne" => Ok(Detection::Homodyne),
            "het" | "heterodyne" => Ok(Detection::Heterodyne),
            _ => Err(Error::Parse(format!("unknown detection '{s}' (expected hom|het)"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Direct => "dr",
            Direction::Reverse => "rr",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dr" | "direct" => Ok(Direction::Direct),
            "rr" | "reverse" => Ok(Direction::Reverse),
            _ => Err(Error::Parse(format!("unknown direction '{s}' (expected dr|rr)"))),
        }
    }
}

/// Protocol settings for an asymptotic key-rate evaluation.
///
/// `mu = V_A + 1` is the variance of Alice's average (thermal) ensemble and
/// `zeta` the reconciliation efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub mu: f64,
    pub zeta: f64,
}

impl ProtocolConfig {
    pub fn new(variant: Variant, mu: f64, zeta: f64) -> Result<Self> {
        if !(mu > 1.0) || !mu.is_finite() {
            return Err(domain(format!("mu must be > 1 and finite, got {mu}")));
        }
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(domain(format!("zeta must be in (0,1], got {zeta}")));
        }
        Ok(ProtocolConfig { variant, mu, zeta })
    }

    pub fn detection(&self) -> Detection {
        self.variant.detection
    }

    pub fn direction(&self) -> Direction {
        self.variant.direction
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ProtocolConfig::new(Variant::HOM_RR, 1.0, 1.0).is_err());
        assert!(ProtocolConfig::new(Variant::HOM_RR, 2.0, 0.0).is_err());
        assert!(ProtocolConfig::new(Variant::HOM_RR, 2.0, 1.01).is_err());
        assert!(ProtocolConfig::new(Variant::HOM_RR, 2.0, 1.0).is_ok());
    }

    #[test]
    fn labels_parse_back() {
        for v in Variant::ALL {
            let (d, r) = v.label().split_once('_').unwrap();
            assert_eq!(Variant::new(d.parse().unwrap(), r.parse().unwrap()), v);
        }
    }
}
