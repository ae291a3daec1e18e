use std::fmt;

use serde::{Deserialize, Serialize};

use super::GroupSpec;
use crate::error::{Error, Result};

/// Irreducible representation label, normalized per group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepLabel {
    /// Character `k` of a cyclic group, `0 <= k < n`.
    Character(u32),
    /// Charge `q` of the circle group.
    Charge(i64),
    /// SU(2) defining representation.
    Fundamental,
    /// SU(2) adjoint (spin one).
    Adjoint,
    /// SU(2) trivial representation.
    Trivial,
}

/// Representation of a specific group, parsed from strings such as
/// `fund`, `char:k`, `charge:q`, `adjoint` or `trivial`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Representation {
    pub group: GroupSpec,
    pub label: RepLabel,
}

impl Representation {
    pub fn parse(group: GroupSpec, s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("representation `{s}` does not exist for {group}"));
        let label = match (group, s) {
            (GroupSpec::Cyclic(_), "fund") => RepLabel::Character(1),
            (GroupSpec::Cyclic(_), "trivial") => RepLabel::Character(0),
            (GroupSpec::Cyclic(n), _) => {
                let k: i64 = s.strip_prefix("char:").and_then(|k| k.parse().ok()).ok_or_else(bad)?;
                RepLabel::Character(k.rem_euclid(n as i64) as u32)
            }
            (GroupSpec::Circle, "fund") => RepLabel::Charge(1),
            (GroupSpec::Circle, "trivial") => RepLabel::Charge(0),
            (GroupSpec::Circle, _) => {
                RepLabel::Charge(s.strip_prefix("charge:").and_then(|q| q.parse().ok()).ok_or_else(bad)?)
            }
            (GroupSpec::Su2, "fund") => RepLabel::Fundamental,
            (GroupSpec::Su2, "adjoint") => RepLabel::Adjoint,
            (GroupSpec::Su2, "trivial") => RepLabel::Trivial,
            (GroupSpec::Su2, _) => return Err(bad()),
        };
        Ok(Representation { group, label })
    }

    /// Matrix size.
    pub fn dim(&self) -> usize {
        match self.label {
            RepLabel::Fundamental => 2,
            RepLabel::Adjoint => 3,
            _ => 1,
        }
    }

    /// Whether the representation is equivalent to its conjugate, so that
    /// traces are real.
    pub fn is_self_conjugate(&self) -> bool {
        match (self.group, self.label) {
            (GroupSpec::Cyclic(n), RepLabel::Character(k)) => (2 * k as u64) % n as u64 == 0,
            (_, RepLabel::Charge(q)) => q == 0,
            _ => true,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self.label, RepLabel::Character(0) | RepLabel::Charge(0) | RepLabel::Trivial)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label {
            RepLabel::Character(k) => write!(f, "char:{k}"),
            RepLabel::Charge(q) => write!(f, "charge:{q}"),
            RepLabel::Fundamental => f.write_str("fund"),
            RepLabel::Adjoint => f.write_str("adjoint"),
            RepLabel::Trivial => f.write_str("trivial"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_normalize() {
        let z3 = GroupSpec::Cyclic(3);
        assert_eq!(Representation::parse(z3, "char:4").unwrap().label, RepLabel::Character(1));
        assert_eq!(Representation::parse(z3, "char:-1").unwrap().label, RepLabel::Character(2));
        assert_eq!(Representation::parse(z3, "fund").unwrap().label, RepLabel::Character(1));
        assert!(Representation::parse(z3, "adjoint").is_err());
        assert!(Representation::parse(GroupSpec::Su2, "char:1").is_err());
        assert_eq!(Representation::parse(GroupSpec::Circle, "charge:-2").unwrap().label, RepLabel::Charge(-2));
    }

    #[test]
    fn self_conjugacy() {
        let z4 = GroupSpec::Cyclic(4);
        assert!(Representation::parse(z4, "char:2").unwrap().is_self_conjugate());
        assert!(!Representation::parse(z4, "char:1").unwrap().is_self_conjugate());
        assert!(Representation::parse(GroupSpec::Cyclic(2), "fund").unwrap().is_self_conjugate());
        assert!(Representation::parse(GroupSpec::Su2, "fund").unwrap().is_self_conjugate());
    }
}
