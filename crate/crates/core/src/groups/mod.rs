//! Gauge groups: cyclic groups, the circle group and SU(2), their irreducible
//! representations and Haar sampling.
//!
//! Two layers live here. The [`GaugeGroup`] trait gives monomorphized
//! element arithmetic for the sampler and enumerator. [`GroupSpec`] and
//! [`GroupElement`] are the dynamic, config-facing face of the same groups.

/// Run `$body` with `$g` bound to the concrete group for a [`GroupSpec`].
macro_rules! dispatch {
    ($spec:expr, $g:ident => $body:expr) => {
        match $spec {
            $crate::groups::GroupSpec::Cyclic(n) => {
                let $g = $crate::groups::Cyclic::new(n);
                $body
            }
            $crate::groups::GroupSpec::Circle => {
                let $g = $crate::groups::Circle;
                $body
            }
            $crate::groups::GroupSpec::Su2 => {
                let $g = $crate::groups::Su2;
                $body
            }
        }
    };
}
pub(crate) use dispatch;

mod circle;
mod cyclic;
mod rep;
mod su2;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circle::Circle;
pub use cyclic::Cyclic;
pub use rep::{RepLabel, Representation};
pub use su2::{Quat, Su2};

/// Complex matrix type used for representation matrices.
pub type CMat = DMatrix<Complex64>;

/// Interval between full renormalizations of continuous-group elements,
/// counted in group multiplications.
pub const RENORMALIZE_EVERY: u64 = 1 << 20;

/// Compact gauge group with a faithful defining matrix representation.
pub trait GaugeGroup: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Copy + fmt::Debug + PartialEq + Send + Sync + 'static;

    fn spec(&self) -> GroupSpec;
    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn inv(&self, a: Self::Elem) -> Self::Elem;
    /// Real part of the trace in the defining representation.
    fn re_trace(&self, a: Self::Elem) -> f64;
    /// Size of the defining matrices.
    fn matrix_dim(&self) -> usize;
    fn haar<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;
    /// Symmetric proposal around `a`. Finite groups ignore `width` and draw uniformly.
    fn propose<R: Rng + ?Sized>(&self, a: Self::Elem, width: f64, rng: &mut R) -> Self::Elem;
    /// All elements, for finite groups.
    fn elements(&self) -> Option<Vec<Self::Elem>> {
        None
    }
    /// Nodes and weights (summing to one) integrating smooth functions against Haar measure.
    fn quadrature(&self, _nodes: usize) -> Option<Vec<(Self::Elem, f64)>> {
        None
    }
    /// Center elements; for the circle group a fixed sample of angles.
    fn center(&self) -> Vec<Self::Elem>;
    fn is_central(&self, a: Self::Elem) -> bool;
    /// Matrix of `a` in `rep`. The label must belong to this group.
    fn rep_matrix(&self, rep: RepLabel, a: Self::Elem) -> CMat;
    fn to_element(&self, a: Self::Elem) -> GroupElement;
    fn from_element(&self, g: &GroupElement) -> Result<Self::Elem>;
    /// Project a drifted element back onto the group.
    fn renormalize(&self, a: Self::Elem) -> Self::Elem {
        a
    }
    /// Trace of `a` in a one-dimensional representation, or `None` for matrix reps.
    fn character(&self, rep: RepLabel, a: Self::Elem) -> Option<Complex64> {
        let m = self.rep_matrix(rep, a);
        (m.nrows() == 1).then(|| m[(0, 0)])
    }
}

/// Config-level group name: `Z<n>`, `U1` or `SU2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GroupSpec {
    Cyclic(u32),
    Circle,
    Su2,
}

impl GroupSpec {
    pub fn is_finite(&self) -> bool {
        matches!(self, GroupSpec::Cyclic(_))
    }

    pub fn identity(&self) -> GroupElement {
        dispatch!(*self, g => g.to_element(g.identity()))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        dispatch!(*self, g => {
            let x = g.from_element(a)?;
            let y = g.from_element(b)?;
            Ok(g.to_element(g.mul(x, y)))
        })
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        dispatch!(*self, g => Ok(g.to_element(g.inv(g.from_element(a)?))))
    }

    pub fn haar_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        dispatch!(*self, g => g.to_element(g.haar(rng)))
    }

    pub fn center_elements(&self) -> Vec<GroupElement> {
        dispatch!(*self, g => g.center().into_iter().map(|c| g.to_element(c)).collect())
    }

    pub fn default_rep(&self) -> Representation {
        Representation::parse(*self, "fund").expect("fund exists for every group")
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(n) => write!(f, "Z{n}"),
            GroupSpec::Circle => f.write_str("U1"),
            GroupSpec::Su2 => f.write_str("SU2"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "U1" => Ok(GroupSpec::Circle),
            "SU2" => Ok(GroupSpec::Su2),
            _ => {
                let n = s
                    .strip_prefix('Z')
                    .and_then(|d| d.parse::<u32>().ok())
                    .ok_or_else(|| Error::InvalidSpec(format!("unknown group `{s}`")))?;
                if n < 2 {
                    return Err(Error::InvalidSpec(format!("cyclic order must be at least 2, got {n}")));
                }
                Ok(GroupSpec::Cyclic(n))
            }
        }
    }
}

impl TryFrom<String> for GroupSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GroupSpec> for String {
    fn from(g: GroupSpec) -> String {
        g.to_string()
    }
}

/// A group element tagged with its group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroupElement {
    /// Residue `k` in the cyclic group of order `n`.
    Residue { k: u32, n: u32 },
    /// Angle in `[0, 2π)`.
    Angle(f64),
    /// Unit quaternion `(w, x, y, z)`.
    Quaternion([f64; 4]),
}

impl GroupElement {
    pub fn group(&self) -> GroupSpec {
        match self {
            GroupElement::Residue { n, .. } => GroupSpec::Cyclic(*n),
            GroupElement::Angle(_) => GroupSpec::Circle,
            GroupElement::Quaternion(_) => GroupSpec::Su2,
        }
    }
}

/// Matrix of `g` in `rep`.
pub fn rep_matrix(rep: &Representation, g: &GroupElement) -> Result<CMat> {
    if g.group() != rep.group {
        return Err(Error::GroupMismatch(format!("{} element in a {} representation", g.group(), rep.group)));
    }
    dispatch!(rep.group, grp => Ok(grp.rep_matrix(rep.label, grp.from_element(g)?)))
}

/// Scalar `c` with `π(g0) = c·I` for a central `g0`.
pub fn center_scalar(rep: &Representation, g0: &GroupElement) -> Result<Complex64> {
    if g0.group() != rep.group {
        return Err(Error::GroupMismatch(format!("{} element in a {} representation", g0.group(), rep.group)));
    }
    dispatch!(rep.group, grp => {
        let x = grp.from_element(g0)?;
        if !grp.is_central(x) {
            return Err(Error::NotCentral(format!("{g0:?}")));
        }
        Ok(grp.rep_matrix(rep.label, x)[(0, 0)])
    })
}

/// Whether some center element acts by a scalar other than one.
pub fn acts_nontrivially_on_center(rep: &Representation) -> bool {
    dispatch!(rep.group, grp => grp
        .center()
        .into_iter()
        .any(|c| (grp.rep_matrix(rep.label, c)[(0, 0)] - Complex64::new(1.0, 0.0)).norm() > 1e-12))
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["Z2", "Z3", "Z4", "U1", "SU2", "Z17"] {
            let g: GroupSpec = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("Z1".parse::<GroupSpec>().is_err());
        assert!("SO3".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn mixed_groups_are_rejected() {
        let a = GroupElement::Residue { k: 1, n: 3 };
        let b = GroupElement::Residue { k: 1, n: 4 };
        assert!(matches!(GroupSpec::Cyclic(3).mul(&a, &b), Err(Error::GroupMismatch(_))));
    }

    #[test]
    fn z4_multiplication_wraps() {
        let z4 = GroupSpec::Cyclic(4);
        let a = GroupElement::Residue { k: 3, n: 4 };
        let b = GroupElement::Residue { k: 2, n: 4 };
        assert_eq!(z4.mul(&a, &b).unwrap(), GroupElement::Residue { k: 1, n: 4 });
    }

    #[test]
    fn su2_center_scalars() {
        let minus = GroupElement::Quaternion([-1.0, 0.0, 0.0, 0.0]);
        let fund = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let adj = Representation::parse(GroupSpec::Su2, "adjoint").unwrap();
        assert!((center_scalar(&fund, &minus).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((center_scalar(&adj, &minus).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(acts_nontrivially_on_center(&fund));
        assert!(!acts_nontrivially_on_center(&adj));
        let off = GroupElement::Quaternion([0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(center_scalar(&fund, &off), Err(Error::NotCentral(_))));
    }

    #[test]
    fn cyclic_characters_on_center() {
        let z3 = GroupSpec::Cyclic(3);
        let c1 = Representation::parse(z3, "char:1").unwrap();
        let c0 = Representation::parse(z3, "char:0").unwrap();
        assert!(acts_nontrivially_on_center(&c1));
        assert!(!acts_nontrivially_on_center(&c0));
        let s = center_scalar(&c1, &GroupElement::Residue { k: 1, n: 3 }).unwrap();
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        assert!((s - w).norm() < 1e-15);
    }

    #[test]
    fn dynamic_haar_samples_belong_to_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for spec in [GroupSpec::Cyclic(5), GroupSpec::Circle, GroupSpec::Su2] {
            for _ in 0..100 {
                let g = spec.haar_sample(&mut rng);
                assert_eq!(g.group(), spec);
                let gi = spec.inv(&g).unwrap();
                let e = spec.mul(&g, &gi).unwrap();
                let fund = spec.default_rep();
                let m = rep_matrix(&fund, &e).unwrap();
                let id = CMat::identity(m.nrows(), m.ncols());
                assert!((m - id).norm() < 1e-12);
            }
        }
    }
}
