use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::{CMat, GaugeGroup, GroupElement, GroupSpec, RepLabel};
use crate::error::{Error, Result};

/// Cyclic group of order `n`, elements stored as residues `0..n`.
#[derive(Clone, Debug)]
pub struct Cyclic {
    n: u32,
    cos: Arc<[f64]>,
}

impl Cyclic {
    pub fn new(n: u32) -> Self {
        assert!(n >= 2, "cyclic order must be at least 2");
        let cos = (0..n).map(|k| (TAU * k as f64 / n as f64).cos()).collect();
        Cyclic { n, cos }
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    /// `exp(2πi·k/n)`.
    pub fn root(&self, k: u64) -> Complex64 {
        let k = (k % self.n as u64) as f64;
        Complex64::from_polar(1.0, TAU * k / self.n as f64)
    }
}

impl PartialEq for Cyclic {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl GaugeGroup for Cyclic {
    type Elem = u32;

    fn spec(&self) -> GroupSpec {
        GroupSpec::Cyclic(self.n)
    }

    fn identity(&self) -> u32 {
        0
    }

    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    #[inline]
    fn inv(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.n - a
        }
    }

    #[inline]
    fn re_trace(&self, a: u32) -> f64 {
        self.cos[a as usize]
    }

    fn matrix_dim(&self) -> usize {
        1
    }

    fn haar<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.random_range(0..self.n)
    }

    fn propose<R: Rng + ?Sized>(&self, _a: u32, _width: f64, rng: &mut R) -> u32 {
        self.haar(rng)
    }

    fn elements(&self) -> Option<Vec<u32>> {
        Some((0..self.n).collect())
    }

    fn quadrature(&self, _nodes: usize) -> Option<Vec<(u32, f64)>> {
        let w = 1.0 / self.n as f64;
        Some((0..self.n).map(|k| (k, w)).collect())
    }

    fn center(&self) -> Vec<u32> {
        (0..self.n).collect()
    }

    fn is_central(&self, _a: u32) -> bool {
        true
    }

    fn rep_matrix(&self, rep: RepLabel, a: u32) -> CMat {
        let k = match rep {
            RepLabel::Character(k) => k as u64,
            other => panic!("{other:?} is not a representation of Z{}", self.n),
        };
        CMat::from_element(1, 1, self.root(k * a as u64))
    }

    fn character(&self, rep: RepLabel, a: u32) -> Option<Complex64> {
        match rep {
            RepLabel::Character(k) => Some(self.root(k as u64 * a as u64)),
            _ => None,
        }
    }

    fn to_element(&self, a: u32) -> GroupElement {
        GroupElement::Residue { k: a, n: self.n }
    }

    fn from_element(&self, g: &GroupElement) -> Result<u32> {
        match *g {
            GroupElement::Residue { k, n } if n == self.n && k < n => Ok(k),
            GroupElement::Residue { k, n } if n == self.n => Err(Error::InvalidSpec(format!("residue {k} out of range for Z{n}"))),
            other => Err(Error::GroupMismatch(format!("{} element used as Z{}", other.group(), self.n))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characters_are_homomorphisms() {
        for n in 2..7u32 {
            let g = Cyclic::new(n);
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let lhs = g.character(RepLabel::Character(k), g.mul(a, b)).unwrap();
                        let rhs = g.character(RepLabel::Character(k), a).unwrap()
                            * g.character(RepLabel::Character(k), b).unwrap();
                        assert!((lhs - rhs).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_and_trace() {
        let g = Cyclic::new(4);
        for a in 0..4 {
            assert_eq!(g.mul(a, g.inv(a)), 0);
        }
        assert_eq!(g.re_trace(2), -1.0);
        assert!(g.re_trace(1).abs() < 1e-15);
    }
}
