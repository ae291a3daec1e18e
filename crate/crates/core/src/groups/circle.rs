use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use super::{CMat, GaugeGroup, GroupElement, GroupSpec, RepLabel};
use crate::error::{Error, Result};

/// Number of angles standing in for the center of the circle group.
const CENTER_SAMPLES: usize = 16;

/// The circle group, elements stored as angles in `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Circle;

/// Reduce an angle into `[0, 2π)`.
#[inline]
pub fn reduce(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl GaugeGroup for Circle {
    type Elem = f64;

    fn spec(&self) -> GroupSpec {
        GroupSpec::Circle
    }

    fn identity(&self) -> f64 {
        0.0
    }

    #[inline]
    fn mul(&self, a: f64, b: f64) -> f64 {
        reduce(a + b)
    }

    #[inline]
    fn inv(&self, a: f64) -> f64 {
        reduce(-a)
    }

    #[inline]
    fn re_trace(&self, a: f64) -> f64 {
        a.cos()
    }

    fn matrix_dim(&self) -> usize {
        1
    }

    fn haar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        reduce(rng.random::<f64>() * TAU)
    }

    fn propose<R: Rng + ?Sized>(&self, a: f64, width: f64, rng: &mut R) -> f64 {
        reduce(a + width * (2.0 * rng.random::<f64>() - 1.0))
    }

    fn quadrature(&self, nodes: usize) -> Option<Vec<(f64, f64)>> {
        let w = 1.0 / nodes as f64;
        Some((0..nodes).map(|k| (TAU * k as f64 / nodes as f64, w)).collect())
    }

    fn center(&self) -> Vec<f64> {
        (0..CENTER_SAMPLES).map(|k| TAU * k as f64 / CENTER_SAMPLES as f64).collect()
    }

    fn is_central(&self, _a: f64) -> bool {
        true
    }

    fn rep_matrix(&self, rep: RepLabel, a: f64) -> CMat {
        CMat::from_element(1, 1, self.character(rep, a).expect("charge representation"))
    }

    fn character(&self, rep: RepLabel, a: f64) -> Option<Complex64> {
        match rep {
            RepLabel::Charge(q) => Some(Complex64::from_polar(1.0, q as f64 * a)),
            other => panic!("{other:?} is not a representation of U1"),
        }
    }

    fn to_element(&self, a: f64) -> GroupElement {
        GroupElement::Angle(a)
    }

    fn from_element(&self, g: &GroupElement) -> Result<f64> {
        match *g {
            GroupElement::Angle(t) if t.is_finite() => Ok(reduce(t)),
            GroupElement::Angle(t) => Err(Error::NonFinite(format!("angle {t}"))),
            other => Err(Error::GroupMismatch(format!("{} element used as U1", other.group()))),
        }
    }

    fn renormalize(&self, a: f64) -> f64 {
        reduce(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_stay_reduced() {
        let g = Circle;
        assert_eq!(g.mul(6.0, 1.0), 7.0 - TAU);
        assert!(g.inv(0.0) == 0.0);
        assert!((0.0..TAU).contains(&reduce(-1e-18)));
        assert!((0.0..TAU).contains(&reduce(-TAU * 3.0 - 0.5)));
    }

    #[test]
    fn quadrature_integrates_characters() {
        let g = Circle;
        let nodes = g.quadrature(64).unwrap();
        for q in -5..=5i64 {
            let s: Complex64 = nodes.iter().map(|&(t, w)| g.character(RepLabel::Charge(q), t).unwrap() * w).sum();
            let expect = if q == 0 { 1.0 } else { 0.0 };
            assert!((s - Complex64::new(expect, 0.0)).norm() < 1e-13, "q={q}");
        }
    }
}
