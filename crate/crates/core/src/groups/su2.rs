use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMat, GaugeGroup, GroupElement, GroupSpec, RepLabel};
use crate::error::{Error, Result};

/// Unit quaternion `w + xi + yj + zk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat(pub [f64; 4]);

impl Quat {
    pub const ONE: Quat = Quat([1.0, 0.0, 0.0, 0.0]);

    #[inline]
    pub fn hamilton(self, b: Quat) -> Quat {
        let [a0, a1, a2, a3] = self.0;
        let [b0, b1, b2, b3] = b.0;
        Quat([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])
    }

    #[inline]
    pub fn conj(self) -> Quat {
        let [w, x, y, z] = self.0;
        Quat([w, -x, -y, -z])
    }

    pub fn norm(self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat(self.0.map(|v| v / n))
    }

    /// Defining 2×2 matrix `w·1 - i(x σx + y σy + z σz)`.
    pub fn to_matrix(self) -> CMat {
        let [w, x, y, z] = self.0;
        CMat::from_row_slice(
            2,
            2,
            &[Complex64::new(w, -z), Complex64::new(-y, -x), Complex64::new(y, -x), Complex64::new(w, z)],
        )
    }
}

fn pauli() -> [CMat; 3] {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMat::from_row_slice(2, 2, &[o, one, one, o]),
        CMat::from_row_slice(2, 2, &[o, -i, i, o]),
        CMat::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// SU(2) as unit quaternions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Su2;

impl GaugeGroup for Su2 {
    type Elem = Quat;

    fn spec(&self) -> GroupSpec {
        GroupSpec::Su2
    }

    fn identity(&self) -> Quat {
        Quat::ONE
    }

    #[inline]
    fn mul(&self, a: Quat, b: Quat) -> Quat {
        a.hamilton(b)
    }

    #[inline]
    fn inv(&self, a: Quat) -> Quat {
        a.conj()
    }

    #[inline]
    fn re_trace(&self, a: Quat) -> f64 {
        2.0 * a.0[0]
    }

    fn matrix_dim(&self) -> usize {
        2
    }

    fn haar<R: Rng + ?Sized>(&self, rng: &mut R) -> Quat {
        loop {
            let q = Quat(std::array::from_fn(|_| rng.sample(StandardNormal)));
            if q.norm() > 1e-12 {
                return q.normalized();
            }
        }
    }

    fn propose<R: Rng + ?Sized>(&self, a: Quat, width: f64, rng: &mut R) -> Quat {
        let v: [f64; 3] = std::array::from_fn(|_| width * rng.sample::<f64, _>(StandardNormal));
        let step = Quat([1.0, v[0], v[1], v[2]]).normalized();
        step.hamilton(a)
    }

    fn center(&self) -> Vec<Quat> {
        vec![Quat::ONE, Quat([-1.0, 0.0, 0.0, 0.0])]
    }

    fn is_central(&self, a: Quat) -> bool {
        let [w, x, y, z] = a.0;
        (w.abs() - 1.0).abs() < 1e-12 && x.abs() < 1e-12 && y.abs() < 1e-12 && z.abs() < 1e-12
    }

    fn rep_matrix(&self, rep: RepLabel, a: Quat) -> CMat {
        match rep {
            RepLabel::Fundamental => a.to_matrix(),
            RepLabel::Trivial => CMat::from_element(1, 1, Complex64::new(1.0, 0.0)),
            RepLabel::Adjoint => {
                let u = a.to_matrix();
                let ud = u.adjoint();
                let s = pauli();
                CMat::from_fn(3, 3, |i, j| (&s[i] * &u * &s[j] * &ud).trace() * 0.5)
            }
            other => panic!("{other:?} is not a representation of SU2"),
        }
    }

    fn character(&self, rep: RepLabel, _a: Quat) -> Option<Complex64> {
        match rep {
            RepLabel::Trivial => Some(Complex64::new(1.0, 0.0)),
            _ => None,
        }
    }

    fn to_element(&self, a: Quat) -> GroupElement {
        GroupElement::Quaternion(a.0)
    }

    fn from_element(&self, g: &GroupElement) -> Result<Quat> {
        match *g {
            GroupElement::Quaternion(q) => {
                let q = Quat(q);
                if !q.0.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite(format!("{q:?}")));
                }
                if (q.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(format!("quaternion {q:?} is not a unit quaternion")));
                }
                Ok(q)
            }
            other => Err(Error::GroupMismatch(format!("{} element used as SU2", other.group()))),
        }
    }

    fn renormalize(&self, a: Quat) -> Quat {
        a.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_map_is_a_homomorphism() {
        let g = Su2;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = g.haar(&mut rng);
            let b = g.haar(&mut rng);
            for rep in [RepLabel::Fundamental, RepLabel::Adjoint] {
                let lhs = g.rep_matrix(rep, g.mul(a, b));
                let rhs = g.rep_matrix(rep, a) * g.rep_matrix(rep, b);
                assert!((lhs - rhs).norm() < 1e-12);
            }
            let u = a.to_matrix();
            assert!((&u * u.adjoint() - CMat::identity(2, 2)).norm() < 1e-12);
            assert!((u.determinant() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!((u.trace().re - g.re_trace(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_is_real_orthogonal() {
        let g = Su2;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = g.haar(&mut rng);
        let r = g.rep_matrix(RepLabel::Adjoint, a);
        assert!(r.iter().all(|c| c.im.abs() < 1e-12));
        assert!((&r * r.transpose() - CMat::identity(3, 3)).norm() < 1e-12);
    }
}
