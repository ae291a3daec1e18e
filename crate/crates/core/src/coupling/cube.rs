use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;

use super::{optimal_coupling, ConditionalKernel, DiscreteCoupling};
use crate::error::{Error, Result};
use crate::exact::{exact_gibbs, exact_tv, state_count, DiscreteMeasure, EnumeratedSpace, Gibbs, DEFAULT_CAP};
use crate::groups::Cyclic;
use crate::lattice::{EdgeId, LatticeGeometry};
use crate::model::BoundaryCondition;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CubeCouplingOptions {
    pub r: i32,
    /// Cover short axes entirely instead of requiring `4r <= N`.
    pub clamp: bool,
    pub cap: u64,
}

impl Default for CubeCouplingOptions {
    fn default() -> Self {
        CubeCouplingOptions { r: 1, clamp: true, cap: DEFAULT_CAP }
    }
}

/// Coupling of the Gibbs measures of one box under two boundary conditions:
/// the optimal coupling of the laws away from the disagreeing boundary
/// edges, extended near them by the product of the two conditional laws.
#[derive(Clone, Debug)]
pub struct CubeCoupling {
    pub order: u32,
    /// Interior edges, sorted; both measures enumerate them in this order.
    pub interior: Vec<EdgeId>,
    /// Boundary edges where the two conditions differ.
    pub disagreeing: Vec<EdgeId>,
    /// Interior edges within the neighborhoods of the disagreeing edges.
    pub near: Vec<EdgeId>,
    /// The remaining interior edges.
    pub outside: Vec<EdgeId>,
    /// Optimal coupling of the two laws on `outside`.
    pub outer: DiscreteCoupling,
    pub kernel: ConditionalKernel,
    pub kernel2: ConditionalKernel,
    /// Probability that the coupled fields differ somewhere on `outside`.
    pub certificate: f64,
    pub outside_tv: f64,
    pub full_tv: f64,
    mu: DiscreteMeasure,
    mu2: DiscreteMeasure,
    out_part: Vec<usize>,
    near_part: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CubeCertificate {
    pub disagreeing: Vec<EdgeId>,
    pub near_edges: usize,
    pub outside_edges: usize,
    pub certificate: f64,
    pub outside_tv: f64,
    pub full_tv: f64,
    pub consistent: bool,
}

fn fixed_values(bc: &BoundaryCondition<u32>) -> Result<&std::collections::BTreeMap<EdgeId, u32>> {
    match bc {
        BoundaryCondition::Fixed(v) => Ok(v),
        BoundaryCondition::Free => Err(Error::Unsupported("cube couplings need fixed boundary conditions".into())),
    }
}

pub fn cube_coupling(
    geom: Arc<LatticeGeometry>,
    group: &Cyclic,
    bc: &BoundaryCondition<u32>,
    bc2: &BoundaryCondition<u32>,
    beta: f64,
    opts: CubeCouplingOptions,
) -> Result<CubeCoupling> {
    let (a, b) = (fixed_values(bc)?, fixed_values(bc2)?);
    let s1 = EnumeratedSpace::new(geom.clone(), group.clone(), bc, opts.cap)?;
    let s2 = EnumeratedSpace::new(geom.clone(), group.clone(), bc2, opts.cap)?;
    let disagreeing: Vec<EdgeId> = a.iter().filter(|(e, v)| b.get(e) != Some(v)).map(|(e, _)| *e).collect();
    CubeCoupling::build(&geom, &exact_gibbs(&s1, beta)?, &exact_gibbs(&s2, beta)?, disagreeing, opts)
}

/// Digits of `s` little-endian, `len` of them.
fn digits(mut s: usize, n: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = s % n;
        s /= n;
    }
}

fn place(positions: &[usize], n: usize, size: usize) -> Vec<usize> {
    let mut ds = vec![0; positions.len()];
    (0..size)
        .map(|s| {
            digits(s, n, &mut ds);
            ds.iter().zip(positions).map(|(&d, &p)| d * n.pow(p as u32)).sum()
        })
        .collect()
}

/// Law on `outside` and conditional law on `near` given it.
fn split(g: &Gibbs, out_pos: &[usize], near_pos: &[usize], n_out: usize, n_near: usize) -> (DiscreteMeasure, ConditionalKernel) {
    let n = g.joint.order as usize;
    let k = g.joint.edges.len();
    let mut marg = vec![0.0; n_out];
    let mut rows = vec![0.0; n_out * n_near];
    let mut ds = vec![0; k];
    for (s, &p) in g.joint.measure.probs.iter().enumerate() {
        digits(s, n, &mut ds);
        let o = out_pos.iter().rev().fold(0, |acc, &j| acc * n + ds[j]);
        let i = near_pos.iter().rev().fold(0, |acc, &j| acc * n + ds[j]);
        marg[o] += p;
        rows[o * n_near + i] += p;
    }
    for (o, row) in rows.chunks_mut(n_near).enumerate() {
        if marg[o] > 0.0 {
            row.iter_mut().for_each(|v| *v /= marg[o]);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / n_near as f64);
        }
    }
    (DiscreteMeasure { probs: marg }, ConditionalKernel { n_source: n_out, n_target: n_near, rows })
}

impl CubeCoupling {
    pub(crate) fn build(
        geom: &LatticeGeometry,
        g1: &Gibbs,
        g2: &Gibbs,
        disagreeing: Vec<EdgeId>,
        opts: CubeCouplingOptions,
    ) -> Result<Self> {
        let interior = g1.joint.edges.clone();
        if g2.joint.edges != interior || g1.joint.order != g2.joint.order {
            return Err(Error::SpaceMismatch("the two measures live on different edge sets".into()));
        }
        let order = g1.joint.order;
        let n = order as usize;
        let near_set: BTreeSet<EdgeId> = if disagreeing.is_empty() {
            BTreeSet::new()
        } else {
            geom.union_neighborhood(&disagreeing, opts.r, opts.clamp)?.into_iter().collect()
        };
        let (near, outside): (Vec<EdgeId>, Vec<EdgeId>) = interior.iter().partition(|e| near_set.contains(e));
        let pos = |list: &[EdgeId]| -> Vec<usize> { list.iter().map(|e| interior.binary_search(e).expect("interior edge")).collect() };
        let (out_pos, near_pos) = (pos(&outside), pos(&near));
        state_count(order, 2 * outside.len(), opts.cap)?;
        let n_out = state_count(order, outside.len(), opts.cap)?;
        let n_near = state_count(order, near.len(), opts.cap)?;
        let (mu_r, kernel) = split(g1, &out_pos, &near_pos, n_out, n_near);
        let (mu2_r, kernel2) = split(g2, &out_pos, &near_pos, n_out, n_near);
        let outer = optimal_coupling(&mu_r, &mu2_r)?;
        Ok(CubeCoupling {
            order,
            certificate: outer.off_diagonal_mass(),
            outside_tv: exact_tv(&mu_r, &mu2_r)?,
            full_tv: exact_tv(&g1.joint.measure, &g2.joint.measure)?,
            out_part: place(&out_pos, n, n_out),
            near_part: place(&near_pos, n, n_near),
            interior,
            disagreeing,
            near,
            outside,
            outer,
            kernel,
            kernel2,
            mu: g1.joint.measure.clone(),
            mu2: g2.joint.measure.clone(),
        })
    }

    /// The certificate is the outside total variation and at most the full one.
    pub fn certificate_consistent(&self) -> bool {
        (self.certificate - self.outside_tv).abs() <= 1e-12 && self.outside_tv <= self.full_tv + 1e-12
    }

    pub fn summary(&self) -> CubeCertificate {
        CubeCertificate {
            disagreeing: self.disagreeing.clone(),
            near_edges: self.near.len(),
            outside_edges: self.outside.len(),
            certificate: self.certificate,
            outside_tv: self.outside_tv,
            full_tv: self.full_tv,
            consistent: self.certificate_consistent(),
        }
    }

    /// `L[o][t]`: law of the residues on `edges` given the outside state `o`.
    fn side_law(&self, kernel: &ConditionalKernel, edges: &[EdgeId]) -> Result<(Vec<f64>, usize)> {
        let n = self.order as usize;
        let pos: Vec<usize> = edges
            .iter()
            .map(|e| self.interior.binary_search(e).map_err(|_| Error::Geometry(format!("{e:?} is not interior to the box"))))
            .collect::<Result<_>>()?;
        let size = n.pow(edges.len() as u32);
        let n_out = self.out_part.len();
        let n_near = self.near_part.len();
        let mut law = vec![0.0; n_out * size];
        let mut ds = vec![0; self.interior.len()];
        for o in 0..n_out {
            for i in 0..n_near {
                let q = kernel.rows[o * n_near + i];
                if q == 0.0 {
                    continue;
                }
                digits(self.out_part[o] + self.near_part[i], n, &mut ds);
                let t = pos.iter().rev().fold(0, |acc, &j| acc * n + ds[j]);
                law[o * size + t] += q;
            }
        }
        Ok((law, size))
    }

    /// Joint law of the pair of residue vectors on `edges`: index `t + n^k t'`.
    pub fn pair_marginal(&self, edges: &[EdgeId]) -> Result<Vec<f64>> {
        let (l1, size) = self.side_law(&self.kernel, edges)?;
        let (l2, _) = self.side_law(&self.kernel2, edges)?;
        let n_out = self.out_part.len();
        let mut out = vec![0.0; size * size];
        for o in 0..n_out {
            for o2 in 0..n_out {
                let g = self.outer.joint[o * n_out + o2];
                if g == 0.0 {
                    continue;
                }
                for t in 0..size {
                    let a = g * l1[o * size + t];
                    if a == 0.0 {
                        continue;
                    }
                    for t2 in 0..size {
                        out[t + size * t2] += a * l2[o2 * size + t2];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Disagreement probability at every interior edge, in `interior` order.
    pub fn rho(&self) -> Vec<f64> {
        let n = self.order as usize;
        self.interior
            .iter()
            .map(|&e| {
                let p = self.pair_marginal(&[e]).expect("interior edge");
                (0..n * n).filter(|s| s % n != s / n).map(|s| p[s]).sum()
            })
            .collect()
    }

    /// The whole coupling on pairs of interior configurations, indexed like the
    /// enumerated measures.
    pub fn materialize(&self, cap: u64) -> Result<DiscreteCoupling> {
        let full = state_count(self.order, 2 * self.interior.len(), cap)?;
        let side = self.mu.len();
        debug_assert_eq!(full, side * side);
        let n_out = self.out_part.len();
        let n_near = self.near_part.len();
        let mut joint = vec![0.0; full];
        for o in 0..n_out {
            for o2 in 0..n_out {
                let g = self.outer.joint[o * n_out + o2];
                if g == 0.0 {
                    continue;
                }
                for i in 0..n_near {
                    let a = g * self.kernel.rows[o * n_near + i];
                    if a == 0.0 {
                        continue;
                    }
                    let row = (self.out_part[o] + self.near_part[i]) * side;
                    for i2 in 0..n_near {
                        joint[row + self.out_part[o2] + self.near_part[i2]] += a * self.kernel2.rows[o2 * n_near + i2];
                    }
                }
            }
        }
        DiscreteCoupling::new(self.mu.clone(), self.mu2.clone(), joint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Shape;
    use crate::model::BoundaryCondition;

    fn strip() -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::new(2, Shape::Box { lo: vec![0, 0], hi: vec![2, 6] }).unwrap())
    }

    #[test]
    fn equal_conditions_give_the_diagonal() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let c = cube_coupling(g, &z2, &bc, &bc, 0.7, CubeCouplingOptions::default()).unwrap();
        assert!(c.disagreeing.is_empty() && c.near.is_empty());
        assert_eq!(c.certificate, 0.0);
        let m = c.materialize(DEFAULT_CAP).unwrap();
        assert_eq!(m.off_diagonal_mass(), 0.0);
    }

    #[test]
    fn twisted_corner_edge_on_a_strip() {
        let g = strip();
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let BoundaryCondition::Fixed(mut v) = bc.clone() else { unreachable!() };
        let corner = g.edge_id(&[0, 0], 0).unwrap();
        v.insert(corner, 1);
        let bc2 = BoundaryCondition::Fixed(v);
        let c = cube_coupling(g.clone(), &z2, &bc, &bc2, 0.8, CubeCouplingOptions::default()).unwrap();
        assert_eq!(c.disagreeing, vec![corner]);
        assert!(!c.outside.is_empty() && !c.near.is_empty());
        assert!(c.certificate_consistent());
        assert!(c.certificate > 0.0 && c.certificate < 1.0);
        let zero = cube_coupling(g, &z2, &bc, &bc2, 0.0, CubeCouplingOptions::default()).unwrap();
        assert!(zero.certificate.abs() < 1e-15);
    }

    #[test]
    fn materialized_coupling_has_the_right_marginals() {
        let g = Arc::new(LatticeGeometry::new(2, Shape::Box { lo: vec![0, 0], hi: vec![2, 4] }).unwrap());
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let BoundaryCondition::Fixed(mut v) = bc.clone() else { unreachable!() };
        v.insert(g.edge_id(&[0, 4], 0).unwrap(), 1);
        let bc2 = BoundaryCondition::Fixed(v);
        let c = cube_coupling(g, &z2, &bc, &bc2, 0.5, CubeCouplingOptions::default()).unwrap();
        let m = c.materialize(1 << 24).unwrap();
        assert!(m.marginal_error() < 1e-12);
        let rho = c.rho();
        let n = c.interior.len();
        let side = m.mu.len();
        for (j, r) in rho.iter().enumerate() {
            let terms: Vec<f64> = (0..side * side)
                .filter(|s| ((s / side) >> j) & 1 != ((s % side) >> j) & 1)
                .map(|s| m.joint[s])
                .collect();
            let direct = crate::stats::pairwise_sum(&terms);
            assert!((direct - r).abs() < 1e-12, "edge {j} of {n}: {direct} vs {r}");
        }
    }
}
