//! Variable elimination over edge variables, for expectations of product
//! observables on lattices too large to enumerate state by state.

use num_complex::Complex64;

use super::DEFAULT_CAP;
use crate::error::{Error, Result};
use crate::groups::{Cyclic, GaugeGroup};
use crate::lattice::{EdgeId, LatticeGeometry};
use crate::model::BoundaryCondition;

/// Table over the joint residues of `vars`, little-endian in list order.
#[derive(Clone, Debug)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub table: Vec<Complex64>,
}

/// Per-residue weight on one edge; an observable is a product of these.
#[derive(Clone, Debug)]
pub struct EdgeFactor {
    pub edge: EdgeId,
    pub values: Vec<Complex64>,
}

fn index_of(vars: &[usize], assign: &[(usize, usize)], n: usize) -> usize {
    vars.iter().rev().fold(0, |acc, v| {
        let d = assign.iter().find(|a| a.0 == *v).expect("variable assigned").1;
        acc * n + d
    })
}

/// Sum out every variable. Returns `(mantissa, log_scale)` with the
/// contraction equal to `mantissa · e^{log_scale}`.
fn contract(mut factors: Vec<Factor>, n: usize, cap: u64) -> Result<(Complex64, f64)> {
    let mut log_scale = 0.0;
    loop {
        let mut vars: Vec<usize> = factors.iter().flat_map(|f| f.vars.iter().copied()).collect();
        vars.sort();
        vars.dedup();
        let Some(&first) = vars.first() else { break };
        // Greedy order: eliminate the variable whose merged factor is smallest.
        let scope = |v: usize| -> Vec<usize> {
            let mut u: Vec<usize> = factors.iter().filter(|f| f.vars.contains(&v)).flat_map(|f| f.vars.iter().copied()).collect();
            u.sort();
            u.dedup();
            u
        };
        let v = vars.iter().copied().min_by_key(|&v| (scope(v).len(), v)).unwrap_or(first);
        let all = scope(v);
        let keep: Vec<usize> = all.iter().copied().filter(|&u| u != v).collect();
        let size = super::state_count(n as u32, all.len(), cap)? / n;
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        let mut table = vec![Complex64::new(0.0, 0.0); size];
        let mut assign: Vec<(usize, usize)> = keep.iter().map(|&u| (u, 0)).collect();
        assign.push((v, 0));
        for (o, slot) in table.iter_mut().enumerate() {
            let mut r = o;
            for a in assign.iter_mut().take(keep.len()) {
                a.1 = r % n;
                r /= n;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for d in 0..n {
                assign.last_mut().expect("eliminated variable").1 = d;
                acc += touching.iter().map(|f| f.table[index_of(&f.vars, &assign, n)]).product::<Complex64>();
            }
            *slot = acc;
        }
        let top = table.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return Ok((Complex64::new(0.0, 0.0), 0.0));
        }
        table.iter_mut().for_each(|z| *z /= top);
        log_scale += top.ln();
        factors = rest;
        factors.push(Factor { vars: keep, table });
    }
    let mantissa = factors.iter().map(|f| f.table[0]).product();
    Ok((mantissa, log_scale))
}

/// Boltzmann factors of every plaquette, restricted to the free edges.
fn plaquette_factors(geom: &LatticeGeometry, group: &Cyclic, bc: &BoundaryCondition<u32>, beta: f64) -> Vec<Factor> {
    let n = group.order() as usize;
    geom.plaquettes()
        .iter()
        .map(|p| {
            let mut vars: Vec<usize> = p.edges.iter().filter(|d| !bc.is_fixed(d.edge)).map(|d| d.edge.0).collect();
            vars.sort();
            vars.dedup();
            let size = n.pow(vars.len() as u32);
            let table = (0..size)
                .map(|s| {
                    let residue = |e: EdgeId| match bc.value(e) {
                        Some(g) => g,
                        None => {
                            let j = vars.iter().position(|&v| v == e.0).expect("free edge");
                            ((s / n.pow(j as u32)) % n) as u32
                        }
                    };
                    let g = p.edges.iter().fold(group.identity(), |acc, d| {
                        let x = residue(d.edge);
                        group.mul(acc, if d.forward { x } else { group.inv(x) })
                    });
                    Complex64::new((beta * group.re_trace(g)).exp(), 0.0)
                })
                .collect();
            Factor { vars, table }
        })
        .collect()
}

/// `⟨Π_j h_j(ω_{e_j})⟩` under the Gibbs measure, by variable elimination.
pub fn contract_expectation(
    geom: &LatticeGeometry,
    group: &Cyclic,
    bc: &BoundaryCondition<u32>,
    beta: f64,
    observable: &[EdgeFactor],
) -> Result<Complex64> {
    bc.validate(geom)?;
    let n = group.order() as usize;
    let mut base = plaquette_factors(geom, group, bc, beta);
    // Unit factors keep edges that touch no plaquette in the sum.
    for e in bc.updatable(geom) {
        base.push(Factor { vars: vec![e.0], table: vec![Complex64::new(1.0, 0.0); n] });
    }
    let mut with_obs = base.clone();
    let mut constant = Complex64::new(1.0, 0.0);
    for h in observable {
        if h.values.len() != n {
            return Err(Error::OutOfRange(format!("edge factor has {} values for Z{n}", h.values.len())));
        }
        if h.edge.0 >= geom.n_edges() {
            return Err(Error::Geometry(format!("{:?} out of range", h.edge)));
        }
        match bc.value(h.edge) {
            Some(g) => constant *= h.values[g as usize],
            None => with_obs.push(Factor { vars: vec![h.edge.0], table: h.values.clone() }),
        }
    }
    let (z_m, z_l) = contract(base, n, DEFAULT_CAP)?;
    let (f_m, f_l) = contract(with_obs, n, DEFAULT_CAP)?;
    Ok(constant * f_m / z_m * (f_l - z_l).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_expectation, exact_gibbs, EnumeratedSpace};
    use std::sync::Arc;

    #[test]
    fn matches_enumeration_on_a_small_box() {
        let g = Arc::new(LatticeGeometry::grid(&[3, 3]).unwrap());
        for n in [2u32, 3] {
            let z = Cyclic::new(n);
            let sp = EnumeratedSpace::new(g.clone(), z.clone(), &BoundaryCondition::Free, 1 << 24).unwrap();
            let gibbs = exact_gibbs(&sp, 0.6).unwrap();
            let e1 = EdgeId(0);
            let e2 = EdgeId(7);
            let obs = vec![
                EdgeFactor { edge: e1, values: (0..n).map(|k| z.root(k as u64)).collect() },
                EdgeFactor { edge: e2, values: (0..n).map(|k| z.root(k as u64).conj()).collect() },
            ];
            let direct = exact_expectation(&gibbs, |c| z.root(c.get(e1) as u64) * z.root(c.get(e2) as u64).conj());
            let fast = contract_expectation(&g, &z, &BoundaryCondition::Free, 0.6, &obs).unwrap();
            assert!((direct - fast).norm() < 1e-12, "{direct} vs {fast}");
            let p0 = g.plaquettes()[0].edges;
            let obs: Vec<EdgeFactor> = p0
                .iter()
                .map(|d| EdgeFactor {
                    edge: d.edge,
                    values: (0..n).map(|k| if d.forward { z.root(k as u64) } else { z.root(k as u64).conj() }).collect(),
                })
                .collect();
            let w = contract_expectation(&g, &z, &BoundaryCondition::Free, 0.6, &obs).unwrap();
            let direct = exact_expectation(&gibbs, |c| z.root(c.plaquette(0) as u64));
            assert!((w - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn fixed_boundary_matches_enumeration() {
        let g = Arc::new(LatticeGeometry::grid(&[4, 3]).unwrap());
        let z = Cyclic::new(3);
        let mut rng = crate::rng::substream(9, 0);
        let bc = BoundaryCondition::haar(&g, &z, &mut rng);
        let sp = EnumeratedSpace::new(g.clone(), z.clone(), &bc, 1 << 24).unwrap();
        let gibbs = exact_gibbs(&sp, 1.1).unwrap();
        let e = sp.free_edges()[0];
        let obs = vec![EdgeFactor { edge: e, values: (0..3).map(|k| z.root(k)).collect() }];
        let fast = contract_expectation(&g, &z, &bc, 1.1, &obs).unwrap();
        let direct = exact_expectation(&gibbs, |c| z.root(c.get(e) as u64));
        assert!((direct - fast).norm() < 1e-12);
    }
}
