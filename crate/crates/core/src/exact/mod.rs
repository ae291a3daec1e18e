//! Exact enumeration for cyclic groups on small lattices.
//!
//! State ids are little-endian mixed-radix numbers over the free edges in
//! increasing edge order: digit `j` is the residue on `free[j]`.

mod contract;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::Cyclic;
use crate::lattice::{EdgeId, LatticeGeometry};
use crate::model::{conditional_density, BoundaryCondition, GaugeConfig};
use crate::stats::{pairwise_sum, CompensatedSum};

pub use contract::{contract_expectation, EdgeFactor, Factor};

pub const DEFAULT_CAP: u64 = 1 << 24;

const CHUNK: usize = 1 << 12;

/// `n^k`, or `CapExceeded` when it passes `cap`.
pub fn state_count(n: u32, k: usize, cap: u64) -> Result<usize> {
    let states = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if states > cap as u128 {
        return Err(Error::CapExceeded { states, cap });
    }
    Ok(states as usize)
}

/// Configurations of a cyclic gauge field with some links held fixed.
#[derive(Clone, Debug)]
pub struct EnumeratedSpace {
    geom: Arc<LatticeGeometry>,
    group: Cyclic,
    free: Vec<EdgeId>,
    base: Vec<u32>,
    n_states: usize,
}

impl EnumeratedSpace {
    /// Free edges are the interior edges for a fixed boundary, every edge otherwise.
    pub fn new(geom: Arc<LatticeGeometry>, group: Cyclic, bc: &BoundaryCondition<u32>, cap: u64) -> Result<Self> {
        bc.validate(&geom)?;
        let mut base = vec![0u32; geom.n_edges()];
        if let BoundaryCondition::Fixed(values) = bc {
            for (&e, &g) in values {
                if g >= group.order() {
                    return Err(Error::OutOfRange(format!("residue {g} on {e:?} for Z{}", group.order())));
                }
                base[e.0] = g;
            }
        }
        let free = bc.updatable(&geom);
        Self::with_free(geom, group, base, free, cap)
    }

    /// Arbitrary set of free edges; every other edge keeps its value in `base`.
    pub fn with_free(geom: Arc<LatticeGeometry>, group: Cyclic, base: Vec<u32>, mut free: Vec<EdgeId>, cap: u64) -> Result<Self> {
        if base.len() != geom.n_edges() {
            return Err(Error::Geometry(format!("{} base links for {} edges", base.len(), geom.n_edges())));
        }
        free.sort();
        free.dedup();
        if free.iter().any(|e| e.0 >= geom.n_edges()) {
            return Err(Error::Geometry("free edge out of range".into()));
        }
        let n_states = state_count(group.order(), free.len(), cap)?;
        Ok(EnumeratedSpace { geom, group, free, base, n_states })
    }

    pub fn geom(&self) -> &Arc<LatticeGeometry> {
        &self.geom
    }
    pub fn group(&self) -> &Cyclic {
        &self.group
    }
    pub fn order(&self) -> u32 {
        self.group.order()
    }
    pub fn free_edges(&self) -> &[EdgeId] {
        &self.free
    }
    pub fn base(&self) -> &[u32] {
        &self.base
    }
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn decode_into(&self, mut idx: usize, links: &mut [u32]) {
        let n = self.order() as usize;
        for e in &self.free {
            links[e.0] = (idx % n) as u32;
            idx /= n;
        }
    }

    pub fn config(&self, idx: usize) -> GaugeConfig<Cyclic> {
        let mut links = self.base.clone();
        self.decode_into(idx, &mut links);
        GaugeConfig::from_links(self.geom.clone(), self.group.clone(), links).expect("links sized to the geometry")
    }

    pub fn encode(&self, cfg: &GaugeConfig<Cyclic>) -> usize {
        let n = self.order() as usize;
        self.free.iter().rev().fold(0, |acc, e| acc * n + cfg.get(*e) as usize)
    }

    /// Run `visit` on every state in parallel chunks, folding per-chunk
    /// results in state order.
    fn fold_chunks<T, V>(&self, visit: V) -> Vec<T>
    where
        T: Send,
        V: Fn(usize, &mut GaugeConfig<Cyclic>, &mut Vec<u32>) -> T + Sync,
    {
        let n_chunks = self.n_states.div_ceil(CHUNK);
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut cfg = self.config(0);
                let mut digits = vec![0u32; self.free.len()];
                visit(c, &mut cfg, &mut digits)
            })
            .collect()
    }

    /// Apply `f(state, cfg)` to every state of chunk `c`, with `cfg` kept in sync.
    fn walk_chunk<F: FnMut(usize, &GaugeConfig<Cyclic>)>(&self, c: usize, cfg: &mut GaugeConfig<Cyclic>, digits: &mut [u32], mut f: F) {
        let n = self.order();
        let start = c * CHUNK;
        let end = (start + CHUNK).min(self.n_states);
        let mut idx = start;
        for d in digits.iter_mut() {
            *d = (idx % n as usize) as u32;
            idx /= n as usize;
        }
        for (j, e) in self.free.iter().enumerate() {
            cfg.set(*e, digits[j]);
        }
        for s in start..end {
            f(s, cfg);
            for (j, e) in self.free.iter().enumerate() {
                digits[j] += 1;
                if digits[j] < n {
                    cfg.set(*e, digits[j]);
                    break;
                }
                digits[j] = 0;
                cfg.set(*e, 0);
            }
        }
    }
}

/// Probability vector on a finite set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    pub probs: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidSpec(format!("probability entry {bad}")));
        }
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("probabilities sum to {total}")));
        }
        Ok(DiscreteMeasure { probs })
    }

    /// Normalize non-negative weights.
    pub fn from_weights(mut w: Vec<f64>) -> Result<Self> {
        let total = pairwise_sum(&w);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroProbability);
        }
        w.iter_mut().for_each(|v| *v /= total);
        Ok(DiscreteMeasure { probs: w })
    }

    pub fn uniform(k: usize) -> Self {
        DiscreteMeasure { probs: vec![1.0 / k as f64; k] }
    }

    pub fn point(k: usize, i: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[i] = 1.0;
        DiscreteMeasure { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.probs)
    }
}

/// Joint law of the residues on a list of edges; state ids are little-endian
/// in list order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeMeasure {
    pub order: u32,
    pub edges: Vec<EdgeId>,
    pub measure: DiscreteMeasure,
}

impl EdgeMeasure {
    pub fn digit(&self, state: usize, j: usize) -> u32 {
        let n = self.order as usize;
        ((state / n.pow(j as u32)) % n) as u32
    }

    fn position(&self, e: EdgeId) -> Result<usize> {
        self.edges
            .iter()
            .position(|&u| u == e)
            .ok_or_else(|| Error::SpaceMismatch(format!("{e:?} is not part of this measure")))
    }
}

/// Exact Gibbs measure on an enumerated space.
#[derive(Clone, Debug)]
pub struct Gibbs {
    pub space: EnumeratedSpace,
    pub beta: f64,
    pub joint: EdgeMeasure,
    /// `log Z` with Haar measure normalized to one.
    pub log_z: f64,
}

pub fn exact_gibbs(space: &EnumeratedSpace, beta: f64) -> Result<Gibbs> {
    if !beta.is_finite() {
        return Err(Error::NonFinite(format!("beta = {beta}")));
    }
    let chunks: Vec<Vec<f64>> = space.fold_chunks(|c, cfg, digits| {
        let mut out = Vec::with_capacity(CHUNK);
        space.walk_chunk(c, cfg, digits, |_, cfg| out.push(-beta * cfg.hamiltonian()));
        out
    });
    let mut logs: Vec<f64> = chunks.concat();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.par_iter_mut().for_each(|l| *l = (*l - top).exp());
    let total = pairwise_sum(&logs);
    logs.par_iter_mut().for_each(|w| *w /= total);
    let log_z = top + total.ln() - space.free.len() as f64 * (space.order() as f64).ln();
    Ok(Gibbs {
        space: space.clone(),
        beta,
        joint: EdgeMeasure { order: space.order(), edges: space.free.clone(), measure: DiscreteMeasure { probs: logs } },
        log_z,
    })
}

/// Expectations of several observables at once, summed per chunk and then in chunk order.
pub fn exact_expectations<F>(g: &Gibbs, f: F) -> Vec<Complex64>
where
    F: Fn(&GaugeConfig<Cyclic>) -> Vec<Complex64> + Sync,
{
    let probs = &g.joint.measure.probs;
    let k = f(&g.space.config(0)).len();
    let parts: Vec<Vec<(CompensatedSum, CompensatedSum)>> = g.space.fold_chunks(|c, cfg, digits| {
        let mut acc = vec![(CompensatedSum::default(), CompensatedSum::default()); k];
        g.space.walk_chunk(c, cfg, digits, |s, cfg| {
            let p = probs[s];
            if p == 0.0 {
                return;
            }
            for (a, v) in acc.iter_mut().zip(f(cfg)) {
                a.0.add(p * v.re);
                a.1.add(p * v.im);
            }
        });
        acc
    });
    (0..k)
        .map(|j| {
            let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
            for part in &parts {
                re.merge(part[j].0);
                im.merge(part[j].1);
            }
            Complex64::new(re.value(), im.value())
        })
        .collect()
}

pub fn exact_expectation<F>(g: &Gibbs, f: F) -> Complex64
where
    F: Fn(&GaugeConfig<Cyclic>) -> Complex64 + Sync,
{
    exact_expectations(g, |c| vec![f(c)])[0]
}

/// Marginal onto `edges`, in the given order.
pub fn exact_marginal(m: &EdgeMeasure, edges: &[EdgeId]) -> Result<EdgeMeasure> {
    let pos: Vec<usize> = edges.iter().map(|&e| m.position(e)).collect::<Result<_>>()?;
    let n = m.order as usize;
    let size = state_count(m.order, edges.len(), u64::MAX)?;
    let strides: Vec<usize> = pos.iter().map(|&p| n.pow(p as u32)).collect();
    let mut out = vec![0.0; size];
    for (s, &p) in m.measure.probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let t = strides.iter().rev().fold(0, |acc, st| acc * n + (s / st) % n);
        out[t] += p;
    }
    Ok(EdgeMeasure { order: m.order, edges: edges.to_vec(), measure: DiscreteMeasure { probs: out } })
}

/// Conditional law of the remaining edges given residues on some of them.
pub fn exact_conditional(m: &EdgeMeasure, given: &[(EdgeId, u32)]) -> Result<EdgeMeasure> {
    let n = m.order as usize;
    let fixed: Vec<(usize, u32)> = given.iter().map(|&(e, v)| Ok((m.position(e)?, v))).collect::<Result<_>>()?;
    if fixed.iter().any(|&(_, v)| v >= m.order) {
        return Err(Error::OutOfRange("conditioning residue exceeds the group order".into()));
    }
    let rest: Vec<usize> = (0..m.edges.len()).filter(|j| fixed.iter().all(|f| f.0 != *j)).collect();
    let size = n.pow(rest.len() as u32);
    let mut out = vec![0.0; size];
    for (s, &p) in m.measure.probs.iter().enumerate() {
        if p == 0.0 || fixed.iter().any(|&(j, v)| m.digit(s, j) != v) {
            continue;
        }
        let t = rest.iter().rev().fold(0, |acc, &j| acc * n + m.digit(s, j) as usize);
        out[t] += p;
    }
    let total = pairwise_sum(&out);
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    out.iter_mut().for_each(|v| *v /= total);
    Ok(EdgeMeasure { order: m.order, edges: rest.iter().map(|&j| m.edges[j]).collect(), measure: DiscreteMeasure { probs: out } })
}

/// `½ Σ |μ_i - ν_i|`.
pub fn exact_tv(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SpaceMismatch(format!("{} vs {} states", a.len(), b.len())));
    }
    let diffs: Vec<f64> = a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).collect();
    Ok(0.5 * pairwise_sum(&diffs))
}

/// `max_S |μ(S) - ν(S)|` over all `2^k` events; `k <= 20`.
pub fn tv_over_events(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SpaceMismatch(format!("{} vs {} states", a.len(), b.len())));
    }
    let k = a.len();
    if k > 20 {
        return Err(Error::CapExceeded { states: 1u128 << k, cap: 1 << 20 });
    }
    let d: Vec<f64> = a.probs.iter().zip(&b.probs).map(|(x, y)| x - y).collect();
    Ok((0u64..1 << k)
        .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).map(|i| d[i]).sum::<f64>().abs())
        .fold(0.0, f64::max))
}

/// One heat-bath update of edge `e` applied to a law on the space.
pub fn heat_bath_kernel(space: &EnumeratedSpace, beta: f64, e: EdgeId, m: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let j = space
        .free
        .iter()
        .position(|&u| u == e)
        .ok_or_else(|| Error::FixedEdge(e.0))?;
    let n = space.order() as usize;
    let stride = n.pow(j as u32);
    let mut out = vec![0.0; space.n_states];
    let mut cfg = space.config(0);
    for s in 0..space.n_states {
        if (s / stride) % n != 0 {
            continue;
        }
        space.decode_into(s, cfg.links_mut());
        let mass: f64 = (0..n).map(|k| m.probs[s + k * stride]).sum();
        if mass == 0.0 {
            continue;
        }
        let probs = conditional_density(&cfg, &BoundaryCondition::Free, e, beta)?
            .probabilities()
            .expect("finite group");
        for (k, p) in probs.iter().enumerate() {
            out[s + k * stride] += mass * p;
        }
    }
    Ok(DiscreteMeasure { probs: out })
}

/// One sweep of heat-bath updates over the free edges in checkerboard order.
pub fn heat_bath_sweep(space: &EnumeratedSpace, beta: f64, m: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut cur = m.clone();
    for class in space.geom.checkerboard() {
        for &e in class {
            if space.free.contains(&e) {
                cur = heat_bath_kernel(space, beta, e, &cur)?;
            }
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{GroupSpec, Representation};
    use crate::lattice::Shape;
    use crate::observables::wilson_loop;

    fn single_plaquette() -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::grid(&[2, 2]).unwrap())
    }

    #[test]
    fn single_plaquette_expectation_is_tanh() {
        let g = single_plaquette();
        let sp = EnumeratedSpace::new(g.clone(), Cyclic::new(2), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        assert_eq!(sp.n_states(), 16);
        for beta in [0.0, 0.3, 1.7] {
            let gibbs = exact_gibbs(&sp, beta).unwrap();
            let w = exact_expectation(&gibbs, |c| Complex64::new(c.plaquette_trace(0), 0.0));
            assert!((w.re - f64::tanh(beta)).abs() < 1e-14);
            let z = (beta.cosh()).ln();
            assert!((gibbs.log_z - z).abs() < 1e-13);
        }
    }

    #[test]
    fn codec_round_trips() {
        let g = Arc::new(LatticeGeometry::grid(&[3, 2]).unwrap());
        let sp = EnumeratedSpace::new(g, Cyclic::new(3), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        for s in [0, 1, 17, sp.n_states() - 1] {
            assert_eq!(sp.encode(&sp.config(s)), s);
        }
    }

    #[test]
    fn all_fixed_gives_point_mass() {
        let g = single_plaquette();
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let sp = EnumeratedSpace::new(g, z2, &bc, DEFAULT_CAP).unwrap();
        let gibbs = exact_gibbs(&sp, 1.0).unwrap();
        assert_eq!(gibbs.joint.measure.probs, vec![1.0]);
    }

    #[test]
    fn cap_is_enforced() {
        let g = Arc::new(LatticeGeometry::grid(&[5, 5]).unwrap());
        let r = EnumeratedSpace::new(g, Cyclic::new(2), &BoundaryCondition::Free, DEFAULT_CAP);
        assert!(matches!(r, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn rectangular_loops_factorize_on_three_by_three() {
        let g = Arc::new(LatticeGeometry::grid(&[3, 3]).unwrap());
        let sp = EnumeratedSpace::new(g.clone(), Cyclic::new(2), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        let gibbs = exact_gibbs(&sp, 0.5).unwrap();
        let rep = Representation::parse(GroupSpec::Cyclic(2), "fund").unwrap();
        let s = f64::tanh(0.5);
        for (r, t) in [(1, 1), (1, 2), (2, 2)] {
            let l = g.rect_loop(&[0, 0], (0, 1), r, t).unwrap();
            let w = exact_expectation(&gibbs, |c| wilson_loop(c, &l, &rep).unwrap());
            assert!((w.re - s.powi(r * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn conditionals_reassemble_the_joint_and_match_the_density() {
        let g = Arc::new(LatticeGeometry::new(2, Shape::Box { lo: vec![0, 0], hi: vec![2, 1] }).unwrap());
        let z3 = Cyclic::new(3);
        let sp = EnumeratedSpace::new(g.clone(), z3.clone(), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        let gibbs = exact_gibbs(&sp, 0.8).unwrap();
        let joint = &gibbs.joint;
        let e = sp.free_edges()[3];
        let rest: Vec<EdgeId> = joint.edges.iter().copied().filter(|&u| u != e).collect();
        let marg = exact_marginal(joint, &rest).unwrap();
        for t in 0..marg.measure.len() {
            let given: Vec<(EdgeId, u32)> = rest.iter().enumerate().map(|(j, &u)| (u, marg.digit(t, j))).collect();
            let cond = exact_conditional(joint, &given).unwrap();
            let mut cfg = sp.config(0);
            for &(u, v) in &given {
                cfg.set(u, v);
            }
            let dens = conditional_density(&cfg, &BoundaryCondition::Free, e, 0.8).unwrap().probabilities().unwrap();
            for k in 0..3 {
                assert!((cond.measure.probs[k] - dens[k]).abs() < 1e-12);
                cfg.set(e, k as u32);
                let joint_p = joint.measure.probs[sp.encode(&cfg)];
                assert!((cond.measure.probs[k] * marg.measure.probs[t] - joint_p).abs() < 1e-12);
            }
        }
        // Marginal of a marginal.
        let two = exact_marginal(&marg, &rest[..2]).unwrap();
        let direct = exact_marginal(joint, &rest[..2]).unwrap();
        assert!(exact_tv(&two.measure, &direct.measure).unwrap() < 1e-13);
    }

    #[test]
    fn zero_beta_marginal_is_uniform() {
        let g = single_plaquette();
        let sp = EnumeratedSpace::new(g, Cyclic::new(3), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        let gibbs = exact_gibbs(&sp, 0.0).unwrap();
        let m = exact_marginal(&gibbs.joint, &sp.free_edges()[..1]).unwrap();
        assert!(m.measure.probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn conditioning_on_impossible_values_fails() {
        let m = EdgeMeasure { order: 2, edges: vec![EdgeId(0), EdgeId(1)], measure: DiscreteMeasure::point(4, 0) };
        assert!(matches!(exact_conditional(&m, &[(EdgeId(0), 1)]), Err(Error::ZeroProbability)));
    }

    #[test]
    fn tv_examples() {
        let a = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::point(2, 0);
        assert_eq!(exact_tv(&a, &b).unwrap(), 0.5);
        assert_eq!(exact_tv(&a, &a).unwrap(), 0.0);
        assert_eq!(exact_tv(&DiscreteMeasure::point(3, 0), &DiscreteMeasure::point(3, 2)).unwrap(), 1.0);
        assert!(exact_tv(&a, &DiscreteMeasure::uniform(3)).is_err());
    }

    #[test]
    fn heat_bath_preserves_gibbs() {
        let g = Arc::new(LatticeGeometry::grid(&[3, 2]).unwrap());
        let sp = EnumeratedSpace::new(g, Cyclic::new(3), &BoundaryCondition::Free, DEFAULT_CAP).unwrap();
        let gibbs = exact_gibbs(&sp, 0.7).unwrap();
        let after = heat_bath_sweep(&sp, 0.7, &gibbs.joint.measure).unwrap();
        assert!(exact_tv(&after, &gibbs.joint.measure).unwrap() < 1e-13);
        let mut m = DiscreteMeasure::point(sp.n_states(), 5);
        for _ in 0..60 {
            m = heat_bath_sweep(&sp, 0.7, &m).unwrap();
        }
        assert!(exact_tv(&m, &gibbs.joint.measure).unwrap() < 1e-6);
    }
}
