//! Wilson loops, vertical chain variables, loop component variables,
//! center transformations and conditional link expectations.

mod correlation;
mod potential;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{CMat, GaugeGroup, Representation};
use crate::lattice::{EdgeId, LatticeGeometry, Loop};
use crate::model::{conditional_density, BoundaryCondition, GaugeConfig};

pub use correlation::{correlation_decay, exact_correlation, CorrelationPoint, CorrelationRequest, CorrelationSeries, DecayFit, LocalFunction};
pub use potential::{potential_extract, AreaFit, CreutzRatio, PotentialFit, PotentialPoint, WilsonCell};

/// Largest number of component variables expanded explicitly.
const MAX_COMPONENTS: u128 = 1 << 20;

fn check_rep<G: GaugeGroup>(group: &G, rep: &Representation) -> Result<()> {
    if rep.group != group.spec() {
        return Err(Error::GroupMismatch(format!("{} representation on a {} configuration", rep.group, group.spec())));
    }
    Ok(())
}

/// Representation matrix of the link along a directed edge.
fn link_matrix<G: GaugeGroup>(cfg: &GaugeConfig<G>, rep: &Representation, d: crate::lattice::DirEdge) -> CMat {
    cfg.group().rep_matrix(rep.label, cfg.along(d))
}

/// `χ_π(ω_{e_1} ⋯ ω_{e_k})` around a closed loop.
pub fn wilson_loop<G: GaugeGroup>(cfg: &GaugeConfig<G>, l: &Loop, rep: &Representation) -> Result<Complex64> {
    check_rep(cfg.group(), rep)?;
    if rep.dim() == 1 {
        let g = cfg.group();
        let mut acc = Complex64::new(1.0, 0.0);
        for &d in &l.edges {
            acc *= g.character(rep.label, cfg.along(d)).expect("one-dimensional representation");
        }
        return Ok(acc);
    }
    let mut acc = CMat::identity(rep.dim(), rep.dim());
    for &d in &l.edges {
        acc *= link_matrix(cfg, rep, d);
    }
    Ok(acc.trace())
}

/// Index choice for one component variable of a loop: `indices[j]` is the
/// row index at edge `j`, and the column index is `indices[j + 1]` (cyclically).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopComponent {
    pub indices: Vec<usize>,
}

pub fn loop_component<G: GaugeGroup>(cfg: &GaugeConfig<G>, l: &Loop, rep: &Representation, c: &LoopComponent) -> Result<Complex64> {
    check_rep(cfg.group(), rep)?;
    let k = l.edges.len();
    if c.indices.len() != k || c.indices.iter().any(|&i| i >= rep.dim()) {
        return Err(Error::OutOfRange(format!("component indices {:?} for a {k}-edge loop in dimension {}", c.indices, rep.dim())));
    }
    Ok((0..k)
        .map(|j| link_matrix(cfg, rep, l.edges[j])[(c.indices[j], c.indices[(j + 1) % k])])
        .product())
}

/// All `m^k` component variables of a loop, in mixed-radix order of the indices.
pub fn loop_components<G: GaugeGroup>(cfg: &GaugeConfig<G>, l: &Loop, rep: &Representation) -> Result<Vec<Complex64>> {
    check_rep(cfg.group(), rep)?;
    let (m, k) = (rep.dim(), l.edges.len());
    let count = (m as u128).pow(k as u32);
    if count > MAX_COMPONENTS {
        return Err(Error::CapExceeded { states: count, cap: MAX_COMPONENTS as u64 });
    }
    let mats: Vec<CMat> = l.edges.iter().map(|&d| link_matrix(cfg, rep, d)).collect();
    Ok((0..count as usize)
        .map(|mut s| {
            let idx: Vec<usize> = (0..k)
                .map(|_| {
                    let i = s % m;
                    s /= m;
                    i
                })
                .collect();
            (0..k).map(|j| mats[j][(idx[j], idx[(j + 1) % k])]).product()
        })
        .collect())
}

/// One matrix entry `(row, col)` of `π(ω_e)` for each edge of a vertical chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainVariable {
    pub chain: Vec<EdgeId>,
    pub indices: Vec<(usize, usize)>,
}

impl ChainVariable {
    /// All `m^{2N}` chain variables on a chain of `N` edges.
    pub fn all(chain: &[EdgeId], m: usize) -> Vec<ChainVariable> {
        let n = chain.len();
        let count = m.pow(2 * n as u32);
        (0..count)
            .map(|mut s| {
                let indices = (0..n)
                    .map(|_| {
                        let r = s % m;
                        s /= m;
                        let c = s % m;
                        s /= m;
                        (r, c)
                    })
                    .collect();
                ChainVariable { chain: chain.to_vec(), indices }
            })
            .collect()
    }
}

pub fn chain_variable<G: GaugeGroup>(cfg: &GaugeConfig<G>, cv: &ChainVariable, rep: &Representation) -> Result<Complex64> {
    check_rep(cfg.group(), rep)?;
    if cv.indices.len() != cv.chain.len() || cv.indices.iter().any(|&(r, c)| r >= rep.dim() || c >= rep.dim()) {
        return Err(Error::OutOfRange(format!("chain indices {:?} for representation dimension {}", cv.indices, rep.dim())));
    }
    let g = cfg.group();
    Ok(cv
        .chain
        .iter()
        .zip(&cv.indices)
        .map(|(&e, &(r, c))| g.rep_matrix(rep.label, cfg.get(e))[(r, c)])
        .product())
}

/// Multiply every edge from the bottom layer to the next by the central element `g0`.
pub fn center_transform<G: GaugeGroup>(cfg: &GaugeConfig<G>, g0: G::Elem) -> Result<GaugeConfig<G>> {
    let g = cfg.group();
    if !g.is_central(g0) {
        return Err(Error::NotCentral(format!("{g0:?}")));
    }
    let mut out = cfg.clone();
    for e in cfg.geom().bottom_layer_edges() {
        out.set(e, g.mul(g0, cfg.get(e)));
    }
    Ok(out)
}

/// Integration settings for continuous groups.
#[derive(Clone, Copy, Debug)]
pub struct LinkIntegration {
    pub nodes: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for LinkIntegration {
    fn default() -> Self {
        LinkIntegration { nodes: 4096, samples: 1_000_000, seed: 0 }
    }
}

/// `⟨π(ω_e)⟩′`: expectation of the representation matrix under the
/// single-edge conditional law.
#[derive(Clone, Debug)]
pub struct LinkExpectation {
    pub matrix: CMat,
    pub op_norm: f64,
    /// `1 - op_norm`.
    pub gap: f64,
    /// Standard error of `op_norm`; zero when the integral is exact or quadrature.
    pub stderr: f64,
}

pub fn operator_norm(m: &CMat) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn conditional_link_expectation<G: GaugeGroup>(
    cfg: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    e: EdgeId,
    rep: &Representation,
    beta: f64,
    opts: LinkIntegration,
) -> Result<LinkExpectation> {
    check_rep(cfg.group(), rep)?;
    let density = conditional_density(cfg, bc, e, beta)?;
    let group = cfg.group();
    let dim = rep.dim();
    if let Some(nodes) = density.on_nodes(opts.nodes) {
        let mut acc = CMat::zeros(dim, dim);
        for (g, w, rho) in nodes {
            acc += group.rep_matrix(rep.label, g) * Complex64::new(w * rho, 0.0);
        }
        let op_norm = operator_norm(&acc);
        return Ok(LinkExpectation { matrix: acc, op_norm, gap: 1.0 - op_norm, stderr: 0.0 });
    }
    // Self-normalized importance sampling from Haar measure, in batches for the error bar.
    const BATCHES: usize = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per = (opts.samples / BATCHES).max(1);
    let draws: Vec<(G::Elem, f64)> = (0..per * BATCHES)
        .map(|_| {
            let g = group.haar(&mut rng);
            (g, density.log_weight(g))
        })
        .collect();
    let top = draws.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let mut total = CMat::zeros(dim, dim);
    let mut wsum = 0.0;
    let mut norms = Vec::with_capacity(BATCHES);
    for chunk in draws.chunks(per) {
        let mut acc = CMat::zeros(dim, dim);
        let mut ws = 0.0;
        for &(g, l) in chunk {
            let w = (l - top).exp();
            acc += group.rep_matrix(rep.label, g) * Complex64::new(w, 0.0);
            ws += w;
        }
        norms.push(operator_norm(&(acc.clone() / Complex64::new(ws, 0.0))));
        total += acc;
        wsum += ws;
    }
    let matrix = total / Complex64::new(wsum, 0.0);
    let op_norm = operator_norm(&matrix);
    let mean = norms.iter().sum::<f64>() / BATCHES as f64;
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(LinkExpectation { matrix, op_norm, gap: 1.0 - op_norm, stderr: (var / BATCHES as f64).sqrt() })
}

/// Largest conditional link operator norm over every assignment of the
/// neighbors of every edge of `geom`, for a finite group with free boundary.
pub fn max_link_norm_exhaustive<G: GaugeGroup>(
    geom: &std::sync::Arc<LatticeGeometry>,
    group: &G,
    rep: &Representation,
    beta: f64,
) -> Result<f64> {
    let elems = group
        .elements()
        .ok_or_else(|| Error::Unsupported("exhaustive neighbor enumeration needs a finite group".into()))?;
    let n = elems.len();
    let mut worst: f64 = 0.0;
    let mut cfg = GaugeConfig::identity(geom.clone(), group.clone());
    for e in geom.edges() {
        let nb = geom.neighbors(e);
        let total = n.checked_pow(nb.len() as u32).filter(|&t| t <= 1 << 24).ok_or(Error::CapExceeded {
            states: (n as u128).pow(nb.len() as u32),
            cap: 1 << 24,
        })?;
        for mut s in 0..total {
            for &u in nb {
                cfg.set(u, elems[s % n]);
                s /= n;
            }
            let le = conditional_link_expectation(&cfg, &BoundaryCondition::Free, e, rep, beta, LinkIntegration::default())?;
            worst = worst.max(le.op_norm);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Circle, Cyclic, GroupSpec, Su2};
    use crate::rng::substream;
    use std::sync::Arc;

    fn slab() -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::slab(2, 3, 2).unwrap())
    }

    #[test]
    fn identity_loop_traces_to_dimension() {
        let g = slab();
        let l = g.rect_loop(&[-1, 0], (0, 1), 2, 2).unwrap();
        let c = GaugeConfig::identity(g.clone(), Su2);
        let fund = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let adj = Representation::parse(GroupSpec::Su2, "adjoint").unwrap();
        assert!((wilson_loop(&c, &l, &fund).unwrap() - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((wilson_loop(&c, &l, &adj).unwrap() - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn component_expansion_sums_to_loop() {
        let g = slab();
        let mut rng = substream(2, 0);
        let c = GaugeConfig::haar(g.clone(), Su2, &mut rng);
        let fund = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let l = g.rect_loop(&[0, 0], (0, 1), 1, 1).unwrap();
        let parts = loop_components(&c, &l, &fund).unwrap();
        assert_eq!(parts.len(), 16);
        let total: Complex64 = parts.iter().sum();
        let w = wilson_loop(&c, &l, &fund).unwrap();
        assert!((total - w).norm() < 1e-10);
        assert!(w.im.abs() < 1e-10 && w.norm() <= 2.0 + 1e-12);
        let one = loop_component(&c, &l, &fund, &LoopComponent { indices: vec![1, 0, 1, 1] }).unwrap();
        assert!((one - parts[1 + 2 * 0 + 4 + 8]).norm() < 1e-14);
    }

    #[test]
    fn chain_variables_on_identity() {
        let g = slab();
        let chain = g.vertical_chain(&[0]).unwrap();
        let c = GaugeConfig::identity(g.clone(), Su2);
        let fund = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let all = ChainVariable::all(&chain, 2);
        assert_eq!(all.len(), 2usize.pow(2 * chain.len() as u32));
        for cv in all {
            let v = chain_variable(&c, &cv, &fund).unwrap();
            let diag = cv.indices.iter().all(|(r, c)| r == c);
            assert_eq!(v, Complex64::new(if diag { 1.0 } else { 0.0 }, 0.0));
        }
        let bad = ChainVariable { chain: chain.clone(), indices: vec![(2, 0); chain.len()] };
        assert!(chain_variable(&c, &bad, &fund).is_err());
    }

    #[test]
    fn center_transform_scales_chains_and_keeps_loops() {
        let g = slab();
        let mut rng = substream(3, 0);
        let fund = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let minus = crate::groups::Quat([-1.0, 0.0, 0.0, 0.0]);
        let chain = g.vertical_chain(&[1]).unwrap();
        let l = g.rect_loop(&[-2, -1], (0, 1), 4, 2).unwrap();
        for _ in 0..100 {
            let c = GaugeConfig::haar(g.clone(), Su2, &mut rng);
            let t = center_transform(&c, minus).unwrap();
            assert!((t.hamiltonian() - c.hamiltonian()).abs() < 1e-10);
            let w0 = wilson_loop(&c, &l, &fund).unwrap();
            let w1 = wilson_loop(&t, &l, &fund).unwrap();
            assert!((w0 - w1).norm() < 1e-10);
            for cv in ChainVariable::all(&chain, 2).into_iter().take(16) {
                let f0 = chain_variable(&c, &cv, &fund).unwrap();
                let f1 = chain_variable(&t, &cv, &fund).unwrap();
                assert!((f1 + f0).norm() < 1e-10);
            }
        }
        assert!(matches!(
            center_transform(&GaugeConfig::identity(g, Su2), crate::groups::Quat([0.0, 1.0, 0.0, 0.0])),
            Err(Error::NotCentral(_))
        ));
    }

    #[test]
    fn zero_beta_link_expectation_vanishes() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let e = g.interior_edges()[0];
        let mut rng = substream(4, 0);
        let z3 = Cyclic::new(3);
        let c = GaugeConfig::haar(g.clone(), z3.clone(), &mut rng);
        let r = Representation::parse(GroupSpec::Cyclic(3), "fund").unwrap();
        let le = conditional_link_expectation(&c, &BoundaryCondition::Free, e, &r, 0.0, LinkIntegration::default()).unwrap();
        assert!(le.op_norm < 1e-15);
        let c = GaugeConfig::haar(g.clone(), Circle, &mut rng);
        let r = Representation::parse(GroupSpec::Circle, "fund").unwrap();
        let le = conditional_link_expectation(&c, &BoundaryCondition::Free, e, &r, 0.0, LinkIntegration::default()).unwrap();
        assert!(le.op_norm < 1e-12);
    }

    #[test]
    fn su2_link_expectation_has_error_bar_and_gap() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let e = g.interior_edges()[0];
        let c = GaugeConfig::identity(g.clone(), Su2);
        let r = Representation::parse(GroupSpec::Su2, "fund").unwrap();
        let opts = LinkIntegration { samples: 200_000, ..Default::default() };
        let le = conditional_link_expectation(&c, &BoundaryCondition::Free, e, &r, 1.0, opts).unwrap();
        assert!(le.stderr > 0.0 && le.stderr < 0.01);
        assert!(le.gap > 0.0);
        // Two identity staples: ⟨U⟩ is a positive multiple of the identity.
        assert!((le.matrix[(0, 1)]).norm() < 0.02 && le.matrix[(0, 0)].re > 0.3);
    }
}
