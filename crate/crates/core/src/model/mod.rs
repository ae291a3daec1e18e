//! Gauge configurations, boundary conditions, the Wilson action
//! `H(ω) = -Σ_p Re Tr ω_p` and single-edge conditional densities.

mod estimate;
mod gradient;
mod sampler;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::groups::{GaugeGroup, GroupElement};
use crate::lattice::{DirEdge, EdgeId, LatticeGeometry};

pub use estimate::{collect_series, estimate, estimate_many, estimates_from_series, ChainSeries, Estimate, BATCHES_PER_CHAIN};
pub use gradient::{gradient_identity_check, GradientCheck, GradientProblem};
pub use sampler::{Algorithm, Chain, SamplerParams};

/// Link variables on every edge of a geometry.
#[derive(Clone, Debug)]
pub struct GaugeConfig<G: GaugeGroup> {
    geom: Arc<LatticeGeometry>,
    group: G,
    links: Vec<G::Elem>,
}

impl<G: GaugeGroup> GaugeConfig<G> {
    pub fn identity(geom: Arc<LatticeGeometry>, group: G) -> Self {
        let links = vec![group.identity(); geom.n_edges()];
        GaugeConfig { geom, group, links }
    }

    pub fn haar<R: Rng + ?Sized>(geom: Arc<LatticeGeometry>, group: G, rng: &mut R) -> Self {
        let links = (0..geom.n_edges()).map(|_| group.haar(rng)).collect();
        GaugeConfig { geom, group, links }
    }

    pub fn from_links(geom: Arc<LatticeGeometry>, group: G, links: Vec<G::Elem>) -> Result<Self> {
        if links.len() != geom.n_edges() {
            return Err(Error::Geometry(format!("{} links for {} edges", links.len(), geom.n_edges())));
        }
        Ok(GaugeConfig { geom, group, links })
    }

    pub fn from_elements(geom: Arc<LatticeGeometry>, group: G, elems: &[GroupElement]) -> Result<Self> {
        let links = elems.iter().map(|g| group.from_element(g)).collect::<Result<Vec<_>>>()?;
        Self::from_links(geom, group, links)
    }

    pub fn to_elements(&self) -> Vec<GroupElement> {
        self.links.iter().map(|&g| self.group.to_element(g)).collect()
    }

    pub fn geom(&self) -> &Arc<LatticeGeometry> {
        &self.geom
    }
    pub fn group(&self) -> &G {
        &self.group
    }
    pub fn links(&self) -> &[G::Elem] {
        &self.links
    }
    pub fn links_mut(&mut self) -> &mut [G::Elem] {
        &mut self.links
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> G::Elem {
        self.links[e.0]
    }

    #[inline]
    pub fn set(&mut self, e: EdgeId, g: G::Elem) {
        self.links[e.0] = g;
    }

    /// Value along a directed edge: `ω_e` forward, `ω_e^{-1}` backward.
    #[inline]
    pub fn along(&self, d: DirEdge) -> G::Elem {
        let g = self.links[d.edge.0];
        if d.forward {
            g
        } else {
            self.group.inv(g)
        }
    }

    pub fn path_product(&self, path: &[DirEdge]) -> G::Elem {
        path.iter().fold(self.group.identity(), |acc, &d| self.group.mul(acc, self.along(d)))
    }

    pub fn plaquette(&self, p: usize) -> G::Elem {
        self.path_product(&self.geom.plaquettes()[p].edges)
    }

    pub fn plaquette_trace(&self, p: usize) -> f64 {
        self.group.re_trace(self.plaquette(p))
    }

    /// `H(ω) = -Σ_p Re Tr ω_p`.
    pub fn hamiltonian(&self) -> f64 {
        -(0..self.geom.n_plaquettes()).map(|p| self.plaquette_trace(p)).sum::<f64>()
    }

    /// Staple products `S_k` with `Re Tr ω_p = Re Tr(ω_e S_k)` for each plaquette through `e`.
    pub fn staple_products(&self, e: EdgeId) -> Vec<G::Elem> {
        self.geom.staples(e).iter().map(|s| self.path_product(s)).collect()
    }

    /// Part of `H` that depends on `ω_e`, evaluated at `ω_e = g`.
    pub fn local_action(&self, e: EdgeId, g: G::Elem) -> f64 {
        -self.staple_products(e).into_iter().map(|s| self.group.re_trace(self.group.mul(g, s))).sum::<f64>()
    }

    /// Overwrite boundary links with the values of a fixed boundary condition.
    pub fn apply_boundary(&mut self, bc: &BoundaryCondition<G::Elem>) {
        if let BoundaryCondition::Fixed(values) = bc {
            for (&e, &g) in values {
                self.links[e.0] = g;
            }
        }
    }

    pub fn renormalize(&mut self) {
        for g in &mut self.links {
            *g = self.group.renormalize(*g);
        }
    }
}

/// Free boundary (every edge updatable) or fixed values on all boundary edges.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition<E> {
    Free,
    Fixed(BTreeMap<EdgeId, E>),
}

impl<E: Copy + std::fmt::Debug> BoundaryCondition<E> {
    /// Fixed boundary values, checked to cover exactly the boundary edges.
    pub fn fixed(geom: &LatticeGeometry, values: BTreeMap<EdgeId, E>) -> Result<Self> {
        let bc = BoundaryCondition::Fixed(values);
        bc.validate(geom)?;
        Ok(bc)
    }

    pub fn identity<G: GaugeGroup<Elem = E>>(geom: &LatticeGeometry, group: &G) -> Self {
        BoundaryCondition::Fixed(geom.boundary_edges().into_iter().map(|e| (e, group.identity())).collect())
    }

    pub fn haar<G: GaugeGroup<Elem = E>, R: Rng + ?Sized>(geom: &LatticeGeometry, group: &G, rng: &mut R) -> Self {
        BoundaryCondition::Fixed(geom.boundary_edges().into_iter().map(|e| (e, group.haar(rng))).collect())
    }

    /// Boundary values read off a configuration.
    pub fn from_config<G: GaugeGroup<Elem = E>>(cfg: &GaugeConfig<G>) -> Self {
        BoundaryCondition::Fixed(cfg.geom().boundary_edges().into_iter().map(|e| (e, cfg.get(e))).collect())
    }

    pub fn validate(&self, geom: &LatticeGeometry) -> Result<()> {
        if let BoundaryCondition::Fixed(values) = self {
            let boundary = geom.boundary_edges();
            if values.len() != boundary.len() || !boundary.iter().all(|e| values.contains_key(e)) {
                return Err(Error::Geometry(format!(
                    "fixed boundary condition must cover the {} boundary edges exactly, got {} values",
                    boundary.len(),
                    values.len()
                )));
            }
        }
        Ok(())
    }

    pub fn is_fixed(&self, e: EdgeId) -> bool {
        match self {
            BoundaryCondition::Free => false,
            BoundaryCondition::Fixed(v) => v.contains_key(&e),
        }
    }

    pub fn value(&self, e: EdgeId) -> Option<E> {
        match self {
            BoundaryCondition::Free => None,
            BoundaryCondition::Fixed(v) => v.get(&e).copied(),
        }
    }

    /// Edges the sampler may change.
    pub fn updatable(&self, geom: &LatticeGeometry) -> Vec<EdgeId> {
        geom.edges().filter(|&e| !self.is_fixed(e)).collect()
    }

    /// Multiply by `g0` the spatial-boundary edges running from the bottom
    /// layer to the next, i.e. the boundary part of a center transformation.
    pub fn center_twisted<G: GaugeGroup<Elem = E>>(&self, geom: &LatticeGeometry, group: &G, g0: E) -> Result<Self> {
        if !group.is_central(g0) {
            return Err(Error::NotCentral(format!("{g0:?}")));
        }
        let BoundaryCondition::Fixed(values) = self else {
            return Err(Error::Unsupported("center twist needs a fixed boundary condition".into()));
        };
        let mut out = values.clone();
        for e in geom.bottom_layer_edges() {
            if geom.is_spatial_boundary(e) {
                let v = out.get_mut(&e).expect("validated boundary");
                *v = group.mul(g0, *v);
            }
        }
        Ok(BoundaryCondition::Fixed(out))
    }
}

/// Bounds `a <= ρ <= b` on any single-edge conditional density with
/// respect to Haar measure, for the given group, inverse temperature and dimension.
pub fn density_bounds<G: GaugeGroup>(group: &G, beta: f64, dim: usize) -> (f64, f64) {
    let k = 2.0 * (dim as f64 - 1.0);
    let span = 2.0 * beta.abs() * group.matrix_dim() as f64 * k;
    ((-span).exp(), span.exp())
}

/// Conditional law of `ω_e` given every other link, as a density with
/// respect to Haar measure: `ρ(g) ∝ exp(β Σ_k Re Tr(g S_k))`.
#[derive(Clone, Debug)]
pub struct ConditionalDensity<G: GaugeGroup> {
    pub group: G,
    pub staples: Vec<G::Elem>,
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
}

impl<G: GaugeGroup> ConditionalDensity<G> {
    /// `β Σ_k Re Tr(g S_k)`, the unnormalized log density.
    pub fn log_weight(&self, g: G::Elem) -> f64 {
        self.beta * self.staples.iter().map(|&s| self.group.re_trace(self.group.mul(g, s))).sum::<f64>()
    }

    /// Normalized density values on quadrature nodes (exact for finite groups).
    pub fn on_nodes(&self, nodes: usize) -> Option<Vec<(G::Elem, f64, f64)>> {
        let q = self.group.quadrature(nodes)?;
        let logs: Vec<f64> = q.iter().map(|&(g, _)| self.log_weight(g)).collect();
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = q.iter().zip(&logs).map(|(&(_, w), l)| w * (l - top).exp()).sum();
        Some(q.iter().zip(&logs).map(|(&(g, w), l)| (g, w, (l - top).exp() / z)).collect())
    }

    /// Point probabilities for finite groups, in element order.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        self.group.elements()?;
        Some(self.on_nodes(0)?.into_iter().map(|(_, w, rho)| w * rho).collect())
    }
}

pub fn conditional_density<G: GaugeGroup>(
    cfg: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    e: EdgeId,
    beta: f64,
) -> Result<ConditionalDensity<G>> {
    if e.0 >= cfg.geom().n_edges() {
        return Err(Error::Geometry(format!("{e:?} out of range")));
    }
    if bc.is_fixed(e) {
        return Err(Error::FixedEdge(e.0));
    }
    let (lower, upper) = density_bounds(cfg.group(), beta, cfg.geom().dim());
    Ok(ConditionalDensity { group: cfg.group().clone(), staples: cfg.staple_products(e), beta, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Circle, Cyclic, Su2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom() -> Arc<LatticeGeometry> {
        Arc::new(LatticeGeometry::cube(3, 1).unwrap())
    }

    #[test]
    fn identity_config_energy() {
        let g = geom();
        let c = GaugeConfig::identity(g.clone(), Su2);
        assert_eq!(c.hamiltonian(), -2.0 * g.n_plaquettes() as f64);
        let c = GaugeConfig::identity(g.clone(), Cyclic::new(2));
        assert_eq!(c.hamiltonian(), -(g.n_plaquettes() as f64));
    }

    #[test]
    fn local_action_tracks_energy_difference() {
        let g = geom();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = GaugeConfig::haar(g.clone(), Circle, &mut rng);
        for e in g.edges() {
            let old = c.get(e);
            let new = Circle.haar(&mut rng);
            let h0 = c.hamiltonian();
            let d = c.local_action(e, new) - c.local_action(e, old);
            c.set(e, new);
            assert!((c.hamiltonian() - h0 - d).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_bc_must_cover_boundary() {
        let g = geom();
        let mut values: BTreeMap<EdgeId, u32> = g.boundary_edges().into_iter().map(|e| (e, 0)).collect();
        assert!(BoundaryCondition::fixed(&g, values.clone()).is_ok());
        values.pop_first();
        assert!(BoundaryCondition::fixed(&g, values).is_err());
    }

    #[test]
    fn fixed_edges_have_no_conditional() {
        let g = geom();
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let c = GaugeConfig::identity(g.clone(), z2);
        let e = g.boundary_edges()[0];
        assert!(matches!(conditional_density(&c, &bc, e, 1.0), Err(Error::FixedEdge(_))));
    }

    #[test]
    fn z2_two_identity_staples() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let z2 = Cyclic::new(2);
        let c = GaugeConfig::identity(g.clone(), z2.clone());
        let e = g.interior_edges()[0];
        let beta = 0.7;
        let p = conditional_density(&c, &BoundaryCondition::Free, e, beta).unwrap().probabilities().unwrap();
        let expect = (2.0 * beta).exp() / ((2.0 * beta).exp() + (-2.0 * beta).exp());
        assert!((p[0] - expect).abs() < 1e-15);
        let mean = p[0] - p[1];
        assert!((mean - (2.0 * beta).tanh()).abs() < 1e-14);
    }

    #[test]
    fn densities_respect_bounds() {
        let g = geom();
        let z3 = Cyclic::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c = GaugeConfig::haar(g.clone(), z3.clone(), &mut rng);
            for e in g.edges() {
                let d = conditional_density(&c, &BoundaryCondition::Free, e, 1.3).unwrap();
                for p in d.probabilities().unwrap() {
                    let dens = 3.0 * p;
                    assert!(d.lower <= dens && dens <= d.upper);
                }
            }
        }
    }

    #[test]
    fn center_twist_touches_only_spatial_bottom_edges() {
        let g = LatticeGeometry::slab(2, 3, 1).unwrap();
        let z2 = Cyclic::new(2);
        let bc = BoundaryCondition::identity(&g, &z2);
        let tw = bc.center_twisted(&g, &z2, 1).unwrap();
        let (BoundaryCondition::Fixed(a), BoundaryCondition::Fixed(b)) = (&bc, &tw) else { unreachable!() };
        let changed: Vec<_> = a.keys().filter(|e| a[e] != b[e]).collect();
        assert_eq!(changed.len(), 2);
        for e in changed {
            assert!(g.is_spatial_boundary(*e) && g.edge_axis(*e) == 0 && g.edge_base(*e)[0] == -1);
        }
    }
}
