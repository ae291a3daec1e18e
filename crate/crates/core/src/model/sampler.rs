use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, GaugeConfig};
use crate::error::{Error, Result};
use crate::groups::{GaugeGroup, RENORMALIZE_EVERY};
use crate::lattice::EdgeId;
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Exact draw from the single-edge conditional. Finite groups only.
    HeatBath,
    Metropolis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub beta: f64,
    pub therm: usize,
    pub sweeps: usize,
    pub stride: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub proposal_width: f64,
    /// Adapt the proposal width during thermalization towards 30–60% acceptance.
    pub tune: bool,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            beta: 1.0,
            therm: 1000,
            sweeps: 10_000,
            stride: 1,
            seed: 0,
            algorithm: Algorithm::HeatBath,
            proposal_width: 0.5,
            tune: true,
        }
    }
}

impl SamplerParams {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::OutOfRange(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        if self.stride == 0 {
            return Err(Error::OutOfRange("stride must be positive".into()));
        }
        if !(self.proposal_width > 0.0) {
            return Err(Error::OutOfRange("proposal width must be positive".into()));
        }
        Ok(())
    }
}

/// One Markov chain: a configuration, its substream and running energy.
pub struct Chain<G: GaugeGroup> {
    cfg: GaugeConfig<G>,
    order: Vec<EdgeId>,
    beta: f64,
    algorithm: Algorithm,
    width: f64,
    rng: ChaCha8Rng,
    energy: f64,
    elements: Vec<G::Elem>,
    weights: Vec<f64>,
    accepted: u64,
    proposed: u64,
    mults: u64,
}

impl<G: GaugeGroup> Chain<G> {
    /// Start from `cfg` with boundary values imposed. `stream` selects the
    /// chain's substream of `params.seed`.
    pub fn new(mut cfg: GaugeConfig<G>, bc: &BoundaryCondition<G::Elem>, params: &SamplerParams, stream: u64) -> Result<Self> {
        params.validate()?;
        bc.validate(cfg.geom())?;
        let elements = cfg.group().elements().unwrap_or_default();
        if params.algorithm == Algorithm::HeatBath && elements.is_empty() {
            return Err(Error::Unsupported(format!("heat-bath needs a finite group, got {}", cfg.group().spec())));
        }
        cfg.apply_boundary(bc);
        let geom = cfg.geom().clone();
        let order = geom
            .checkerboard()
            .iter()
            .flat_map(|class| class.iter().copied())
            .filter(|&e| !bc.is_fixed(e))
            .collect();
        let energy = cfg.hamiltonian();
        Ok(Chain {
            weights: vec![0.0; elements.len()],
            elements,
            cfg,
            order,
            beta: params.beta,
            algorithm: params.algorithm,
            width: params.proposal_width,
            rng: substream(params.seed, stream),
            energy,
            accepted: 0,
            proposed: 0,
            mults: 0,
        })
    }

    pub fn config(&self) -> &GaugeConfig<G> {
        &self.cfg
    }

    /// Energy maintained incrementally through updates.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn proposal_width(&self) -> f64 {
        self.width
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One update of every free edge, class by class.
    pub fn sweep(&mut self) {
        for i in 0..self.order.len() {
            let e = self.order[i];
            self.update_edge(e);
        }
    }

    fn update_edge(&mut self, e: EdgeId) {
        let group = self.cfg.group().clone();
        let staples = self.cfg.staple_products(e);
        let local = |g: G::Elem| staples.iter().map(|&s| group.re_trace(group.mul(g, s))).sum::<f64>();
        let old = self.cfg.get(e);
        let old_local = local(old);
        match self.algorithm {
            Algorithm::HeatBath => {
                let mut top = f64::NEG_INFINITY;
                for (w, &g) in self.weights.iter_mut().zip(&self.elements) {
                    *w = self.beta * local(g);
                    top = top.max(*w);
                }
                let mut total = 0.0;
                for w in &mut self.weights {
                    *w = (*w - top).exp();
                    total += *w;
                }
                let mut u = self.rng.random::<f64>() * total;
                let mut pick = self.elements.len() - 1;
                for (k, &w) in self.weights.iter().enumerate() {
                    if u < w {
                        pick = k;
                        break;
                    }
                    u -= w;
                }
                let new = self.elements[pick];
                self.energy -= local(new) - old_local;
                self.cfg.set(e, new);
            }
            Algorithm::Metropolis => {
                self.proposed += 1;
                let new = group.propose(old, self.width, &mut self.rng);
                let delta = local(new) - old_local;
                if delta >= 0.0 || self.rng.random::<f64>() < (self.beta * delta).exp() {
                    self.accepted += 1;
                    self.energy -= delta;
                    self.cfg.set(e, new);
                    self.mults += 1;
                    if self.mults >= RENORMALIZE_EVERY {
                        self.cfg.renormalize();
                        self.energy = self.cfg.hamiltonian();
                        self.mults = 0;
                    }
                }
            }
        }
    }

    /// Run `sweeps` sweeps, adapting the proposal width if `tune` is set.
    pub fn thermalize(&mut self, sweeps: usize, tune: bool) {
        const WINDOW: usize = 50;
        let mut done = 0;
        while done < sweeps {
            let n = WINDOW.min(sweeps - done);
            let (a0, p0) = (self.accepted, self.proposed);
            for _ in 0..n {
                self.sweep();
            }
            done += n;
            if tune && self.algorithm == Algorithm::Metropolis && self.proposed > p0 {
                let rate = (self.accepted - a0) as f64 / (self.proposed - p0) as f64;
                if rate < 0.3 {
                    self.width *= 0.8;
                } else if rate > 0.6 {
                    self.width = (self.width * 1.25).min(2.0 * std::f64::consts::PI);
                }
            }
        }
        self.accepted = 0;
        self.proposed = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Circle, Cyclic, Su2};
    use crate::lattice::LatticeGeometry;
    use std::sync::Arc;

    #[test]
    fn incremental_energy_stays_exact() {
        let g = Arc::new(LatticeGeometry::grid(&[4, 4]).unwrap());
        for alg in [Algorithm::HeatBath, Algorithm::Metropolis] {
            let params = SamplerParams { beta: 0.8, algorithm: alg, seed: 9, ..Default::default() };
            let mut ch = Chain::new(GaugeConfig::identity(g.clone(), Cyclic::new(3)), &BoundaryCondition::Free, &params, 0).unwrap();
            for _ in 0..5000 {
                ch.sweep();
            }
            assert!((ch.energy() - ch.config().hamiltonian()).abs() < 1e-8);
        }
        let params = SamplerParams { beta: 1.5, algorithm: Algorithm::Metropolis, seed: 9, ..Default::default() };
        let mut ch = Chain::new(GaugeConfig::identity(g.clone(), Su2), &BoundaryCondition::Free, &params, 0).unwrap();
        ch.thermalize(500, true);
        for _ in 0..5000 {
            ch.sweep();
        }
        assert!((ch.energy() - ch.config().hamiltonian()).abs() < 1e-8);
    }

    #[test]
    fn heat_bath_rejects_continuous_groups() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let params = SamplerParams::default();
        assert!(Chain::new(GaugeConfig::identity(g, Circle), &BoundaryCondition::Free, &params, 0).is_err());
    }

    #[test]
    fn tuning_lands_in_target_window() {
        let g = Arc::new(LatticeGeometry::grid(&[4, 4]).unwrap());
        let params = SamplerParams { beta: 2.0, algorithm: Algorithm::Metropolis, proposal_width: 6.0, ..Default::default() };
        let mut ch = Chain::new(GaugeConfig::identity(g, Circle), &BoundaryCondition::Free, &params, 0).unwrap();
        ch.thermalize(2000, true);
        for _ in 0..1000 {
            ch.sweep();
        }
        let r = ch.acceptance_rate();
        assert!((0.25..=0.65).contains(&r), "acceptance {r}");
    }

    #[test]
    fn fixed_edges_never_move() {
        let g = Arc::new(LatticeGeometry::cube(2, 2).unwrap());
        let z4 = Cyclic::new(4);
        let mut rng = crate::rng::substream(1, 0);
        let bc = BoundaryCondition::haar(&g, &z4, &mut rng);
        let params = SamplerParams { beta: 0.4, ..Default::default() };
        let mut ch = Chain::new(GaugeConfig::identity(g.clone(), z4), &bc, &params, 3).unwrap();
        for _ in 0..200 {
            ch.sweep();
        }
        for e in g.boundary_edges() {
            assert_eq!(Some(ch.config().get(e)), bc.value(e));
        }
    }
}
