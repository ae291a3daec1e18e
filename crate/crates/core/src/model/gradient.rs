use rayon::prelude::*;
use serde::Serialize;

use super::GaugeConfig;
use crate::error::{Error, Result};
use crate::groups::{Circle, GaugeGroup};
use crate::lattice::EdgeId;
use crate::stats::CompensatedSum;

/// Largest tensor grid the quadrature will walk.
const MAX_GRID: u128 = 1 << 26;

/// Derivative of a U(1) expectation with respect to one fixed link angle.
///
/// All links not listed in `free` keep their values from `base`; the free
/// links are integrated with the trapezoid rule on `nodes` angles each.
#[derive(Clone, Debug)]
pub struct GradientProblem {
    pub base: GaugeConfig<Circle>,
    pub free: Vec<EdgeId>,
    pub edge: EdgeId,
    pub beta: f64,
    pub nodes: usize,
    pub step: f64,
}

/// Both sides of `d⟨f⟩/dθ_e = -β⟨f ∂H⟩ + β⟨f⟩⟨∂H⟩`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GradientCheck {
    /// Central finite difference of `⟨f⟩`.
    pub lhs: f64,
    /// Covariance form from the quadrature.
    pub rhs: f64,
    pub gap: f64,
    pub mean: f64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    z: CompensatedSum,
    f: CompensatedSum,
    dh: CompensatedSum,
    fdh: CompensatedSum,
}

impl Moments {
    fn merge(&mut self, o: Moments) {
        self.z.merge(o.z);
        self.f.merge(o.f);
        self.dh.merge(o.dh);
        self.fdh.merge(o.fdh);
    }
}

fn moments<F>(p: &GradientProblem, theta: f64, f: &F) -> Moments
where
    F: Fn(&GaugeConfig<Circle>) -> f64 + Sync,
{
    let k = p.free.len();
    let nodes = p.nodes;
    let angle = |i: usize| std::f64::consts::TAU * i as f64 / nodes as f64;
    let mut base = p.base.clone();
    base.set(p.edge, Circle.renormalize(theta));
    let staples = base.geom().staples(p.edge).to_vec();
    let outer = if k == 0 { 1 } else { nodes };
    let parts: Vec<Moments> = (0..outer)
        .into_par_iter()
        .map(|first| {
            let mut cfg = base.clone();
            let mut m = Moments::default();
            if k > 0 {
                cfg.set(p.free[0], angle(first));
            }
            let mut idx = vec![0usize; k.saturating_sub(1)];
            for (j, &e) in p.free.iter().enumerate().skip(1) {
                cfg.set(e, angle(idx[j - 1]));
            }
            loop {
                let h = cfg.hamiltonian();
                let w = (-p.beta * h).exp();
                let te = cfg.get(p.edge);
                let dh: f64 = staples.iter().map(|s| (te + cfg.path_product(s)).sin()).sum();
                let fv = f(&cfg);
                m.z.add(w);
                m.f.add(w * fv);
                m.dh.add(w * dh);
                m.fdh.add(w * fv * dh);
                let mut j = idx.len();
                loop {
                    if j == 0 {
                        return m;
                    }
                    j -= 1;
                    idx[j] += 1;
                    if idx[j] < nodes {
                        cfg.set(p.free[j + 1], angle(idx[j]));
                        break;
                    }
                    idx[j] = 0;
                    cfg.set(p.free[j + 1], angle(0));
                }
            }
        })
        .collect();
    let mut total = Moments::default();
    for part in parts {
        total.merge(part);
    }
    total
}

/// Compare the finite-difference derivative of `⟨f⟩` in the boundary angle
/// `θ_e` with the covariance formula. `f` must not depend on `θ_e`.
pub fn gradient_identity_check<F>(p: &GradientProblem, f: F) -> Result<GradientCheck>
where
    F: Fn(&GaugeConfig<Circle>) -> f64 + Sync,
{
    let geom = p.base.geom();
    if p.edge.0 >= geom.n_edges() || p.free.iter().any(|e| e.0 >= geom.n_edges()) {
        return Err(Error::Geometry("edge out of range".into()));
    }
    if p.free.contains(&p.edge) {
        return Err(Error::OutOfRange("the differentiated edge must not be integrated".into()));
    }
    if p.free.len() > 6 {
        return Err(Error::OutOfRange(format!("at most 6 free edges, got {}", p.free.len())));
    }
    if p.nodes < 2 || !(p.step > 0.0) {
        return Err(Error::OutOfRange("need at least 2 nodes and a positive step".into()));
    }
    let grid = (p.nodes as u128).pow(p.free.len() as u32);
    if grid > MAX_GRID {
        return Err(Error::CapExceeded { states: grid, cap: MAX_GRID as u64 });
    }
    let theta = p.base.get(p.edge);
    let mean_at = |t: f64| {
        let m = moments(p, t, &f);
        m.f.value() / m.z.value()
    };
    let lhs = (mean_at(theta + p.step) - mean_at(theta - p.step)) / (2.0 * p.step);
    let m = moments(p, theta, &f);
    let z = m.z.value();
    let (ef, edh, efdh) = (m.f.value() / z, m.dh.value() / z, m.fdh.value() / z);
    let rhs = -p.beta * efdh + p.beta * ef * edh;
    Ok(GradientCheck { lhs, rhs, gap: (lhs - rhs).abs(), mean: ef })
}
