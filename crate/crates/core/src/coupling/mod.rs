//! Couplings of discrete measures, conditional kernels and gluing, the cube
//! coupling and the iterated slab coupling.

mod cube;
mod slab;
mod trials;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{exact_tv, DiscreteMeasure};
use crate::groups::{acts_nontrivially_on_center, GaugeGroup, Representation};
use crate::stats::pairwise_sum;

pub use cube::{cube_coupling, CubeCertificate, CubeCoupling, CubeCouplingOptions};
pub use trials::{bound_trials, perturbed, random_kernel, random_measure, BoundTrials, Tally};
pub use slab::{log_linear_slope, CouplingState, IterateReport, ProfilePoint, RecursionCheck, SlabCoupler, SlabCouplerOptions, Tracking};

/// Tolerance for marginal checks.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Probability measure on ordered pairs, `joint[x * k + y]`, with its two
/// reference marginals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteCoupling {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub joint: Vec<f64>,
}

impl DiscreteCoupling {
    /// Checked constructor: both marginals must match within [`MARGINAL_TOL`].
    pub fn new(mu: DiscreteMeasure, nu: DiscreteMeasure, joint: Vec<f64>) -> Result<Self> {
        let c = DiscreteCoupling { mu, nu, joint };
        if c.joint.len() != c.mu.len() * c.nu.len() {
            return Err(Error::SpaceMismatch(format!("joint of size {} for {}×{}", c.joint.len(), c.mu.len(), c.nu.len())));
        }
        let err = c.marginal_error();
        if err > MARGINAL_TOL {
            return Err(Error::InvalidSpec(format!("marginals off by {err:e}")));
        }
        Ok(c)
    }

    pub fn product(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        let joint = mu.probs.iter().flat_map(|&p| nu.probs.iter().map(move |&q| p * q)).collect();
        DiscreteCoupling { mu: mu.clone(), nu: nu.clone(), joint }
    }

    pub fn diagonal(mu: &DiscreteMeasure) -> Self {
        let k = mu.len();
        let mut joint = vec![0.0; k * k];
        for (x, &p) in mu.probs.iter().enumerate() {
            joint[x * k + x] = p;
        }
        DiscreteCoupling { mu: mu.clone(), nu: mu.clone(), joint }
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        let k = self.nu.len();
        self.joint.chunks(k).map(pairwise_sum).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        let k = self.nu.len();
        let mut out = vec![0.0; k];
        for row in self.joint.chunks(k) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out
    }

    /// Largest deviation of either marginal from its reference.
    pub fn marginal_error(&self) -> f64 {
        let a = self.first_marginal().iter().zip(&self.mu.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let b = self.second_marginal().iter().zip(&self.nu.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a.max(b)
    }

    /// `γ({x ≠ y})`; meaningful when both sides share one state space.
    pub fn off_diagonal_mass(&self) -> f64 {
        let k = self.nu.len();
        let off: Vec<f64> = self.joint.iter().enumerate().filter(|(i, _)| i / k != i % k).map(|(_, &p)| p).collect();
        pairwise_sum(&off)
    }

    pub fn as_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure { probs: self.joint.clone() }
    }
}

/// `γ(S) = ∫_{S̃} h + (1/TV) ∫_S f₁(x) g₁(y)` with `h = min(f, g)`.
pub fn optimal_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DiscreteCoupling> {
    let tv = exact_tv(mu, nu)?;
    let k = mu.len();
    let h: Vec<f64> = mu.probs.iter().zip(&nu.probs).map(|(a, b)| a.min(*b)).collect();
    let f1: Vec<f64> = mu.probs.iter().zip(&h).map(|(a, m)| a - m).collect();
    let g1: Vec<f64> = nu.probs.iter().zip(&h).map(|(b, m)| b - m).collect();
    let mut joint = vec![0.0; k * k];
    for x in 0..k {
        joint[x * k + x] = h[x];
        if tv > 0.0 && f1[x] > 0.0 {
            for y in 0..k {
                joint[x * k + y] += f1[x] * g1[y] / tv;
            }
        }
    }
    Ok(DiscreteCoupling { mu: mu.clone(), nu: nu.clone(), joint })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck { lhs, rhs, holds: lhs <= rhs + 1e-12 }
    }
}

/// `TV(γ, γ') <= 10 sqrt(max(TV(μ, μ'), TV(ν, ν')))` for optimal couplings.
pub fn coupling_stability_check(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    nu2: &DiscreteMeasure,
) -> Result<BoundCheck> {
    let g = optimal_coupling(mu, nu)?;
    let g2 = optimal_coupling(mu2, nu2)?;
    let lhs = exact_tv(&g.as_measure(), &g2.as_measure())?;
    let b = exact_tv(mu, mu2)?.max(exact_tv(nu, nu2)?);
    Ok(BoundCheck::new(lhs, 10.0 * b.sqrt()))
}

/// Conditional law from a source set to a target set, `rows[x][y]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionalKernel {
    pub n_source: usize,
    pub n_target: usize,
    pub rows: Vec<f64>,
}

impl ConditionalKernel {
    pub fn new(n_source: usize, n_target: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != n_source * n_target {
            return Err(Error::SpaceMismatch(format!("{} entries for a {n_source}×{n_target} kernel", rows.len())));
        }
        for (x, row) in rows.chunks(n_target.max(1)).enumerate() {
            let total = pairwise_sum(row);
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > MARGINAL_TOL {
                return Err(Error::InvalidSpec(format!("kernel row {x} sums to {total}")));
            }
        }
        Ok(ConditionalKernel { n_source, n_target, rows })
    }

    /// Kernel ignoring its source.
    pub fn constant(n_source: usize, target: &DiscreteMeasure) -> Self {
        ConditionalKernel { n_source, n_target: target.len(), rows: target.probs.repeat(n_source) }
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.n_target..(x + 1) * self.n_target]
    }

    /// Density of row `x` at `y` with respect to the uniform probability on targets.
    pub fn density(&self, x: usize, y: usize) -> f64 {
        self.rows[x * self.n_target + y] * self.n_target as f64
    }

    /// Uniform bound `a` on the densities.
    pub fn density_bound(&self) -> f64 {
        self.rows.iter().copied().fold(0.0, f64::max) * self.n_target as f64
    }

    /// `γ(x, y) = μ(x) φ(x, y)` on `X × Y`, indexed `x * |Y| + y`.
    pub fn joint(&self, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        if mu.len() != self.n_source {
            return Err(Error::SpaceMismatch(format!("measure on {} points for a kernel from {}", mu.len(), self.n_source)));
        }
        Ok(DiscreteMeasure {
            probs: (0..self.n_source).flat_map(|x| self.row(x).iter().map(move |&p| mu.probs[x] * p)).collect(),
        })
    }
}

/// Extend a coupling on `X × X` by the product kernel `φ(x, ·) × φ'(x', ·)`
/// to a coupling of the two glued joints on `X × Y`.
pub fn glue(base: &DiscreteCoupling, phi: &ConditionalKernel, phi2: &ConditionalKernel) -> Result<DiscreteCoupling> {
    let k = base.mu.len();
    if base.nu.len() != k || phi.n_source != k || phi2.n_source != k || phi.n_target != phi2.n_target {
        return Err(Error::SpaceMismatch("kernels do not match the base coupling".into()));
    }
    let ny = phi.n_target;
    let side = k * ny;
    let mut joint = vec![0.0; side * side];
    for x in 0..k {
        for x2 in 0..k {
            let g = base.joint[x * k + x2];
            if g == 0.0 {
                continue;
            }
            for (y, &p) in phi.row(x).iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let row = (x * ny + y) * side;
                for (y2, &q) in phi2.row(x2).iter().enumerate() {
                    joint[row + x2 * ny + y2] += g * p * q;
                }
            }
        }
    }
    Ok(DiscreteCoupling { mu: phi.joint(&base.mu)?, nu: phi2.joint(&base.nu)?, joint })
}

/// `TV(μ⊗φ, μ'⊗φ') <= a TV(μ, μ') + sup |f - f'|` with densities against
/// the uniform probability on targets.
pub fn gluing_bound_check(
    mu: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    phi: &ConditionalKernel,
    phi2: &ConditionalKernel,
) -> Result<BoundCheck> {
    if phi.n_source != phi2.n_source || phi.n_target != phi2.n_target {
        return Err(Error::SpaceMismatch("kernels differ in shape".into()));
    }
    let lhs = exact_tv(&phi.joint(mu)?, &phi2.joint(mu2)?)?;
    let a = phi.density_bound().max(phi2.density_bound());
    let gap = (0..phi.n_source)
        .flat_map(|x| (0..phi.n_target).map(move |y| (x, y)))
        .map(|(x, y)| (phi.density(x, y) - phi2.density(x, y)).abs())
        .fold(0.0, f64::max);
    Ok(BoundCheck::new(lhs, a * exact_tv(mu, mu2)? + gap))
}

/// Result of testing `|∫ f ρ|² <= (1-ε)² ∫ |f|² ρ` over linear functionals of `π`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HaarGapCheck {
    /// Largest `|∫ f ρ|² / ∫ |f|² ρ` seen.
    pub max_ratio: f64,
    /// `1 - sqrt(max_ratio)`.
    pub eps_observed: f64,
    /// `ε` with `(1-ε)² = 1 - a|1-c|²/(8b)`.
    pub eps_bound: f64,
    pub a: f64,
    pub b: f64,
    pub n_functionals: usize,
    pub holds: bool,
}

/// `nodes` lists `(g, w, ρ(g))` with quadrature weights `w` summing to one.
pub fn haar_gap_check<G: GaugeGroup, R: Rng + ?Sized>(
    group: &G,
    nodes: &[(G::Elem, f64, f64)],
    rep: &Representation,
    random_maps: usize,
    rng: &mut R,
) -> Result<HaarGapCheck> {
    if rep.group != group.spec() {
        return Err(Error::GroupMismatch(format!("{} representation for {}", rep.group, group.spec())));
    }
    if !acts_nontrivially_on_center(rep) {
        return Err(Error::InvalidSpec(format!("{rep} acts trivially on the center")));
    }
    let mass: f64 = nodes.iter().map(|n| n.1 * n.2).sum();
    if (mass - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidSpec(format!("density integrates to {mass}")));
    }
    let a = nodes.iter().map(|n| n.2).fold(f64::INFINITY, f64::min);
    let b = nodes.iter().map(|n| n.2).fold(0.0, f64::max);
    let spread = group
        .center()
        .into_iter()
        .map(|z| {
            let c = group.rep_matrix(rep.label, z)[(0, 0)];
            (Complex64::new(1.0, 0.0) - c).norm_sqr()
        })
        .fold(0.0, f64::max);
    let eps_bound = 1.0 - (1.0 - a * spread / (8.0 * b)).max(0.0).sqrt();
    let m = rep.dim();
    let mats: Vec<_> = nodes.iter().map(|n| group.rep_matrix(rep.label, n.0)).collect();
    let ratio = |l: &[Complex64]| -> f64 {
        let mut mean = Complex64::new(0.0, 0.0);
        let mut second = 0.0;
        for (mat, n) in mats.iter().zip(nodes) {
            let f: Complex64 = (0..m * m).map(|k| l[k] * mat[(k / m, k % m)]).sum();
            mean += f * (n.1 * n.2);
            second += f.norm_sqr() * n.1 * n.2;
        }
        if second > 0.0 {
            mean.norm_sqr() / second
        } else {
            0.0
        }
    };
    let mut max_ratio: f64 = 0.0;
    for k in 0..m * m {
        let mut l = vec![Complex64::new(0.0, 0.0); m * m];
        l[k] = Complex64::new(1.0, 0.0);
        max_ratio = max_ratio.max(ratio(&l));
    }
    for _ in 0..random_maps {
        let l: Vec<Complex64> = (0..m * m).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        max_ratio = max_ratio.max(ratio(&l));
    }
    let eps_observed = 1.0 - max_ratio.sqrt();
    Ok(HaarGapCheck {
        max_ratio,
        eps_observed,
        eps_bound,
        a,
        b,
        n_functionals: m * m + random_maps,
        holds: eps_observed > 0.0 && eps_observed + 1e-12 >= eps_bound,
    })
}
