//! Randomized checks of the coupling lemmas on small discrete spaces.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{coupling_stability_check, gluing_bound_check, optimal_coupling, ConditionalKernel, MARGINAL_TOL};
use crate::error::Result;
use crate::exact::{exact_tv, DiscreteMeasure};
use crate::rng::substream;

/// Flat Dirichlet draw, with a random subset of atoms zeroed half the time.
pub fn random_measure<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DiscreteMeasure {
    let sparse = rng.random_bool(0.5);
    let mut w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    if sparse {
        let keep = rng.random_range(0..k);
        for (i, x) in w.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.3) {
                *x = 0.0;
            }
        }
    }
    DiscreteMeasure::from_weights(w).expect("at least one positive weight")
}

/// `(1 - t) μ + t ν` for a random `ν`, with `t` spread over many scales so
/// small distances are exercised as well as large ones.
pub fn perturbed<R: Rng + ?Sized>(mu: &DiscreteMeasure, rng: &mut R) -> DiscreteMeasure {
    let t = 10f64.powf(-rng.random_range(0.0..8.0));
    let nu = random_measure(mu.len(), rng);
    let w = mu.probs.iter().zip(&nu.probs).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    DiscreteMeasure::from_weights(w).expect("positive mass")
}

pub fn random_kernel<R: Rng + ?Sized>(n_source: usize, n_target: usize, rng: &mut R) -> ConditionalKernel {
    let rows = (0..n_source).flat_map(|_| random_measure(n_target, rng).probs).collect();
    ConditionalKernel::new(n_source, n_target, rows).expect("rows are probability vectors")
}

fn perturbed_kernel<R: Rng + ?Sized>(k: &ConditionalKernel, rng: &mut R) -> ConditionalKernel {
    let rows = (0..k.n_source)
        .flat_map(|x| perturbed(&DiscreteMeasure { probs: k.row(x).to_vec() }, rng).probs)
        .collect();
    ConditionalKernel::new(k.n_source, k.n_target, rows).expect("rows are probability vectors")
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Tally {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs`, or largest attainment error.
    pub worst: f64,
}

impl Tally {
    fn record(&mut self, excess: f64, ok: bool) {
        self.trials += 1;
        self.violations += usize::from(!ok);
        self.worst = if self.trials == 1 { excess } else { self.worst.max(excess) };
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundTrials {
    /// Off-diagonal mass of the optimal coupling against the TV distance.
    pub attainment: Tally,
    pub stability: Tally,
    pub gluing: Tally,
}

/// `trials` instances of each lemma on spaces of at most `max_states` states.
pub fn bound_trials(trials: usize, max_states: usize, seed: u64) -> Result<BoundTrials> {
    let max_states = max_states.max(1);
    let mut out = BoundTrials { attainment: Tally::default(), stability: Tally::default(), gluing: Tally::default() };

    let mut rng = substream(seed, 0);
    for _ in 0..trials {
        let k = rng.random_range(1..=max_states);
        let mu = random_measure(k, &mut rng);
        let nu = if rng.random_bool(0.2) { perturbed(&mu, &mut rng) } else { random_measure(k, &mut rng) };
        let g = optimal_coupling(&mu, &nu)?;
        let err = (g.off_diagonal_mass() - exact_tv(&mu, &nu)?).abs();
        let marg = g.marginal_error();
        out.attainment.record(err.max(marg), err <= 1e-12 && marg <= MARGINAL_TOL);
    }

    let mut rng = substream(seed, 1);
    for _ in 0..trials {
        let k = rng.random_range(1..=max_states);
        let mu = random_measure(k, &mut rng);
        let nu = random_measure(k, &mut rng);
        let mu2 = perturbed(&mu, &mut rng);
        let nu2 = perturbed(&nu, &mut rng);
        let c = coupling_stability_check(&mu, &nu, &mu2, &nu2)?;
        out.stability.record(c.lhs - c.rhs, c.holds);
    }

    let mut rng = substream(seed, 2);
    for _ in 0..trials {
        let ns = rng.random_range(1..=max_states);
        let nt = rng.random_range(1..=max_states);
        let mu = random_measure(ns, &mut rng);
        let mu2 = perturbed(&mu, &mut rng);
        let phi = random_kernel(ns, nt, &mut rng);
        let phi2 = if rng.random_bool(0.5) { perturbed_kernel(&phi, &mut rng) } else { phi.clone() };
        let c = gluing_bound_check(&mu, &mu2, &phi, &phi2)?;
        out.gluing.record(c.lhs - c.rhs, c.holds);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_has_no_violations() {
        let r = bound_trials(300, 8, 5).unwrap();
        assert_eq!(r.attainment.trials, 300);
        assert_eq!(r.attainment.violations + r.stability.violations + r.gluing.violations, 0);
    }
}
