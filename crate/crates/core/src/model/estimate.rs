use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{BoundaryCondition, Chain, GaugeConfig, SamplerParams};
use crate::error::{Error, Result};
use crate::groups::GaugeGroup;
use crate::stats::batch_means;

/// Batches per chain used for error bars.
pub const BATCHES_PER_CHAIN: usize = 50;

/// Monte Carlo estimate of a complex observable.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub tau_int: f64,
    pub n_samples: usize,
    pub n_batches: usize,
    pub n_eff: f64,
    pub acceptance: f64,
}

impl Estimate {
    /// Standard error of the modulus-relevant part; the larger of the two.
    pub fn stderr(&self) -> f64 {
        self.stderr_re.max(self.stderr_im)
    }
}

/// Measurement series of every chain, each truncated to a whole number of
/// batches, and the mean acceptance rate.
pub struct ChainSeries {
    pub chains: Vec<Vec<Vec<f64>>>,
    pub acceptance: f64,
}

/// Run `chains` independent chains from `start` and record `observe` at
/// every stride. Chains run in parallel on substreams `0..chains`.
pub fn collect_series<G, F>(
    start: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    params: &SamplerParams,
    chains: usize,
    observe: F,
) -> Result<ChainSeries>
where
    G: GaugeGroup,
    F: Fn(&GaugeConfig<G>) -> Vec<f64> + Sync,
{
    let chains = chains.max(1);
    let per_chain = params.sweeps / params.stride.max(1);
    if per_chain < BATCHES_PER_CHAIN {
        return Err(Error::InsufficientStatistics(format!(
            "{per_chain} measurements per chain, need at least {BATCHES_PER_CHAIN}"
        )));
    }
    let keep = per_chain / BATCHES_PER_CHAIN * BATCHES_PER_CHAIN;
    let runs: Vec<Result<(Vec<Vec<f64>>, f64)>> = (0..chains as u64)
        .into_par_iter()
        .map(|id| {
            let mut chain = Chain::new(start.clone(), bc, params, id)?;
            chain.thermalize(params.therm, params.tune);
            let mut series: Vec<Vec<f64>> = Vec::with_capacity(keep);
            for s in 0..params.sweeps {
                chain.sweep();
                if (s + 1) % params.stride == 0 && series.len() < keep {
                    let v = observe(chain.config());
                    if let Some(bad) = v.iter().find(|z| !z.is_finite()) {
                        return Err(Error::NonFinite(format!("observable returned {bad}")));
                    }
                    series.push(v);
                }
            }
            Ok((series, chain.acceptance_rate()))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let acceptance = runs.iter().map(|(_, a)| a).sum::<f64>() / chains as f64;
    Ok(ChainSeries { chains: runs.into_iter().map(|(s, _)| s).collect(), acceptance })
}

/// Run `chains` independent chains from `start` and estimate each component
/// of `observe`. Chains run in parallel on substreams `0..chains`.
pub fn estimate_many<G, F>(
    start: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    params: &SamplerParams,
    chains: usize,
    observe: F,
) -> Result<Vec<Estimate>>
where
    G: GaugeGroup,
    F: Fn(&GaugeConfig<G>) -> Vec<Complex64> + Sync,
{
    let runs = collect_series(start, bc, params, chains, |c| {
        observe(c).into_iter().flat_map(|z| [z.re, z.im]).collect()
    })?;
    estimates_from_series(&runs)
}

/// Estimates from a series whose columns alternate real and imaginary parts.
pub fn estimates_from_series(runs: &ChainSeries) -> Result<Vec<Estimate>> {
    let n_batches = BATCHES_PER_CHAIN * runs.chains.len();
    let k = runs.chains.first().and_then(|s| s.first()).map_or(0, Vec::len) / 2;
    let column = |j: usize| -> Vec<f64> { runs.chains.iter().flat_map(|s| s.iter().map(move |v| v[j])).collect() };
    (0..k)
        .map(|j| {
            let re = column(2 * j);
            let br = batch_means(&re, n_batches)?;
            let bi = batch_means(&column(2 * j + 1), n_batches)?;
            Ok(Estimate {
                mean: Complex64::new(br.mean, bi.mean),
                stderr_re: br.stderr,
                stderr_im: bi.stderr,
                tau_int: br.tau_int.max(bi.tau_int),
                n_samples: re.len(),
                n_batches,
                n_eff: br.n_eff.min(bi.n_eff),
                acceptance: runs.acceptance,
            })
        })
        .collect()
}

/// Single-observable, single-chain estimate.
pub fn estimate<G, F>(
    start: &GaugeConfig<G>,
    bc: &BoundaryCondition<G::Elem>,
    params: &SamplerParams,
    f: F,
) -> Result<Estimate>
where
    G: GaugeGroup,
    F: Fn(&GaugeConfig<G>) -> Complex64 + Sync,
{
    Ok(estimate_many(start, bc, params, 1, |c| vec![f(c)])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::Cyclic;
    use crate::lattice::LatticeGeometry;
    use std::sync::Arc;

    #[test]
    fn constant_observable_has_zero_error() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let start = GaugeConfig::identity(g, Cyclic::new(2));
        let params = SamplerParams { sweeps: 500, therm: 10, ..Default::default() };
        let e = estimate(&start, &BoundaryCondition::Free, &params, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(e.mean, Complex64::new(1.0, 0.0));
        assert_eq!(e.stderr(), 0.0);
    }

    #[test]
    fn too_short_runs_are_insufficient() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let start = GaugeConfig::identity(g, Cyclic::new(2));
        let params = SamplerParams { sweeps: 20, ..Default::default() };
        let r = estimate(&start, &BoundaryCondition::Free, &params, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(r, Err(Error::InsufficientStatistics(_))));
    }

    #[test]
    fn non_finite_observables_are_rejected() {
        let g = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let start = GaugeConfig::identity(g, Cyclic::new(2));
        let params = SamplerParams { sweeps: 100, therm: 0, ..Default::default() };
        let r = estimate(&start, &BoundaryCondition::Free, &params, |_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn chain_count_does_not_change_per_chain_results() {
        let g = Arc::new(LatticeGeometry::grid(&[3, 3]).unwrap());
        let start = GaugeConfig::identity(g, Cyclic::new(2));
        let params = SamplerParams { sweeps: 1000, therm: 50, beta: 0.5, seed: 4, ..Default::default() };
        let f = |c: &GaugeConfig<Cyclic>| vec![Complex64::new(c.plaquette_trace(0), 0.0)];
        let one = estimate_many(&start, &BoundaryCondition::Free, &params, 1, f).unwrap();
        let again = estimate_many(&start, &BoundaryCondition::Free, &params, 1, f).unwrap();
        assert_eq!(one[0].mean, again[0].mean);
    }
}
