//! Heat-bath estimate of the 1x1 Wilson loop on a 3x4 Z2 lattice, compared
//! with exact enumeration.

use std::sync::Arc;

use gaugecenter::exact::{exact_expectation, exact_gibbs, EnumeratedSpace, DEFAULT_CAP};
use gaugecenter::groups::{Cyclic, GaugeGroup, Representation};
use gaugecenter::lattice::LatticeGeometry;
use gaugecenter::model::{estimate, BoundaryCondition, GaugeConfig, SamplerParams};
use gaugecenter::observables::wilson_loop;

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::grid(&[3, 4])?);
    let z2 = Cyclic::new(2);
    let rep = Representation::parse(z2.spec(), "fund")?;
    let l = geom.rect_loop(&[1, 1], (0, 1), 1, 1)?;
    let space = EnumeratedSpace::new(geom.clone(), z2.clone(), &BoundaryCondition::Free, DEFAULT_CAP)?;
    for beta in [0.2, 0.5, 0.9] {
        let exact = exact_expectation(&exact_gibbs(&space, beta)?, |c| wilson_loop(c, &l, &rep).unwrap()).re;
        let params = SamplerParams { beta, therm: 500, sweeps: 20_000, seed: 1, ..Default::default() };
        let start = GaugeConfig::identity(geom.clone(), z2.clone());
        let e = estimate(&start, &BoundaryCondition::Free, &params, |c| wilson_loop(c, &l, &rep).unwrap())?;
        println!(
            "beta {beta}: MC {:.5} ± {:.5} (tau {:.2}), exact {exact:.5}, z {:+.2}",
            e.mean.re,
            e.stderr_re,
            e.tau_int,
            (e.mean.re - exact) / e.stderr_re
        );
    }
    Ok(())
}
