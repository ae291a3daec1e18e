//! Connected plaquette correlations along the time axis of a Z2 slab with
//! identity boundary, exact and by Monte Carlo.

use std::sync::Arc;

use gaugecenter::exact::{exact_gibbs, EnumeratedSpace, DEFAULT_CAP};
use gaugecenter::groups::Cyclic;
use gaugecenter::lattice::LatticeGeometry;
use gaugecenter::model::{BoundaryCondition, GaugeConfig, SamplerParams};
use gaugecenter::observables::{correlation_decay, exact_correlation, CorrelationRequest, LocalFunction};

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::grid(&[5, 3])?);
    let z2 = Cyclic::new(2);
    let bc = BoundaryCondition::identity(&geom, &z2);
    let p = LocalFunction::Plaquette { base: vec![0, 0], axes: [0, 1] };
    let req = CorrelationRequest { f: p.clone(), g: p, axis: 0, shifts: vec![0, 1, 2, 3], chains: 2 };
    let space = EnumeratedSpace::new(geom.clone(), z2.clone(), &bc, DEFAULT_CAP)?;
    let exact = exact_correlation(&req, &exact_gibbs(&space, 1.0)?)?;
    let mut start = GaugeConfig::identity(geom.clone(), z2);
    start.apply_boundary(&bc);
    let params = SamplerParams { beta: 1.0, therm: 500, sweeps: 20_000, seed: 3, ..Default::default() };
    let mc = correlation_decay(&req, &start, &bc, &params)?;
    for (e, m) in exact.points.iter().zip(&mc.points) {
        println!("d {:.1}: exact {:+.5e}, MC {:+.5e} ± {:.1e}", e.distance, e.cov, m.cov, m.stderr);
    }
    if let Some(f) = exact.fit {
        println!("exact decay rate {:.4}", f.k2);
    }
    Ok(())
}
