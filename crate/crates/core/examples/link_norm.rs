//! Worst-case norm of the conditional expectation of a link over every
//! assignment of its neighbors, on the smallest two-dimensional cube.

use std::sync::Arc;

use gaugecenter::groups::{Cyclic, GaugeGroup, Representation};
use gaugecenter::lattice::LatticeGeometry;
use gaugecenter::observables::max_link_norm_exhaustive;

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::cube(2, 1)?);
    for n in [2, 3] {
        let g = Cyclic::new(n);
        let rep = Representation::parse(g.spec(), "fund")?;
        for beta in [0.5, 1.0] {
            let norm = max_link_norm_exhaustive(&geom, &g, &rep, beta)?;
            println!("Z{n} beta {beta}: max norm {norm:.6}, gap {:.6}", 1.0 - norm);
        }
    }
    Ok(())
}
