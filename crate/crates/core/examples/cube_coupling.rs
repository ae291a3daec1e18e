//! Coupling of the Gibbs measures on a 2x6 strip whose boundaries differ on
//! one corner edge, with the certificate bounding the disagreement far from
//! that edge.

use std::sync::Arc;

use gaugecenter::coupling::{cube_coupling, CubeCouplingOptions};
use gaugecenter::groups::{Cyclic, GaugeGroup};
use gaugecenter::lattice::{LatticeGeometry, Shape};
use gaugecenter::model::BoundaryCondition;

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::new(2, Shape::Box { lo: vec![0, 0], hi: vec![2, 6] })?);
    let z2 = Cyclic::new(2);
    let bc = BoundaryCondition::identity(&geom, &z2);
    let corner = geom.edge_id(&[0, 0], 0).expect("corner edge");
    let mut values = match &bc {
        BoundaryCondition::Fixed(v) => v.clone(),
        BoundaryCondition::Free => unreachable!(),
    };
    values.insert(corner, z2.center()[1]);
    let bc2 = BoundaryCondition::fixed(&geom, values)?;
    for beta in [0.0, 0.3, 1.0] {
        let c = cube_coupling(geom.clone(), &z2, &bc, &bc2, beta, CubeCouplingOptions::default())?;
        let s = c.summary();
        println!(
            "beta {beta}: {} near edges, {} outside, certificate {:.4e}, outside TV {:.4e}, consistent {}",
            s.near_edges, s.outside_edges, s.certificate, s.outside_tv, s.consistent
        );
    }
    Ok(())
}
