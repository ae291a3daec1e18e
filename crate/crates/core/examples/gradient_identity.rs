//! Derivative of a U(1) expectation in one boundary angle, by finite
//! differences and by the covariance formula.

use std::sync::Arc;

use gaugecenter::groups::{Circle, GroupSpec, Representation};
use gaugecenter::lattice::LatticeGeometry;
use gaugecenter::model::{gradient_identity_check, GaugeConfig, GradientProblem};
use gaugecenter::observables::wilson_loop;
use gaugecenter::rng::substream;

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::grid(&[2, 3])?);
    let base = GaugeConfig::haar(geom.clone(), Circle, &mut substream(5, 0));
    let edge = geom.edge_id(&[0, 0], 1).expect("boundary edge");
    let free = vec![geom.edge_id(&[0, 1], 0).expect("middle rung")];
    let l = geom.rect_loop(&[0, 1], (0, 1), 1, 1)?;
    let fund = Representation::parse(GroupSpec::Circle, "fund")?;
    for beta in [0.5, 1.5] {
        let p = GradientProblem { base: base.clone(), free: free.clone(), edge, beta, nodes: 64, step: 1e-4 };
        let c = gradient_identity_check(&p, |c| wilson_loop(c, &l, &fund).unwrap().re)?;
        println!("beta {beta}: finite difference {:.10}, covariance {:.10}, gap {:.1e}", c.lhs, c.rhs, c.gap);
    }
    Ok(())
}
