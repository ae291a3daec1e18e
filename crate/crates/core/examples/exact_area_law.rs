//! On a two-dimensional lattice with free boundary the Z2 plaquettes are
//! independent, so every rectangular loop equals `s^{RT}` exactly.

use std::sync::Arc;

use gaugecenter::exact::{exact_expectations, exact_gibbs, EnumeratedSpace, DEFAULT_CAP};
use gaugecenter::groups::{Cyclic, GaugeGroup, Representation};
use gaugecenter::lattice::LatticeGeometry;
use gaugecenter::model::BoundaryCondition;
use gaugecenter::observables::wilson_loop;

fn main() -> gaugecenter::Result<()> {
    let geom = Arc::new(LatticeGeometry::grid(&[4, 4])?);
    let z2 = Cyclic::new(2);
    let rep = Representation::parse(z2.spec(), "fund")?;
    let sizes = [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)];
    let loops: Vec<_> = sizes.iter().map(|&(r, t)| geom.rect_loop(&[0, 0], (0, 1), r, t)).collect::<Result<_, _>>()?;
    let space = EnumeratedSpace::new(geom.clone(), z2, &BoundaryCondition::Free, DEFAULT_CAP)?;
    for beta in [0.2, 0.5, 0.9] {
        let w = exact_expectations(&exact_gibbs(&space, beta)?, |c| loops.iter().map(|l| wilson_loop(c, l, &rep).unwrap()).collect());
        let s = w[0].re;
        print!("beta {beta}: s = {s:.12} (tanh beta = {:.12})", f64::tanh(beta));
        let worst = sizes.iter().zip(&w).map(|(&(r, t), v)| ((v.re - s.powi(r * t)) / s.powi(r * t)).abs()).fold(0.0, f64::max);
        println!(", max relative deviation from s^(RT): {worst:.2e}");
    }
    Ok(())
}
