//! Static potential, Creutz ratios and the area-law fit on a synthetic
//! Wilson loop table with area and perimeter terms.

use gaugecenter::observables::{potential_extract, WilsonCell};

fn main() -> gaugecenter::Result<()> {
    let (sigma, perimeter) = (0.3, 0.1);
    let table: Vec<WilsonCell> = (1..=4)
        .flat_map(|r| (1..=4).map(move |t| (r, t)))
        .map(|(r, t)| WilsonCell { r, t, mean: (-sigma * (r * t) as f64 - perimeter * (r + t) as f64).exp(), stderr: 0.0 })
        .collect();
    let fit = potential_extract(&table)?;
    for p in &fit.potential {
        println!("V({}) = {:.6}", p.r, p.v.unwrap_or(f64::NAN));
    }
    for c in &fit.creutz {
        println!("chi({}, {}) = {:.6}", c.r, c.t, c.chi);
    }
    if let Some(a) = fit.area {
        println!("area fit: sigma {:.6}, perimeter {:.6}, constant {:.2e}", a.sigma, a.perimeter, a.constant);
    }
    Ok(())
}
