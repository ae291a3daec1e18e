//! Optimal coupling of two measures, its diagonal mass, and the randomized
//! stability and gluing checks.

use gaugecenter::coupling::{bound_trials, optimal_coupling};
use gaugecenter::exact::{exact_tv, DiscreteMeasure};

fn main() -> gaugecenter::Result<()> {
    let mu = DiscreteMeasure::new(vec![0.5, 0.3, 0.2, 0.0])?;
    let nu = DiscreteMeasure::new(vec![0.1, 0.3, 0.2, 0.4])?;
    let g = optimal_coupling(&mu, &nu)?;
    println!("TV {:.4}, off-diagonal mass {:.4}, marginal error {:.1e}", exact_tv(&mu, &nu)?, g.off_diagonal_mass(), g.marginal_error());
    for x in 0..4 {
        let row: Vec<String> = (0..4).map(|y| format!("{:.3}", g.joint[x * 4 + y])).collect();
        println!("  {}", row.join(" "));
    }
    let t = bound_trials(2000, 16, 11)?;
    println!("attainment: {} trials, {} violations, worst {:.1e}", t.attainment.trials, t.attainment.violations, t.attainment.worst);
    println!("stability:  {} trials, {} violations", t.stability.trials, t.stability.violations);
    println!("gluing:     {} trials, {} violations", t.gluing.trials, t.gluing.violations);
    Ok(())
}
