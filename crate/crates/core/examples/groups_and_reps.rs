//! Haar draws, representation matrices and center scalars for the three
//! group families.

use gaugecenter::groups::{acts_nontrivially_on_center, center_scalar, rep_matrix, GroupSpec, Representation};
use gaugecenter::rng::substream;

fn main() -> gaugecenter::Result<()> {
    let mut rng = substream(7, 0);
    for (group, reps) in [
        (GroupSpec::Cyclic(3), vec!["fund", "char:2", "trivial"]),
        (GroupSpec::Circle, vec!["fund", "charge:2"]),
        (GroupSpec::Su2, vec!["fund", "adjoint"]),
    ] {
        let g = group.haar_sample(&mut rng);
        println!("{group}: sample {g:?}");
        for r in reps {
            let rep = Representation::parse(group, r)?;
            let m = rep_matrix(&rep, &g)?;
            let scalars: Vec<String> = group
                .center_elements()
                .iter()
                .take(4)
                .map(|c| center_scalar(&rep, c).map(|z| format!("{:.3}{:+.3}i", z.re, z.im)))
                .collect::<gaugecenter::Result<_>>()?;
            println!(
                "  {rep}: dim {}, trace {:.4}, center acts nontrivially: {}, center scalars {}",
                rep.dim(),
                m.trace(),
                acts_nontrivially_on_center(&rep),
                scalars.join(" ")
            );
        }
    }
    Ok(())
}
