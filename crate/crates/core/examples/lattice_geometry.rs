//! Slab geometry: edge counts, a Wilson loop, the vertical chain and the
//! unit cubes used by the coupling.

use gaugecenter::lattice::LatticeGeometry;

fn main() -> gaugecenter::Result<()> {
    let slab = LatticeGeometry::slab(2, 3, 1)?;
    println!(
        "slab lo {:?} hi {:?}: {} vertices, {} edges, {} plaquettes, {} boundary edges",
        slab.lo(),
        slab.hi(),
        slab.n_vertices(),
        slab.n_edges(),
        slab.n_plaquettes(),
        slab.boundary_edges().len()
    );
    let l = slab.rect_loop(&[-1, -2], (0, 1), 2, 3)?;
    println!("2x3 loop has {} edges", l.edges.len());
    println!("vertical chain at the origin: {:?}", slab.vertical_chain(&[0])?);
    for b in slab.cubes_in_slab()? {
        println!("cube {:?}..{:?}: {} interior edges", b.lo, b.hi, slab.box_interior(&b).len());
    }
    for e in slab.interior_edges().into_iter().take(5) {
        println!("edge {} at {:?} axis {}: distance to spatial boundary {:.3}", e.0, slab.edge_base(e), slab.edge_axis(e), slab.dist_to_spatial_boundary(e));
    }
    Ok(())
}
