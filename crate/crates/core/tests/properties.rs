use std::sync::Arc;

use gaugecenter::coupling::{
    coupling_stability_check, glue, gluing_bound_check, optimal_coupling, ConditionalKernel, DiscreteCoupling,
};
use gaugecenter::exact::{exact_tv, DiscreteMeasure, EnumeratedSpace};
use gaugecenter::groups::{Circle, Cyclic, GaugeGroup, Representation, Su2};
use gaugecenter::lattice::{LatticeGeometry, Shape};
use gaugecenter::model::{BoundaryCondition, GaugeConfig};
use gaugecenter::observables::{center_transform, potential_extract, WilsonCell};
use gaugecenter::rng::substream;
use gaugecenter::stats::pairwise_sum;
use proptest::prelude::*;

fn distance<G: GaugeGroup>(g: &G, a: G::Elem, b: G::Elem) -> f64 {
    let fund = Representation::parse(g.spec(), "fund").unwrap().label;
    (g.rep_matrix(fund, a) - g.rep_matrix(fund, b)).norm()
}

fn group_axioms<G: GaugeGroup>(g: &G, seed: u64) -> f64 {
    let mut rng = substream(seed, 0);
    let (a, b, c) = (g.haar(&mut rng), g.haar(&mut rng), g.haar(&mut rng));
    let e = g.identity();
    [
        distance(g, g.mul(g.mul(a, b), c), g.mul(a, g.mul(b, c))),
        distance(g, g.mul(a, e), a),
        distance(g, g.mul(e, a), a),
        distance(g, g.mul(a, g.inv(a)), e),
        distance(g, g.mul(g.inv(a), a), e),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// `ω_e ↦ g_x ω_e g_y^{-1}` for `e` from `x` to `y`.
fn gauge_transform<G: GaugeGroup>(c: &GaugeConfig<G>, gauge: &[G::Elem]) -> GaugeConfig<G> {
    let geom = c.geom().clone();
    let g = c.group().clone();
    let mut out = c.clone();
    for e in geom.edges() {
        let x = geom.edge_base_index(e);
        let mut end = geom.edge_base(e);
        end[geom.edge_axis(e)] += 1;
        let y = geom.vertex_index(&end).unwrap();
        out.set(e, g.mul(g.mul(gauge[x], c.get(e)), g.inv(gauge[y])));
    }
    out
}

fn gauge_invariance<G: GaugeGroup>(g: G, seed: u64) -> f64 {
    let geom = Arc::new(LatticeGeometry::new(3, Shape::Box { lo: vec![0, 0, 0], hi: vec![2, 1, 2] }).unwrap());
    let mut rng = substream(seed, 1);
    let c = GaugeConfig::haar(geom.clone(), g.clone(), &mut rng);
    let gauge: Vec<G::Elem> = (0..geom.n_vertices()).map(|_| g.haar(&mut rng)).collect();
    (gauge_transform(&c, &gauge).hamiltonian() - c.hamiltonian()).abs()
}

fn center_invariance<G: GaugeGroup>(g: G, seed: u64) -> f64 {
    let geom = Arc::new(LatticeGeometry::slab(3, 2, 1).unwrap());
    let c = GaugeConfig::haar(geom, g.clone(), &mut substream(seed, 2));
    g.center().into_iter().map(|z| (center_transform(&c, z).unwrap().hamiltonian() - c.hamiltonian()).abs()).fold(0.0, f64::max)
}

fn local_action_consistency<G: GaugeGroup>(g: G, seed: u64) -> f64 {
    let geom = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
    let mut rng = substream(seed, 3);
    let c = GaugeConfig::haar(geom.clone(), g.clone(), &mut rng);
    let e = gaugecenter::lattice::EdgeId((seed as usize) % geom.n_edges());
    let new = g.haar(&mut rng);
    let mut d = c.clone();
    d.set(e, new);
    ((d.hamiltonian() - c.hamiltonian()) - (c.local_action(e, new) - c.local_action(e, c.get(e)))).abs()
}

fn measure(w: &[f64]) -> DiscreteMeasure {
    DiscreteMeasure::from_weights(w.to_vec()).unwrap()
}

/// Nonnegative weight vectors of length `k` with at least one positive entry.
fn weights(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => 0.0..1.0f64, 1 => Just(0.0)], k)
        .prop_map(|mut w| {
            if w.iter().all(|&x| x == 0.0) {
                w[0] = 1.0;
            }
            w
        })
}

fn measure_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=16).prop_flat_map(|k| (weights(k), weights(k)))
}

fn kernel(ns: usize, nt: usize) -> impl Strategy<Value = ConditionalKernel> {
    prop::collection::vec(weights(nt), ns).prop_map(move |rows| {
        let rows = rows.into_iter().flat_map(|r| measure(&r).probs).collect();
        ConditionalKernel::new(ns, nt, rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn group_axioms_hold(seed in any::<u64>(), n in 2u32..9) {
        prop_assert_eq!(group_axioms(&Cyclic::new(n), seed), 0.0);
        prop_assert!(group_axioms(&Circle, seed) < 1e-12);
        prop_assert!(group_axioms(&Su2, seed) < 1e-12);
    }

    #[test]
    fn hamiltonian_is_gauge_invariant(seed in any::<u64>()) {
        prop_assert!(gauge_invariance(Cyclic::new(4), seed) < 1e-12);
        prop_assert!(gauge_invariance(Circle, seed) < 1e-10);
        prop_assert!(gauge_invariance(Su2, seed) < 1e-10);
    }

    #[test]
    fn center_transform_keeps_the_hamiltonian(seed in any::<u64>()) {
        prop_assert_eq!(center_invariance(Cyclic::new(2), seed), 0.0);
        prop_assert_eq!(center_invariance(Cyclic::new(4), seed), 0.0);
        prop_assert!(center_invariance(Circle, seed) < 1e-10);
        prop_assert!(center_invariance(Su2, seed) < 1e-10);
    }

    #[test]
    fn local_action_tracks_the_energy(seed in any::<u64>()) {
        prop_assert!(local_action_consistency(Cyclic::new(3), seed) < 1e-12);
        prop_assert!(local_action_consistency(Circle, seed) < 1e-10);
        prop_assert!(local_action_consistency(Su2, seed) < 1e-10);
    }

    #[test]
    fn codec_is_a_bijection(n in 2u32..4, idx in any::<prop::sample::Index>()) {
        let geom = Arc::new(LatticeGeometry::cube(2, 1).unwrap());
        let z = Cyclic::new(n);
        let space = EnumeratedSpace::new(geom, z.clone(), &BoundaryCondition::Free, 1 << 24).unwrap();
        let i = idx.index(space.n_states());
        prop_assert_eq!(space.encode(&space.config(i)), i);
    }

    #[test]
    fn optimal_coupling_attains_tv((a, b) in measure_pair()) {
        let (mu, nu) = (measure(&a), measure(&b));
        let g = optimal_coupling(&mu, &nu).unwrap();
        prop_assert!(g.marginal_error() <= 1e-12);
        prop_assert!((g.off_diagonal_mass() - exact_tv(&mu, &nu).unwrap()).abs() <= 1e-12);
        let p = DiscreteCoupling::product(&mu, &nu);
        prop_assert!(p.off_diagonal_mass() >= g.off_diagonal_mass() - 1e-12);
    }

    #[test]
    fn stability_bound_holds((a, b) in measure_pair(), t in 0.0..1.0f64, s in 0.0..1.0f64, seed in any::<u64>()) {
        let k = a.len();
        let mut rng = substream(seed, 4);
        let mix = |w: &[f64], t: f64, rng: &mut _| {
            let other = gaugecenter::coupling::random_measure(k, rng);
            let m = measure(w);
            measure(&m.probs.iter().zip(&other.probs).map(|(x, y)| (1.0 - t) * x + t * y).collect::<Vec<_>>())
        };
        let (mu, nu) = (measure(&a), measure(&b));
        let (mu2, nu2) = (mix(&a, t * t * t, &mut rng), mix(&b, s * s * s, &mut rng));
        prop_assert!(coupling_stability_check(&mu, &nu, &mu2, &nu2).unwrap().holds);
    }

    #[test]
    fn gluing_bound_holds_and_glue_has_the_right_marginals(
        (ns, nt) in (1usize..=6, 1usize..=6),
        seed in any::<u64>(),
    ) {
        let mut rng = substream(seed, 5);
        let mu = gaugecenter::coupling::random_measure(ns, &mut rng);
        let mu2 = gaugecenter::coupling::perturbed(&mu, &mut rng);
        let phi = gaugecenter::coupling::random_kernel(ns, nt, &mut rng);
        let phi2 = gaugecenter::coupling::random_kernel(ns, nt, &mut rng);
        prop_assert!(gluing_bound_check(&mu, &mu2, &phi, &phi2).unwrap().holds);
        let base = optimal_coupling(&mu, &mu2).unwrap();
        let glued = glue(&base, &phi, &phi2).unwrap();
        prop_assert!(glued.marginal_error() <= 1e-12);
        prop_assert!(exact_tv(&glued.mu, &phi.joint(&mu).unwrap()).unwrap() <= 1e-12);
    }

    #[test]
    fn kernels_from_strategy_are_stochastic(k in (1usize..5, 1usize..5).prop_flat_map(|(a, b)| kernel(a, b))) {
        for x in 0..k.n_source {
            prop_assert!((pairwise_sum(k.row(x)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn area_law_tables_fit_exactly(sigma in 0.05..1.0f64, perimeter in 0.0..0.5f64) {
        let table: Vec<WilsonCell> = (1..=3u32)
            .flat_map(|r| (1..=3u32).map(move |t| (r, t)))
            .map(|(r, t)| WilsonCell { r, t, mean: (-sigma * (r * t) as f64 - perimeter * (r + t) as f64).exp(), stderr: 0.0 })
            .collect();
        let fit = potential_extract(&table).unwrap();
        let a = fit.area.unwrap();
        prop_assert!((a.sigma - sigma).abs() < 1e-8);
        prop_assert!((a.perimeter - perimeter).abs() < 1e-8);
        for c in fit.creutz {
            prop_assert!((c.chi - sigma).abs() < 1e-10);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive(xs in prop::collection::vec(-1e3..1e3f64, 0..200)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9);
    }
}
