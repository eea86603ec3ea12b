use rand::Rng;
use rand::seq::SliceRandom;
use toricloc::decoder::{decode, edge_sum, loop_class, memory_experiment, min_weight_matching};
use toricloc::effective::field_preset;
use toricloc::geometry::{EdgeOrientation, LatticeGeometry, PathKind};
use toricloc::pauli::{syndrome_of, PauliFrame};
use toricloc::seed::rng_from_seed;
use toricloc_testkit::brute_force_matching_cost;

fn random_frame(g: &LatticeGeometry, p: f64, rng: &mut impl Rng) -> PauliFrame {
    let mut f = PauliFrame::identity(g.num_edges());
    for e in 0..g.num_edges() {
        if rng.random::<f64>() < p {
            f.apply_z_string(&[e]);
        }
        if rng.random::<f64>() < p {
            f.apply_x_string(&[e]);
        }
    }
    f
}

fn closed_loops(g: &LatticeGeometry, f: &PauliFrame) -> (Vec<usize>, Vec<usize>) {
    let s = syndrome_of(f, g);
    let c = decode(&s, g).unwrap();
    let z: Vec<usize> = (0..g.num_edges()).filter(|&e| f.z_bit(e)).collect();
    let x: Vec<usize> = (0..g.num_edges()).filter(|&e| f.x_bit(e)).collect();
    let primal = edge_sum(
        std::iter::once(z.as_slice()).chain(c.electric_paths.iter().map(|p| p.edges.as_slice())),
        g.num_edges(),
    );
    let dual = edge_sum(
        std::iter::once(x.as_slice()).chain(c.magnetic_paths.iter().map(|p| p.edges.as_slice())),
        g.num_edges(),
    );
    (primal, dual)
}

#[test]
fn corrections_clear_the_syndrome() {
    let mut rng = rng_from_seed(11);
    for case in 0..1000 {
        let size = [3, 4, 5, 6, 8][case % 5];
        let g = LatticeGeometry::torus(size).unwrap();
        let f = random_frame(&g, 0.04, &mut rng);
        let s = syndrome_of(&f, &g);
        let c = decode(&s, &g).unwrap();
        let mut fixed = f.clone();
        for p in &c.electric_paths {
            fixed.apply_z_string(&p.edges);
        }
        for p in &c.magnetic_paths {
            fixed.apply_x_string(&p.edges);
        }
        assert!(syndrome_of(&fixed, &g).is_empty(), "case {case}");
        let (primal, dual) = closed_loops(&g, &f);
        loop_class(PathKind::Primal, &primal, &g).unwrap();
        loop_class(PathKind::Dual, &dual, &g).unwrap();
    }
}

#[test]
fn matching_agrees_with_brute_force() {
    let mut rng = rng_from_seed(12);
    for case in 0..500 {
        let size = [3, 4, 5, 6, 7, 9][case % 6];
        let g = LatticeGeometry::torus(size).unwrap();
        let n = 2 * rng.random_range(1..=4usize).min(g.num_sites() / 2);
        let mut all: Vec<usize> = (0..g.num_sites()).collect();
        all.shuffle(&mut rng);
        let sites = &all[..n];
        let m = min_weight_matching(sites, &g).unwrap();
        assert!(m.optimal);
        assert_eq!(m.cost, brute_force_matching_cost(sites, size), "case {case}: {sites:?}");
        let pair_cost: usize = m.pairs.iter().map(|&(a, b)| g.distance(a, b)).sum();
        assert_eq!(pair_cost, m.cost);
    }
}

#[test]
fn class_is_invariant_under_contractible_deformation() {
    let mut rng = rng_from_seed(13);
    let g = LatticeGeometry::torus(6).unwrap();
    let mut nontrivial = 0;
    for _ in 0..20 {
        let f = random_frame(&g, 0.15, &mut rng);
        let (mut primal, mut dual) = closed_loops(&g, &f);
        let (p0, d0) = (
            loop_class(PathKind::Primal, &primal, &g).unwrap(),
            loop_class(PathKind::Dual, &dual, &g).unwrap(),
        );
        nontrivial += (!p0.is_trivial()) as usize + (!d0.is_trivial()) as usize;
        for _ in 0..1000 {
            let p = rng.random_range(0..g.num_plaquettes());
            primal = edge_sum([primal.as_slice(), &g.plaquette_edges(p)], g.num_edges());
            let s = rng.random_range(0..g.num_stars());
            dual = edge_sum([dual.as_slice(), &g.star_edges(s)], g.num_edges());
            assert_eq!(loop_class(PathKind::Primal, &primal, &g).unwrap(), p0);
            assert_eq!(loop_class(PathKind::Dual, &dual, &g).unwrap(), d0);
        }
        let row: Vec<usize> = (0..6).map(|x| g.edge_at(x, 2, EdgeOrientation::Horizontal)).collect();
        let wound = edge_sum([primal.as_slice(), &row], g.num_edges());
        let c = loop_class(PathKind::Primal, &wound, &g).unwrap();
        assert_eq!((c.x, c.y), (!p0.x, p0.y));
    }
    assert!(nontrivial > 0);
}

#[test]
fn open_edge_sets_are_rejected() {
    let g = LatticeGeometry::torus(4).unwrap();
    assert!(loop_class(PathKind::Primal, &[0], &g).is_err());
    assert!(loop_class(PathKind::Dual, &[0, 3], &g).is_err());
}

#[test]
fn memory_experiment_is_reproducible_across_thread_counts() {
    let g = LatticeGeometry::torus(6).unwrap();
    let terms = field_preset(&g, 1.0, [0.0, 0.0, 1.0]);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| memory_experiment(&g, &terms, 8.0, 12.0, 24, 99).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&run(1)).unwrap()
    );
    assert_eq!(a.failures, a.outcomes.iter().filter(|o| o.failed()).count());
}
