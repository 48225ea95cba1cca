//! Exercises the public API end to end: generate an instance, solve it
//! with both oracles, certify the advertised guarantees, and replay the
//! same solve under the computation cost models.

use tship_core::descent::{solve, SolveOptions};
use tship_core::generate::{generate_instance, DemandKind, GraphSpec, Kind};
use tship_core::models::{simulate_clique, simulate_stream, StreamConfig};
use tship_core::oracle::{exact_transshipment, DirectionOracle};
use tship_core::spanner::default_k;

#[test]
fn solve_certifies_its_approximation_with_both_oracles() {
    let spec = GraphSpec::new(Kind::RandomConnected, 24)
        .weights(1, 12)
        .extra_edges(10)
        .max_ratio(2.0);
    let instance = generate_instance(&spec, DemandKind::Random, 77).expect("instance");
    let (g, b) = (instance.graph, instance.demand);
    let eps = 0.25;
    let opt = exact_transshipment(&g, &b).expect("optimum").value;

    for use_exact in [true, false] {
        let oracle = if use_exact {
            DirectionOracle::exact(&g).expect("exact oracle")
        } else {
            DirectionOracle::with_spanner(&g, default_k(g.n())).expect("spanner oracle")
        };
        let mut opts = SolveOptions::new(eps);
        opts.want_tree = true;
        let res = solve(&g, &b, &oracle, &opts).expect("solve");

        assert!(g.q_stretch(&res.y) <= 1.0 + 1e-9, "potentials leave the dual ball");
        let primal = res.value_primal.expect("primal value");
        assert!(res.value_dual <= opt * (1.0 + 1e-9), "dual exceeds the optimum");
        assert!(opt <= primal * (1.0 + 1e-9), "primal beats the optimum");
        assert!(
            primal <= (1.0 + eps) * (1.0 + 1e-6) * res.value_dual,
            "gap wider than 1+eps: primal {primal}, dual {}",
            res.value_dual
        );

        let tree = res.tree.expect("sampled tree");
        assert!(tree.attempts >= 1);
        assert!(tree.edges.len() < g.n(), "a forest has fewer edges than nodes");
    }
}

#[test]
fn cost_models_replay_the_direct_solve_bit_for_bit() {
    let spec = GraphSpec::new(Kind::RandomConnected, 12).weights(1, 9).extra_edges(5);
    let instance = generate_instance(&spec, DemandKind::Random, 11).expect("instance");
    let (g, b) = (instance.graph, instance.demand);
    let (eps, k) = (0.5, 2);

    let oracle = DirectionOracle::with_spanner(&g, k).expect("spanner oracle");
    let mut opts = SolveOptions::new(eps);
    opts.want_primal = false;
    let direct = solve(&g, &b, &oracle, &opts).expect("direct solve");

    let (clique_res, clique_acc) = simulate_clique(&g, &b, eps, k).expect("clique replay");
    let (stream_res, stream_acc) =
        simulate_stream(&g, &b, eps, k, &StreamConfig::default()).expect("stream replay");

    assert_eq!(direct.value_dual.to_bits(), clique_res.value_dual.to_bits());
    assert_eq!(direct.value_dual.to_bits(), stream_res.value_dual.to_bits());
    assert!(clique_acc.formula_holds(), "clique accounting formula broke");
    assert!(stream_acc.formula_holds(), "stream accounting formula broke");
}
