use specprof::experiments::{complete_graph, cycle_graph, path_graph, star_graph};
use specprof::{
    binary_tree, parse_graph_json, rho, spectral_profile, tau_inf, tau_inf_from, Graph, Graph32, ProfileMode,
    SpectralDecomposition,
};

#[test]
fn json_round_trip_preserves_results() {
    let g = cycle_graph(7).unwrap();
    let text = g.to_file().to_json();
    let back = parse_graph_json(&text).unwrap();
    assert_eq!(back.edges(), g.edges());
    let a = tau_inf(&g, 0.5).unwrap().tau_inf;
    let b = tau_inf(&back, 0.5).unwrap().tau_inf;
    assert_eq!(a, b);
}

#[test]
fn single_precision_tracks_double() {
    for g in [path_graph(6).unwrap(), star_graph(5).unwrap(), complete_graph(4).unwrap()] {
        let g32: Graph32 = g.map_weights(|w| *w as f32).unwrap();
        let t64 = tau_inf(&g, 0.5).unwrap().tau_inf;
        let t32 = tau_inf(&g32, 0.5f32).unwrap().tau_inf as f64;
        assert!((t64 - t32).abs() < 1e-4 * t64, "{t64} vs {t32}");
        let r64 = rho(&g, 0.5).unwrap().rho;
        let r32 = rho(&g32, 0.5f32).unwrap().rho as f64;
        assert!((r64 - r32).abs() < 1e-3 * r64, "{r64} vs {r32}");
    }
}

#[test]
fn profile_is_monotone_and_ends_at_gap() {
    let g: Graph = binary_tree(3).unwrap();
    let curve = spectral_profile(&g, &ProfileMode::Exact).unwrap();
    assert!(curve.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    let dec = SpectralDecomposition::connected(&g).unwrap();
    assert!((curve.values.last().unwrap() - dec.gap()).abs() < 1e-9);
}

#[test]
fn mixing_bound_holds_for_every_start_vertex() {
    let g = binary_tree::<f64>(3).unwrap();
    let r = rho(&g, 0.5).unwrap().rho;
    let global = tau_inf(&g, 0.5).unwrap().tau_inf;
    for x in 0..g.num_vertices() {
        let t = tau_inf_from(&g, x, 0.5).unwrap();
        assert!(t <= global + 1e-9 && global <= r);
    }
}
