use hardcore::gadgets::cycles::{count_short_cycles, r, MAX_CYCLE_LENGTH};
use hardcore::gadgets::io::{from_text, to_text};
use hardcore::gadgets::{append_trees, build_hg, ports, sample_gadget, sample_gtilde, GadgetSpec, Graph, Label};
use hardcore::Error;
use proptest::prelude::*;

fn count_labels(g: &Graph, l: Label) -> usize {
    g.vertices_with(l).len()
}

#[test]
fn gtilde_degrees_and_edges() {
    for (n, m, depth, d) in [(10, 1, 0, 3), (30, 2, 2, 4), (50, 1, 2, 6), (7, 3, 0, 5)] {
        let spec = GadgetSpec::with_sizes(n, m, depth, d, 9).unwrap();
        let g = sample_gtilde(&spec);
        assert_eq!(g.len(), 2 * n + 2 * spec.m_prime);
        assert_eq!(g.multi_edges().len(), (d as usize - 1) * (n + spec.m_prime) + n);
        for v in 0..g.len() {
            let l = g.label(v);
            if l.is_w() {
                assert!(g.degree(v) <= d as usize);
            } else {
                assert!(l.is_u());
                assert!(g.degree(v) <= d as usize - 1);
            }
        }
        assert!(g.is_bipartite());
        assert!(g.parity_consistent());
        assert_eq!(count_labels(&g, Label::WPlus), n);
        assert_eq!(count_labels(&g, Label::UMinus), spec.m_prime);
    }
}

#[test]
fn gtilde_is_seed_deterministic() {
    let spec = GadgetSpec::with_sizes(40, 2, 2, 3, 123).unwrap();
    assert_eq!(to_text(&sample_gtilde(&spec)), to_text(&sample_gtilde(&spec)));
    let other = spec.with_seed(124);
    assert_ne!(to_text(&sample_gtilde(&spec)), to_text(&sample_gtilde(&other)));
}

#[test]
fn spec_from_exponents() {
    let s = GadgetSpec::new(2000, 0.1, 0.1, 6, 0).unwrap();
    assert_eq!((s.m, s.tree_depth, s.m_prime), (1, 0, 1));
    // 3^12 = 531441: θ log_2 n = 0.12·19.02 → 2, (ψ/2)·19.02 = 1.14 → depth 2
    let s = GadgetSpec::new(531_441, 0.12, 0.12, 3, 0).unwrap();
    assert_eq!((s.m, s.tree_depth, s.m_prime), (4, 2, 16));
    // exact power: θ log_{d-1} n is an integer
    let s = GadgetSpec::new(1 << 16, 0.125 - 1e-12, 0.1, 3, 0).unwrap();
    assert_eq!(s.m, 2);
    let s = GadgetSpec::new(1 << 16, 0.0625, 0.1, 3, 0).unwrap();
    assert_eq!(s.m, 2);
    assert!(GadgetSpec::new(100, 0.125, 0.1, 3, 0).is_err());
    assert!(GadgetSpec::new(100, 0.1, 0.0, 3, 0).is_err());
    assert!(GadgetSpec::new(100, 0.1, 0.1, 2, 0).is_err());
    assert!(GadgetSpec::with_sizes(10, 1, 1, 3, 0).is_err());
    // (2^20)^{0.09} = 3.48
    assert_eq!(GadgetSpec::new(1 << 20, 0.12, 0.1, 3, 0).unwrap().default_k(), 3);
    assert_eq!(GadgetSpec::with_sizes(4096, 1, 0, 3, 0).unwrap().default_k(), 1);
}

#[test]
fn trees_are_attached() {
    for (n, m, depth, d) in [(20, 2, 2, 3), (30, 1, 2, 4), (12, 3, 4, 3)] {
        let spec = GadgetSpec::with_sizes(n, m, depth, d, 5).unwrap();
        let g = sample_gadget(&spec).unwrap();
        assert_eq!(count_labels(&g, Label::VPlus), m);
        assert_eq!(count_labels(&g, Label::VMinus), m);
        assert_eq!(ports(&g, 1).len(), m);
        assert_eq!(g.len(), spec.gadget_size());
        for v in 0..g.len() {
            let l = g.label(v);
            match l {
                Label::TPlus | Label::TMinus => assert_eq!(g.degree(v), d as usize),
                Label::VPlus | Label::VMinus => assert_eq!(g.degree(v), d as usize - 1),
                _ => {}
            }
            assert!(g.degree(v) <= d as usize);
        }
        // tree vertices per side ≤ m'(d-1)/(d-2) (leaves included)
        let tree = spec.tree_vertices_per_side() + spec.m_prime;
        assert!(tree as f64 <= spec.m_prime as f64 * (d - 1) as f64 / (d - 2) as f64 + 1e-9);
        assert!(g.is_bipartite());
        assert!(g.parity_consistent());
    }
}

#[test]
fn depth_zero_trees_relabel_u_as_ports() {
    let spec = GadgetSpec::with_sizes(8, 3, 0, 3, 1).unwrap();
    let g = sample_gadget(&spec).unwrap();
    assert_eq!(count_labels(&g, Label::UVPlus), 3);
    assert_eq!(count_labels(&g, Label::UPlus), 0);
    assert_eq!(g.len(), sample_gtilde(&spec).len());
}

#[test]
fn tree_leaf_mismatch_is_an_error() {
    let spec = GadgetSpec::with_sizes(10, 2, 2, 3, 1).unwrap();
    let gt = sample_gtilde(&spec);
    let wrong = GadgetSpec::with_sizes(10, 1, 2, 3, 1).unwrap();
    assert!(matches!(append_trees(&gt, &wrong), Err(Error::Consistency(_))));
}

fn cross_edges(g: &Graph) -> Vec<(usize, usize)> {
    g.edges().into_iter().filter(|&(u, v)| g.gadget_of(u) != g.gadget_of(v)).collect()
}

#[test]
fn single_edge_hg() {
    let spec = GadgetSpec::with_sizes(6, 2, 2, 3, 3).unwrap();
    let gad = sample_gadget(&spec).unwrap();
    let h = Graph::path(2);
    let hg = build_hg(&h, &gad, 2).unwrap();
    assert_eq!(hg.len(), 2 * gad.len());
    let cross = cross_edges(&hg);
    assert_eq!(cross.len(), 4);
    for &(u, v) in &cross {
        assert_eq!(hg.label(u), hg.label(v));
        assert!(hg.is_cross(u) && hg.is_cross(v));
    }
    assert!(hg.max_degree() <= 3);
    assert!(hg.is_bipartite());
    assert!(hg.parity_consistent());
    assert_eq!(hg.gadget_count(), 2);
}

#[test]
fn edgeless_h_gives_disjoint_copies() {
    let spec = GadgetSpec::with_sizes(5, 1, 0, 3, 3).unwrap();
    let gad = sample_gadget(&spec).unwrap();
    let h = Graph::from_edges(3, &[]).unwrap();
    for k in [0, 1, 5] {
        let hg = build_hg(&h, &gad, k).unwrap();
        assert_eq!(hg.len(), 3 * gad.len());
        assert!(cross_edges(&hg).is_empty());
        assert_eq!(hg.multi_edges().len(), 3 * gad.multi_edges().len());
    }
    // k = 0 on a graph with edges is also the disjoint union
    assert!(cross_edges(&build_hg(&Graph::cycle(3), &gad, 0).unwrap()).is_empty());
}

#[test]
fn hg_cross_edges_per_h_edge() {
    let spec = GadgetSpec::with_sizes(10, 4, 0, 3, 8).unwrap();
    let gad = sample_gadget(&spec).unwrap();
    for (h, bip) in [(Graph::cycle(3), false), (Graph::cycle(4), true), (Graph::path(3), true)] {
        let k = 2;
        let hg = build_hg(&h, &gad, k).unwrap();
        for (x, y) in h.edges() {
            for lab in [Label::UVPlus, Label::UVMinus] {
                let c = cross_edges(&hg)
                    .into_iter()
                    .filter(|&(u, v)| {
                        let gs = (hg.gadget_of(u) as usize, hg.gadget_of(v) as usize);
                        (gs == (x, y) || gs == (y, x)) && hg.label(u) == lab
                    })
                    .count();
                assert_eq!(c, k);
            }
        }
        assert!(hg.max_degree() <= 3);
        // cross-edges join like-signed ports, so odd cycles in H survive
        assert_eq!(hg.is_bipartite(), bip);
        assert_eq!(hg.parity_consistent(), bip);
    }
}

#[test]
fn hg_capacity_error() {
    let spec = GadgetSpec::with_sizes(6, 2, 0, 3, 8).unwrap();
    let gad = sample_gadget(&spec).unwrap();
    // triangle: each gadget needs k·2 = 4 ports per side, has 2
    assert!(matches!(build_hg(&Graph::cycle(3), &gad, 2), Err(Error::Capacity(_))));
    assert!(build_hg(&Graph::cycle(3), &gad, 1).is_ok());
}

/// Proper colourings of C_i with d colours by enumeration.
fn colourings(d: u32, i: u32) -> i128 {
    let total = (d as u64).pow(i);
    let mut c = 0;
    for mut x in 0..total {
        let mut cols = vec![];
        for _ in 0..i {
            cols.push(x % d as u64);
            x /= d as u64;
        }
        if (0..i as usize).all(|j| cols[j] != cols[(j + 1) % i as usize]) {
            c += 1;
        }
    }
    c
}

#[test]
fn cycle_colouring_formula() {
    for d in 2..=6 {
        for i in 2..=7 {
            assert_eq!(r(d, i), colourings(d, i), "d={d} i={i}");
        }
        assert_eq!(r(d, 2), (d * (d - 1)) as i128);
        assert_eq!(r(d, 3), (d * (d - 1) * (d - 2)) as i128);
    }
    assert_eq!(r(6, 4), 630);
}

fn w_labelled(n: usize, edges: &[(usize, usize)], plus: impl Fn(usize) -> bool) -> Graph {
    let mut g = Graph::new(6);
    for v in 0..n {
        g.add_vertex(if plus(v) { Label::WPlus } else { Label::WMinus }, 0);
    }
    for &(u, v) in edges {
        g.add_edge(u, v).unwrap();
    }
    g
}

#[test]
fn cycle_counts_on_known_graphs() {
    // K_{3,3}: 9 four-cycles, 6 six-cycles
    let e: Vec<(usize, usize)> = (0..3).flat_map(|a| (3..6).map(move |b| (a, b))).collect();
    let g = w_labelled(6, &e, |v| v < 3);
    let st = count_short_cycles(&g, 6, None).unwrap();
    let by_len = |l: usize| st.iter().find(|s| s.length == l).unwrap().count_simple;
    assert_eq!((by_len(2), by_len(3), by_len(4), by_len(5), by_len(6)), (0, 0, 9, 0, 6));
    // an 8-cycle
    let c8: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
    let g = w_labelled(8, &c8, |v| v % 2 == 0);
    let st = count_short_cycles(&g, 10, None).unwrap();
    for s in &st {
        assert_eq!(s.count, (s.length == 8) as u64, "length {}", s.length);
    }
    // cycles leaving W are not counted
    let mut g = w_labelled(4, &[(0, 1), (1, 2), (2, 3)], |v| v % 2 == 0);
    let u = g.add_vertex(Label::UMinus, 0);
    g.add_edge(3, u).unwrap();
    g.add_edge(u, 0).unwrap();
    assert!(count_short_cycles(&g, 6, None).unwrap().iter().all(|s| s.count == 0));
}

#[test]
fn multigraph_counts_weight_parallel_edges() {
    // a 4-cycle with one doubled edge: 1 parallel pair, 2 multigraph 4-cycles
    let g = w_labelled(4, &[(0, 1), (0, 1), (1, 2), (2, 3), (3, 0)], |v| v % 2 == 0);
    let st = count_short_cycles(&g, 4, None).unwrap();
    let s2 = st.iter().find(|s| s.length == 2).unwrap();
    let s4 = st.iter().find(|s| s.length == 4).unwrap();
    assert_eq!((s2.count, s2.count_simple), (1, 0));
    assert_eq!((s4.count, s4.count_simple), (2, 1));
}

#[test]
fn cycle_stats_carry_predictions() {
    let g = Graph::path(4);
    let st = count_short_cycles(&g, 6, Some((0.2, 0.1))).unwrap();
    let s4 = st.iter().find(|s| s.length == 4).unwrap();
    assert_eq!(s4.count, 0);
    assert!((s4.lambda - 630.0 / 4.0).abs() < 1e-12 || g.d() != 6);
    let want = (0.02f64 / (0.8 * 0.9)).powf(2.0);
    assert!((s4.delta.unwrap() - want).abs() < 1e-15);
    assert!(count_short_cycles(&g, MAX_CYCLE_LENGTH + 1, None).is_err());
}

#[test]
fn trees_have_no_cycles() {
    let e: Vec<(usize, usize)> = (1..40).map(|v| ((v - 1) / 3, v)).collect();
    let mut g = Graph::new(4);
    for v in 0..40 {
        g.add_vertex(if v % 2 == 0 { Label::WPlus } else { Label::WMinus }, 0);
    }
    for (u, v) in e {
        g.add_edge(u, v).unwrap();
    }
    assert!(g.is_forest());
    assert!(count_short_cycles(&g, 12, None).unwrap().iter().all(|s| s.count == 0));
}

#[test]
fn four_cycle_mean_near_poisson_prediction() {
    // small version of the n=2000 check: 40 graphs
    let mut total = 0u64;
    let graphs = 40;
    for seed in 0..graphs {
        let spec = GadgetSpec::with_sizes(2000, 1, 0, 6, 1000 + seed).unwrap();
        let g = sample_gtilde(&spec);
        let st = count_short_cycles(&g, 4, None).unwrap();
        total += st.iter().find(|s| s.length == 4).unwrap().count;
    }
    let mean = total as f64 / graphs as f64;
    let lam = r(6, 4) as f64 / 4.0;
    // Poisson standard error of the mean is about 2
    assert!((mean - lam).abs() < 0.2 * lam, "mean {mean}, predicted {lam}");
}

#[test]
fn round_trip() {
    let spec = GadgetSpec::with_sizes(12, 2, 2, 3, 77).unwrap();
    let g = sample_gadget(&spec).unwrap();
    let text = to_text(&g);
    let back = from_text(&text).unwrap();
    assert_eq!(to_text(&back), text);
    assert_eq!(back.labels(), g.labels());
    assert_eq!(back.multi_edges(), g.multi_edges());

    let hg = build_hg(&Graph::path(3), &g, 1).unwrap();
    let back = from_text(&to_text(&hg)).unwrap();
    assert_eq!(to_text(&back), to_text(&hg));
    assert!((0..hg.len()).all(|v| back.is_cross(v) == hg.is_cross(v) && back.gadget_of(v) == hg.gadget_of(v)));
}

#[test]
fn empty_graph_is_header_only() {
    let g = Graph::new(3);
    assert_eq!(to_text(&g), "hgg 1 0 3\n");
    assert_eq!(from_text("hgg 1 0 3\n").unwrap().len(), 0);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let cases = [
        ("hgg 1 2 3\nv 0 W+ 0\nv 1 Q 0\n", 3),
        ("hgg 1 2 3\nv 0 W+ 0\nv 1 W- 0\ne 0 5\n", 4),
        ("hgx 1 2 3\n", 1),
        ("# comment\nhgg 1 1 3\nv 0 W+\n", 3),
        ("hgg 1 2 3\nv 0 W+ 0\n", 0),
    ];
    for (text, line) in cases {
        match from_text(text) {
            Err(Error::Parse { line: l, .. }) => {
                if line > 0 {
                    assert_eq!(l, line, "{text:?}");
                }
            }
            other => panic!("{text:?} gave {other:?}"),
        }
    }
    // comments and blank lines are fine
    let g = from_text("hgg 1 2 3 # header\n\nv 0 W+ 0\nv 1 W- 0\ne 0 1 # edge\n").unwrap();
    assert_eq!(g.edge_count(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn constructions_keep_degree_cap(n in 2usize..30, m in 1usize..4, half in 0u32..2, d in 3u32..7, seed: u64) {
        let spec = GadgetSpec::with_sizes(n, m, 2 * half, d, seed).unwrap();
        let g = sample_gadget(&spec).unwrap();
        prop_assert!(g.max_degree() <= d as usize);
        prop_assert!(g.parity_consistent());
        let hg = build_hg(&Graph::path(2), &g, m).unwrap();
        prop_assert!(hg.max_degree() <= d as usize);
        prop_assert!(hg.parity_consistent());
        let text = to_text(&hg);
        prop_assert_eq!(to_text(&from_text(&text).unwrap()), text);
    }
}
