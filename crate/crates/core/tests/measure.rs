use hardcore::gadgets::{sample_gadget, sample_gtilde, GadgetSpec, Graph, Label};
use hardcore::measure::brute::{boundary_tree_marginal, exhaustive_partition, independence_counts, tree_partition};
use hardcore::measure::formulas::{
    avoid_probability, binomial_perturb_check, expected_z, expected_z2, expected_z2_mww, expected_z_mww,
    first_moment_ratio_prediction, pair_avoid_probability,
};
use hardcore::measure::{
    conditional_partition, exact_partition, glauber_chains, glauber_run, phase_statistics, product_measure_q, u_vertices, GlauberChain,
    Init, Phase,
};
use hardcore::treegibbs::{solve_fixed_points, ModelParams};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> BigRational {
    r(n, 1)
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = vec![];
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &e).unwrap()
}

#[test]
fn small_partition_values() {
    assert_eq!(exact_partition(&Graph::from_edges(1, &[]).unwrap(), &int(1)).unwrap(), int(2));
    assert_eq!(exact_partition(&Graph::path(2), &int(1)).unwrap(), int(3));
    assert_eq!(exact_partition(&Graph::cycle(4), &int(1)).unwrap(), int(7));
    // Z(C5) = 1 + 5λ + 5λ²
    assert_eq!(exact_partition(&Graph::cycle(5), &r(1, 2)).unwrap(), r(1 * 4 + 5 * 2 + 5, 4));
    assert_eq!(independence_counts(&Graph::complete(5)).unwrap(), vec![1, 5, 0, 0, 0, 0]);
    assert_eq!(exact_partition(&Graph::new(3), &int(7)).unwrap(), int(1));
}

#[test]
fn negative_fugacity_rejected() {
    assert!(exact_partition(&Graph::path(3), &int(-1)).is_err());
}

#[test]
fn elimination_matches_tree_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for t in 0..30 {
        let n = rng.gen_range(1..60);
        let e: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
        let g = Graph::from_edges(n, &e).unwrap();
        let lam = r(rng.gen_range(1..9), rng.gen_range(1..5));
        assert_eq!(exact_partition(&g, &lam).unwrap(), tree_partition(&g, &lam).unwrap(), "tree {t}");
    }
}

#[test]
fn elimination_rejects_oversized() {
    let g = Graph::path(129);
    assert!(matches!(exact_partition(&g, &int(1)), Err(hardcore::Error::Resource(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn elimination_equals_exhaustive(n in 1usize..=20, p in 0.05f64..0.6, seed: u64, a in 1i64..6, b in 1i64..6) {
        let g = random_graph(n, p, seed);
        let lam = r(a, b);
        prop_assert_eq!(exact_partition(&g, &lam).unwrap(), exhaustive_partition(&g, &lam).unwrap());
    }

    #[test]
    fn partition_at_least_one(n in 1usize..=16, p in 0.0f64..1.0, seed: u64) {
        let g = random_graph(n, p, seed);
        prop_assert!(exact_partition(&g, &r(1, 3)).unwrap() >= BigRational::one());
    }
}

fn tiny_gadget(seed: u64, depth: u32) -> Graph {
    let spec = GadgetSpec::with_sizes(2, 1, depth, 3, seed).unwrap();
    sample_gadget(&spec).unwrap()
}

fn all_etas(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << k).map(move |m| (0..k).map(|i| m >> i & 1 == 1).collect())
}

#[test]
fn boundary_conditions_partition_z() {
    for seed in 0..20 {
        let g = tiny_gadget(seed, if seed % 2 == 0 { 0 } else { 2 });
        let lam = r(3, 2);
        let z = exact_partition(&g, &lam).unwrap();
        let u = u_vertices(&g);
        let mut total = BigRational::zero();
        for eta in all_etas(u.len()) {
            let all = conditional_partition(&g, &lam, &eta, None, None).unwrap();
            let zp = conditional_partition(&g, &lam, &eta, Some(Phase::Plus), None).unwrap();
            let zm = conditional_partition(&g, &lam, &eta, Some(Phase::Minus), None).unwrap();
            assert_eq!(&zp.value + &zm.value, all.value);
            if !all.consistent {
                assert!(all.value.is_zero());
            }
            total += all.value;
        }
        assert_eq!(total, z, "seed {seed}");
    }
}

#[test]
fn empty_boundary_is_unrestricted() {
    let g = Graph::cycle(6);
    let v = conditional_partition(&g, &int(2), &[], None, None).unwrap();
    assert!(v.consistent);
    assert_eq!(v.value, exact_partition(&g, &int(2)).unwrap());
}

#[test]
fn wrong_boundary_length_rejected() {
    let g = tiny_gadget(1, 0);
    assert!(conditional_partition(&g, &int(1), &[true], None, None).is_err());
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn matching_probabilities_by_enumeration() {
    for nn in 1..=6 {
        let perms = permutations(nn);
        let total = perms.len() as i64;
        for a in 0..=nn {
            for b in 0..=nn {
                // plus set {0..a}, minus set {0..b}
                let hits = perms.iter().filter(|p| (0..a).all(|i| p[i] >= b)).count() as i64;
                assert_eq!(avoid_probability(nn, a, b), r(hits, total));
                for g in 0..=a {
                    if 2 * a - g > nn {
                        continue;
                    }
                    for dl in 0..=b {
                        if 2 * b - dl > nn {
                            continue;
                        }
                        // second sets overlap the first in g (dl) elements
                        let s2: Vec<usize> = (0..g).chain(a..2 * a - g).collect();
                        let t2: Vec<usize> = (0..dl).chain(b..2 * b - dl).collect();
                        let hits = perms
                            .iter()
                            .filter(|p| (0..a).all(|i| p[i] >= b) && s2.iter().all(|&i| !t2.contains(&p[i])))
                            .count() as i64;
                        assert_eq!(pair_avoid_probability(nn, a, g, b, dl), r(hits, total), "{nn} {a} {g} {b} {dl}");
                    }
                }
            }
        }
    }
}

/// G̃ from explicit matchings, in sample_gtilde's layout.
fn gtilde_from(n: usize, mp: usize, side: &[Vec<usize>], w: &[usize]) -> Graph {
    let mut g = Graph::new(3);
    for _ in 0..n {
        g.add_vertex(Label::WPlus, 0);
    }
    for _ in 0..n {
        g.add_vertex(Label::WMinus, 0);
    }
    for _ in 0..mp {
        g.add_vertex(Label::UPlus, 0);
    }
    for _ in 0..mp {
        g.add_vertex(Label::UMinus, 0);
    }
    let plus = |i: usize| if i < n { i } else { 2 * n + (i - n) };
    let minus = |j: usize| if j < n { n + j } else { 2 * n + mp + (j - n) };
    for p in side {
        for (i, &j) in p.iter().enumerate() {
            g.add_edge(plus(i), minus(j)).unwrap();
        }
    }
    for (i, &j) in w.iter().enumerate() {
        g.add_edge(i, n + j).unwrap();
    }
    g
}

#[test]
fn moment_formulas_exact_over_all_matchings() {
    let (n, mp, d) = (2usize, 1usize, 3u32);
    let spec = GadgetSpec::with_sizes(n, mp, 0, d, 0).unwrap();
    let side = permutations(n + mp);
    let wm = permutations(n);
    let lam = r(3, 2);
    for (a, b, eta) in [(1, 1, (0, 0)), (1, 0, (1, 0)), (2, 0, (0, 1)), (1, 1, (1, 1)), (0, 0, (0, 0)), (0, 1, (1, 0))] {
        let mut s1 = BigRational::zero();
        let mut s2 = BigRational::zero();
        let mut count = 0i64;
        for p1 in &side {
            for p2 in &side {
                for w in &wm {
                    let g = gtilde_from(n, mp, &[p1.clone(), p2.clone()], w);
                    let eta_bits = [eta.0 == 1, eta.1 == 1];
                    let z = conditional_partition(&g, &lam, &eta_bits, None, Some((a, b))).unwrap().value;
                    s2 += &z * &z;
                    s1 += z;
                    count += 1;
                }
            }
        }
        let cnt = int(count);
        let alpha = r(a as i64, n as i64);
        let beta = r(b as i64, n as i64);
        assert_eq!(expected_z(&spec, &alpha, &beta, eta, &lam).unwrap(), &s1 / &cnt, "first moment {a} {b} {eta:?}");
        assert_eq!(expected_z2(&spec, &alpha, &beta, eta, &lam).unwrap(), &s2 / &cnt, "second moment {a} {b} {eta:?}");
    }
}

#[test]
fn mww_moments_exact_over_all_matchings() {
    let n = 3usize;
    let perms = permutations(n);
    let lam = r(2, 1);
    for (a, b) in [(1usize, 1usize), (2, 1), (0, 2), (1, 0)] {
        let mut s1 = BigRational::zero();
        let mut s2 = BigRational::zero();
        let mut cnt = 0i64;
        for p1 in &perms {
            for p2 in &perms {
                for p3 in &perms {
                    let mut g = Graph::new(3);
                    for _ in 0..n {
                        g.add_vertex(Label::WPlus, 0);
                    }
                    for _ in 0..n {
                        g.add_vertex(Label::WMinus, 0);
                    }
                    for p in [p1, p2, p3] {
                        for (i, &j) in p.iter().enumerate() {
                            g.add_edge(i, n + j).unwrap();
                        }
                    }
                    let z = conditional_partition(&g, &lam, &[], None, Some((a, b))).unwrap().value;
                    s2 += &z * &z;
                    s1 += z;
                    cnt += 1;
                }
            }
        }
        let alpha = r(a as i64, n as i64);
        let beta = r(b as i64, n as i64);
        assert_eq!(expected_z_mww(n, 3, &alpha, &beta, &lam).unwrap(), &s1 / int(cnt));
        assert_eq!(expected_z2_mww(n, 3, &alpha, &beta, &lam).unwrap(), &s2 / int(cnt));
    }
}

#[test]
fn small_moment_values() {
    let spec = GadgetSpec::with_sizes(6, 2, 0, 3, 0).unwrap();
    let z = BigRational::zero();
    assert_eq!(expected_z(&spec, &z, &z, (0, 0), &int(1)).unwrap(), BigRational::one());
    assert_eq!(expected_z2(&spec, &z, &z, (0, 0), &int(1)).unwrap(), BigRational::one());
    assert!(expected_z(&spec, &r(1, 4), &z, (0, 0), &int(1)).is_err());
    assert!(expected_z(&spec, &r(1, 3), &z, (3, 0), &int(1)).is_err());
}

#[test]
fn second_moment_dominates_square_of_first() {
    let spec = GadgetSpec::with_sizes(6, 2, 0, 3, 0).unwrap();
    for a in 0..=3 {
        for b in 0..=3 {
            for eta in [(0, 0), (1, 0), (2, 1)] {
                let (al, be) = (r(a, 6), r(b, 6));
                let m1 = expected_z(&spec, &al, &be, eta, &int(2)).unwrap();
                let m2 = expected_z2(&spec, &al, &be, eta, &int(2)).unwrap();
                assert!(m2 >= &m1 * &m1);
            }
        }
    }
}

#[test]
fn first_moment_ratio_approaches_prediction() {
    let lam = int(1);
    let (al, be) = (r(1, 5), r(1, 10));
    for (d, mp, eta) in [(3u32, 2usize, (1usize, 0usize)), (4, 3, (0, 2)), (3, 1, (1, 1))] {
        let pred = first_moment_ratio_prediction(0.2, 0.1, eta, d, 1.0, mp);
        let mut errs = vec![];
        for n in [60usize, 240, 960] {
            let spec = GadgetSpec::with_sizes(n, mp, 0, d, 0).unwrap();
            let ez = expected_z(&spec, &al, &be, eta, &lam).unwrap();
            let mww = expected_z_mww(n, d, &al, &be, &lam).unwrap();
            errs.push(((ez / mww).to_f64().unwrap() / pred - 1.0).abs());
        }
        // O(1/n) here since |U| is fixed
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{d} {mp} {eta:?}: {errs:?}");
        assert!(errs[2] < 5e-3, "{d} {mp} {eta:?}: {errs:?}");
    }
}

#[test]
fn binomial_perturbation() {
    let id = binomial_perturb_check(50, 20, 0, 0).unwrap();
    assert_eq!(id.exact, BigRational::one());
    assert_eq!(id.approx, 1.0);
    let c = binomial_perturb_check(1000, 300, 5, 3).unwrap();
    assert!(c.rel_error.abs() < 0.1, "{c:?}");
    let errs: Vec<f64> = [200u64, 2000, 20_000, 200_000]
        .iter()
        .map(|&a| binomial_perturb_check(a, 3 * a / 10, 5, 3).unwrap().rel_error.abs())
        .collect();
    for w in errs.windows(2) {
        let f = w[0] / w[1];
        assert!(f > 7.0 && f < 13.0, "{errs:?}");
    }
    assert!(binomial_perturb_check(10, 0, 0, 0).is_err());
    assert!(binomial_perturb_check(10, 3, 2, 1).is_err());
}

#[test]
fn product_measure_normalises() {
    let fp = solve_fixed_points(ModelParams::new(6, 1.0).unwrap(), 1e-14).unwrap();
    for m in 1..=4usize {
        for phase in [Phase::Plus, Phase::Minus] {
            let mut s = 0.0;
            for mask in 0u32..1 << (2 * m) {
                let p: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
                let q: Vec<bool> = (0..m).map(|i| mask >> (m + i) & 1 == 1).collect();
                s += product_measure_q(&fp, &p, &q, phase);
                // swapping the sides swaps the phases
                let a = product_measure_q(&fp, &p, &q, phase);
                let other = if phase == Phase::Plus { Phase::Minus } else { Phase::Plus };
                assert!((a - product_measure_q(&fp, &q, &p, other)).abs() < 1e-15);
            }
            assert!((s - 1.0).abs() < 1e-12);
        }
        let z = vec![false; m];
        let want = ((1.0 - fp.q_plus) * (1.0 - fp.q_minus)).powi(m as i32);
        assert!((product_measure_q(&fp, &z, &z, Phase::Plus) - want).abs() < 1e-15);
    }
}

#[test]
fn phase_probabilities_sum_to_one() {
    let fp = solve_fixed_points(ModelParams::new(3, 8.0).unwrap(), 1e-14).unwrap();
    for seed in 0..5 {
        let spec = GadgetSpec::with_sizes(4, 2, 0, 3, seed).unwrap();
        let g = sample_gadget(&spec).unwrap();
        let st = phase_statistics(&g, &int(8), Some(&fp)).unwrap();
        assert_eq!(&st.z_plus + &st.z_minus, st.z);
        assert_eq!(st.z, exact_partition(&g, &int(8)).unwrap());
        assert!((st.p_plus + st.p_minus - 1.0).abs() < 1e-12);
        let ports = st.ports.unwrap();
        assert_eq!(ports.ports_per_side, 2);
        assert!(ports.max_ratio_plus.is_finite());
    }
}

#[test]
fn side_swap_symmetry_favours_plus_on_ties() {
    // an even cycle labelled alternately W+/W-: symmetric under the swap
    let mut g = Graph::new(2);
    for i in 0..6 {
        g.add_vertex(if i % 2 == 0 { Label::WPlus } else { Label::WMinus }, 0);
    }
    for i in 0..6 {
        g.add_edge(i, (i + 1) % 6).unwrap();
    }
    let st = phase_statistics(&g, &int(1), None).unwrap();
    assert!(st.p_plus > st.p_minus);
    // the excess is exactly the tie mass
    let mut ties = BigRational::zero();
    let mut strict = BigRational::zero();
    for a in 0..=3 {
        for b in 0..=3 {
            let v = conditional_partition(&g, &int(1), &[], None, Some((a, b))).unwrap().value;
            if a == b {
                ties += v;
            } else if a > b {
                strict += v;
            }
        }
    }
    assert_eq!(st.z_plus, &strict + &ties);
    assert_eq!(st.z_minus, strict);
}

#[test]
fn glauber_absorbs_at_zero_fugacity() {
    let g = tiny_gadget(3, 0);
    let tr = glauber_run(&g, 0.0, 5, &Init::Plus, 1).unwrap();
    assert!(tr.final_state.iter().all(|&s| !s));
    assert_eq!(*tr.w_plus.last().unwrap(), 0);
}

#[test]
fn glauber_rejects_dependent_start() {
    let g = Graph::path(2);
    assert!(glauber_run(&g, 1.0, 1, &Init::Given(vec![true, true]), 0).is_err());
    assert!(glauber_run(&g, -1.0, 1, &Init::Empty, 0).is_err());
}

#[test]
fn glauber_isolated_vertex_occupancy() {
    let mut g = Graph::new(1);
    g.add_vertex(Label::Node, 0);
    let lam = 3.0;
    let mut ch = GlauberChain::new(&g, lam, &Init::Empty, 5).unwrap();
    let steps = 200_000;
    let mut occ = 0usize;
    for _ in 0..steps {
        ch.step();
        occ += ch.state()[0] as usize;
    }
    let p = lam / (1.0 + lam);
    let se = (p * (1.0 - p) / steps as f64).sqrt();
    assert!(((occ as f64 / steps as f64) - p).abs() < 4.0 * se);
}

#[test]
fn glauber_detailed_balance_on_path() {
    // P3 at λ=2: states ∅, {0}, {1}, {2}, {0,2} with weights 1,2,2,2,4
    let g = Graph::path(3);
    let mut ch = GlauberChain::new(&g, 2.0, &Init::Empty, 2024).unwrap();
    let mut counts = [0u64; 8];
    let samples = 1_000_000;
    for _ in 0..samples {
        for _ in 0..12 {
            ch.step();
        }
        let s = ch.state();
        counts[s[0] as usize | (s[1] as usize) << 1 | (s[2] as usize) << 2] += 1;
    }
    let w = [(0b000, 1.0), (0b001, 2.0), (0b010, 2.0), (0b100, 2.0), (0b101, 4.0)];
    let total: f64 = w.iter().map(|x| x.1).sum();
    let mut chi2 = 0.0;
    for (s, wt) in w {
        let e = samples as f64 * wt / total;
        chi2 += (counts[s] as f64 - e).powi(2) / e;
    }
    assert_eq!(counts.iter().sum::<u64>(), samples);
    // 4 degrees of freedom, 0.999 quantile 18.47
    assert!(chi2 < 18.47, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn tree_marginal_recursion_matches_explicit_tree() {
    // binary tree (d=3) of depth 4; root and leaves become U vertices so
    // they can be pinned
    let (d, depth) = (3u32, 4u32);
    let lam = r(3, 2);
    let mut g = Graph::new(d);
    g.add_vertex(Label::UPlus, 0);
    let mut level = vec![0usize];
    for l in 1..=depth {
        let mut next = vec![];
        for &p in &level {
            for _ in 0..d - 1 {
                let v = g.add_vertex(if l == depth { Label::UPlus } else { Label::Node }, 0);
                g.add_edge(p, v).unwrap();
                next.push(v);
            }
        }
        level = next;
    }
    let us = u_vertices(&g);
    let z = |root: bool| {
        let eta: Vec<bool> = us.iter().map(|&v| v != 0 || root).collect();
        conditional_partition(&g, &lam, &eta, None, None).unwrap().value
    };
    let (occ, vac) = (z(true), z(false));
    let marginal = (&occ / (&occ + &vac)).to_f64().unwrap();
    let rec = boundary_tree_marginal(d, 1.5, depth, true);
    assert!((marginal - rec).abs() < 1e-12, "{marginal} vs {rec}");
}

#[test]
fn tree_marginals_converge_to_fixed_points() {
    let fp = solve_fixed_points(ModelParams::new(6, 1.0).unwrap(), 1e-14).unwrap();
    let gaps: Vec<f64> = (1..=12).map(|k| (boundary_tree_marginal(6, 1.0, 2 * k, true) - fp.q_plus).abs()).collect();
    for w in gaps.windows(2) {
        assert!(w[1] < w[0]);
    }
    // two-level contraction of the scalar recursion is (d-1)² q+ q-
    let rate = 25.0 * fp.q_plus * fp.q_minus;
    assert!((gaps[11] / gaps[10] - rate).abs() < 0.01, "{} vs {rate}", gaps[11] / gaps[10]);
    assert!((boundary_tree_marginal(6, 1.0, 31, true) - fp.q_minus).abs() < 1e-4);
    assert!((boundary_tree_marginal(6, 1.0, 30, false) - fp.q_minus).abs() < 1e-4);
}

fn bottleneck(n: usize) -> (f64, f64, bool) {
    let spec = GadgetSpec::with_sizes(n, 1, 0, 6, 42).unwrap();
    let g = sample_gtilde(&spec);
    let tr = glauber_chains(&g, 1.0, 10_000, &[(Init::Plus, 1), (Init::Minus, 2)]).unwrap();
    (tr[0].plus_fraction(0), tr[1].plus_fraction(0), tr[0].phase_held() && tr[1].phase_held())
}

#[test]
fn glauber_phase_bottleneck_n200() {
    // d=6, λ=1: chains started in opposite phases keep their signs
    let (p, m, held) = bottleneck(200);
    assert!(held, "plus-phase fractions {p} (plus start), {m} (minus start)");
}

#[test]
fn glauber_phase_bottleneck_n2000() {
    let (p, m, held) = bottleneck(2000);
    assert!(held, "plus-phase fractions {p} (plus start), {m} (minus start)");
}
