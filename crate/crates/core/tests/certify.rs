use hardcore::certifier::{self, CertifyOptions, Interval, Rounding};
use hardcore::treegibbs::{solve_fixed_points, ModelParams};

fn fp6() -> hardcore::TreeFixedPoints {
    solve_fixed_points(ModelParams::new(6, 1.0).unwrap(), 1e-13).unwrap()
}

#[test]
fn full_grid_passes() {
    let rep = certifier::certify_condition1(&fp6(), &CertifyOptions::default()).unwrap();
    assert_eq!(rep.cells.len(), 3200);
    assert!(rep.pass, "{}", rep.to_text(false));
    assert!(rep.max_h1_upper() < -17.0);
    assert!(rep.min_phi_lower() > 1500.0);
    // the tightest cells sit at small γ
    let worst = rep.cells.iter().max_by(|a, b| a.h1_upper.total_cmp(&b.h1_upper)).unwrap();
    assert!(worst.i < 5);
}

#[test]
fn nudge_rounding_also_passes() {
    let o = CertifyOptions { rounding: Rounding::Nudge, ..Default::default() };
    let rep = certifier::certify_condition1(&fp6(), &o).unwrap();
    assert!(rep.pass);
}

#[test]
fn report_is_deterministic_across_thread_counts() {
    let fp = fp6();
    let one = CertifyOptions { threads: Some(1), ..Default::default() };
    let many = CertifyOptions { threads: Some(4), ..Default::default() };
    let a = certifier::certify_condition1(&fp, &one).unwrap();
    let b = certifier::certify_condition1(&fp, &many).unwrap();
    // thread count is part of the options, nothing else may differ
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("threads")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(a.to_text(false)), strip(b.to_text(false)));
}

#[test]
fn without_refinement_some_cell_fails() {
    let o = CertifyOptions { refine: 0, ..Default::default() };
    let rep = certifier::certify_condition1(&fp6(), &o).unwrap();
    assert!(!rep.pass);
    assert!(rep.failing().all(|c| c.depth == 0 && c.leaves == 1));
}

#[test]
fn preliminaries_hold() {
    let rep = certifier::certify_preliminaries(&fp6(), 1e-9).unwrap();
    assert!(rep.pass, "{}", rep.to_text());
    assert_eq!(rep.items.len(), 7);
    let a = rep.item("a").unwrap();
    assert!(a.value.lo() > 1.430);
    let d = rep.item("d").unwrap();
    assert!(d.value.hi() <= 0.19);
}

#[test]
fn cells_tile_the_region() {
    let pb = certifier::parameter_box(&fp6(), 1e-9).unwrap();
    let first = certifier::delta_cell(1, 32);
    let last = certifier::delta_cell(32, 32);
    assert!(first.contains(0.01) && last.contains(0.33));
    for j in 1..32 {
        let (x, y) = (certifier::delta_cell(j, 32), certifier::delta_cell(j + 1, 32));
        assert!(x.hi() >= y.lo());
    }
    let g0 = certifier::gamma_cell(pb.alpha, 0, 100);
    let g99 = certifier::gamma_cell(pb.alpha, 99, 100);
    assert_eq!(g0.lo(), 0.0);
    assert!(g99.hi() >= pb.alpha.hi());
}

#[test]
fn bounds_enclose_sampled_points() {
    let fp = fp6();
    let pb = certifier::parameter_box(&fp, 1e-9).unwrap();
    let (a, b) = (fp.p_minus, fp.p_plus);
    let pt = hardcore::OccupancyPair::new(a, b).unwrap();
    for &(i, j) in &[(0usize, 1usize), (3, 7), (50, 16), (99, 32)] {
        let g = certifier::gamma_cell(pb.alpha, i, 100);
        let dl = certifier::delta_cell(j, 32);
        let (h, p) = certifier::bound_box(&pb, g, dl, 6).unwrap();
        for s in 0..5 {
            let t = s as f64 / 4.0;
            let gv = (g.lo() + t * g.width()).clamp(1e-7, a - 1e-7);
            let dv = dl.lo() + (1.0 - t) * dl.width();
            let hv = hardcore::moments::h1_bound(pt, gv, dv, 6).unwrap();
            let pv = hardcore::moments::phi_cert(pt, gv, dv, 6).unwrap();
            assert!(hv <= h + 1e-9 * h.abs(), "h1 {hv} > {h} at cell ({i},{j})");
            assert!(pv >= p - 1e-9 * p.abs(), "phi {pv} < {p} at cell ({i},{j})");
        }
    }
}

#[test]
fn wider_neighbourhood_eventually_fails() {
    let fp = fp6();
    let o = CertifyOptions { nbhd: 1e-2, ..Default::default() };
    let rep = certifier::certify_condition1(&fp, &o);
    assert!(rep.map(|r| !r.pass).unwrap_or(true));
    let n = certifier::max_certified_nbhd(&fp, &CertifyOptions::default(), 1e-12, 1e-2, 6)
        .unwrap()
        .unwrap();
    assert!(n >= 1e-9, "{n}");
}

#[test]
fn enclosure_brackets_double_precision() {
    let fp = fp6();
    let e = certifier::enclose_fixed_points(&fp).unwrap();
    let near = |iv: Interval, x: f64| iv.lo() - 1e-15 <= x && x <= iv.hi() + 1e-15;
    assert!(near(e.q_plus, fp.q_plus));
    assert!(near(e.q_minus, fp.q_minus));
    assert!(near(e.p_plus, fp.p_plus));
    assert!(near(e.p_minus, fp.p_minus));
}
