use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::eval::verify;
use crate::graphs::build_connectivity_graph;

const BUDGET: Duration = Duration::from_secs(30);

fn grid(w: usize, h: usize, occ: &[(usize, usize)]) -> GridRegion {
    let cells: Vec<Cell> = occ.iter().map(|&(c, r)| Cell::new(c, r)).collect();
    GridRegion::with_obstacles(w, h, 1.0, &cells).unwrap()
}

fn spec(r_s: f64, r_c: f64) -> Vec<SensorSpec> {
    vec![SensorSpec::new(0, r_s, r_c).unwrap()]
}

fn optimum(region: &GridRegion, r_s: f64, k: u32) -> CoveringSolution {
    let p = CoveringProblem::for_region(region, &spec(r_s, r_s), &[k], u32::MAX).unwrap();
    solve_covering(&p, BUDGET).unwrap()
}

/// Minimum by exhaustive search: the lowest deficient cell must get its
/// whole residual from its neighborhood, so branch over every multiset of
/// that size drawn from it.
fn oracle(p: &CoveringProblem, t: usize) -> u32 {
    fn go(p: &CoveringProblem, t: usize, counts: &mut Vec<u32>, left: u32) -> bool {
        let def = deficits(&p.neighborhoods[t], &p.demands[t], counts);
        let Some(i) = def.iter().position(|&d| d > 0) else {
            return true;
        };
        if def.iter().copied().max().unwrap() > left {
            return false;
        }
        let need = def[i];
        let nb = p.neighborhood(t, i).to_vec();
        let mut pick = vec![0usize; need as usize];
        loop {
            for &j in &pick {
                counts[nb[j]] += 1;
            }
            let ok = go(p, t, counts, left - need);
            for &j in &pick {
                counts[nb[j]] -= 1;
            }
            if ok {
                return true;
            }
            // Next nondecreasing index tuple.
            let mut pos = pick.len();
            loop {
                if pos == 0 {
                    return false;
                }
                pos -= 1;
                if pick[pos] + 1 < nb.len() {
                    let v = pick[pos] + 1;
                    for q in &mut pick[pos..] {
                        *q = v;
                    }
                    break;
                }
            }
        }
    }
    let mut counts = vec![0; p.len()];
    (0..).find(|&n| go(p, t, &mut counts, n)).unwrap()
}

fn random_region(rng: &mut ChaCha8Rng, w: usize, h: usize, obstacles: usize) -> GridRegion {
    let mut region = GridRegion::open(w, h, 1.0).unwrap();
    for _ in 0..obstacles {
        let c = Cell::new(rng.gen_range(0..w), rng.gen_range(0..h));
        region.set_occupied(c, true);
    }
    if region.open_count() == 0 {
        region.set_occupied(Cell::new(0, 0), false);
    }
    region
}

#[test]
fn single_cell_k3_needs_three() {
    let s = optimum(&grid(1, 1, &[]), 2.0, 3);
    assert_eq!(s.placement.sensor_count(), 3);
    assert!(s.optimal);
}

#[test]
fn strip_center_covers_all() {
    // Relaxed distance is sqrt(5) to a neighbor and sqrt(10) end to end.
    let s = optimum(&grid(3, 1, &[]), 2.5, 1);
    assert_eq!(s.placement.counts[0], vec![0, 1, 0]);
    assert!(s.optimal);
}

#[test]
fn isolated_halves_need_two() {
    let s = optimum(&grid(3, 1, &[(1, 0)]), 10.0, 1);
    assert_eq!(s.placement.sensor_count(), 2);
}

#[test]
fn zero_demand_is_empty() {
    let s = optimum(&grid(4, 4, &[(1, 1)]), 2.0, 0);
    assert_eq!(s.placement.total(), 0);
    assert!(s.optimal);
}

#[test]
fn uncoverable_cell_is_named() {
    // Radius below the cell diagonal: no cell covers itself.
    let region = grid(2, 1, &[]);
    let err = CoveringProblem::for_region(&region, &spec(1.0, 1.0), &[1], 10).unwrap_err();
    assert_eq!(
        err,
        CoveringError::Uncoverable {
            cell: Cell::new(0, 0),
            type_id: 0,
            demand: 1
        }
    );
}

#[test]
fn budget_exceeded() {
    let region = grid(1, 1, &[]);
    let p = CoveringProblem::for_region(&region, &spec(2.0, 2.0), &[3], 2).unwrap();
    assert_eq!(
        solve_covering(&p, BUDGET).unwrap_err(),
        CoveringError::OverBudget { needed: 3, budget: 2 }
    );
}

#[test]
fn matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..40 {
        let (w, h) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let obstacles = rng.gen_range(0..=w * h / 3);
        let region = random_region(&mut rng, w, h, obstacles);
        let r_s = [1.5, 2.3, 3.2, 4.5][case % 4];
        let k = if case % 2 == 0 { 1 } else { 3 };
        if k == 3 && w * h > 16 && r_s < 3.0 {
            continue;
        }
        let p = CoveringProblem::for_region(&region, &spec(r_s, r_s), &[k], u32::MAX).unwrap();
        let s = solve_covering(&p, BUDGET).unwrap();
        let best = oracle(&p, 0);
        assert!(s.optimal, "case {case}");
        assert_eq!(s.placement.sensor_count() as u32, best, "case {case}");
        assert!(p.is_satisfied_by(&s.placement.counts));
        assert!(s.lower_bound <= best);
        let g = greedy_cover(&p, 0);
        assert!(p.is_satisfied_by(std::slice::from_ref(&g)));
        assert!(g.iter().sum::<u32>() >= best);
    }
}

#[test]
fn cell_centers_pass_exact_verification() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..20 {
        let region = random_region(&mut rng, 6, 6, 8);
        let r_s = [2.3, 3.2][case % 2];
        let k = 1 + (case % 3) as u32;
        let specs = spec(r_s, 100.0);
        let p = CoveringProblem::for_region(&region, &specs, &[k], u32::MAX).unwrap();
        let s = solve_covering(&p, BUDGET).unwrap();
        let report = verify(&s.placement.to_placement(&region), &region, &specs, &[k]);
        assert!(
            report.coverage_ok && report.placement_ok,
            "case {case}: {:?}",
            report.uncovered
        );
    }
}

#[test]
fn heterogeneous_types_are_independent() {
    let region = grid(3, 3, &[(1, 1)]);
    let specs = vec![
        SensorSpec::new(0, 3.0, 6.0).unwrap(),
        SensorSpec::new(1, 4.5, 6.0).unwrap(),
    ];
    let p = CoveringProblem::for_region(&region, &specs, &[1, 2], u32::MAX).unwrap();
    let s = solve_covering(&p, BUDGET).unwrap();
    assert!(s.optimal);
    assert_eq!(s.placement.counts[0].iter().sum::<u32>(), oracle(&p, 0));
    assert_eq!(s.placement.counts[1].iter().sum::<u32>(), oracle(&p, 1));
    assert!(verify(&s.placement.to_placement(&region), &region, &specs, &[1, 2]).coverage_ok);
}

#[test]
fn timeout_returns_feasible_incumbent() {
    let region = GridRegion::open(8, 8, 1.0).unwrap();
    let p = CoveringProblem::for_region(&region, &spec(2.3, 2.3), &[3], u32::MAX).unwrap();
    let s = solve_covering(&p, Duration::ZERO).unwrap();
    assert!(!s.optimal);
    assert!(p.is_satisfied_by(&s.placement.counts));
}

fn strip_placement(n: usize, at: &[usize]) -> IntegerPlacement {
    let region = grid(n, 1, &[]);
    let mut p = IntegerPlacement::empty(region.open_cells(), 1);
    for &v in at {
        p.counts[0][v] = 1;
    }
    p
}

#[test]
fn repair_leaves_connected_input_alone() {
    let region = grid(4, 1, &[]);
    let gc = build_connectivity_graph(&region, 2.5);
    let p = strip_placement(4, &[0, 1]);
    assert_eq!(connectivity_repair(&p, &gc).unwrap(), p);
}

#[test]
fn repair_bridges_two_clusters_with_one_relay() {
    // Neighbors are sqrt(5) apart, cells two apart sqrt(10).
    let region = grid(5, 1, &[]);
    let gc = build_connectivity_graph(&region, 2.5);
    let p = strip_placement(5, &[0, 1, 3, 4]);
    let out = connectivity_repair(&p, &gc).unwrap();
    assert_eq!(out.relays, vec![2]);
    assert_eq!(out.total(), 5);
    let placement = out.to_placement(&region);
    assert_eq!(placement.relay_count(), 1);
    assert_eq!(crate::eval::component_count(&placement, &spec(1.0, 2.5)), 1);
}

#[test]
fn repair_fails_across_a_wall() {
    let region = grid(5, 1, &[(2, 0)]);
    let gc = build_connectivity_graph(&region, 2.5);
    let mut p = IntegerPlacement::empty(region.open_cells(), 1);
    p.counts[0][0] = 1;
    p.counts[0][3] = 1;
    assert!(matches!(connectivity_repair(&p, &gc), Err(CoveringError::Repair(_))));
    assert_eq!(
        connectivity_repair(&IntegerPlacement::empty(region.open_cells(), 1), &gc),
        Err(CoveringError::EmptyPlacement)
    );
}

fn dd_for(n: usize, edges: &[(usize, usize)]) -> (DdSystem, CellGraph) {
    let gc = CellGraph::from_edges(n, edges);
    let gv = CellGraph::from_edges(n, &[]);
    (dd_connectivity_encoding(&gv, &gc, 0, 100), gc)
}

fn deployment(sys: &DdSystem, gc: &CellGraph, on: &[usize]) -> bool {
    let q = |i: usize| on.contains(&i) as i64;
    let a = |i: usize, j: usize| (gc.has_edge(i, j) && on.contains(&i) && on.contains(&j)) as i64;
    sys.is_satisfied(|v| match v {
        DdVar::C(i) | DdVar::Q(i) => q(i),
        DdVar::A(i, j) => a(i, j),
        DdVar::D(i) => (0..sys.n).filter(|&j| j != i).map(|j| a(i.min(j), i.max(j))).sum(),
    })
}

#[test]
fn dd_two_adjacent_cells() {
    let (sys, gc) = dd_for(2, &[(0, 1)]);
    assert!(deployment(&sys, &gc, &[0, 1]));
    // a_01 = 0 with both deployed violates the link rows.
    let broken = sys.is_satisfied(|v| match v {
        DdVar::A(..) | DdVar::D(_) => 0,
        _ => 1,
    });
    assert!(!broken);
    assert_eq!((sys.big_m, sys.big_n), (3, 4));
}

#[test]
fn dd_single_cell_and_paths() {
    let (sys, gc) = dd_for(1, &[]);
    assert!(deployment(&sys, &gc, &[0]));
    // Path of three: end degree 1 gives 2 + 1 >= 3.
    let (sys, gc) = dd_for(3, &[(0, 1), (1, 2)]);
    assert!(deployment(&sys, &gc, &[0, 1, 2]));
    // Path of four: 3 < 4 at the ends although the network is connected.
    let (sys, gc) = dd_for(4, &[(0, 1), (1, 2), (2, 3)]);
    assert!(!deployment(&sys, &gc, &[0, 1, 2, 3]));
    let check = check_dd_exhaustive(&sys, &gc).unwrap();
    assert!(check.sound());
    assert!(check.rejected_connected.contains(&vec![0, 1, 2, 3]));
    // Two isolated deployed cells are rejected.
    let (sys, gc) = dd_for(2, &[]);
    assert!(!deployment(&sys, &gc, &[0, 1]));
}

#[test]
fn dd_sound_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut witnessed = false;
    for _ in 0..60 {
        let n = rng.gen_range(1..=DD_ENUMERATION_CAP);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.4))
            .collect();
        let (sys, gc) = dd_for(n, &edges);
        let check = check_dd_exhaustive(&sys, &gc).unwrap();
        assert_eq!(check.deployments, 1 << n);
        assert!(check.sound(), "{:?}", check.disconnected_feasible);
        witnessed |= !check.rejected_connected.is_empty();
    }
    assert!(witnessed);
}

#[test]
fn dd_respects_coverage_and_cap() {
    let region = grid(3, 3, &[]);
    let gv = build_visibility_graph(&region, 2.5);
    let gc = build_connectivity_graph(&region, 2.5);
    let sys = dd_connectivity_encoding(&gv, &gc, 1, 9);
    assert!(matches!(
        check_dd_exhaustive(&sys, &gc),
        Err(CoveringError::TooLargeForEnumeration(9, 8))
    ));
    let region = grid(4, 2, &[]);
    let gv = build_visibility_graph(&region, 2.5);
    let gc = build_connectivity_graph(&region, 2.5);
    let sys = dd_connectivity_encoding(&gv, &gc, 1, 8);
    let check = check_dd_exhaustive(&sys, &gc).unwrap();
    assert!(check.sound());
    assert!(check.feasible > 0);
    assert!(check.feasible < 256);
}

#[test]
fn method_table_examples() {
    assert_eq!(select_method(0.05, 5.0, 2.0, 100, DEFAULT_CHI).method, Method::Milp);
    assert_eq!(select_method(0.40, 5.0, 2.0, 5000, DEFAULT_CHI).method, Method::Milp);
    assert_eq!(select_method(0.10, 7.0, 1.0, 100, DEFAULT_CHI).method, Method::Smc);
    let r = select_method(0.20, 5.0, 1.0, 800, DEFAULT_CHI);
    assert_eq!((r.method, r.row), (Method::Either, 4));
    assert_eq!(select_method(0.20, 5.0, 1.0, 1500, DEFAULT_CHI).method, Method::Smc);
    assert_eq!(select_method(0.20, 2.0, 1.0, 800, DEFAULT_CHI).method, Method::Smc);
    assert_eq!(select_method(0.30, 5.0, 0.5, 800, DEFAULT_CHI).row, 6);
    assert_eq!(select_method(0.30, 2.0, 1.5, 800, DEFAULT_CHI).row, 2);
}
