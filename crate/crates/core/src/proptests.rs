//! Property tests over the public API.

use std::collections::VecDeque;
use std::time::Duration;

use proptest::prelude::*;

use crate::convex::{feasibility, ConvexConstraint, FeasibilityConfig, FeasibilityOutcome};
use crate::covering::{solve_covering, CoveringProblem};
use crate::eval::{coverage_redundancy, verify};
use crate::geometry::{
    exact_distance, exact_los, relaxed_distance, relaxed_visibility, Cell, GridRegion, Point, SensorSpec,
};
use crate::graphs::{
    build_connectivity_graph, build_visibility_graph, collapse, connected_components, hop_connectivity, steiner_repair,
};
use crate::hierarchy::{flat_synthesize, SynthesisMethod};
use crate::placement::{DeployedSensor, Placement, Role};
use crate::sat::{Formula, Lit, SolveResult, Var};
use crate::scenario::{compute_gamma, generate, ScenarioSpec};

fn region_strategy(max: usize) -> impl Strategy<Value = GridRegion> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop::bool::weighted(0.25), w * h)
            .prop_map(move |occ| GridRegion::new(w, h, 1.0, occ).unwrap())
    })
}

fn point_in(region: &GridRegion) -> impl Strategy<Value = Point> {
    let (w, h) = (region.width() as f64, region.height() as f64);
    (0.0..=w, 0.0..=h).prop_map(|(x, y)| Point::new(x, y))
}

fn region_with_points() -> impl Strategy<Value = (GridRegion, Point, Point)> {
    region_strategy(8).prop_flat_map(|r| {
        let (a, b) = (point_in(&r), point_in(&r));
        (Just(r), a, b)
    })
}

fn open_pair() -> impl Strategy<Value = (GridRegion, Cell, Cell, Vec<(f64, f64, f64, f64)>)> {
    region_strategy(7)
        .prop_filter("needs an open cell", |r| r.open_count() > 0)
        .prop_flat_map(|r| {
            let n = r.open_count();
            let samples = prop::collection::vec((0.0..1.0, 0.0..1.0, 0.0..1.0, 0.0..1.0), 20);
            (Just(r), 0..n, 0..n, samples)
        })
        .prop_map(|(r, i, j, s)| {
            let open = r.open_cells();
            let (a, b) = (open[i], open[j]);
            (r, a, b, s)
        })
}

fn bfs_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(v) = queue.pop_front() {
        for u in 0..n {
            if adj[v][u] && !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn adjacency() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (1usize..16).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::weighted(0.2), n * n).prop_map(move |bits| {
            let mut adj = vec![vec![false; n]; n];
            for a in 0..n {
                for b in a + 1..n {
                    adj[a][b] = bits[a * n + b];
                    adj[b][a] = bits[a * n + b];
                }
            }
            adj
        })
    })
}

fn cnf() -> impl Strategy<Value = (usize, Vec<Vec<(usize, bool)>>)> {
    (1usize..12).prop_flat_map(|n| {
        let clause = prop::collection::vec((0..n, any::<bool>()), 1..=3);
        (Just(n), prop::collection::vec(clause, 0..40))
    })
}

fn to_lits(clause: &[(usize, bool)]) -> Vec<Lit> {
    clause.iter().map(|&(v, s)| Lit::new(Var(v as u32), s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn los_is_symmetric((region, p, q) in region_with_points()) {
        prop_assert_eq!(exact_los(p, q, &region), exact_los(q, p, &region));
    }

    #[test]
    fn relaxed_visibility_under_approximates((region, a, b, samples) in open_pair()) {
        prop_assume!(relaxed_visibility(a, b, &region));
        // Sensors sit in cell interiors; corner-to-corner segments along an
        // obstacle face graze it and count as blocked.
        let (ra, rb) = (region.cell_rect(a), region.cell_rect(b));
        let inner = |r: &crate::geometry::Rect, u: f64, v: f64| {
            Point::new(r.x_min + (0.01 + 0.98 * u) * (r.x_max - r.x_min), r.y_min + (0.01 + 0.98 * v) * (r.y_max - r.y_min))
        };
        for p in std::iter::once(ra.center()).chain(samples.iter().map(|&(u, v, _, _)| inner(&ra, u, v))) {
            for q in rb.corners() {
                prop_assert!(exact_los(p, q, &region), "{:?} to corner {:?}", p, q);
            }
        }
        for &(u, v, s, t) in &samples {
            prop_assert!(exact_los(inner(&ra, u, v), inner(&rb, s, t), &region));
        }
    }

    #[test]
    fn relaxed_distance_over_approximates((region, a, b, samples) in open_pair()) {
        let d = relaxed_distance(a, b, &region);
        let (ra, rb) = (region.cell_rect(a), region.cell_rect(b));
        for (u, v, s, t) in samples {
            let p = Point::new(ra.x_min + u, ra.y_min + v);
            let q = Point::new(rb.x_min + s, rb.y_min + t);
            prop_assert!(d + 1e-9 >= exact_distance(p, q));
        }
    }

    #[test]
    fn visibility_edges_within_connectivity(region in region_strategy(6), r_s in 0.5f64..4.0, extra in 0.0f64..2.0) {
        let gv = build_visibility_graph(&region, r_s);
        let gc = build_connectivity_graph(&region, r_s + extra);
        prop_assert_eq!(gv.len(), region.open_count());
        for (a, b) in gv.edges() {
            prop_assert!(a != b);
            prop_assert!(gc.has_edge(a, b));
        }
    }

    #[test]
    fn hop_connectivity_matches_bfs(adj in adjacency()) {
        prop_assert_eq!(hop_connectivity(&adj), bfs_connected(&adj));
    }

    #[test]
    fn steiner_repair_connects(region in region_strategy(7), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..6)) {
        let gc = build_connectivity_graph(&region, 2.3);
        prop_assume!(!gc.is_empty());
        // Deploy inside one component so that a repair exists.
        let comps = connected_components(&gc, &vec![true; gc.len()]);
        let home = comps.labels[picks[0].index(gc.len())];
        let mut deployed: Vec<usize> = picks
            .iter()
            .map(|i| i.index(gc.len()))
            .filter(|&v| comps.labels[v] == home)
            .collect();
        deployed.sort_unstable();
        deployed.dedup();
        let added = steiner_repair(&collapse(&gc, &deployed)).unwrap();
        let mut active = vec![false; gc.len()];
        for &v in deployed.iter().chain(&added) {
            active[v] = true;
        }
        prop_assert!(added.iter().all(|v| !deployed.contains(v)));
        prop_assert_eq!(connected_components(&gc, &active).count, 1);
    }

    #[test]
    fn sat_answers_agree_with_enumeration((n, clauses) in cnf()) {
        let mut f = Formula::default();
        for _ in 0..n {
            f.new_var();
        }
        for c in &clauses {
            f.add_clause(&to_lits(c));
        }
        let brute = (0u32..1 << n).any(|a| {
            let assignment: Vec<bool> = (0..n).map(|i| a >> i & 1 == 1).collect();
            f.evaluate(&assignment)
        });
        match f.to_solver().solve() {
            SolveResult::Sat(model) => {
                prop_assert!(brute);
                for c in &f.clauses {
                    prop_assert!(model.satisfies(c));
                }
            }
            SolveResult::Unsat => prop_assert!(!brute),
            SolveResult::Timeout(_) => prop_assert!(false, "timeout on a tiny formula"),
        }
    }

    #[test]
    fn incremental_solving_keeps_clauses((n, clauses) in cnf()) {
        let mut s = crate::sat::Solver::new();
        for _ in 0..n {
            s.new_var();
        }
        let mut added: Vec<Vec<Lit>> = Vec::new();
        for c in &clauses {
            let lits = to_lits(c);
            s.add_clause(&lits);
            added.push(lits);
            match s.solve() {
                SolveResult::Sat(model) => {
                    for c in &added {
                        prop_assert!(model.satisfies(c));
                    }
                }
                SolveResult::Unsat => {
                    // Once unsatisfiable, always unsatisfiable.
                    prop_assert!(s.solve().is_unsat());
                    break;
                }
                SolveResult::Timeout(_) => prop_assert!(false),
            }
        }
    }

    #[test]
    fn convex_witness_satisfies(target in (0.0f64..10.0, 0.0f64..10.0), balls in prop::collection::vec((0.0f64..1.0, 0.0f64..std::f64::consts::TAU, 1.0f64..3.0), 1..5)) {
        // Balls around points near a shared target always intersect.
        let t = Point::new(target.0, target.1);
        let mut cs: Vec<ConvexConstraint> = balls
            .iter()
            .map(|&(off, ang, r)| ConvexConstraint::ball(0, Point::new(t.x + off * ang.cos(), t.y + off * ang.sin()), r))
            .collect();
        cs.push(ConvexConstraint::ball(1, t, 1.0));
        cs.push(ConvexConstraint::pair_ball(0, 1, 2.0));
        cs.push(ConvexConstraint::half_plane(1, [1.0, 0.0], t.x + 0.5, true));
        let cfg = FeasibilityConfig::default();
        match feasibility(&cs, &[Point::new(0.0, 0.0), Point::new(20.0, 20.0)], &cfg) {
            FeasibilityOutcome::Feasible(w) => {
                for c in &cs {
                    prop_assert!(c.violation(&w) < cfg.eps, "{:?} violated by {}", c, c.violation(&w));
                }
            }
            other => prop_assert!(false, "expected feasible, got {:?}", other),
        }
    }

    #[test]
    fn infeasible_cores_are_stable(a in (0.0f64..5.0, 0.0f64..5.0), gap in 0.5f64..3.0) {
        let cs = vec![
            ConvexConstraint::ball(0, Point::new(a.0, a.1), 1.0),
            ConvexConstraint::ball(1, Point::new(a.0 + 10.0, a.1), 1.0),
            ConvexConstraint::ball(0, Point::new(a.0 + 2.0 + gap, a.1), 1.0),
            ConvexConstraint::pair_ball(0, 1, 20.0),
        ];
        let cfg = FeasibilityConfig::default();
        let start = [Point::new(0.0, 0.0), Point::new(0.0, 0.0)];
        let FeasibilityOutcome::Infeasible(core) = feasibility(&cs, &start, &cfg) else {
            return Err(TestCaseError::fail("disjoint balls reported feasible"));
        };
        let sub: Vec<ConvexConstraint> = core.iter().map(|&i| cs[i]).collect();
        prop_assert!(feasibility(&sub, &start, &cfg).is_infeasible());
    }

    #[test]
    fn covering_meets_demand(region in region_strategy(5), r_s in 1.5f64..3.5, k in 1u32..3) {
        let specs = [SensorSpec::new(0, r_s, r_s).unwrap()];
        prop_assume!(region.open_count() > 0);
        if let Ok(p) = CoveringProblem::for_region(&region, &specs, &[k], u32::MAX) {
            let sol = solve_covering(&p, Duration::from_secs(10)).unwrap();
            prop_assert!(p.is_satisfied_by(&sol.placement.counts));
            prop_assert!(sol.lower_bound as usize <= sol.placement.sensor_count());
        }
    }

    #[test]
    fn gamma_in_range(region in region_strategy(10)) {
        if let Ok(g) = compute_gamma(&region) {
            prop_assert!((0.0..=8.0).contains(&g));
        }
    }

    #[test]
    fn generation_is_reproducible(w in 4usize..12, h in 4usize..12, extent in 0.0f64..0.4, gamma in 0.0f64..6.0, seed in any::<u64>()) {
        let spec = ScenarioSpec { width: w, height: h, cell_size: 1.0, extent, gamma_target: gamma, seed };
        let a = generate(&spec).ok();
        let b = generate(&spec).ok();
        prop_assert_eq!(&a, &b);
        if let Some(g) = a {
            let target = extent * (w * h) as f64;
            prop_assert!((g.region.occupied_count() as f64 - target).abs() <= 1.0);
        }
    }

    #[test]
    fn verify_report_is_consistent(region in region_strategy(6), sensors in prop::collection::vec((0.0f64..6.0, 0.0f64..6.0), 0..6), k in 1u32..3) {
        let specs = [SensorSpec::new(0, 2.5, 2.5).unwrap()];
        let placement = Placement::new(
            sensors.into_iter().map(|(x, y)| DeployedSensor::new(Point::new(x, y), 0, Role::Primary)).collect(),
        );
        let report = verify(&placement, &region, &specs, &[k]);
        prop_assert_eq!(report.coverage_ok, report.uncovered.is_empty());
        prop_assert_eq!(report.connected, report.component_count <= 1);
        if report.coverage_ok && region.open_count() > 0 {
            prop_assert!(coverage_redundancy(&placement, &region, &specs, &[k]) >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn empty_placement_covers_nothing() {
    let region = GridRegion::open(3, 3, 1.0).unwrap();
    let specs = [SensorSpec::new(0, 2.0, 2.0).unwrap()];
    let report = verify(&Placement::new(Vec::new()), &region, &specs, &[1]);
    assert!(!report.coverage_ok);
    assert_eq!(report.uncovered.len(), 9);
}

#[test]
fn single_sensor_single_cell() {
    let region = GridRegion::open(1, 1, 1.0).unwrap();
    let specs = [SensorSpec::new(0, 1.0, 1.0).unwrap()];
    let p = Placement::new(vec![DeployedSensor::new(Point::new(0.5, 0.5), 0, Role::Primary)]);
    assert!(verify(&p, &region, &specs, &[1]).passed());
}

/// Cell-center MILP placements rely on the relaxed predicates; the exact
/// verifier must accept every one of them.
#[test]
fn milp_outputs_pass_exact_verification() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 1000 {
        let spec = ScenarioSpec {
            width: 4 + (seed % 4) as usize,
            height: 4 + (seed / 4 % 3) as usize,
            cell_size: 1.0,
            extent: [0.0, 0.1, 0.2, 0.3][seed as usize % 4],
            gamma_target: (seed % 6) as f64,
            seed,
        };
        seed += 1;
        let Ok(g) = generate(&spec) else { continue };
        // Communication radii reach at least the adjacent cells.
        let r_s = [2.3, 3.0, 4.0][seed as usize % 3];
        let specs = [SensorSpec::new(0, r_s, r_s * [1.0, 2.0][seed as usize / 3 % 2]).unwrap()];
        let k = 1 + (seed % 3) as u32;
        match flat_synthesize(&g.region, SynthesisMethod::Milp, &specs, &[k], Duration::from_secs(10)) {
            Ok(out) => {
                let report = verify(&out.placement, &g.region, &specs, &[k]);
                assert!(report.passed(), "seed {}: {:?}", seed - 1, report.uncovered);
                checked += 1;
            }
            Err(e) => panic!("seed {}: {e}", seed - 1),
        }
    }
}
