use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use super::{encode_with_cores, precompute_exclusions, Connectivity, PbOwner, SmcInstance, SmcProblem, Template};
use crate::convex::{feasibility, ConvexConstraint, FeasibilityOutcome};
use crate::error::SmcError;
use crate::geometry::{exact_distance, GridRegion, Point, SensorSpec};
use crate::placement::{DeployedSensor, Placement, Role};
use crate::sat::{Lit, Model, SolveResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmcStats {
    /// Propositional models examined.
    pub iterations: usize,
    pub convex_checks: usize,
    pub memo_hits: usize,
    pub cores: usize,
    pub joint_checks: usize,
    /// Convex checks that hit the iteration cap; their assignments are
    /// blocked outright.
    pub unknown: usize,
    pub elapsed: Duration,
}

/// Run the counterexample loop until a model's convex constraints are
/// jointly feasible (returned as a placement), the abstraction becomes
/// unsatisfiable, or the budget runs out.
pub fn smc_solve(problem: &mut SmcProblem, budget: Duration) -> Result<Placement, SmcError> {
    let start = Instant::now();
    let deadline = start + budget;
    let n = problem.slot_count();
    let cfg = problem.cfg;
    let mut memo: HashMap<(usize, Vec<Template>), Point> = HashMap::new();
    let timeout = |p: &mut SmcProblem| {
        p.stats.elapsed += start.elapsed();
        Err(SmcError::Timeout {
            elapsed: start.elapsed(),
            iterations: p.stats.iterations,
        })
    };
    loop {
        if Instant::now() >= deadline {
            return timeout(problem);
        }
        let model = match problem.solver.solve_until(Some(deadline)) {
            SolveResult::Sat(m) => m,
            SolveResult::Unsat => {
                problem.stats.elapsed += start.elapsed();
                return Err(SmcError::Infeasible(n));
            }
            SolveResult::Timeout(_) => return timeout(problem),
        };
        problem.stats.iterations += 1;

        let mut witness = Vec::with_capacity(n);
        let mut blocked = false;
        for slot in 0..n {
            let ty = problem.inst.slot_types[slot];
            let tmpls = active_templates(problem, slot, &model);
            let key = (ty, tmpls);
            if let Some(&p) = memo.get(&key) {
                problem.stats.memo_hits += 1;
                witness.push(p);
                continue;
            }
            let mut cs = Vec::new();
            let mut owners = Vec::new();
            for &t in &key.1 {
                let before = cs.len();
                problem.template_constraints(t, ty, 0, &mut cs);
                owners.extend(std::iter::repeat_n(t, cs.len() - before));
            }
            let start_pt = anchor_center(problem, &key.1);
            problem.stats.convex_checks += 1;
            match feasibility(&cs, &[start_pt], &cfg) {
                FeasibilityOutcome::Feasible(w) => {
                    memo.insert(key, w[0]);
                    witness.push(w[0]);
                }
                FeasibilityOutcome::Infeasible(core) => {
                    let mut ts: Vec<Template> = core.iter().map(|&c| owners[c]).collect();
                    ts.sort();
                    ts.dedup();
                    problem.stats.cores += 1;
                    problem.learn(ty, &ts);
                    blocked = true;
                    witness.push(start_pt);
                }
                FeasibilityOutcome::Unknown(_) => {
                    problem.stats.unknown += 1;
                    problem.learn(ty, &key.1);
                    blocked = true;
                    witness.push(start_pt);
                }
            }
        }
        if blocked {
            continue;
        }

        let links: Vec<(usize, usize, Lit)> = problem
            .pb
            .pairs()
            .filter(|(_, v)| model.value(*v))
            .map(|((i, j), v)| (i, j, v.pos()))
            .collect();
        let broken = links
            .iter()
            .any(|&(i, j, _)| exact_distance(witness[i], witness[j]) > problem.link_radius(i, j));
        if !broken {
            problem.stats.elapsed += start.elapsed();
            return Ok(to_placement(problem, &witness));
        }

        // Couple the sensors through their link constraints.
        problem.stats.joint_checks += 1;
        let mut cs = Vec::new();
        let mut owners: Vec<PbOwner> = Vec::new();
        for slot in 0..n {
            let ty = problem.inst.slot_types[slot];
            for t in active_templates(problem, slot, &model) {
                let before = cs.len();
                problem.template_constraints(t, ty, slot, &mut cs);
                owners.extend(std::iter::repeat_n(PbOwner::Sensor(slot, t), cs.len() - before));
            }
        }
        for &(i, j, _) in &links {
            cs.push(ConvexConstraint::pair_ball(i, j, problem.link_radius(i, j)));
            owners.push(PbOwner::Pair(i, j));
        }
        let var_of = |p: &SmcProblem, o: PbOwner| match o {
            PbOwner::Sensor(s, t) => p.pb.var(s, t).expect("template var"),
            PbOwner::Pair(i, j) => p.pb.pair(i, j).expect("pair var"),
        };
        match feasibility(&cs, &witness, &cfg) {
            FeasibilityOutcome::Feasible(w) => {
                problem.stats.elapsed += start.elapsed();
                return Ok(to_placement(problem, &w[..n]));
            }
            FeasibilityOutcome::Infeasible(core) => {
                let mut lits: Vec<Lit> = core.iter().map(|&c| var_of(problem, owners[c]).neg()).collect();
                lits.sort();
                lits.dedup();
                problem.stats.cores += 1;
                problem.solver.add_clause(&lits);
            }
            FeasibilityOutcome::Unknown(_) => {
                problem.stats.unknown += 1;
                let mut lits: Vec<Lit> = owners.iter().map(|&o| var_of(problem, o).neg()).collect();
                lits.sort();
                lits.dedup();
                problem.solver.add_clause(&lits);
            }
        }
    }
}

fn active_templates(problem: &SmcProblem, slot: usize, model: &Model) -> Vec<Template> {
    let mut ts: Vec<Template> = problem
        .pb
        .templates(slot)
        .filter(|(_, v)| model.value(*v))
        .map(|(t, _)| t)
        .collect();
    ts.sort();
    ts
}

fn anchor_center(problem: &SmcProblem, tmpls: &[Template]) -> Point {
    let region = &problem.inst.region;
    tmpls
        .iter()
        .find_map(|t| match t {
            Template::Anchor(id) => Some(region.cell_center(region.cell_at(*id as usize))),
            _ => None,
        })
        .unwrap_or_else(|| region.cell_center(problem.inst.anchors[0]))
}

fn to_placement(problem: &SmcProblem, pts: &[Point]) -> Placement {
    let role = match problem.inst.connectivity {
        Connectivity::Stitch(_) => Role::Relay,
        _ => Role::Primary,
    };
    Placement::new(
        pts.iter()
            .zip(&problem.inst.slot_types)
            .map(|(&p, &ty)| DeployedSensor::new(p, problem.inst.specs[ty].type_id, role))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeResult {
    Feasible,
    Infeasible,
    Timeout,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub n: usize,
    pub placement: Placement,
    /// Every count below `n` was shown infeasible (no probe timed out).
    pub proven_minimal: bool,
    pub probes: Vec<(usize, ProbeResult)>,
    pub elapsed: Duration,
}

/// Smallest sensor count in `[lower, n_max]` for which the whole-region
/// instance is feasible. `lower` is the counting bound `sum(k)`.
pub fn binary_search_min_n(
    region: &GridRegion,
    specs: &[SensorSpec],
    k: &[u32],
    n_max: usize,
    budget: Duration,
) -> Result<SearchOutcome, SmcError> {
    if k.len() != specs.len() {
        return Err(SmcError::Invalid("one demand per sensor type is required".into()));
    }
    if region.open_count() == 0 {
        return Err(SmcError::Invalid("region has no open cell".into()));
    }
    let lower = (k.iter().map(|&x| x as usize).sum::<usize>()).max(1);
    if n_max < lower {
        return Err(SmcError::Infeasible(n_max));
    }
    binary_search_with(
        |n| super::allocate(n, k).map(|counts| SmcInstance::full(region, specs, &counts, k)),
        lower,
        n_max,
        budget,
    )
}

/// Binary search over the sensor count. `make(n)` builds the instance for
/// `n` sensors (`None` when `n` is infeasible by counting). A probe that times
/// out is treated as infeasible, which keeps the search sound but clears
/// `proven_minimal`. The budget is shared: each probe gets the remaining time
/// divided by the number of probes still expected.
pub fn binary_search_with<F>(
    mut make: F,
    lower: usize,
    n_max: usize,
    budget: Duration,
) -> Result<SearchOutcome, SmcError>
where
    F: FnMut(usize) -> Option<SmcInstance>,
{
    let start = Instant::now();
    let mut cores: Vec<(usize, Vec<Template>)> = Vec::new();
    let mut seen: HashSet<(usize, Vec<Template>)> = HashSet::new();
    let mut probes = Vec::new();
    let mut best: Option<(usize, Placement)> = None;
    let mut proven = true;
    let (mut lo, mut hi) = (lower, n_max);

    let mut probe = |n: usize,
                     lo: usize,
                     hi: usize,
                     probes: &mut Vec<(usize, ProbeResult)>|
     -> Result<Option<Placement>, SmcError> {
        let expected = ((hi - lo + 1) as f64).log2().ceil() as u32 + 1;
        let left = budget.saturating_sub(start.elapsed());
        let slice = left / expected.max(1);
        let Some(inst) = make(n) else {
            probes.push((n, ProbeResult::Infeasible));
            return Ok(None);
        };
        let mut problem = encode_with_cores(inst, &cores)?;
        precompute_exclusions(&mut problem);
        let out = smc_solve(&mut problem, slice);
        for c in problem.learned_cores() {
            if !c.1.iter().any(|t| matches!(t, Template::Link(_))) && seen.insert(c.clone()) {
                cores.push(c.clone());
            }
        }
        match out {
            Ok(p) => {
                probes.push((n, ProbeResult::Feasible));
                Ok(Some(p))
            }
            Err(SmcError::Infeasible(_)) => {
                probes.push((n, ProbeResult::Infeasible));
                Ok(None)
            }
            Err(SmcError::Timeout { .. }) => {
                probes.push((n, ProbeResult::Timeout));
                Err(SmcError::Timeout {
                    elapsed: start.elapsed(),
                    iterations: 0,
                })
            }
            Err(e) => Err(e),
        }
    };

    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match probe(mid, lo, hi, &mut probes) {
            Ok(Some(p)) => {
                best = Some((mid, p));
                hi = mid;
            }
            Ok(None) => lo = mid + 1,
            Err(SmcError::Timeout { .. }) => {
                proven = false;
                lo = mid + 1;
            }
            Err(e) => return Err(e),
        }
    }
    if best.as_ref().map(|b| b.0) != Some(lo) {
        match probe(lo, lo, lo, &mut probes) {
            Ok(Some(p)) => best = Some((lo, p)),
            Ok(None) => {}
            Err(SmcError::Timeout { .. }) => proven = false,
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((n, placement)) => Ok(SearchOutcome {
            n,
            placement,
            proven_minimal: proven,
            probes,
            elapsed: start.elapsed(),
        }),
        None if !proven => Err(SmcError::Timeout {
            elapsed: start.elapsed(),
            iterations: probes.len(),
        }),
        None => Err(SmcError::Infeasible(n_max)),
    }
}
