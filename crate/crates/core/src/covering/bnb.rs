use std::time::{Duration, Instant};

use super::simplex::{solve_packing_until, LpOutcome};
use super::{deficits, CoveringProblem, IntegerPlacement};
use crate::error::CoveringError;

const INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringSolution {
    pub placement: IntegerPlacement,
    /// The search closed: the placement is a minimum.
    pub optimal: bool,
    /// Best proven lower bound on the sensor count (equals the count when
    /// optimal).
    pub lower_bound: u32,
    pub nodes: usize,
}

/// Greedy set multicover for one type: repeatedly put a sensor on the cell
/// whose coverage holds the most residual demand, ties to the lowest index.
pub fn greedy_cover(problem: &CoveringProblem, type_id: usize) -> Vec<u32> {
    greedy(&problem.covers[type_id], &problem.demands[type_id])
}

fn greedy(covers: &[Vec<usize>], demand: &[u32]) -> Vec<u32> {
    let n = covers.len();
    let mut counts = vec![0u32; n];
    let mut residual: Vec<u32> = demand.to_vec();
    while residual.iter().any(|&r| r > 0) {
        let mut best = None;
        let mut best_score = 0u64;
        for j in 0..n {
            let score: u64 = covers[j].iter().map(|&i| residual[i] as u64).sum();
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        let Some(j) = best else {
            // Some deficient cell has an empty neighborhood.
            break;
        };
        counts[j] += 1;
        for &i in &covers[j] {
            residual[i] = residual[i].saturating_sub(1);
        }
    }
    counts
}

enum Node {
    Bound(f64, Vec<f64>),
    Infeasible,
    Interrupted,
}

/// LP relaxation at a node with bounds `lo <= x <= hi` (`u32::MAX` is
/// unbounded): the LP value and an optimal `x`. Solved through the dual
/// packing program.
fn lp_bound(
    nb: &[Vec<usize>],
    covers: &[Vec<usize>],
    demand: &[u32],
    lo: &[u32],
    hi: &[u32],
    deadline: Instant,
) -> Node {
    let n = nb.len();
    let base: f64 = lo.iter().map(|&v| v as f64).sum();
    let residual: Vec<i64> = nb
        .iter()
        .zip(demand)
        .map(|(nbh, &k)| k as i64 - nbh.iter().map(|&j| lo[j] as i64).sum::<i64>())
        .collect();
    let mut row_of = vec![usize::MAX; n];
    let active: Vec<usize> = (0..n).filter(|&i| residual[i] > 0).collect();
    for (r, &i) in active.iter().enumerate() {
        row_of[i] = r;
    }
    let mut x: Vec<f64> = lo.iter().map(|&v| v as f64).collect();
    if active.is_empty() {
        return Node::Bound(base, x);
    }
    let cols: Vec<usize> = (0..n)
        .filter(|&j| hi[j] > lo[j] && covers[j].iter().any(|&i| row_of[i] != usize::MAX))
        .collect();
    let capped: Vec<usize> = cols.iter().copied().filter(|&j| hi[j] != u32::MAX).collect();
    let nvars = active.len() + capped.len();
    let mut a = vec![vec![0.0; nvars]; cols.len()];
    let mut cap_pos = 0;
    for (r, &j) in cols.iter().enumerate() {
        for &i in &covers[j] {
            if row_of[i] != usize::MAX {
                a[r][row_of[i]] = 1.0;
            }
        }
        if hi[j] != u32::MAX {
            a[r][active.len() + cap_pos] = -1.0;
            cap_pos += 1;
        }
    }
    let mut c: Vec<f64> = active.iter().map(|&i| residual[i] as f64).collect();
    c.extend(capped.iter().map(|&j| -((hi[j] - lo[j]) as f64)));
    match solve_packing_until(&a, &vec![1.0; cols.len()], &c, Some(deadline)) {
        LpOutcome::Unbounded => Node::Infeasible,
        LpOutcome::Interrupted => Node::Interrupted,
        LpOutcome::Optimal { value, dual, .. } => {
            for (r, &j) in cols.iter().enumerate() {
                x[j] += dual[r];
            }
            Node::Bound(base + value, x)
        }
    }
}

struct TypeResult {
    counts: Vec<u32>,
    optimal: bool,
    lower_bound: u32,
    nodes: usize,
}

fn solve_type(nb: &[Vec<usize>], covers: &[Vec<usize>], demand: &[u32], deadline: Instant) -> TypeResult {
    let n = nb.len();
    let mut best = greedy(covers, demand);
    let mut best_val: u32 = best.iter().sum();
    let mut root_bound = 0u32;
    let mut nodes = 0usize;
    let mut closed = true;
    let mut stack: Vec<(Vec<u32>, Vec<u32>)> = vec![(vec![0; n], vec![u32::MAX; n])];
    while let Some((lo, hi)) = stack.pop() {
        if Instant::now() >= deadline {
            closed = false;
            break;
        }
        nodes += 1;
        let (value, x) = match lp_bound(nb, covers, demand, &lo, &hi, deadline) {
            Node::Bound(v, x) => (v, x),
            Node::Infeasible => continue,
            Node::Interrupted => {
                closed = false;
                break;
            }
        };
        let bound = (value - INTEGRAL_TOL).ceil().max(0.0) as u32;
        if nodes == 1 {
            root_bound = bound;
        }
        if bound >= best_val {
            continue;
        }
        // Most fractional variable, ties to the lowest index.
        let mut branch = None;
        let mut closest = f64::INFINITY;
        for (j, &xj) in x.iter().enumerate() {
            let frac = xj - xj.floor();
            if frac > INTEGRAL_TOL && frac < 1.0 - INTEGRAL_TOL && (frac - 0.5).abs() < closest {
                closest = (frac - 0.5).abs();
                branch = Some(j);
            }
        }
        match branch {
            None => {
                let counts: Vec<u32> = x.iter().map(|&v| v.round().max(0.0) as u32).collect();
                let val: u32 = counts.iter().sum();
                if deficits(nb, demand, &counts).iter().all(|&d| d == 0) {
                    if val < best_val {
                        best = counts;
                        best_val = val;
                    }
                } else {
                    // Rounding broke feasibility; the subtree was not searched.
                    closed = false;
                }
            }
            Some(j) => {
                let f = x[j].floor() as u32;
                let mut down_hi = hi.clone();
                down_hi[j] = f;
                stack.push((lo.clone(), down_hi));
                let mut up_lo = lo;
                up_lo[j] = f + 1;
                stack.push((up_lo, hi));
            }
        }
    }
    TypeResult {
        counts: best,
        optimal: closed,
        lower_bound: if closed { best_val } else { root_bound.min(best_val) },
        nodes,
    }
}

/// Branch-and-bound over the integer counts, one independent program per
/// type. Starts from the greedy cover and keeps the best incumbent, so a
/// timeout still returns a feasible placement (flagged non-optimal). Fails
/// when the placement found exceeds the sensor budget.
pub fn solve_covering(problem: &CoveringProblem, budget: Duration) -> Result<CoveringSolution, CoveringError> {
    let deadline = Instant::now() + budget;
    let mut placement = IntegerPlacement::empty(problem.cells.clone(), problem.type_count());
    let mut optimal = true;
    let mut lower_bound = 0;
    let mut nodes = 0;
    for t in 0..problem.type_count() {
        let r = solve_type(
            &problem.neighborhoods[t],
            &problem.covers[t],
            &problem.demands[t],
            deadline,
        );
        placement.counts[t] = r.counts;
        optimal &= r.optimal;
        lower_bound += r.lower_bound;
        nodes += r.nodes;
    }
    let total = placement.sensor_count() as u32;
    if total > problem.budget {
        return Err(CoveringError::OverBudget {
            needed: total,
            budget: problem.budget,
        });
    }
    Ok(CoveringSolution {
        placement,
        optimal,
        lower_bound,
        nodes,
    })
}
