//! Convex constraints over sensor coordinates and a cyclic-projection
//! feasibility engine that returns either a witness or a small infeasible
//! subset.

use crate::geometry::{exact_distance, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvexConstraint {
    /// `normal . s_sensor <= bound` (strictly less when `strict`). The normal
    /// is unit length.
    HalfPlane {
        sensor: usize,
        normal: [f64; 2],
        bound: f64,
        strict: bool,
    },
    /// `|s_sensor - center| <= radius`.
    Ball { sensor: usize, center: Point, radius: f64 },
    /// `|s_i - s_j| <= radius`.
    PairBall { i: usize, j: usize, radius: f64 },
}

impl ConvexConstraint {
    /// Half-plane `a . s <= b`, normalized. `a` must be nonzero.
    pub fn half_plane(sensor: usize, a: [f64; 2], b: f64, strict: bool) -> Self {
        let norm = a[0].hypot(a[1]);
        debug_assert!(norm > 0.0);
        ConvexConstraint::HalfPlane {
            sensor,
            normal: [a[0] / norm, a[1] / norm],
            bound: b / norm,
            strict,
        }
    }

    pub fn ball(sensor: usize, center: Point, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        ConvexConstraint::Ball { sensor, center, radius }
    }

    pub fn pair_ball(i: usize, j: usize, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        ConvexConstraint::PairBall { i, j, radius }
    }

    pub fn sensors(&self) -> (usize, Option<usize>) {
        match *self {
            ConvexConstraint::HalfPlane { sensor, .. } | ConvexConstraint::Ball { sensor, .. } => (sensor, None),
            ConvexConstraint::PairBall { i, j, .. } => (i, Some(j)),
        }
    }

    pub fn max_sensor(&self) -> usize {
        let (a, b) = self.sensors();
        b.map_or(a, |b| a.max(b))
    }

    /// Same constraint acting on another sensor (single-sensor kinds only).
    pub fn with_sensor(&self, s: usize) -> Self {
        let mut c = *self;
        match &mut c {
            ConvexConstraint::HalfPlane { sensor, .. } | ConvexConstraint::Ball { sensor, .. } => *sensor = s,
            ConvexConstraint::PairBall { .. } => panic!("pair constraint has no single sensor"),
        }
        c
    }

    /// Amount by which `pts` violates the constraint (0 when satisfied).
    /// Strict half-planes are measured as non-strict.
    pub fn violation(&self, pts: &[Point]) -> f64 {
        match *self {
            ConvexConstraint::HalfPlane {
                sensor, normal, bound, ..
            } => {
                let p = pts[sensor];
                (normal[0] * p.x + normal[1] * p.y - bound).max(0.0)
            }
            ConvexConstraint::Ball { sensor, center, radius } => {
                (exact_distance(pts[sensor], center) - radius).max(0.0)
            }
            ConvexConstraint::PairBall { i, j, radius } => (exact_distance(pts[i], pts[j]) - radius).max(0.0),
        }
    }

    /// True if `pts` satisfies the constraint exactly as stated.
    pub fn holds(&self, pts: &[Point]) -> bool {
        match *self {
            ConvexConstraint::HalfPlane {
                sensor,
                normal,
                bound,
                strict,
            } => {
                let v = normal[0] * pts[sensor].x + normal[1] * pts[sensor].y;
                if strict {
                    v < bound
                } else {
                    v <= bound
                }
            }
            _ => self.violation(pts) == 0.0,
        }
    }

    /// Shrink the feasible set: half-planes move inward by `strict_margin`
    /// (strict) or `margin`, radii shrink by `margin`.
    fn tightened(&self, margin: f64, strict_margin: f64) -> Self {
        match *self {
            ConvexConstraint::HalfPlane {
                sensor,
                normal,
                bound,
                strict,
            } => ConvexConstraint::HalfPlane {
                sensor,
                normal,
                bound: bound - if strict { strict_margin } else { margin },
                strict: false,
            },
            ConvexConstraint::Ball { sensor, center, radius } => ConvexConstraint::Ball {
                sensor,
                center,
                radius: (radius - margin).max(0.0),
            },
            ConvexConstraint::PairBall { i, j, radius } => ConvexConstraint::PairBall {
                i,
                j,
                radius: (radius - margin).max(0.0),
            },
        }
    }
}

/// Euclidean projection of the sensor coordinates onto `c`.
pub fn project(pts: &[Point], c: &ConvexConstraint) -> Vec<Point> {
    let mut out = pts.to_vec();
    project_in_place(&mut out, c);
    out
}

/// Returns the squared displacement.
fn project_in_place(pts: &mut [Point], c: &ConvexConstraint) -> f64 {
    match *c {
        ConvexConstraint::HalfPlane {
            sensor, normal, bound, ..
        } => {
            let p = pts[sensor];
            let excess = normal[0] * p.x + normal[1] * p.y - bound;
            if excess > 0.0 {
                pts[sensor] = Point::new(p.x - excess * normal[0], p.y - excess * normal[1]);
                excess * excess
            } else {
                0.0
            }
        }
        ConvexConstraint::Ball { sensor, center, radius } => {
            let p = pts[sensor];
            let d = exact_distance(p, center);
            if d > radius {
                let t = radius / d;
                pts[sensor] = Point::new(center.x + (p.x - center.x) * t, center.y + (p.y - center.y) * t);
                (d - radius) * (d - radius)
            } else {
                0.0
            }
        }
        ConvexConstraint::PairBall { i, j, radius } => {
            let (a, b) = (pts[i], pts[j]);
            let d = exact_distance(a, b);
            if d > radius {
                let mid = Point::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
                let (ux, uy) = ((b.x - a.x) / d, (b.y - a.y) / d);
                let h = 0.5 * radius;
                pts[i] = Point::new(mid.x - h * ux, mid.y - h * uy);
                pts[j] = Point::new(mid.x + h * ux, mid.y + h * uy);
                0.5 * (d - radius) * (d - radius)
            } else {
                0.0
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityConfig {
    /// Feasibility tolerance; witnesses satisfy every constraint with slack.
    pub eps: f64,
    /// Margin applied to strict inequalities.
    pub strict_margin: f64,
    pub stall_window: usize,
    pub max_iters: usize,
}

impl FeasibilityConfig {
    pub fn for_cell_size(cell_size: f64) -> Self {
        FeasibilityConfig {
            eps: 1e-6 * cell_size,
            strict_margin: 1e-4 * cell_size,
            stall_window: 50,
            max_iters: 100_000,
        }
    }
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self::for_cell_size(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityOutcome {
    /// Coordinates for every sensor; each input constraint holds exactly.
    Feasible(Vec<Point>),
    /// Indices into the input constraint list forming an infeasible subset.
    Infeasible(Vec<usize>),
    /// Iteration budget exhausted with the residual still improving.
    Unknown(f64),
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityOutcome::Feasible(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, FeasibilityOutcome::Infeasible(_))
    }
}

enum Run {
    Feasible(Vec<Point>),
    Stalled { active: Vec<usize> },
    Exhausted(f64),
}

fn run(constraints: &[ConvexConstraint], start: &[Point], cfg: &FeasibilityConfig) -> Run {
    let targets: Vec<ConvexConstraint> = constraints
        .iter()
        .map(|c| c.tightened(2.0 * cfg.eps, cfg.strict_margin + cfg.eps))
        .collect();
    let mut pts = start.to_vec();
    let mut best = f64::INFINITY;
    let mut best_at_window_start = f64::INFINITY;
    let mut moved = vec![false; targets.len()];
    let mut residual = f64::INFINITY;
    for iter in 0..cfg.max_iters {
        for (k, c) in targets.iter().enumerate() {
            moved[k] = project_in_place(&mut pts, c) > 0.0;
        }
        residual = targets.iter().map(|c| c.violation(&pts)).fold(0.0, f64::max);
        if residual < cfg.eps && constraints.iter().all(|c| c.holds(&pts)) {
            return Run::Feasible(pts);
        }
        best = best.min(residual);
        if iter % cfg.stall_window == 0 {
            if iter > 0 && best_at_window_start.is_finite() {
                let improvement = (best_at_window_start - best) / best_at_window_start.max(f64::MIN_POSITIVE);
                if improvement < cfg.eps {
                    let active = (0..targets.len())
                        .filter(|&k| moved[k] || targets[k].violation(&pts) > 0.0)
                        .collect();
                    return Run::Stalled { active };
                }
            }
            best_at_window_start = best;
        }
    }
    Run::Exhausted(residual)
}

fn infeasible(constraints: &[ConvexConstraint], idx: &[usize], start: &[Point], cfg: &FeasibilityConfig) -> bool {
    let subset: Vec<ConvexConstraint> = idx.iter().map(|&k| constraints[k]).collect();
    matches!(run(&subset, start, cfg), Run::Stalled { .. })
}

/// Decide whether the constraints have a common solution, starting the
/// projections from `start` (one point per sensor).
pub fn feasibility(constraints: &[ConvexConstraint], start: &[Point], cfg: &FeasibilityConfig) -> FeasibilityOutcome {
    let n = constraints.iter().map(|c| c.max_sensor() + 1).max().unwrap_or(0);
    let mut init = start.to_vec();
    init.resize(n.max(start.len()), Point::new(0.0, 0.0));
    match run(constraints, &init, cfg) {
        Run::Feasible(p) => FeasibilityOutcome::Feasible(p),
        Run::Exhausted(r) => FeasibilityOutcome::Unknown(r),
        Run::Stalled { active } => {
            let all: Vec<usize> = (0..constraints.len()).collect();
            let mut core = if active.len() < all.len() && infeasible(constraints, &active, &init, cfg) {
                active
            } else {
                all
            };
            // Deletion filter.
            let mut k = 0;
            while k < core.len() && core.len() > 1 {
                let mut trial = core.clone();
                trial.remove(k);
                if infeasible(constraints, &trial, &init, cfg) {
                    core = trial;
                } else {
                    k += 1;
                }
            }
            FeasibilityOutcome::Infeasible(core)
        }
    }
}
