//! Satisfiability-modulo-convex synthesis: a propositional abstraction of
//! coverage, visibility, placement and connectivity whose pseudo-boolean
//! variables each assert a convex constraint on sensor coordinates, refined
//! lazily by convex feasibility checks.
//!
//! Every sensor slot is anchored to exactly one allowed open cell (its
//! position lies strictly inside that cell). Anchors make the visibility
//! encoding local: for a sensor in cell `a` and a coverage location `l` only
//! the obstacles overlapping the hull of `a` and `l` can block the view, and
//! selectors that cannot be met inside `a` are pruned up front.

mod solve;

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use crate::convex::{ConvexConstraint, FeasibilityConfig};
use crate::error::SmcError;
use crate::geometry::{
    clip_half_plane, exact_distance, hull_blockers, polygon_area, Cell, GridRegion, Point, Rect, SensorSpec,
};
use crate::sat::{add_at_least, Lit, Solver, Var};

pub use solve::{binary_search_min_n, binary_search_with, smc_solve, ProbeResult, SearchOutcome, SmcStats};

/// Sensor-independent meaning of a pseudo-boolean. Ids are global to the
/// region: anchors and obstacles are region cell indices, locations are
/// lattice indices `j * (width + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    /// Sensor strictly inside the anchor cell.
    Anchor(u32),
    /// Sensor within sensing range of the location.
    Cover(u32),
    /// All corners of the obstacle strictly on one side of the line from the
    /// sensor through the location.
    Side { loc: u32, obstacle: u32, positive: bool },
    /// Sensor strictly on the outer side of one obstacle face
    /// (0 left, 1 right, 2 bottom, 3 top).
    Face { obstacle: u32, face: u8 },
    /// Sensor within link range of a fixed sensor (stitching only).
    Link(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PbOwner {
    Sensor(usize, Template),
    Pair(usize, usize),
}

/// Pseudo-boolean variables and the constraint each one asserts.
#[derive(Debug, Default)]
pub struct PseudoBooleanMap {
    slots: Vec<HashMap<Template, Var>>,
    pairs: BTreeMap<(usize, usize), Var>,
    owners: HashMap<Var, PbOwner>,
}

impl PseudoBooleanMap {
    pub fn len(&self) -> usize {
        self.owners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owners.is_empty()
    }

    pub fn var(&self, slot: usize, t: Template) -> Option<Var> {
        self.slots.get(slot)?.get(&t).copied()
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<Var> {
        self.pairs.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn owner(&self, v: Var) -> Option<PbOwner> {
        self.owners.get(&v).copied()
    }

    pub fn templates(&self, slot: usize) -> impl Iterator<Item = (Template, Var)> + '_ {
        self.slots[slot].iter().map(|(t, v)| (*t, *v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), Var)> + '_ {
        self.pairs.iter().map(|(k, v)| (*k, *v))
    }

    /// Number of variables of a given kind, for diagnostics.
    pub fn count_where(&self, f: impl Fn(&Template) -> bool) -> usize {
        self.slots.iter().map(|m| m.keys().filter(|t| f(t)).count()).sum()
    }

    fn get_or_insert(&mut self, solver: &mut Solver, slot: usize, t: Template) -> (Var, bool) {
        if let Some(&v) = self.slots[slot].get(&t) {
            return (v, false);
        }
        let v = solver.new_var();
        self.slots[slot].insert(t, v);
        self.owners.insert(v, PbOwner::Sensor(slot, t));
        (v, true)
    }

    fn insert_pair(&mut self, solver: &mut Solver, i: usize, j: usize) -> Var {
        let v = solver.new_var();
        self.pairs.insert((i.min(j), i.max(j)), v);
        self.owners.insert(v, PbOwner::Pair(i.min(j), i.max(j)));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedSensor {
    pub position: Point,
    pub comm_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Connectivity {
    None,
    /// All sensor slots form one network.
    Connected,
    /// Slots are relays joining the given fixed components into one network.
    Stitch(Vec<Vec<FixedSensor>>),
}

/// What to synthesize: sensor slots (by type), per-cell demands, the cells
/// sensors may occupy and the connectivity requirement.
#[derive(Debug, Clone)]
pub struct SmcInstance {
    pub region: GridRegion,
    /// Indexed by type id.
    pub specs: Vec<SensorSpec>,
    /// Type of each slot.
    pub slot_types: Vec<usize>,
    /// Demand per type for each cell that must be covered.
    pub demands: Vec<(Cell, Vec<u32>)>,
    pub anchors: Vec<Cell>,
    pub connectivity: Connectivity,
}

impl SmcInstance {
    /// Whole-region instance: every open cell demands `k[t]` sensors of type
    /// `t`, sensors may sit in any open cell and must form one network.
    pub fn full(region: &GridRegion, specs: &[SensorSpec], counts: &[usize], k: &[u32]) -> Self {
        let open = region.open_cells();
        SmcInstance {
            region: region.clone(),
            specs: specs.to_vec(),
            slot_types: counts
                .iter()
                .enumerate()
                .flat_map(|(t, &n)| std::iter::repeat_n(t, n))
                .collect(),
            demands: open.iter().map(|&c| (c, k.to_vec())).collect(),
            anchors: open,
            connectivity: Connectivity::Connected,
        }
    }

    fn validate(&self) -> Result<(), SmcError> {
        let invalid = |m: &str| Err(SmcError::Invalid(m.to_string()));
        if self.slot_types.is_empty() {
            return invalid("no sensor slots");
        }
        if self.specs.iter().enumerate().any(|(t, s)| s.type_id != t) {
            return invalid("sensor specs must be indexed by type id");
        }
        if self.slot_types.iter().any(|&t| t >= self.specs.len()) {
            return invalid("slot type without a spec");
        }
        if self.slot_types.windows(2).any(|w| w[0] > w[1]) {
            return invalid("slots must be grouped by type in ascending order");
        }
        if self.anchors.is_empty() {
            return invalid("no cells available for sensors");
        }
        let r = &self.region;
        if self.anchors.iter().any(|&c| !r.in_bounds(c) || r.is_occupied(c)) {
            return invalid("anchor cells must be open");
        }
        for (c, k) in &self.demands {
            if !r.in_bounds(*c) || r.is_occupied(*c) {
                return invalid("demand on a cell that is not open");
            }
            if k.len() != self.specs.len() {
                return invalid("demand vector length differs from type count");
            }
        }
        Ok(())
    }
}

/// Selector usable for one obstacle when viewing one location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sel {
    Side(bool),
    Face(u8),
}

/// Obstacles that may block the view from an anchor cell to a location,
/// each with the selectors satisfiable inside the anchor.
type Blockers = Rc<Vec<(u32, Vec<Sel>)>>;

/// Encoded problem: solver, pseudo-boolean map and the geometry needed to
/// turn pseudo-booleans into convex constraints.
pub struct SmcProblem {
    inst: SmcInstance,
    solver: Solver,
    pb: PseudoBooleanMap,
    cfg: FeasibilityConfig,
    anchor_ids: Vec<u32>,
    anchor_boxes: Vec<Rect>,
    fixed: Vec<FixedSensor>,
    cover_u: Vec<HashMap<usize, Var>>,
    blocker_vars: HashMap<(usize, u32, u32), Var>,
    learned: Vec<(usize, Vec<Template>)>,
    reach: HashMap<(usize, usize, u32), Option<Blockers>>,
    stats: SmcStats,
}

pub type LearnedCores = Vec<(usize, Vec<Template>)>;

/// Whole-region encoding with `n` sensors of a single type (`specs` with
/// one entry) or `n` split across types by [`allocate`].
pub fn encode(region: &GridRegion, n: usize, specs: &[SensorSpec], k: &[u32]) -> Result<SmcProblem, SmcError> {
    if n == 0 {
        return Err(SmcError::Invalid("at least one sensor is required".into()));
    }
    if region.open_count() == 0 {
        return Err(SmcError::Invalid("region has no open cell".into()));
    }
    if k.len() != specs.len() {
        return Err(SmcError::Invalid("one demand per sensor type is required".into()));
    }
    let counts = allocate(n, k).ok_or(SmcError::Infeasible(n))?;
    encode_instance(SmcInstance::full(region, specs, &counts, k))
}

/// Split `n` sensors across types: each type with demand `k_t` gets at least
/// `k_t`; the remainder goes round-robin to the types with demand. `None`
/// when `n` is below the total demand.
pub fn allocate(n: usize, k: &[u32]) -> Option<Vec<usize>> {
    let mut counts: Vec<usize> = k.iter().map(|&x| x as usize).collect();
    let base: usize = counts.iter().sum();
    if n < base.max(1) {
        return None;
    }
    let mut targets: Vec<usize> = (0..k.len()).filter(|&t| k[t] > 0).collect();
    if targets.is_empty() {
        targets = (0..k.len()).collect();
    }
    for step in 0..n - base {
        counts[targets[step % targets.len()]] += 1;
    }
    Some(counts)
}

pub fn encode_instance(inst: SmcInstance) -> Result<SmcProblem, SmcError> {
    encode_with_cores(inst, &[])
}

/// Encode and pre-load blocking clauses learned on other instances of the
/// same region and sensor specs.
pub fn encode_with_cores(inst: SmcInstance, cores: &[(usize, Vec<Template>)]) -> Result<SmcProblem, SmcError> {
    inst.validate()?;
    let cs = inst.region.cell_size();
    let cfg = FeasibilityConfig::for_cell_size(cs);
    let delta = cfg.strict_margin;
    let anchor_ids = inst.anchors.iter().map(|&c| inst.region.index(c) as u32).collect();
    let anchor_boxes = inst
        .anchors
        .iter()
        .map(|&c| {
            let r = inst.region.cell_rect(c);
            Rect {
                x_min: r.x_min + delta,
                y_min: r.y_min + delta,
                x_max: r.x_max - delta,
                y_max: r.y_max - delta,
            }
        })
        .collect();
    let fixed = match &inst.connectivity {
        Connectivity::Stitch(groups) => groups.iter().flatten().copied().collect(),
        _ => Vec::new(),
    };
    let n = inst.slot_types.len();
    let mut p = SmcProblem {
        solver: Solver::new(),
        pb: PseudoBooleanMap {
            slots: vec![HashMap::new(); n],
            ..Default::default()
        },
        cfg,
        anchor_ids,
        anchor_boxes,
        fixed,
        cover_u: vec![HashMap::new(); n],
        blocker_vars: HashMap::new(),
        learned: Vec::new(),
        reach: HashMap::new(),
        stats: SmcStats::default(),
        inst,
    };
    p.encode_anchors();
    p.encode_placement();
    p.encode_coverage();
    p.encode_connectivity();
    for (ty, core) in cores {
        p.learn(*ty, core);
    }
    Ok(p)
}

/// Clauses added by [`precompute_exclusions`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExclusionCount {
    pub location_pairs: usize,
    pub cell_pairs: usize,
}

/// One sensor cannot cover two locations more than twice its sensing radius
/// apart, nor two cells whose nearest corners are that far apart.
pub fn precompute_exclusions(problem: &mut SmcProblem) -> ExclusionCount {
    let mut count = ExclusionCount::default();
    let region = problem.inst.region.clone();
    for slot in 0..problem.inst.slot_types.len() {
        let r2 = 2.0 * problem.radius(slot);
        let mut covers: Vec<(u32, Var)> = problem
            .pb
            .templates(slot)
            .filter_map(|(t, v)| match t {
                Template::Cover(l) => Some((l, v)),
                _ => None,
            })
            .collect();
        covers.sort();
        for (a, &(la, va)) in covers.iter().enumerate() {
            for &(lb, vb) in &covers[a + 1..] {
                if exact_distance(problem.loc_point(la), problem.loc_point(lb)) > r2 {
                    problem.solver.add_clause(&[va.neg(), vb.neg()]);
                    count.location_pairs += 1;
                }
            }
        }
        let mut cells: Vec<(usize, Var)> = problem.cover_u[slot].iter().map(|(&d, &v)| (d, v)).collect();
        cells.sort();
        for (a, &(da, va)) in cells.iter().enumerate() {
            for &(db, vb) in &cells[a + 1..] {
                let ca = region.cell_corners(problem.inst.demands[da].0);
                let cb = region.cell_corners(problem.inst.demands[db].0);
                let nearest = ca
                    .iter()
                    .flat_map(|p| cb.iter().map(move |q| exact_distance(*p, *q)))
                    .fold(f64::INFINITY, f64::min);
                if nearest > r2 {
                    problem.solver.add_clause(&[va.neg(), vb.neg()]);
                    count.cell_pairs += 1;
                }
            }
        }
    }
    count
}

impl SmcProblem {
    pub fn instance(&self) -> &SmcInstance {
        &self.inst
    }

    pub fn pb_map(&self) -> &PseudoBooleanMap {
        &self.pb
    }

    pub fn slot_count(&self) -> usize {
        self.inst.slot_types.len()
    }

    pub fn stats(&self) -> &SmcStats {
        &self.stats
    }

    pub fn num_vars(&self) -> usize {
        self.solver.num_vars()
    }

    pub fn num_clauses(&self) -> usize {
        self.solver.num_clauses()
    }

    /// Cores learned so far, reusable on other instances over the same
    /// region and specs.
    pub fn learned_cores(&self) -> &[(usize, Vec<Template>)] {
        &self.learned
    }

    /// Clause count of the coverage cardinality constraints is not exposed;
    /// this reports how many `b^u` variables were created per slot.
    pub fn cover_vars(&self, slot: usize) -> usize {
        self.cover_u[slot].len()
    }

    fn radius(&self, slot: usize) -> f64 {
        self.inst.specs[self.inst.slot_types[slot]].sensing_radius
    }

    fn loc_id(&self, i: usize, j: usize) -> u32 {
        (j * (self.inst.region.width() + 1) + i) as u32
    }

    fn loc_lattice(&self, l: u32) -> (usize, usize) {
        let w = self.inst.region.width() + 1;
        (l as usize % w, l as usize / w)
    }

    fn loc_point(&self, l: u32) -> Point {
        let (i, j) = self.loc_lattice(l);
        self.inst.region.grid_point(i, j)
    }

    fn obstacle_rect(&self, o: u32) -> Rect {
        self.inst.region.cell_rect(self.inst.region.cell_at(o as usize))
    }

    fn anchor_var(&self, slot: usize, a: usize) -> Var {
        self.pb
            .var(slot, Template::Anchor(self.anchor_ids[a]))
            .expect("anchor var")
    }

    /// Exactly one anchor per slot (order encoding), with consecutive slots of
    /// one type ordered by anchor index.
    fn encode_anchors(&mut self) {
        let n = self.slot_count();
        let m = self.anchor_ids.len();
        let mut prev_order: Option<Vec<Var>> = None;
        for slot in 0..n {
            let ps: Vec<Var> = (0..m)
                .map(|a| {
                    self.pb
                        .get_or_insert(&mut self.solver, slot, Template::Anchor(self.anchor_ids[a]))
                        .0
                })
                .collect();
            if m == 1 {
                self.solver.add_clause(&[ps[0].pos()]);
                prev_order = Some(Vec::new());
                continue;
            }
            // g[a - 1] <=> anchor index >= a, for a in 1..m.
            let g: Vec<Var> = (1..m).map(|_| self.solver.new_var()).collect();
            for a in 1..g.len() {
                self.solver.add_clause(&[g[a].neg(), g[a - 1].pos()]);
            }
            let ge = |a: usize| -> Option<Lit> { (a >= 1 && a < m).then(|| g[a - 1].pos()) };
            for a in 0..m {
                let lower = ge(a);
                let upper = ge(a + 1);
                if let Some(lo) = lower {
                    self.solver.add_clause(&[ps[a].neg(), lo]);
                }
                if let Some(up) = upper {
                    self.solver.add_clause(&[ps[a].neg(), !up]);
                }
                let mut back = vec![ps[a].pos()];
                if let Some(lo) = lower {
                    back.push(!lo);
                }
                if let Some(up) = upper {
                    back.push(up);
                }
                self.solver.add_clause(&back);
            }
            let same_type = slot > 0 && self.inst.slot_types[slot] == self.inst.slot_types[slot - 1];
            if let (true, Some(prev)) = (same_type, &prev_order) {
                for (a, gp) in prev.iter().enumerate() {
                    self.solver.add_clause(&[gp.neg(), g[a].pos()]);
                }
            }
            prev_order = Some(g);
        }
    }

    /// `b^v`: each slot lies outside every obstacle near the allowed cells,
    /// via one of the four face selectors. The anchor fixes which face.
    fn encode_placement(&mut self) {
        let region = &self.inst.region;
        let (mut c0, mut c1, mut r0, mut r1) = (usize::MAX, 0, usize::MAX, 0);
        for a in &self.inst.anchors {
            c0 = c0.min(a.col.saturating_sub(1));
            c1 = c1.max((a.col + 1).min(region.width() - 1));
            r0 = r0.min(a.row.saturating_sub(1));
            r1 = r1.max((a.row + 1).min(region.height() - 1));
        }
        let obstacles: Vec<u32> = (r0..=r1)
            .flat_map(|r| (c0..=c1).map(move |c| Cell::new(c, r)))
            .filter(|&c| region.is_occupied(c))
            .map(|c| region.index(c) as u32)
            .collect();
        for slot in 0..self.slot_count() {
            for &o in &obstacles {
                let bv = self.solver.new_var();
                self.solver.add_clause(&[bv.pos()]);
                let faces: Vec<Var> = (0..4u8)
                    .map(|f| {
                        self.pb
                            .get_or_insert(&mut self.solver, slot, Template::Face { obstacle: o, face: f })
                            .0
                    })
                    .collect();
                let mut clause = vec![bv.neg()];
                clause.extend(faces.iter().map(|v| v.pos()));
                self.solver.add_clause(&clause);
                let orect = self.obstacle_rect(o);
                for a in 0..self.anchor_ids.len() {
                    let b = self.anchor_boxes[a];
                    let gaps = [
                        orect.x_min - b.x_max,
                        b.x_min - orect.x_max,
                        orect.y_min - b.y_max,
                        b.y_min - orect.y_max,
                    ];
                    let face = (0..4)
                        .max_by(|&x, &y| gaps[x].total_cmp(&gaps[y]).then(y.cmp(&x)))
                        .unwrap();
                    let p = self.anchor_var(slot, a);
                    self.solver.add_clause(&[p.neg(), faces[face].pos()]);
                }
            }
        }
    }

    fn encode_coverage(&mut self) {
        let demands = self.inst.demands.clone();
        for (d, (cell, k)) in demands.iter().enumerate() {
            for (ty, &kt) in k.iter().enumerate() {
                if kt == 0 {
                    continue;
                }
                let slots: Vec<usize> = (0..self.slot_count())
                    .filter(|&s| self.inst.slot_types[s] == ty)
                    .collect();
                let mut us = Vec::with_capacity(slots.len());
                for &slot in &slots {
                    let u = self.cover_cell_var(slot, d, *cell);
                    us.push(u.pos());
                }
                add_at_least(&mut self.solver, &us, kt as usize);
            }
        }
    }

    /// `b^u`: slot covers every corner of the demand cell.
    fn cover_cell_var(&mut self, slot: usize, d: usize, cell: Cell) -> Var {
        if let Some(&v) = self.cover_u[slot].get(&d) {
            return v;
        }
        let u = self.solver.new_var();
        self.cover_u[slot].insert(d, u);
        for (i, j) in [
            (cell.col, cell.row),
            (cell.col + 1, cell.row),
            (cell.col + 1, cell.row + 1),
            (cell.col, cell.row + 1),
        ] {
            let l = self.loc_id(i, j);
            let s = self.cover_loc_var(slot, l);
            self.solver.add_clause(&[u.neg(), s.pos()]);
        }
        u
    }

    /// `b^s`: slot sees location `l` within sensing range.
    fn cover_loc_var(&mut self, slot: usize, l: u32) -> Var {
        let (v, fresh) = self.pb.get_or_insert(&mut self.solver, slot, Template::Cover(l));
        if !fresh {
            return v;
        }
        let ty = self.inst.slot_types[slot];
        let mut reach = vec![v.neg()];
        for a in 0..self.anchor_ids.len() {
            let Some(blockers) = self.blockers(ty, a, l) else {
                continue;
            };
            let p = self.anchor_var(slot, a);
            reach.push(p.pos());
            for (o, sels) in blockers.iter() {
                let bo = self.blocker_var(slot, l, *o);
                self.solver.add_clause(&[p.neg(), v.neg(), bo.pos()]);
                let mut clause = vec![p.neg(), v.neg()];
                for sel in sels {
                    clause.push(self.selector_var(slot, l, *o, *sel).pos());
                }
                self.solver.add_clause(&clause);
            }
        }
        self.solver.add_clause(&reach);
        v
    }

    /// `b^o`: obstacle `o` does not block slot's view of `l`. Implies one of
    /// the selectors valid for the location.
    fn blocker_var(&mut self, slot: usize, l: u32, o: u32) -> Var {
        if let Some(&v) = self.blocker_vars.get(&(slot, l, o)) {
            return v;
        }
        let v = self.solver.new_var();
        self.blocker_vars.insert((slot, l, o), v);
        let mut clause = vec![v.neg()];
        for sel in self.all_selectors(l, o) {
            clause.push(self.selector_var(slot, l, o, sel).pos());
        }
        self.solver.add_clause(&clause);
        v
    }

    fn selector_var(&mut self, slot: usize, l: u32, o: u32, sel: Sel) -> Var {
        let t = match sel {
            Sel::Side(positive) => Template::Side {
                loc: l,
                obstacle: o,
                positive,
            },
            Sel::Face(face) => Template::Face { obstacle: o, face },
        };
        self.pb.get_or_insert(&mut self.solver, slot, t).0
    }

    /// Side selectors unless `l` is a corner of `o`; face selectors whose
    /// closed outer side contains `l`.
    fn all_selectors(&self, l: u32, o: u32) -> Vec<Sel> {
        let (i, j) = self.loc_lattice(l);
        let oc = self.inst.region.cell_at(o as usize);
        let mut out = Vec::new();
        let is_corner = (i == oc.col || i == oc.col + 1) && (j == oc.row || j == oc.row + 1);
        if !is_corner {
            out.push(Sel::Side(true));
            out.push(Sel::Side(false));
        }
        if i <= oc.col {
            out.push(Sel::Face(0));
        }
        if i > oc.col {
            out.push(Sel::Face(1));
        }
        if j <= oc.row {
            out.push(Sel::Face(2));
        }
        if j > oc.row {
            out.push(Sel::Face(3));
        }
        out
    }

    /// `None` when no point of the anchor is within sensing range of `l`.
    fn blockers(&mut self, ty: usize, a: usize, l: u32) -> Option<Blockers> {
        let key = (ty, a, l);
        if let Some(b) = self.reach.get(&key) {
            return b.clone();
        }
        let r = self.inst.specs[ty].sensing_radius;
        let b = self.anchor_boxes[a];
        let lp = self.loc_point(l);
        let result = if b.distance_to(lp) >= r - 2.0 * self.cfg.eps {
            None
        } else {
            let cells = hull_blockers(&self.inst.region, &b, lp);
            let mut list = Vec::with_capacity(cells.len());
            for c in cells {
                let o = self.inst.region.index(c) as u32;
                let sels: Vec<Sel> = self
                    .all_selectors(l, o)
                    .into_iter()
                    .filter(|&s| self.selector_fits(&b, l, o, s))
                    .collect();
                list.push((o, sels));
            }
            Some(Rc::new(list))
        };
        self.reach.insert(key, result.clone());
        result
    }

    /// The selector's (tightened) half-planes leave part of the box.
    fn selector_fits(&self, b: &Rect, l: u32, o: u32, sel: Sel) -> bool {
        let mut poly = b.corners().to_vec();
        let mut cs = Vec::new();
        self.selector_constraints(l, o, sel, 0, &mut cs);
        let margin = self.cfg.strict_margin + self.cfg.eps;
        for c in cs {
            if let ConvexConstraint::HalfPlane { normal, bound, .. } = c {
                poly = clip_half_plane(&poly, normal, bound - margin);
            }
        }
        let cs2 = self.inst.region.cell_size() * self.inst.region.cell_size();
        polygon_area(&poly).abs() > 1e-12 * cs2
    }

    fn selector_constraints(&self, l: u32, o: u32, sel: Sel, sensor: usize, out: &mut Vec<ConvexConstraint>) {
        let orect = self.obstacle_rect(o);
        match sel {
            Sel::Face(f) => out.push(face_constraint(&orect, f, sensor)),
            Sel::Side(positive) => {
                let lp = self.loc_point(l);
                for c in orect.corners() {
                    // cross(c - l, s - l) > 0 for the positive side.
                    let (ux, uy) = (c.x - lp.x, c.y - lp.y);
                    let (a, b) = ([uy, -ux], uy * lp.x - ux * lp.y);
                    let (a, b) = if positive { (a, b) } else { ([-a[0], -a[1]], -b) };
                    out.push(ConvexConstraint::half_plane(sensor, a, b, true));
                }
            }
        }
    }

    /// Convex constraints asserted by template `t` on `sensor` of type `ty`.
    fn template_constraints(&self, t: Template, ty: usize, sensor: usize, out: &mut Vec<ConvexConstraint>) {
        match t {
            Template::Anchor(id) => {
                let r = self.inst.region.cell_rect(self.inst.region.cell_at(id as usize));
                out.push(ConvexConstraint::half_plane(sensor, [-1.0, 0.0], -r.x_min, true));
                out.push(ConvexConstraint::half_plane(sensor, [1.0, 0.0], r.x_max, true));
                out.push(ConvexConstraint::half_plane(sensor, [0.0, -1.0], -r.y_min, true));
                out.push(ConvexConstraint::half_plane(sensor, [0.0, 1.0], r.y_max, true));
            }
            Template::Cover(l) => out.push(ConvexConstraint::ball(
                sensor,
                self.loc_point(l),
                self.inst.specs[ty].sensing_radius,
            )),
            Template::Side {
                loc,
                obstacle,
                positive,
            } => self.selector_constraints(loc, obstacle, Sel::Side(positive), sensor, out),
            Template::Face { obstacle, face } => out.push(face_constraint(&self.obstacle_rect(obstacle), face, sensor)),
            Template::Link(f) => {
                let fs = self.fixed[f as usize];
                let r = self.inst.specs[ty].comm_radius.min(fs.comm_radius);
                out.push(ConvexConstraint::ball(sensor, fs.position, r));
            }
        }
    }

    fn link_radius(&self, i: usize, j: usize) -> f64 {
        let ri = self.inst.specs[self.inst.slot_types[i]].comm_radius;
        let rj = self.inst.specs[self.inst.slot_types[j]].comm_radius;
        ri.min(rj)
    }

    fn encode_connectivity(&mut self) {
        let n = self.slot_count();
        match self.inst.connectivity.clone() {
            Connectivity::None => {}
            Connectivity::Connected => {
                if n < 2 {
                    return;
                }
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let e = self.pb.insert_pair(&mut self.solver, i, j);
                        edges.push((i, j, e.pos()));
                    }
                }
                self.link_allowed_clauses();
                add_reachability(&mut self.solver, n, 0, &edges);
            }
            Connectivity::Stitch(groups) => {
                let m = groups.len();
                if m < 2 {
                    return;
                }
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let e = self.pb.insert_pair(&mut self.solver, i, j);
                        edges.push((i, j, e.pos()));
                    }
                }
                self.link_allowed_clauses();
                let mut f = 0u32;
                for (g, group) in groups.iter().enumerate() {
                    let ids: Vec<u32> = (f..f + group.len() as u32).collect();
                    f += group.len() as u32;
                    for slot in 0..n {
                        let e = self.solver.new_var();
                        let mut clause = vec![e.neg()];
                        for &id in &ids {
                            let (lam, _) = self.pb.get_or_insert(&mut self.solver, slot, Template::Link(id));
                            clause.push(lam.pos());
                            let fs = self.fixed[id as usize];
                            let r = self.inst.specs[self.inst.slot_types[slot]]
                                .comm_radius
                                .min(fs.comm_radius);
                            let mut reach = vec![lam.neg()];
                            for a in 0..self.anchor_ids.len() {
                                if self.anchor_boxes[a].distance_to(fs.position) < r {
                                    reach.push(self.anchor_var(slot, a).pos());
                                }
                            }
                            self.solver.add_clause(&reach);
                        }
                        self.solver.add_clause(&clause);
                        edges.push((slot, n + g, e.pos()));
                    }
                }
                add_reachability(&mut self.solver, n + m, n, &edges);
            }
        }
    }

    /// A link between two slots forces their anchors to be within range.
    /// Skipped when the clause set would be very large.
    fn link_allowed_clauses(&mut self) {
        let n = self.slot_count();
        let m = self.anchor_ids.len();
        let mut near_cache: HashMap<u64, Rc<Vec<Vec<usize>>>> = HashMap::new();
        let mut budget: usize = 4_000_000;
        for i in 0..n {
            for j in i + 1..n {
                let r = self.link_radius(i, j);
                let near = near_cache
                    .entry(r.to_bits())
                    .or_insert_with(|| {
                        Rc::new(
                            (0..m)
                                .map(|a| {
                                    (0..m)
                                        .filter(|&b| rect_gap(&self.anchor_boxes[a], &self.anchor_boxes[b]) < r)
                                        .collect()
                                })
                                .collect(),
                        )
                    })
                    .clone();
                let size: usize = near.iter().map(|v| v.len() + 2).sum::<usize>() * 2;
                if size > budget {
                    return;
                }
                budget -= size;
                let e = self.pb.pair(i, j).expect("pair var");
                for (x, y) in [(i, j), (j, i)] {
                    for (a, list) in near.iter().enumerate() {
                        if list.len() == m {
                            continue;
                        }
                        let mut clause = vec![e.neg(), self.anchor_var(x, a).neg()];
                        clause.extend(list.iter().map(|&b| self.anchor_var(y, b).pos()));
                        self.solver.add_clause(&clause);
                    }
                }
            }
        }
    }

    /// Block template combination `core` on every slot of type `ty`.
    fn learn(&mut self, ty: usize, core: &[Template]) {
        for slot in 0..self.slot_count() {
            if self.inst.slot_types[slot] != ty {
                continue;
            }
            let lits: Option<Vec<Lit>> = core.iter().map(|&t| self.pb.var(slot, t).map(|v| v.neg())).collect();
            if let Some(lits) = lits {
                self.solver.add_clause(&lits);
            }
        }
        self.learned.push((ty, core.to_vec()));
    }
}

fn face_constraint(o: &Rect, face: u8, sensor: usize) -> ConvexConstraint {
    match face {
        0 => ConvexConstraint::half_plane(sensor, [1.0, 0.0], o.x_min, true),
        1 => ConvexConstraint::half_plane(sensor, [-1.0, 0.0], -o.x_max, true),
        2 => ConvexConstraint::half_plane(sensor, [0.0, 1.0], o.y_min, true),
        _ => ConvexConstraint::half_plane(sensor, [0.0, -1.0], -o.y_max, true),
    }
}

fn rect_gap(a: &Rect, b: &Rect) -> f64 {
    let dx = (b.x_min - a.x_max).max(a.x_min - b.x_max).max(0.0);
    let dy = (b.y_min - a.y_max).max(a.y_min - b.y_max).max(0.0);
    dx.hypot(dy)
}

#[derive(Clone, Copy)]
enum Reach {
    True,
    False,
    Lit(Lit),
}

/// Every node reaches `source` in at most `nodes - 1` hops over the edges
/// whose literal is true.
fn add_reachability(solver: &mut Solver, nodes: usize, source: usize, edges: &[(usize, usize, Lit)]) {
    let mut adj: Vec<Vec<(usize, Lit)>> = vec![Vec::new(); nodes];
    for &(u, v, e) in edges {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    let mut prev: Vec<Reach> = (0..nodes)
        .map(|v| if v == source { Reach::True } else { Reach::False })
        .collect();
    for _ in 1..nodes {
        let mut cur = Vec::with_capacity(nodes);
        for v in 0..nodes {
            if v == source {
                cur.push(Reach::True);
                continue;
            }
            let r = solver.new_var();
            let mut clause = vec![r.neg()];
            if let Reach::Lit(l) = prev[v] {
                clause.push(l);
            }
            for &(u, e) in &adj[v] {
                match prev[u] {
                    Reach::False => {}
                    Reach::True => clause.push(e),
                    Reach::Lit(l) => {
                        let y = solver.new_var();
                        solver.add_clause(&[y.neg(), l]);
                        solver.add_clause(&[y.neg(), e]);
                        clause.push(y.pos());
                    }
                }
            }
            if matches!(prev[v], Reach::True) {
                cur.push(Reach::True);
                continue;
            }
            solver.add_clause(&clause);
            cur.push(Reach::Lit(r.pos()));
        }
        prev = cur;
    }
    for (v, r) in prev.iter().enumerate() {
        match r {
            Reach::True => {}
            Reach::False => {
                debug_assert!(v != source);
                solver.add_clause(&[]);
            }
            Reach::Lit(l) => {
                solver.add_clause(&[*l]);
            }
        }
    }
}
