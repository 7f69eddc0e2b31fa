//! Two-level synthesis: per-sub-area coverage with incremental coverage
//! repair, then connectivity stitching across sub-areas.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use crate::eval::coverage_counts;

use crate::covering::{build_covering, connectivity_repair, solve_covering, IntegerPlacement};
use crate::error::{CoveringError, GraphError, SmcError, SynthesisError};
use crate::eval::component_labels;
use crate::geometry::{Cell, GridRegion, Point, SensorSpec};
use crate::graphs::{build_connectivity_graph, build_visibility_graph, collapse, steiner_repair, CellGraph};
use crate::par;
use crate::placement::{DeployedSensor, Placement, Role};
use crate::smc::{allocate, binary_search_min_n, binary_search_with, Connectivity, FixedSensor, SmcInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubArea {
    pub index: usize,
    /// Lower-left cell.
    pub col: usize,
    pub row: usize,
    pub width: usize,
    pub height: usize,
}

impl SubArea {
    pub fn contains(&self, c: Cell) -> bool {
        c.col >= self.col && c.col < self.col + self.width && c.row >= self.row && c.row < self.row + self.height
    }

    /// Region-local cell of a global cell inside the sub-area.
    pub fn local(&self, c: Cell) -> Cell {
        Cell::new(c.col - self.col, c.row - self.row)
    }

    pub fn global(&self, c: Cell) -> Cell {
        Cell::new(c.col + self.col, c.row + self.row)
    }

    /// The sub-area as a region of its own with the same cell size.
    pub fn extract(&self, region: &GridRegion) -> GridRegion {
        let mut occ = Vec::with_capacity(self.width * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                occ.push(region.is_occupied(self.global(Cell::new(c, r))));
            }
        }
        GridRegion::new(self.width, self.height, region.cell_size(), occ).expect("sub-area of a valid region")
    }

    fn shift(&self, p: &Placement, cell_size: f64) -> Placement {
        let dx = self.col as f64 * cell_size;
        let dy = self.row as f64 * cell_size;
        Placement::new(
            p.sensors
                .iter()
                .map(|s| DeployedSensor::new(Point::new(s.position.x + dx, s.position.y + dy), s.type_id, s.role))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub sub_w: usize,
    pub sub_h: usize,
    pub areas: Vec<SubArea>,
}

/// Row-major tiling by `sub_w x sub_h` rectangles; the last column and row
/// of rectangles are cut at the region boundary.
pub fn partition(region: &GridRegion, sub_w: usize, sub_h: usize) -> Partition {
    let (sw, sh) = (sub_w.max(1), sub_h.max(1));
    let mut areas = Vec::new();
    for row in (0..region.height()).step_by(sh) {
        for col in (0..region.width()).step_by(sw) {
            areas.push(SubArea {
                index: areas.len(),
                col,
                row,
                width: sw.min(region.width() - col),
                height: sh.min(region.height() - row),
            });
        }
    }
    Partition {
        sub_w: sw,
        sub_h: sh,
        areas,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisMethod {
    Smc,
    Milp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConfig {
    pub sub_w: usize,
    pub sub_h: usize,
    /// Pass 1 covers once, pass 2 adds only the missing coverage. When off,
    /// every sub-area is solved for the full demand on its own.
    pub coverage_repair: bool,
    /// SMC only: require each sub-area network to be connected as well.
    pub smc_connectivity: bool,
    pub time_budget: Duration,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            sub_w: 10,
            sub_h: 10,
            coverage_repair: true,
            smc_connectivity: false,
            time_budget: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutcome {
    pub placement: Placement,
    pub sub_areas: usize,
    pub relays_added: usize,
    /// The sensor count is a proven minimum for the flat problem (for MILP:
    /// of the coverage program before repair). Never set when partitioned.
    pub proven_minimal: bool,
    /// Some solve ran out of time and kept a cell-center cover or a Steiner
    /// stitch instead.
    pub fallback: bool,
    pub elapsed: Duration,
}

/// Smallest communication radius over the types; relays use type 0, and a
/// link holds iff the distance is within both radii.
fn link_radius(specs: &[SensorSpec]) -> f64 {
    specs.iter().map(|s| s.comm_radius).fold(f64::INFINITY, f64::min)
}

fn visibility_graphs(region: &GridRegion, specs: &[SensorSpec]) -> Vec<CellGraph> {
    specs
        .iter()
        .map(|s| build_visibility_graph(region, s.sensing_radius))
        .collect()
}

fn cover_at_centers(
    region: &GridRegion,
    specs: &[SensorSpec],
    demands: &[Vec<u32>],
    budget: Duration,
) -> Result<(IntegerPlacement, bool), CoveringError> {
    let problem = build_covering(&visibility_graphs(region, specs), demands, u32::MAX)?;
    let sol = solve_covering(&problem, budget)?;
    Ok((sol.placement, sol.optimal))
}

fn uniform(region: &GridRegion, k: &[u32]) -> Vec<Vec<u32>> {
    let n = region.open_count();
    k.iter().map(|&kt| vec![kt; n]).collect()
}

/// Whole-region synthesis with full demand and connectivity.
pub fn flat_synthesize(
    region: &GridRegion,
    method: SynthesisMethod,
    specs: &[SensorSpec],
    k: &[u32],
    budget: Duration,
) -> Result<SynthesisOutcome, SynthesisError> {
    let start = Instant::now();
    let done = |placement: Placement, proven_minimal, fallback| SynthesisOutcome {
        relays_added: placement.relay_count(),
        placement,
        sub_areas: 1,
        proven_minimal,
        fallback,
        elapsed: start.elapsed(),
    };
    if k.iter().all(|&x| x == 0) || region.open_count() == 0 {
        return Ok(done(Placement::default(), true, false));
    }
    let gc = build_connectivity_graph(region, link_radius(specs));
    match method {
        SynthesisMethod::Milp => {
            let (cover, optimal) = cover_at_centers(region, specs, &uniform(region, k), budget)?;
            let repaired = connectivity_repair(&cover, &gc)?;
            Ok(done(repaired.to_placement(region), optimal, false))
        }
        SynthesisMethod::Smc => {
            // A repaired cell-center cover is a valid solution, which bounds
            // the search from above.
            let (cover, _) = cover_at_centers(region, specs, &uniform(region, k), Duration::ZERO)?;
            let seed = connectivity_repair(&cover, &gc).ok();
            let n_max = seed
                .as_ref()
                .map_or(region.open_count() * (k.iter().sum::<u32>() as usize + 1), |s| {
                    s.total()
                });
            match binary_search_min_n(region, specs, k, n_max, budget) {
                Ok(o) => Ok(done(o.placement, o.proven_minimal, false)),
                Err(SmcError::Timeout { .. }) if seed.is_some() => {
                    Ok(done(seed.expect("checked").to_placement(region), false, true))
                }
                Err(SmcError::Timeout { .. }) => Err(SynthesisError::Timeout(start.elapsed())),
                Err(e) => Err(e.into()),
            }
        }
    }
}

/// Coverage-only (or, with `connected`, connected) solve of one sub-area
/// for per-type, per-vertex demands. Returns the local placement and
/// whether it fell back to the cell-center cover.
fn solve_sub_area(
    method: SynthesisMethod,
    sub: &GridRegion,
    specs: &[SensorSpec],
    demands: &[Vec<u32>],
    connected: bool,
    budget: Duration,
) -> Result<(Placement, bool), String> {
    if demands.iter().flatten().all(|&d| d == 0) {
        return Ok((Placement::default(), false));
    }
    match method {
        SynthesisMethod::Milp => {
            let (cover, _) = cover_at_centers(sub, specs, demands, budget).map_err(|e| e.to_string())?;
            Ok((cover.to_placement(sub), false))
        }
        SynthesisMethod::Smc => {
            let (cover, _) = cover_at_centers(sub, specs, demands, Duration::ZERO).map_err(|e| e.to_string())?;
            let cells = sub.open_cells();
            let seed = if connected {
                let gc = build_connectivity_graph(sub, link_radius(specs));
                connectivity_repair(&cover, &gc).ok()
            } else {
                Some(cover)
            };
            let n_max = seed.as_ref().map_or(cells.len() * 2 + 1, |s| s.total());
            let peak: Vec<u32> = demands.iter().map(|d| d.iter().copied().max().unwrap_or(0)).collect();
            let lower = (peak.iter().sum::<u32>() as usize).max(1);
            let demand_list: Vec<(Cell, Vec<u32>)> = cells
                .iter()
                .enumerate()
                .filter(|&(v, _)| demands.iter().any(|d| d[v] > 0))
                .map(|(v, &c)| (c, demands.iter().map(|d| d[v]).collect()))
                .collect();
            let make = |n: usize| {
                allocate(n, &peak).map(|counts| SmcInstance {
                    region: sub.clone(),
                    specs: specs.to_vec(),
                    slot_types: counts
                        .iter()
                        .enumerate()
                        .flat_map(|(t, &c)| std::iter::repeat_n(t, c))
                        .collect(),
                    demands: demand_list.clone(),
                    anchors: cells.clone(),
                    connectivity: if connected {
                        Connectivity::Connected
                    } else {
                        Connectivity::None
                    },
                })
            };
            match binary_search_with(make, lower, n_max.max(lower), budget) {
                Ok(o) => Ok((o.placement, false)),
                Err(SmcError::Timeout { .. }) => match seed {
                    Some(s) => Ok((s.to_placement(sub), true)),
                    None => Err("timed out".into()),
                },
                Err(e) => Err(e.to_string()),
            }
        }
    }
}

/// Relays at cell centers on a Steiner tree joining the components of the
/// cells holding sensors.
fn steiner_stitch(
    region: &GridRegion,
    specs: &[SensorSpec],
    placement: &Placement,
) -> Result<Placement, SynthesisError> {
    let gc = build_connectivity_graph(region, link_radius(specs));
    let mut deployed: Vec<usize> = placement
        .sensors
        .iter()
        .filter_map(|s| region.cell_of(s.position).and_then(|c| gc.vertex(region, c)))
        .collect();
    deployed.sort_unstable();
    deployed.dedup();
    let cg = collapse(&gc, &deployed);
    let relays = steiner_repair(&cg).map_err(|e| match e {
        GraphError::InfeasibleRepair { unreachable, .. } => SynthesisError::StitchingInfeasible {
            components: unreachable,
        },
    })?;
    Ok(Placement::new(
        relays
            .into_iter()
            .map(|v| DeployedSensor::new(region.cell_center(gc.cell(v)), 0, Role::Relay))
            .collect(),
    ))
}

/// Relays at continuous positions from a stitching instance whose fixed
/// groups are the current components. The relay budget starts at one less
/// than the component count and doubles up to four times that.
fn smc_stitch(
    region: &GridRegion,
    specs: &[SensorSpec],
    placement: &Placement,
    labels: &[usize],
    budget: Duration,
) -> Result<Option<Placement>, SmcError> {
    let m = labels.iter().max().map_or(0, |&x| x + 1);
    let mut groups: Vec<Vec<FixedSensor>> = vec![Vec::new(); m];
    for (s, &l) in placement.sensors.iter().zip(labels) {
        groups[l].push(FixedSensor {
            position: s.position,
            comm_radius: specs[s.type_id].comm_radius,
        });
    }
    let anchors = region.open_cells();
    let start = Instant::now();
    let mut lower = 1;
    let rounds = [m - 1, 2 * (m - 1), 4 * (m - 1)];
    for (r, &cap) in rounds.iter().enumerate() {
        let slice = budget.saturating_sub(start.elapsed()) / (rounds.len() - r) as u32;
        let make = |n: usize| {
            Some(SmcInstance {
                region: region.clone(),
                specs: specs.to_vec(),
                slot_types: vec![0; n],
                demands: Vec::new(),
                anchors: anchors.clone(),
                connectivity: Connectivity::Stitch(groups.clone()),
            })
        };
        match binary_search_with(make, lower, cap, slice) {
            Ok(o) => return Ok(Some(o.placement)),
            Err(SmcError::Infeasible(_)) => lower = cap + 1,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Partitioned synthesis. With a single sub-area this is
/// [`flat_synthesize`]. Otherwise: pass 1 covers every sub-area once (or
/// fully, without coverage repair); pass 2 measures the achieved coverage
/// over the whole region with the exact predicates and re-solves each
/// sub-area for the residual demand; finally the components of the combined
/// network are joined by relays (Steiner tree for MILP, a stitching SMC
/// instance for SMC).
pub fn hierarchical_synthesize(
    region: &GridRegion,
    method: SynthesisMethod,
    specs: &[SensorSpec],
    k: &[u32],
    cfg: &HierarchyConfig,
) -> Result<SynthesisOutcome, SynthesisError> {
    let part = partition(region, cfg.sub_w, cfg.sub_h);
    if part.areas.len() == 1 {
        return flat_synthesize(region, method, specs, k, cfg.time_budget);
    }
    let start = Instant::now();
    let cs = region.cell_size();
    let areas: Vec<(SubArea, GridRegion)> = part
        .areas
        .iter()
        .map(|a| (*a, a.extract(region)))
        .filter(|(_, r)| r.open_count() > 0)
        .collect();
    let waves = areas.len().div_ceil(par::threads()).max(1) as u32;
    let phase = |share: f64| cfg.time_budget.mul_f64(share) / waves;
    let mut fallback = false;

    let run = |demand: &(dyn Fn(&SubArea, &GridRegion) -> Vec<Vec<u32>> + Sync), budget: Duration| {
        let results = par::map(&areas, |(a, sub)| {
            let d = demand(a, sub);
            (
                a.index,
                solve_sub_area(method, sub, specs, &d, cfg.smc_connectivity, budget),
            )
        });
        let mut out = Placement::default();
        let mut fell_back = false;
        for ((area, _), (index, r)) in areas.iter().zip(results) {
            let (p, fb) = r.map_err(|reason| SynthesisError::SubAreaInfeasible { index, reason })?;
            fell_back |= fb;
            out.extend(&area.shift(&p, cs));
        }
        Ok::<_, SynthesisError>((out, fell_back))
    };

    let first_k: Vec<u32> = if cfg.coverage_repair {
        k.iter().map(|&x| x.min(1)).collect()
    } else {
        k.to_vec()
    };
    let (mut placement, fb) = run(&|_, sub| uniform(sub, &first_k), phase(0.4))?;
    fallback |= fb;

    if cfg.coverage_repair {
        let achieved = coverage_counts(&placement, region, specs);
        let mut residual = vec![Vec::new(); region.cell_count()];
        for (cell, counts) in achieved {
            residual[region.index(cell)] = k.iter().zip(&counts).map(|(&kt, &c)| kt.saturating_sub(c)).collect();
        }
        let demand = |a: &SubArea, sub: &GridRegion| {
            let cells = sub.open_cells();
            (0..k.len())
                .map(|t| cells.iter().map(|&c| residual[region.index(a.global(c))][t]).collect())
                .collect()
        };
        let (extra, fb) = run(&demand, phase(0.4))?;
        fallback |= fb;
        placement.extend(&extra);
    }

    let labels = component_labels(&placement, specs);
    let components = labels.iter().max().map_or(0, |&x| x + 1);
    let relays = if components <= 1 {
        Placement::default()
    } else {
        let left = cfg.time_budget.saturating_sub(start.elapsed());
        match method {
            SynthesisMethod::Milp => steiner_stitch(region, specs, &placement)?,
            SynthesisMethod::Smc => match smc_stitch(region, specs, &placement, &labels, left) {
                Ok(Some(r)) => r,
                Ok(None) | Err(_) => {
                    fallback = true;
                    steiner_stitch(region, specs, &placement)?
                }
            },
        }
    };
    placement.extend(&relays);
    Ok(SynthesisOutcome {
        relays_added: relays.len(),
        placement,
        sub_areas: part.areas.len(),
        proven_minimal: false,
        fallback,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{coverage_redundancy, verify};

    fn spec(r_s: f64, r_c: f64) -> Vec<SensorSpec> {
        vec![SensorSpec::new(0, r_s, r_c).unwrap()]
    }

    fn cfg(sub: usize, repair: bool, secs: u64) -> HierarchyConfig {
        HierarchyConfig {
            sub_w: sub,
            sub_h: sub,
            coverage_repair: repair,
            smc_connectivity: false,
            time_budget: Duration::from_secs(secs),
        }
    }

    #[test]
    fn partition_examples() {
        let r = GridRegion::open(20, 20, 1.0).unwrap();
        assert_eq!(partition(&r, 10, 10).areas.len(), 4);
        let p = partition(&r, 7, 7);
        assert_eq!(p.areas.len(), 9);
        assert_eq!((p.areas[2].width, p.areas[8].height), (6, 6));
        assert_eq!(partition(&r, 30, 30).areas.len(), 1);
        // Tiles are disjoint and cover the region.
        let mut seen = vec![0; 400];
        for a in &p.areas {
            for row in 0..20 {
                for col in 0..20 {
                    if a.contains(Cell::new(col, row)) {
                        seen[row * 20 + col] += 1;
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn extract_keeps_obstacles() {
        let r = GridRegion::with_obstacles(4, 4, 2.0, &[Cell::new(3, 2)]).unwrap();
        let a = partition(&r, 2, 2).areas[3];
        let sub = a.extract(&r);
        assert!(sub.is_occupied(Cell::new(1, 0)));
        assert_eq!((sub.open_count(), sub.cell_size()), (3, 2.0));
    }

    #[test]
    fn single_area_is_flat() {
        let region = GridRegion::with_obstacles(5, 5, 1.0, &[Cell::new(2, 2)]).unwrap();
        let specs = spec(2.5, 2.5);
        for method in [SynthesisMethod::Milp, SynthesisMethod::Smc] {
            let h = hierarchical_synthesize(&region, method, &specs, &[1], &cfg(10, true, 60)).unwrap();
            let f = flat_synthesize(&region, method, &specs, &[1], Duration::from_secs(60)).unwrap();
            assert_eq!(h.placement, f.placement);
            assert!(verify(&h.placement, &region, &specs, &[1]).passed());
        }
    }

    #[test]
    fn milp_hierarchy_verifies_and_repair_helps() {
        let region = GridRegion::open(12, 12, 1.0).unwrap();
        let specs = spec(2.3, 2.3);
        let with = hierarchical_synthesize(&region, SynthesisMethod::Milp, &specs, &[3], &cfg(6, true, 60)).unwrap();
        let without =
            hierarchical_synthesize(&region, SynthesisMethod::Milp, &specs, &[3], &cfg(6, false, 60)).unwrap();
        for o in [&with, &without] {
            let r = verify(&o.placement, &region, &specs, &[3]);
            assert!(r.passed(), "{:?}", r.uncovered);
        }
        assert!(with.placement.len() <= without.placement.len());
        let a_with = coverage_redundancy(&with.placement, &region, &specs, &[3]);
        let a_without = coverage_redundancy(&without.placement, &region, &specs, &[3]);
        assert!(a_with <= a_without + 1e-12);
    }

    #[test]
    fn smc_hierarchy_verifies() {
        let region = GridRegion::with_obstacles(8, 8, 1.0, &[Cell::new(2, 2), Cell::new(5, 6)]).unwrap();
        let specs = spec(3.0, 3.0);
        let o = hierarchical_synthesize(&region, SynthesisMethod::Smc, &specs, &[2], &cfg(4, true, 120)).unwrap();
        assert_eq!(o.sub_areas, 4);
        let r = verify(&o.placement, &region, &specs, &[2]);
        assert!(r.passed(), "{r:?}");
    }

    /// Two 3x3 rooms joined by a one-cell corridor of length 4.
    fn dumbbell() -> GridRegion {
        let mut occ = Vec::new();
        for col in 3..7 {
            for row in 0..3 {
                if row != 1 {
                    occ.push(Cell::new(col, row));
                }
            }
        }
        GridRegion::with_obstacles(10, 3, 1.0, &occ).unwrap()
    }

    #[test]
    fn dumbbell_needs_relays() {
        // Long sight lines cover the corridor from the rooms; links are short.
        let region = dumbbell();
        let specs = spec(6.0, 2.5);
        for method in [SynthesisMethod::Milp, SynthesisMethod::Smc] {
            let mut c = cfg(5, true, 120);
            c.sub_h = 3;
            let o = hierarchical_synthesize(&region, method, &specs, &[1], &c).unwrap();
            let r = verify(&o.placement, &region, &specs, &[1]);
            assert!(r.passed(), "{method:?}: {r:?}");
            assert!(o.relays_added >= 1);
            assert_eq!(o.placement.relay_count(), o.relays_added);
        }
    }

    #[test]
    fn infeasible_sub_area_is_named() {
        // Sensing radius below the cell diagonal: nothing can be covered.
        let region = GridRegion::open(4, 2, 1.0).unwrap();
        let err = hierarchical_synthesize(&region, SynthesisMethod::Milp, &spec(1.0, 3.0), &[1], &cfg(2, true, 10))
            .unwrap_err();
        assert!(matches!(err, SynthesisError::SubAreaInfeasible { index: 0, .. }));
    }
}
