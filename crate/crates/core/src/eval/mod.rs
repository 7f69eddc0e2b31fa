//! Independent verification of placements using only the exact predicates,
//! the coverage-redundancy metric, and the comparison sweep.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{exact_distance, exact_los, Cell, GridRegion, Point, SensorSpec};
use crate::placement::{spec_for, Placement};

mod sweep;
pub use sweep::{
    classify, mean_ci, sweep, write_csv, MethodSummary, SweepCell, SweepConfig, SweepResult, SweepRow, Verdict,
    COMPARABLE_GAP, Z95,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uncovered {
    pub cell: Cell,
    pub type_id: usize,
    pub achieved: u32,
    pub demanded: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub coverage_ok: bool,
    pub uncovered: Vec<Uncovered>,
    pub connected: bool,
    pub component_count: usize,
    pub placement_ok: bool,
    /// Per open cell (row-major), cover count per type.
    pub per_cell_counts: Vec<(Cell, Vec<u32>)>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.coverage_ok && self.connected && self.placement_ok
    }
}

/// Lattice points `(i, j)` a sensor at `p` covers: within `r` and in sight.
fn covered_corners(p: Point, r: f64, region: &GridRegion) -> Vec<(usize, usize)> {
    let s = region.cell_size();
    let i0 = ((p.x - r) / s).floor().max(0.0) as usize;
    let j0 = ((p.y - r) / s).floor().max(0.0) as usize;
    let i1 = (((p.x + r) / s).ceil().max(0.0) as usize).min(region.width());
    let j1 = (((p.y + r) / s).ceil().max(0.0) as usize).min(region.height());
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let q = region.grid_point(i, j);
            if exact_distance(p, q) <= r && exact_los(p, q, region) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Cover count per open cell (row-major) and type: a sensor covers a cell
/// iff it covers all four corners. Sensors with unknown types are ignored.
pub fn coverage_counts(placement: &Placement, region: &GridRegion, specs: &[SensorSpec]) -> Vec<(Cell, Vec<u32>)> {
    let (w, h) = (region.width(), region.height());
    let types = specs.len();
    let mut counts = vec![vec![0u32; types]; w * h];
    let mut hit = vec![false; (w + 1) * (h + 1)];
    for s in &placement.sensors {
        let Some(spec) = spec_for(specs, s.type_id) else {
            continue;
        };
        let corners = covered_corners(s.position, spec.sensing_radius, region);
        for &(i, j) in &corners {
            hit[j * (w + 1) + i] = true;
        }
        for &(i, j) in &corners {
            // Count each cell once, from its lower-left corner.
            if i < w && j < h {
                let c = Cell::new(i, j);
                let all = [(i + 1, j), (i + 1, j + 1), (i, j + 1)]
                    .iter()
                    .all(|&(a, b)| hit[b * (w + 1) + a]);
                if all && !region.is_occupied(c) {
                    counts[region.index(c)][s.type_id] += 1;
                }
            }
        }
        for &(i, j) in &corners {
            hit[j * (w + 1) + i] = false;
        }
    }
    region
        .open_cells()
        .into_iter()
        .map(|c| (c, counts[region.index(c)].clone()))
        .collect()
}

/// Component label per sensor of the network in which two sensors are
/// linked iff their distance is at most the smaller of their radii. Labels
/// are numbered in order of first appearance.
pub fn component_labels(placement: &Placement, specs: &[SensorSpec]) -> Vec<usize> {
    let n = placement.len();
    let radius: Vec<f64> = placement
        .sensors
        .iter()
        .map(|s| spec_for(specs, s.type_id).map_or(0.0, |sp| sp.comm_radius))
        .collect();
    let mut label = vec![usize::MAX; n];
    let mut comps = 0;
    for root in 0..n {
        if label[root] != usize::MAX {
            continue;
        }
        label[root] = comps;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if label[v] == usize::MAX
                    && exact_distance(placement.sensors[u].position, placement.sensors[v].position)
                        <= radius[u].min(radius[v])
                {
                    label[v] = comps;
                    queue.push_back(v);
                }
            }
        }
        comps += 1;
    }
    label
}

pub fn component_count(placement: &Placement, specs: &[SensorSpec]) -> usize {
    component_labels(placement, specs)
        .into_iter()
        .max()
        .map_or(0, |m| m + 1)
}

/// Check coverage (demand `k[t]` for type `t` on every open cell), network
/// connectivity and that no sensor lies in an obstacle or outside the region.
pub fn verify(placement: &Placement, region: &GridRegion, specs: &[SensorSpec], k: &[u32]) -> VerificationReport {
    let per_cell_counts = coverage_counts(placement, region, specs);
    let mut uncovered = Vec::new();
    for (cell, counts) in &per_cell_counts {
        for (t, &demand) in k.iter().enumerate() {
            let achieved = counts.get(t).copied().unwrap_or(0);
            if achieved < demand {
                uncovered.push(Uncovered {
                    cell: *cell,
                    type_id: t,
                    achieved,
                    demanded: demand,
                });
            }
        }
    }
    let bounds = region.bounds();
    let placement_ok = placement.sensors.iter().all(|s| {
        s.position.is_finite()
            && spec_for(specs, s.type_id).is_some()
            && bounds.contains(s.position)
            && !region.point_in_obstacle(s.position)
    });
    let component_count = component_count(placement, specs);
    VerificationReport {
        coverage_ok: uncovered.is_empty(),
        uncovered,
        connected: component_count <= 1,
        component_count,
        placement_ok,
        per_cell_counts,
    }
}

/// Mean cover count over open cells divided by the demand (summed over
/// types).
pub fn coverage_redundancy(placement: &Placement, region: &GridRegion, specs: &[SensorSpec], k: &[u32]) -> f64 {
    let total_k: u32 = k.iter().sum();
    let counts = coverage_counts(placement, region, specs);
    if counts.is_empty() || total_k == 0 {
        return 0.0;
    }
    let sum: u64 = counts
        .iter()
        .map(|(_, c)| c.iter().take(k.len()).map(|&x| x as u64).sum::<u64>())
        .sum();
    sum as f64 / counts.len() as f64 / total_k as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{DeployedSensor, Role};

    fn spec(r_s: f64, r_c: f64) -> Vec<SensorSpec> {
        vec![SensorSpec::new(0, r_s, r_c).unwrap()]
    }

    fn at(x: f64, y: f64) -> DeployedSensor {
        DeployedSensor::new(Point::new(x, y), 0, Role::Primary)
    }

    #[test]
    fn empty_placement_fails_coverage() {
        let region = GridRegion::open(3, 2, 1.0).unwrap();
        let r = verify(&Placement::default(), &region, &spec(1.0, 1.0), &[1]);
        assert!(!r.coverage_ok);
        assert_eq!(r.uncovered.len(), 6);
        assert!(r.connected && r.placement_ok);
    }

    #[test]
    fn single_sensor_single_cell() {
        let region = GridRegion::open(1, 1, 1.0).unwrap();
        let r = verify(&Placement::new(vec![at(0.5, 0.5)]), &region, &spec(1.0, 1.0), &[1]);
        assert!(r.passed());
        assert_eq!(r.per_cell_counts, vec![(Cell::new(0, 0), vec![1])]);
    }

    #[test]
    fn sensor_in_obstacle_rejected() {
        let region = GridRegion::with_obstacles(2, 1, 1.0, &[Cell::new(1, 0)]).unwrap();
        let r = verify(&Placement::new(vec![at(1.5, 0.5)]), &region, &spec(5.0, 5.0), &[1]);
        assert!(!r.placement_ok);
        let r = verify(&Placement::new(vec![at(3.0, 0.5)]), &region, &spec(5.0, 5.0), &[1]);
        assert!(!r.placement_ok);
    }

    #[test]
    fn components_use_smaller_radius() {
        let specs = vec![
            SensorSpec::new(0, 1.0, 1.0).unwrap(),
            SensorSpec::new(1, 1.0, 3.0).unwrap(),
        ];
        let p = Placement::new(vec![
            DeployedSensor::new(Point::new(0.0, 0.0), 0, Role::Primary),
            DeployedSensor::new(Point::new(2.0, 0.0), 1, Role::Primary),
        ]);
        assert_eq!(component_count(&p, &specs), 2);
        let p = Placement::new(vec![
            DeployedSensor::new(Point::new(0.0, 0.0), 1, Role::Primary),
            DeployedSensor::new(Point::new(2.0, 0.0), 1, Role::Primary),
        ]);
        assert_eq!(component_count(&p, &specs), 1);
    }

    #[test]
    fn hand_counted_three_cells() {
        // 3x1 strip, sensors at the left edge center and the middle center.
        // r_s = 1.2: the left sensor reaches x <= ~1.08 -> only cell 0.
        // The middle sensor at (1.5, 0.5) reaches corners with |dx| <= ~1.08:
        // x = 1, 2 (dx 0.5) yes; x = 0, 3 (dx 1.5) no -> only cell 1.
        let region = GridRegion::open(3, 1, 1.0).unwrap();
        let p = Placement::new(vec![at(0.1, 0.5), at(1.5, 0.5)]);
        let counts = coverage_counts(&p, &region, &spec(1.2, 2.0));
        let flat: Vec<u32> = counts.iter().map(|(_, c)| c[0]).collect();
        assert_eq!(flat, vec![1, 1, 0]);
        let alpha = coverage_redundancy(&p, &region, &spec(1.2, 2.0), &[1]);
        assert!((alpha - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn redundancy_two_when_six_cover_and_k_three() {
        let region = GridRegion::open(2, 2, 1.0).unwrap();
        let p = Placement::new((0..6).map(|_| at(1.0, 1.0)).collect());
        let alpha = coverage_redundancy(&p, &region, &spec(2.0, 2.0), &[3]);
        assert_eq!(alpha, 2.0);
    }

    #[test]
    fn obstacle_blocks_cover() {
        // Sensor left of a wall cannot cover the cell right of it.
        let region = GridRegion::with_obstacles(3, 1, 1.0, &[Cell::new(1, 0)]).unwrap();
        let counts = coverage_counts(&Placement::new(vec![at(0.5, 0.5)]), &region, &spec(10.0, 10.0));
        let flat: Vec<u32> = counts.iter().map(|(_, c)| c[0]).collect();
        assert_eq!(flat, vec![1, 0]);
    }
}
