//! Integer k-cover over the visibility graph: problem construction,
//! branch-and-bound with LP bounds, Steiner connectivity repair, the
//! diagonal-dominance connectivity system and the method-selection table.

mod bnb;
mod dd;
pub mod simplex;

use serde::{Deserialize, Serialize};

pub use bnb::{greedy_cover, solve_covering, CoveringSolution};
pub use dd::{
    check_dd_exhaustive, dd_connectivity_encoding, DdCheck, DdSystem, DdVar, LinearConstraint, Sense,
    DD_ENUMERATION_CAP,
};

use crate::error::CoveringError;
use crate::geometry::{Cell, GridRegion, SensorSpec};
use crate::graphs::{build_visibility_graph, collapse, steiner_repair, CellGraph};
use crate::placement::{DeployedSensor, Placement, Role};

/// Per-type covering program over the open cells of a region:
/// `min sum n[t][j]` s.t. `sum_{j in N_t(i)} n[t][j] >= k[t][i]`.
#[derive(Debug, Clone)]
pub struct CoveringProblem {
    cells: Vec<Cell>,
    /// `[type][vertex]`: vertices whose sensors cover the vertex.
    neighborhoods: Vec<Vec<Vec<usize>>>,
    /// `[type][vertex]`: vertices the vertex's sensors cover.
    covers: Vec<Vec<Vec<usize>>>,
    demands: Vec<Vec<u32>>,
    budget: u32,
}

impl CoveringProblem {
    /// Build with one visibility graph per type over the whole region and
    /// demand `k[t]` on every open cell.
    pub fn for_region(
        region: &GridRegion,
        specs: &[SensorSpec],
        k: &[u32],
        budget: u32,
    ) -> Result<Self, CoveringError> {
        let graphs: Vec<CellGraph> = specs
            .iter()
            .map(|s| build_visibility_graph(region, s.sensing_radius))
            .collect();
        let n = region.open_count();
        let demands: Vec<Vec<u32>> = k.iter().map(|&kt| vec![kt; n]).collect();
        build_covering(&graphs, &demands, budget)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn type_count(&self) -> usize {
        self.demands.len()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn neighborhood(&self, type_id: usize, v: usize) -> &[usize] {
        &self.neighborhoods[type_id][v]
    }

    pub fn demands(&self, type_id: usize) -> &[u32] {
        &self.demands[type_id]
    }

    /// Whether `counts[t][j]` meets every demand.
    pub fn is_satisfied_by(&self, counts: &[Vec<u32>]) -> bool {
        (0..self.type_count()).all(|t| {
            deficits(&self.neighborhoods[t], &self.demands[t], &counts[t])
                .iter()
                .all(|&d| d == 0)
        })
    }
}

/// Remaining demand per vertex under `counts`.
fn deficits(nb: &[Vec<usize>], demand: &[u32], counts: &[u32]) -> Vec<u32> {
    nb.iter()
        .zip(demand)
        .map(|(n, &k)| {
            let got: u32 = n.iter().map(|&j| counts[j]).sum();
            k.saturating_sub(got)
        })
        .collect()
}

/// Covering program from per-type visibility graphs over the same open
/// cells and per-type, per-vertex demands. Fails on the first cell with a
/// positive demand that no cell can cover.
pub fn build_covering(
    graphs: &[CellGraph],
    demands: &[Vec<u32>],
    budget: u32,
) -> Result<CoveringProblem, CoveringError> {
    assert_eq!(graphs.len(), demands.len(), "one graph per demand vector");
    let cells = graphs.first().map(|g| g.cells().to_vec()).unwrap_or_default();
    let mut neighborhoods = Vec::with_capacity(graphs.len());
    let mut covers = Vec::with_capacity(graphs.len());
    for (t, (g, d)) in graphs.iter().zip(demands).enumerate() {
        assert_eq!(g.cells(), &cells[..], "graphs must share their vertex set");
        assert_eq!(d.len(), cells.len(), "one demand per vertex");
        let nb: Vec<Vec<usize>> = (0..g.len()).map(|v| g.cover_set(v)).collect();
        if let Some(v) = (0..g.len()).find(|&v| d[v] > 0 && nb[v].is_empty()) {
            return Err(CoveringError::Uncoverable {
                cell: cells[v],
                type_id: t,
                demand: d[v],
            });
        }
        let mut cov = vec![Vec::new(); g.len()];
        for (i, n) in nb.iter().enumerate() {
            for &j in n {
                cov[j].push(i);
            }
        }
        neighborhoods.push(nb);
        covers.push(cov);
    }
    Ok(CoveringProblem {
        cells,
        neighborhoods,
        covers,
        demands: demands.to_vec(),
        budget,
    })
}

/// Sensor counts per type and cell, plus relay cells added by repair (one
/// type-0 relay each).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerPlacement {
    pub cells: Vec<Cell>,
    /// `[type][vertex]`.
    pub counts: Vec<Vec<u32>>,
    /// Vertices holding a relay.
    pub relays: Vec<usize>,
}

impl IntegerPlacement {
    pub fn empty(cells: Vec<Cell>, types: usize) -> Self {
        let n = cells.len();
        IntegerPlacement {
            cells,
            counts: vec![vec![0; n]; types],
            relays: Vec::new(),
        }
    }

    pub fn sensor_count(&self) -> usize {
        self.counts.iter().flatten().map(|&c| c as usize).sum()
    }

    pub fn total(&self) -> usize {
        self.sensor_count() + self.relays.len()
    }

    /// Vertices with at least one sensor or relay, ascending.
    pub fn deployed(&self) -> Vec<usize> {
        (0..self.cells.len())
            .filter(|&v| self.counts.iter().any(|c| c[v] > 0) || self.relays.contains(&v))
            .collect()
    }

    /// Continuous placement with every sensor at its cell center.
    pub fn to_placement(&self, region: &GridRegion) -> Placement {
        let mut sensors = Vec::with_capacity(self.total());
        for (t, counts) in self.counts.iter().enumerate() {
            for (v, &c) in counts.iter().enumerate() {
                let p = region.cell_center(self.cells[v]);
                sensors.extend((0..c).map(|_| DeployedSensor::new(p, t, Role::Primary)));
            }
        }
        for &v in &self.relays {
            sensors.push(DeployedSensor::new(region.cell_center(self.cells[v]), 0, Role::Relay));
        }
        Placement::new(sensors)
    }
}

/// Connect the deployed cells: contract the components of the deployed
/// subgraph of `gc`, find a Steiner tree over them and put one type-0 relay
/// on each Steiner cell. Relays only go to cells without sensors.
pub fn connectivity_repair(placement: &IntegerPlacement, gc: &CellGraph) -> Result<IntegerPlacement, CoveringError> {
    if placement.total() == 0 {
        return Err(CoveringError::EmptyPlacement);
    }
    let deployed = placement.deployed();
    let cg = collapse(gc, &deployed);
    let added = steiner_repair(&cg)?;
    let mut out = placement.clone();
    out.relays.extend(added);
    out.relays.sort_unstable();
    Ok(out)
}

/// Default open-cell threshold for the method table.
pub const DEFAULT_CHI: usize = 1200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smc,
    Milp,
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Recommendation {
    pub method: Method,
    /// 1-based row of the selection table.
    pub row: usize,
    pub rule: &'static str,
}

/// Method-selection table keyed by obstacle extent (fraction), dispersion
/// `gamma`, radius ratio `beta` and the open-cell count against `chi`.
pub fn select_method(extent: f64, gamma: f64, beta: f64, open_cells: usize, chi: usize) -> Recommendation {
    let rec = |method, row, rule| Recommendation { method, row, rule };
    let small = open_cells <= chi;
    if beta > 1.0 {
        return if gamma > 3.0 {
            rec(Method::Milp, 1, "extent any, gamma > 3, beta > 1: MILP")
        } else {
            rec(Method::Smc, 2, "extent any, gamma <= 3, beta > 1: SMC")
        };
    }
    if extent < 0.15 {
        rec(Method::Smc, 3, "extent < 15%, gamma any, beta <= 1: SMC")
    } else if extent <= 0.25 {
        if gamma > 3.0 {
            if small {
                rec(
                    Method::Either,
                    4,
                    "15% <= extent <= 25%, gamma > 3, beta <= 1, |O| <= chi: MILP or SMC",
                )
            } else {
                rec(
                    Method::Smc,
                    4,
                    "15% <= extent <= 25%, gamma > 3, beta <= 1, |O| > chi: SMC",
                )
            }
        } else {
            rec(Method::Smc, 5, "15% <= extent <= 25%, gamma <= 3, beta <= 1: SMC")
        }
    } else {
        rec(Method::Smc, 6, "extent > 25%, gamma any, beta <= 1: SMC")
    }
}

#[cfg(test)]
mod tests;
