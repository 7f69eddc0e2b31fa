use std::time::Duration;

use thiserror::Error;

use crate::geometry::Cell;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("grid must have at least one row and one column")]
    EmptyGrid,
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("occupancy map has {found} entries, expected {expected}")]
    OccupancyLength { expected: usize, found: usize },
    #[error("cell {0:?} lies outside the region")]
    CellOutOfBounds(Cell),
    #[error("polygon {0} has fewer than three vertices")]
    DegeneratePolygon(usize),
    #[error("non-finite coordinate")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    /// Terminal supernodes (component ids) that cannot reach the first
    /// terminal through the connectivity graph.
    #[error("connectivity repair infeasible: components {unreachable:?} cannot reach component {anchor}")]
    InfeasibleRepair { anchor: usize, unreachable: Vec<usize> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoveringError {
    #[error("cell {cell:?} (type {type_id}) has demand {demand} but no cell can cover it")]
    Uncoverable { cell: Cell, type_id: usize, demand: u32 },
    #[error("best placement found uses {needed} sensors, above the budget {budget}")]
    OverBudget { needed: u32, budget: u32 },
    #[error(transparent)]
    Repair(#[from] GraphError),
    #[error("placement is empty")]
    EmptyPlacement,
    #[error("instance has {0} open cells; exhaustive checking is capped at {1}")]
    TooLargeForEnumeration(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmcError {
    #[error("no placement with {0} sensors exists")]
    Infeasible(usize),
    #[error("timed out after {elapsed:?} ({iterations} refinement iterations)")]
    Timeout { elapsed: Duration, iterations: usize },
    #[error("invalid problem: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("sub-area {index} infeasible: {reason}")]
    SubAreaInfeasible { index: usize, reason: String },
    #[error("could not connect components {components:?}")]
    StitchingInfeasible { components: Vec<usize> },
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Smc(#[from] SmcError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: unexpected character {found:?}")]
    UnknownChar { line: usize, column: usize, found: char },
    #[error("line {line}: row has {found} cells, expected {expected}")]
    RaggedRow { line: usize, expected: usize, found: usize },
    #[error("map is empty")]
    Empty,
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("region has no occupied cells; dispersion is undefined")]
    UndefinedGamma,
    #[error("generation failed after {attempts} attempts (achieved extent {extent:.3}, gamma {gamma:.2})")]
    GenerationFailed { attempts: usize, extent: f64, gamma: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
