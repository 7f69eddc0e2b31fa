use serde::{Deserialize, Serialize};

use crate::geometry::{Point, SensorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Primary,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeployedSensor {
    pub position: Point,
    pub type_id: usize,
    pub role: Role,
}

impl DeployedSensor {
    pub fn new(position: Point, type_id: usize, role: Role) -> Self {
        DeployedSensor {
            position,
            type_id,
            role,
        }
    }
}

/// Sensors at continuous positions. Integer cell placements are converted
/// by putting each sensor at its cell center.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub sensors: Vec<DeployedSensor>,
}

impl Placement {
    pub fn new(sensors: Vec<DeployedSensor>) -> Self {
        Placement { sensors }
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn relay_count(&self) -> usize {
        self.sensors.iter().filter(|s| s.role == Role::Relay).count()
    }

    pub fn extend(&mut self, other: &Placement) {
        self.sensors.extend_from_slice(&other.sensors);
    }
}

/// Spec for a type id. Specs are indexed by their type id.
pub fn spec_for(specs: &[SensorSpec], type_id: usize) -> Option<&SensorSpec> {
    specs.get(type_id).filter(|s| s.type_id == type_id)
}
