//! Problem data model, validation and file I/O.
//!
//! Instance files carry distances in km and energy quantities in kWh. The
//! loader keeps those raw values (so save/load round-trips exactly) and the
//! accessors expose the canonical units used by every computation in this
//! crate: hours for distance and km-equivalent range units for energy, where
//! one unit is the energy needed to drive one km at the lead position.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{all_pairs_shortest, Arc, NetworkError, Node, NodeIdx, RoadNetwork};

/// Global parameters as given in instance files (km / kWh / hours).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Maximum platoon size (L >= 1).
    pub max_platoon_size: usize,
    /// In-vehicle wage for a leading driver, money per hour.
    pub leading_wage_per_hr: f64,
    /// In-vehicle wage for a following driver, money per hour.
    pub following_wage_per_hr: f64,
    /// Idling wage for dwell time at intermediate stops, money per hour.
    pub idle_wage_per_hr: f64,
    /// Cost per platoon restructuring (one extra leader on an arc).
    pub restructuring_cost: f64,
    /// Platoon saving fraction for followers, in [0, 1).
    pub platoon_saving_ratio: f64,
    /// Energy consumption rate at the lead position, kWh per hour.
    pub consumption_kwh_per_hr: f64,
    /// Charging power, kW.
    pub charge_speed_kw: f64,
    /// Battery capacity, kWh.
    pub battery_kwh: f64,
    /// Maximum allowable state of charge, fraction of capacity.
    pub soc_max: f64,
    /// Minimum allowable state of charge, fraction of capacity.
    pub soc_min: f64,
    /// Constant driving speed, km per hour. Used to convert file distances
    /// (km) to the canonical unit (hours) and to define the km-equivalent
    /// energy unit.
    pub speed_kmh: f64,
}

impl Parameters {
    /// kWh needed to drive one km at lead position.
    pub fn kwh_per_km(&self) -> f64 {
        self.consumption_kwh_per_hr / self.speed_kmh
    }

    /// Battery capacity Q in km-equivalent units.
    pub fn battery_units(&self) -> f64 {
        self.battery_kwh / self.kwh_per_km()
    }

    /// Charging speed in km-equivalent units per hour.
    pub fn charge_units_per_hr(&self) -> f64 {
        self.charge_speed_kw / self.kwh_per_km()
    }

    /// Consumption rate sigma in units per hour; identically the speed under
    /// the km-equivalent convention.
    pub fn consumption_units_per_hr(&self) -> f64 {
        self.speed_kmh
    }

    /// Usable energy between a full charge and the SOC floor, in units.
    pub fn usable_units(&self) -> f64 {
        self.battery_units() * (self.soc_max - self.soc_min)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if self.max_platoon_size < 1 {
            return Err(InstanceError::Invalid("max_platoon_size must be >= 1".into()));
        }
        if !(self.soc_min >= 0.0 && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(InstanceError::SocBounds { soc_min: self.soc_min, soc_max: self.soc_max });
        }
        if !(0.0..1.0).contains(&self.platoon_saving_ratio) {
            return Err(InstanceError::Invalid("platoon_saving_ratio must be in [0,1)".into()));
        }
        if self.leading_wage_per_hr < self.following_wage_per_hr
            || self.following_wage_per_hr < 0.0
        {
            return Err(InstanceError::Invalid(
                "wages must satisfy leading >= following >= 0".into(),
            ));
        }
        if self.idle_wage_per_hr < 0.0 || self.restructuring_cost < 0.0 {
            return Err(InstanceError::Invalid("cost rates must be non-negative".into()));
        }
        for (name, v) in [
            ("consumption_kwh_per_hr", self.consumption_kwh_per_hr),
            ("charge_speed_kw", self.charge_speed_kw),
            ("battery_kwh", self.battery_kwh),
            ("speed_kmh", self.speed_kmh),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(InstanceError::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// One delivery demand: a truck driving origin -> destination before a
/// deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct TruckDelivery {
    pub id: String,
    pub origin: NodeIdx,
    pub destination: NodeIdx,
    /// Latest arrival time at the destination, hours.
    pub latest_arrival_hr: f64,
}

/// Index of a truck inside an [`Instance`].
pub type TruckIdx = usize;

#[derive(Debug, Clone)]
pub struct Instance {
    pub network: RoadNetwork,
    pub params: Parameters,
    pub trucks: Vec<TruckDelivery>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("network error: {0}")]
    Network(#[from] NetworkError),
    #[error("dangling node reference {0:?}")]
    DanglingNode(String),
    #[error("soc bounds invalid: soc_min={soc_min} soc_max={soc_max}")]
    SocBounds { soc_min: f64, soc_max: f64 },
    #[error("truck {truck:?}: origin equals destination")]
    DegenerateTrip { truck: String },
    #[error("truck {truck:?}: latest arrival {deadline}h earlier than shortest travel time {sp}h")]
    UnreachableDeadline { truck: String, deadline: f64, sp: f64 },
    #[error("truck {truck:?}: destination {node:?} has no charging price")]
    DestinationWithoutPrice { truck: String, node: String },
    #[error("duplicate truck id {0:?}")]
    DuplicateTruck(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// File schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct NodeFile {
    id: String,
    #[serde(default)]
    charger: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_per_kwh: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArcFile {
    from: String,
    to: String,
    km: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TruckFile {
    id: String,
    origin: String,
    destination: String,
    latest_arrival_hr: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    nodes: Vec<NodeFile>,
    arcs: Vec<ArcFile>,
    params: Parameters,
    trucks: Vec<TruckFile>,
}

impl Instance {
    pub fn new(
        network: RoadNetwork,
        params: Parameters,
        trucks: Vec<TruckDelivery>,
    ) -> Result<Self, InstanceError> {
        params.validate()?;
        let inst = Self { network, params, trucks };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let mut seen = std::collections::HashSet::new();
        let sp = all_pairs_shortest(&self.network);
        for t in &self.trucks {
            if !seen.insert(t.id.clone()) {
                return Err(InstanceError::DuplicateTruck(t.id.clone()));
            }
            if t.origin >= self.network.node_count() || t.destination >= self.network.node_count()
            {
                return Err(InstanceError::DanglingNode(t.id.clone()));
            }
            if t.origin == t.destination {
                return Err(InstanceError::DegenerateTrip { truck: t.id.clone() });
            }
            let d = sp.get(t.origin, t.destination);
            if !d.is_finite() || t.latest_arrival_hr + 1e-9 < d {
                return Err(InstanceError::UnreachableDeadline {
                    truck: t.id.clone(),
                    deadline: t.latest_arrival_hr,
                    sp: d,
                });
            }
            // Destinations are always charging-capable; the price must be
            // stated explicitly per node.
            if self.network.node(t.destination).price_per_kwh.is_none() {
                return Err(InstanceError::DestinationWithoutPrice {
                    truck: t.id.clone(),
                    node: self.network.node(t.destination).id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Whether `truck` may charge at `node`: any charger node, plus the
    /// truck's own destination.
    pub fn can_charge(&self, truck: TruckIdx, node: NodeIdx) -> bool {
        self.network.node(node).has_charger || self.trucks[truck].destination == node
    }

    /// Charging price in money per km-equivalent unit at `node`.
    pub fn unit_price(&self, node: NodeIdx) -> f64 {
        self.network.node(node).price_per_kwh.unwrap_or(0.0) * self.params.kwh_per_km()
    }

    pub fn truck_index(&self, id: &str) -> Option<TruckIdx> {
        self.trucks.iter().position(|t| t.id == id)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        let nodes: Vec<Node> = file
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id.clone(),
                has_charger: n.charger,
                price_per_kwh: n.price_per_kwh,
            })
            .collect();
        let mut arcs = Vec::with_capacity(file.arcs.len());
        let lookup = |id: &str| -> Result<NodeIdx, InstanceError> {
            nodes
                .iter()
                .position(|n| n.id == id)
                .ok_or_else(|| InstanceError::DanglingNode(id.to_string()))
        };
        for a in &file.arcs {
            arcs.push(Arc {
                tail: lookup(&a.from)?,
                head: lookup(&a.to)?,
                travel_hours: a.km / file.params.speed_kmh,
            });
        }
        let network = RoadNetwork::new(nodes, arcs)?;
        let trucks = file
            .trucks
            .iter()
            .map(|t| {
                Ok(TruckDelivery {
                    id: t.id.clone(),
                    origin: network
                        .node_index(&t.origin)
                        .ok_or_else(|| InstanceError::DanglingNode(t.origin.clone()))?,
                    destination: network
                        .node_index(&t.destination)
                        .ok_or_else(|| InstanceError::DanglingNode(t.destination.clone()))?,
                    latest_arrival_hr: t.latest_arrival_hr,
                })
            })
            .collect::<Result<Vec<_>, InstanceError>>()?;
        Instance::new(network, file.params, trucks)
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            nodes: self
                .network
                .nodes()
                .iter()
                .map(|n| NodeFile {
                    id: n.id.clone(),
                    charger: n.has_charger,
                    price_per_kwh: n.price_per_kwh,
                })
                .collect(),
            arcs: self
                .network
                .arcs()
                .iter()
                .map(|a| ArcFile {
                    from: self.network.node(a.tail).id.clone(),
                    to: self.network.node(a.head).id.clone(),
                    km: a.travel_hours * self.params.speed_kmh,
                })
                .collect(),
            params: self.params.clone(),
            trucks: self
                .trucks
                .iter()
                .map(|t| TruckFile {
                    id: t.id.clone(),
                    origin: self.network.node(t.origin).id.clone(),
                    destination: self.network.node(t.destination).id.clone(),
                    latest_arrival_hr: t.latest_arrival_hr,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Baseline medium-duty parameters: 135 kWh battery with 340 km range,
/// 100 kW charging, 100 km/h travel, wages 30/15/5, platoon size 4.
pub fn default_parameters() -> Parameters {
    Parameters {
        max_platoon_size: 4,
        leading_wage_per_hr: 30.0,
        following_wage_per_hr: 15.0,
        idle_wage_per_hr: 5.0,
        restructuring_cost: 0.0,
        platoon_saving_ratio: 0.1,
        consumption_kwh_per_hr: 100.0 * 135.0 / 340.0,
        charge_speed_kw: 100.0,
        battery_kwh: 135.0,
        soc_max: 1.0,
        soc_min: 0.0,
        speed_kmh: 100.0,
    }
}
