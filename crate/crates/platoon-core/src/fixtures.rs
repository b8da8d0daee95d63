//! Worked example instances used by tests and the experiment harness.
//!
//! Both networks share the same layout idea: two parallel corridors (one per
//! truck) plus a shared middle corridor that only pays off when trucks
//! platoon on it.
//!
//! ```text
//!   A --250-- S1 --200-- S2 --250-- B
//!    \155                          /155
//!     M0 -100- M1 -100- M2 -100- M3 -100- M4
//!    /155                          \155
//!   C --250-- S3 --200-- S4 --250-- D
//! ```
//!
//! Truck 0 drives A -> B, truck 1 drives C -> D; every interior node hosts a
//! charger. The small-test variant drops M1 and M3 (leaving two 200 km
//! middle links), doubles the price at the M0/M4 junctions and uses the
//! default wage parameters, so balanced leader swapping is required to avoid
//! topping up at the expensive junctions.

use crate::instance::{Instance, Parameters, TruckDelivery};
use crate::network::{Arc, Node, RoadNetwork};
use crate::plan::{Plan, SegmentRecord};

fn road(net: &mut Vec<Arc>, a: usize, b: usize, km: f64, speed: f64) {
    net.push(Arc { tail: a, head: b, travel_hours: km / speed });
    net.push(Arc { tail: b, head: a, travel_hours: km / speed });
}

fn corridor_network(
    with_m1_m3: bool,
    station_price: f64,
    junction_price: f64,
    dest_price: f64,
    speed: f64,
) -> RoadNetwork {
    let station = |id: &str, price: f64| Node {
        id: id.into(),
        has_charger: true,
        price_per_kwh: Some(price),
    };
    let terminal = |id: &str, price: Option<f64>| Node {
        id: id.into(),
        has_charger: false,
        price_per_kwh: price,
    };
    let mut nodes = vec![
        terminal("A", None),
        terminal("B", Some(dest_price)),
        terminal("C", None),
        terminal("D", Some(dest_price)),
        station("S1", station_price),
        station("S2", station_price),
        station("S3", station_price),
        station("S4", station_price),
        station("M0", junction_price),
        station("M2", station_price),
        station("M4", junction_price),
    ];
    if with_m1_m3 {
        nodes.push(station("M1", station_price));
        nodes.push(station("M3", station_price));
    }
    let idx = |nodes: &[Node], id: &str| nodes.iter().position(|n| n.id == id).unwrap();
    let (a, b, c, d) = (idx(&nodes, "A"), idx(&nodes, "B"), idx(&nodes, "C"), idx(&nodes, "D"));
    let (s1, s2, s3, s4) =
        (idx(&nodes, "S1"), idx(&nodes, "S2"), idx(&nodes, "S3"), idx(&nodes, "S4"));
    let (m0, m2, m4) = (idx(&nodes, "M0"), idx(&nodes, "M2"), idx(&nodes, "M4"));
    let mut arcs = Vec::new();
    road(&mut arcs, a, s1, 250.0, speed);
    road(&mut arcs, s1, s2, 200.0, speed);
    road(&mut arcs, s2, b, 250.0, speed);
    road(&mut arcs, c, s3, 250.0, speed);
    road(&mut arcs, s3, s4, 200.0, speed);
    road(&mut arcs, s4, d, 250.0, speed);
    road(&mut arcs, a, m0, 155.0, speed);
    road(&mut arcs, c, m0, 155.0, speed);
    road(&mut arcs, m4, b, 155.0, speed);
    road(&mut arcs, m4, d, 155.0, speed);
    if with_m1_m3 {
        let (m1, m3) = (idx(&nodes, "M1"), idx(&nodes, "M3"));
        road(&mut arcs, m0, m1, 100.0, speed);
        road(&mut arcs, m1, m2, 100.0, speed);
        road(&mut arcs, m2, m3, 100.0, speed);
        road(&mut arcs, m3, m4, 100.0, speed);
    } else {
        road(&mut arcs, m0, m2, 200.0, speed);
        road(&mut arcs, m2, m4, 200.0, speed);
    }
    RoadNetwork::new(nodes, arcs).expect("fixture network is valid")
}

fn two_trucks(net: &RoadNetwork, deadline: f64) -> Vec<TruckDelivery> {
    vec![
        TruckDelivery {
            id: "red".into(),
            origin: net.node_index("A").unwrap(),
            destination: net.node_index("B").unwrap(),
            latest_arrival_hr: deadline,
        },
        TruckDelivery {
            id: "blue".into(),
            origin: net.node_index("C").unwrap(),
            destination: net.node_index("D").unwrap(),
            latest_arrival_hr: deadline,
        },
    ]
}

/// The 13-node worked example: labor costs zeroed out, 0.2 kWh/km
/// consumption (68 kWh battery over 340 km), uniform $0.5/kWh charging, 15%
/// platoon saving.
pub fn illustrative_instance() -> Instance {
    let params = Parameters {
        max_platoon_size: 4,
        leading_wage_per_hr: 0.0,
        following_wage_per_hr: 0.0,
        idle_wage_per_hr: 0.0,
        restructuring_cost: 0.0,
        platoon_saving_ratio: 0.15,
        consumption_kwh_per_hr: 20.0,
        charge_speed_kw: 100.0,
        battery_kwh: 68.0,
        soc_max: 1.0,
        soc_min: 0.0,
        speed_kmh: 100.0,
    };
    let net = corridor_network(true, 0.5, 0.5, 0.5, params.speed_kmh);
    let trucks = two_trucks(&net, 15.0);
    Instance::new(net, params, trucks).expect("illustrative instance is valid")
}

/// The 11-node small-test variant: default wage parameters, doubled prices
/// at the M0/M4 junctions, free destination recharging (so the charging
/// column isolates en-route spending), 15% platoon saving.
pub fn small_test_instance() -> Instance {
    let params = Parameters {
        platoon_saving_ratio: 0.15,
        ..crate::instance::default_parameters()
    };
    let net = corridor_network(false, 0.5, 1.0, 0.0, params.speed_kmh);
    let trucks = two_trucks(&net, 15.0);
    Instance::new(net, params, trucks).expect("small test instance is valid")
}

fn seg(
    inst: &Instance,
    truck: usize,
    platoon: u32,
    h: f64,
    from: &str,
    to: &str,
    charge: f64,
) -> SegmentRecord {
    let tail = inst.network.node_index(from).unwrap();
    let head = inst.network.node_index(to).unwrap();
    SegmentRecord {
        truck,
        platoon,
        leading_ratio: h,
        arc: inst.network.arc_between(tail, head).unwrap(),
        charge_at_head: charge,
    }
}

/// Both trucks on their shortest paths with minimum charging: 110 and 250
/// units en route plus a full 340-unit recharge at the destination.
pub fn illustrative_no_platoon_plan(inst: &Instance) -> Plan {
    Plan::new(vec![
        seg(inst, 0, 0, 1.0, "A", "S1", 110.0),
        seg(inst, 0, 0, 1.0, "S1", "S2", 250.0),
        seg(inst, 0, 0, 1.0, "S2", "B", 340.0),
        seg(inst, 1, 1, 1.0, "C", "S3", 110.0),
        seg(inst, 1, 1, 1.0, "S3", "S4", 250.0),
        seg(inst, 1, 1, 1.0, "S4", "D", 340.0),
    ])
}

/// The platooning route over the middle corridor with alternating leaders:
/// both trucks reach M2 empty, take a single full recharge there, and finish
/// with a full destination recharge - 680 units each.
pub fn illustrative_platoon_swap_plan(inst: &Instance) -> Plan {
    Plan::new(vec![
        seg(inst, 0, 10, 1.0, "A", "M0", 0.0),
        seg(inst, 0, 2, 0.0, "M0", "M1", 0.0),
        seg(inst, 0, 2, 1.0, "M1", "M2", 340.0),
        seg(inst, 0, 2, 1.0, "M2", "M3", 0.0),
        seg(inst, 0, 2, 0.0, "M3", "M4", 0.0),
        seg(inst, 0, 11, 1.0, "M4", "B", 340.0),
        seg(inst, 1, 12, 1.0, "C", "M0", 0.0),
        seg(inst, 1, 2, 1.0, "M0", "M1", 0.0),
        seg(inst, 1, 2, 0.0, "M1", "M2", 340.0),
        seg(inst, 1, 2, 0.0, "M2", "M3", 0.0),
        seg(inst, 1, 2, 1.0, "M3", "M4", 0.0),
        seg(inst, 1, 13, 1.0, "M4", "D", 340.0),
    ])
}

/// Small-test optimum with leader swapping: half-half ratios on both middle
/// links avoid any top-up at the expensive junctions.
pub fn small_test_swap_plan(inst: &Instance) -> Plan {
    Plan::new(vec![
        seg(inst, 0, 10, 1.0, "A", "M0", 0.0),
        seg(inst, 0, 2, 0.5, "M0", "M2", 340.0),
        seg(inst, 0, 2, 0.5, "M2", "M4", 0.0),
        seg(inst, 0, 11, 1.0, "M4", "B", 340.0),
        seg(inst, 1, 12, 1.0, "C", "M0", 0.0),
        seg(inst, 1, 2, 0.5, "M0", "M2", 340.0),
        seg(inst, 1, 2, 0.5, "M2", "M4", 0.0),
        seg(inst, 1, 13, 1.0, "M4", "D", 340.0),
    ])
}

/// Small-test optimum without swapping: whole-arc leaders alternate, which
/// forces 15-unit top-ups at both doubled-price junctions.
pub fn small_test_no_swap_plan(inst: &Instance) -> Plan {
    Plan::new(vec![
        seg(inst, 0, 10, 1.0, "A", "M0", 0.0),
        seg(inst, 0, 2, 0.0, "M0", "M2", 325.0),
        seg(inst, 0, 2, 1.0, "M2", "M4", 15.0),
        seg(inst, 0, 11, 1.0, "M4", "B", 340.0),
        seg(inst, 1, 12, 1.0, "C", "M0", 15.0),
        seg(inst, 1, 2, 1.0, "M0", "M2", 325.0),
        seg(inst, 1, 2, 0.0, "M2", "M4", 0.0),
        seg(inst, 1, 13, 1.0, "M4", "D", 340.0),
    ])
}

/// Small-test shortest-path solo plan (the no-platoon reference).
pub fn small_test_no_platoon_plan(inst: &Instance) -> Plan {
    Plan::new(vec![
        seg(inst, 0, 0, 1.0, "A", "S1", 110.0),
        seg(inst, 0, 0, 1.0, "S1", "S2", 250.0),
        seg(inst, 0, 0, 1.0, "S2", "B", 340.0),
        seg(inst, 1, 1, 1.0, "C", "S3", 110.0),
        seg(inst, 1, 1, 1.0, "S3", "S4", 250.0),
        seg(inst, 1, 1, 1.0, "S4", "D", 340.0),
    ])
}
