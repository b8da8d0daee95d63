//! Seeded instance generation: grid networks for sensitivity sweeps, the
//! 38-node stand-in network for scaling runs, and random delivery demands.
//!
//! All randomness flows through ChaCha8 seeded explicitly by the caller, so
//! identical inputs always produce identical instances.

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, InstanceError, Parameters, TruckDelivery};
use crate::network::{all_pairs_shortest, Arc, Node, RoadNetwork};

/// Builds an n-by-n grid with bidirectional arcs of `edge_km` length. Every
/// node gets a charger at `price_per_kwh`.
pub fn generate_grid(
    n: usize,
    edge_km: f64,
    params: &Parameters,
    price_per_kwh: f64,
) -> Result<RoadNetwork, InstanceError> {
    if n < 2 {
        return Err(InstanceError::Invalid("grid size must be >= 2".into()));
    }
    if edge_km <= 0.0 {
        return Err(InstanceError::Invalid("edge length must be positive".into()));
    }
    let mut nodes = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            nodes.push(Node {
                id: format!("g{r}_{c}"),
                has_charger: true,
                price_per_kwh: Some(price_per_kwh),
            });
        }
    }
    let hours = edge_km / params.speed_kmh;
    let mut arcs = Vec::new();
    let idx = |r: usize, c: usize| r * n + c;
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                arcs.push(Arc { tail: idx(r, c), head: idx(r, c + 1), travel_hours: hours });
                arcs.push(Arc { tail: idx(r, c + 1), head: idx(r, c), travel_hours: hours });
            }
            if r + 1 < n {
                arcs.push(Arc { tail: idx(r, c), head: idx(r + 1, c), travel_hours: hours });
                arcs.push(Arc { tail: idx(r + 1, c), head: idx(r, c), travel_hours: hours });
            }
        }
    }
    Ok(RoadNetwork::new(nodes, arcs)?)
}

/// A 38-node stand-in for a regional road network. Not a real map: nodes sit
/// on a jittered 6x7 lattice (minus four corners-adjacent cells) with edge
/// lengths drawn from 50-250 km plus a few long chords so the network
/// diameter stays within a three-stop charging budget.
pub fn generate_standin_network(seed: u64, params: &Parameters) -> RoadNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x38AD);
    let rows = 6usize;
    let cols = 7usize;
    let skip = [(0usize, 6usize), (5usize, 0usize), (0usize, 0usize), (5usize, 6usize)];
    let mut grid_pos = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if skip.contains(&(r, c)) {
                continue;
            }
            grid_pos.push((r, c));
        }
    }
    debug_assert_eq!(grid_pos.len(), 38);
    let nodes: Vec<Node> = grid_pos
        .iter()
        .enumerate()
        .map(|(i, _)| Node {
            id: format!("c{i:02}"),
            has_charger: true,
            price_per_kwh: Some(0.5),
        })
        .collect();
    let index_of = |r: usize, c: usize| grid_pos.iter().position(|&p| p == (r, c));
    let mut arcs = Vec::new();
    let add_road = |a: usize, b: usize, km: f64, arcs: &mut Vec<Arc>| {
        let hours = km / params.speed_kmh;
        arcs.push(Arc { tail: a, head: b, travel_hours: hours });
        arcs.push(Arc { tail: b, head: a, travel_hours: hours });
    };
    for (r, c) in grid_pos.iter().copied() {
        let here = index_of(r, c).unwrap();
        if let Some(right) = index_of(r, c + 1) {
            let km = rng.random_range(50.0..=160.0f64).round();
            add_road(here, right, km, &mut arcs);
        }
        if let Some(down) = index_of(r + 1, c) {
            let km = rng.random_range(50.0..=160.0f64).round();
            add_road(here, down, km, &mut arcs);
        }
    }
    // Express chords shrink the diameter below the reachable range of a
    // truck using at most three en-route charges.
    let chords = [
        ((1usize, 1usize), (2usize, 3usize)),
        ((2usize, 3usize), (4usize, 5usize)),
        ((4usize, 1usize), (2usize, 3usize)),
        ((1usize, 5usize), (3usize, 3usize)),
    ];
    for (a, b) in chords {
        let (Some(ai), Some(bi)) = (index_of(a.0, a.1), index_of(b.0, b.1)) else {
            continue;
        };
        let km = rng.random_range(180.0..=250.0f64).round();
        add_road(ai, bi, km, &mut arcs);
    }
    RoadNetwork::new(nodes, arcs).expect("stand-in network construction is valid")
}

/// Draws `count` distinct OD pairs uniformly; each deadline is uniform
/// between the pair's shortest travel time and the largest shortest travel
/// time over all pairs.
pub fn generate_deliveries(
    network: &RoadNetwork,
    count: usize,
    seed: u64,
) -> Result<Vec<TruckDelivery>, InstanceError> {
    let sp = all_pairs_shortest(network);
    let n = network.node_count();
    let mut pairs = Vec::new();
    for o in 0..n {
        for d in 0..n {
            if o != d && sp.get(o, d).is_finite() {
                pairs.push((o, d));
            }
        }
    }
    if count > pairs.len() {
        return Err(InstanceError::Invalid(format!(
            "requested {count} deliveries but only {} distinct OD pairs exist",
            pairs.len()
        )));
    }
    let max_sp = sp.max_finite();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trucks = Vec::with_capacity(count);
    for k in 0..count {
        let at = rng.random_range(0..pairs.len());
        let (o, d) = pairs.swap_remove(at);
        let lo = sp.get(o, d);
        let deadline = if max_sp > lo { rng.random_range(lo..=max_sp) } else { lo };
        trucks.push(TruckDelivery {
            id: format!("k{k:03}"),
            origin: o,
            destination: d,
            latest_arrival_hr: deadline,
        });
    }
    Ok(trucks)
}

/// Relaxes deadlines so that every delivery is solo-servable: shortest-path
/// driving plus the worst-case charging dwell always fits. Used by scaling
/// experiments, which require feasible instances by construction.
pub fn relax_deadlines(instance: &mut Instance) {
    let sp = all_pairs_shortest(&instance.network);
    let p = &instance.params;
    for t in &mut instance.trucks {
        let drive = sp.get(t.origin, t.destination);
        let consumption = drive * p.consumption_units_per_hr();
        let charge_hr = (consumption - p.usable_units()).max(0.0) / p.charge_units_per_hr();
        let floor = (drive + charge_hr) * 1.25 + 0.5;
        if t.latest_arrival_hr < floor {
            t.latest_arrival_hr = floor;
        }
    }
}

/// A compact random instance for oracle comparisons: 6-8 nodes, two trucks,
/// few chargers, trips needing at most two en-route stops. Every returned
/// instance is servable (each truck fits a three-stop charging plan within
/// its deadline); draws that are not get resampled deterministically.
pub fn generate_micro_instance(seed: u64) -> Instance {
    for attempt in 0..200u64 {
        let inst = micro_instance_attempt(seed.wrapping_mul(1_000_003).wrapping_add(attempt));
        if crate::preprocess::prepare(&inst).is_ok() {
            return inst;
        }
    }
    panic!("no servable micro instance found for seed {seed}");
}

fn micro_instance_attempt(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA11CE);
    let n = rng.random_range(6..=8usize);

    // Random connected sparse graph: a path backbone plus a couple of extra
    // roads.
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node { id: format!("n{i}"), has_charger: false, price_per_kwh: None })
        .collect();
    let mut roads: Vec<(usize, usize, f64)> = Vec::new();
    for i in 1..n {
        let km = rng.random_range(80.0..=200.0f64).round();
        roads.push((i - 1, i, km));
    }
    let extra = rng.random_range(1..=2usize);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b || roads.iter().any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b))) {
            continue;
        }
        let km = rng.random_range(100.0..=260.0f64).round();
        roads.push((a.min(b), a.max(b), km));
    }

    // Two chargers at interior nodes with varied prices.
    let mut charger_at: Vec<usize> = (1..n - 1).collect();
    for _ in 0..2 {
        if charger_at.is_empty() {
            break;
        }
        let at = rng.random_range(0..charger_at.len());
        let node = charger_at.swap_remove(at);
        nodes[node].has_charger = true;
        nodes[node].price_per_kwh = Some((rng.random_range(0.40..=0.60f64) * 100.0).round() / 100.0);
    }

    let params = Parameters {
        platoon_saving_ratio: 0.15,
        ..crate::instance::default_parameters()
    };
    let arcs: Vec<Arc> = roads
        .iter()
        .flat_map(|&(a, b, km)| {
            let hours = km / params.speed_kmh;
            [
                Arc { tail: a, head: b, travel_hours: hours },
                Arc { tail: b, head: a, travel_hours: hours },
            ]
        })
        .collect();

    // Destination prices must be explicit; give every node a price so any OD
    // choice is valid (only chargers and destinations ever use them).
    for node in &mut nodes {
        if node.price_per_kwh.is_none() {
            node.price_per_kwh = Some(0.5);
        }
    }
    let network = RoadNetwork::new(nodes, arcs).expect("micro network is valid");
    let sp = all_pairs_shortest(&network);

    // Two trucks with overlapping corridors: the second shares the first
    // truck's destination half the time.
    let usable = params.usable_units();
    let rate = params.consumption_units_per_hr();
    let max_trip_hr = 2.8 * usable / rate;
    let mut ods = Vec::new();
    for o in 0..n {
        for d in 0..n {
            if o != d && sp.get(o, d).is_finite() && sp.get(o, d) * rate <= max_trip_hr * rate {
                ods.push((o, d));
            }
        }
    }
    let (o1, d1) = *ods.choose(&mut rng).expect("some od pair exists");
    let shared = rng.random_bool(0.5);
    let (o2, d2) = loop {
        let cand = if shared {
            let candidates: Vec<_> = ods.iter().filter(|&&(o, d)| d == d1 && o != o1).collect();
            candidates.choose(&mut rng).map(|&&p| p)
        } else {
            ods.choose(&mut rng).copied()
        };
        match cand {
            Some(p) if p != (o1, d1) => break p,
            Some(_) | None => {
                let p = *ods.choose(&mut rng).unwrap();
                if p != (o1, d1) {
                    break p;
                }
            }
        }
    };

    let deadline = |o: usize, d: usize, rng: &mut ChaCha8Rng| {
        let drive = sp.get(o, d);
        let consumption = drive * rate;
        let charge_hr = (consumption - usable).max(0.0) / params.charge_units_per_hr();
        let floor = (drive + charge_hr) * 1.1 + 0.3;
        let cap = sp.max_finite().max(floor);
        rng.random_range(floor..=floor.max(cap * 1.3))
    };
    let t1 = deadline(o1, d1, &mut rng);
    let t2 = deadline(o2, d2, &mut rng);
    let trucks = vec![
        TruckDelivery { id: "k000".into(), origin: o1, destination: d1, latest_arrival_hr: t1 },
        TruckDelivery { id: "k001".into(), origin: o2, destination: d2, latest_arrival_hr: t2 },
    ];
    Instance::new(network, params, trucks).expect("micro instance is valid")
}
