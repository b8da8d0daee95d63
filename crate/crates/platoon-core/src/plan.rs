//! Canonical solution encoding, schedule derivation, exact feasibility
//! checking and cost evaluation.
//!
//! A [`Plan`] is a bag of per-truck per-arc segment records. Everything else
//! (arrival times, dwell, SOC trajectories, the cost breakdown) is derived
//! from it, so two plans with the same segment set are equivalent no matter
//! how the segments are ordered.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, TruckIdx};
use crate::network::{ArcIdx, NodeIdx};

/// Absolute tolerance for continuous feasibility checks.
pub const FEAS_TOL: f64 = 1e-6;

/// One truck traversing one arc as part of a platoon (possibly of size one).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub truck: TruckIdx,
    pub platoon: u32,
    /// Fraction of the arc traversal spent in the lead position.
    pub leading_ratio: f64,
    pub arc: ArcIdx,
    /// Energy charged at the arc's head node, km-equivalent units.
    pub charge_at_head: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plan {
    pub segments: Vec<SegmentRecord>,
}

impl Plan {
    pub fn new(segments: Vec<SegmentRecord>) -> Self {
        Self { segments }
    }

    pub fn empty() -> Self {
        Self { segments: Vec::new() }
    }

    pub fn truck_segments(&self, truck: TruckIdx) -> impl Iterator<Item = &SegmentRecord> {
        self.segments.iter().filter(move |s| s.truck == truck)
    }

    /// Truck ids present in the plan, ascending.
    pub fn trucks(&self) -> Vec<TruckIdx> {
        let mut t: Vec<_> = self.segments.iter().map(|s| s.truck).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Largest platoon id in use, for allocating fresh ones.
    pub fn max_platoon_id(&self) -> Option<u32> {
        self.segments.iter().map(|s| s.platoon).max()
    }

    /// Removes all segments of the given trucks and renormalizes the leading
    /// ratios of surviving platoon groups so each sums to one again.
    pub fn remove_trucks(&self, removed: &[TruckIdx]) -> Plan {
        let mut segments: Vec<SegmentRecord> =
            self.segments.iter().copied().filter(|s| !removed.contains(&s.truck)).collect();
        // Group surviving segments by (arc, platoon) and rescale.
        let mut groups: BTreeMap<(ArcIdx, u32), Vec<usize>> = BTreeMap::new();
        for (i, s) in segments.iter().enumerate() {
            groups.entry((s.arc, s.platoon)).or_default().push(i);
        }
        for members in groups.values() {
            if members.len() == 1 {
                segments[members[0]].leading_ratio = 1.0;
                continue;
            }
            let sum: f64 = members.iter().map(|&i| segments[i].leading_ratio).sum();
            if sum > FEAS_TOL {
                for &i in members {
                    segments[i].leading_ratio /= sum;
                }
            } else {
                // All survivors were pure followers; promote the lowest truck id.
                let leader = *members
                    .iter()
                    .min_by_key(|&&i| segments[i].truck)
                    .expect("non-empty group");
                for &i in members {
                    segments[i].leading_ratio = if i == leader { 1.0 } else { 0.0 };
                }
            }
        }
        Plan { segments }
    }
}

/// Per-node schedule entry for one truck.
#[derive(Debug, Clone, Serialize)]
pub struct NodeVisit {
    pub node: NodeIdx,
    pub arrival_hr: f64,
    pub dwell_hr: f64,
    /// State of charge on arrival, as a fraction of capacity.
    pub soc_arrival: f64,
    /// Energy charged at this node, km-equivalent units.
    pub charge_units: f64,
}

/// Derived schedule: one visit sequence per truck in the plan, keyed by
/// truck index.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub visits: BTreeMap<TruckIdx, Vec<NodeVisit>>,
}

impl Schedule {
    pub fn arrival_at_destination(&self, truck: TruckIdx) -> Option<f64> {
        self.visits.get(&truck).and_then(|v| v.last()).map(|v| v.arrival_hr)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub charging: f64,
    pub leading_labor: f64,
    pub following_labor: f64,
    pub idle: f64,
    pub restructuring: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn close(mut self) -> Self {
        self.total = self.charging
            + self.leading_labor
            + self.following_labor
            + self.idle
            + self.restructuring;
        self
    }
}

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("plan is structurally malformed: {0:?}")]
    Malformed(Vec<Violation>),
    #[error("synchronized departures cannot be ordered (cyclic platoon dependency)")]
    SyncCycle,
}

/// A single feasibility violation. These are data, not errors: the checker
/// reports every one it finds.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RouteContiguity { truck: TruckIdx, detail: String },
    LeadingRatioRange { truck: TruckIdx, arc: ArcIdx, value: f64 },
    LeadingRatioSum { arc: ArcIdx, platoon: u32, sum: f64 },
    PlatoonSize { arc: ArcIdx, platoon: u32, size: usize },
    OriginCharge { truck: TruckIdx },
    ChargeAtNonCharger { truck: TruckIdx, node: NodeIdx },
    NegativeCharge { truck: TruckIdx, arc: ArcIdx },
    SocBelowFloor { truck: TruckIdx, node: NodeIdx, soc: f64 },
    Overcharge { truck: TruckIdx, node: NodeIdx, soc: f64 },
    DestinationRecharge { truck: TruckIdx, missing_units: f64 },
    LateArrival { truck: TruckIdx, arrival_hr: f64, deadline_hr: f64 },
    SyncInfeasible,
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::RouteContiguity { .. } => "route-contiguity",
            Violation::LeadingRatioRange { .. } => "leading-ratio-range",
            Violation::LeadingRatioSum { .. } => "leading-ratio-sum",
            Violation::PlatoonSize { .. } => "platoon-size",
            Violation::OriginCharge { .. } => "origin-charge",
            Violation::ChargeAtNonCharger { .. } => "charge-at-non-charger",
            Violation::NegativeCharge { .. } => "negative-charge",
            Violation::SocBelowFloor { .. } => "soc-below-floor",
            Violation::Overcharge { .. } => "overcharge",
            Violation::DestinationRecharge { .. } => "destination-recharge",
            Violation::LateArrival { .. } => "late-arrival",
            Violation::SyncInfeasible => "sync-infeasible",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {:?}", self.code(), self)
    }
}

// ---------------------------------------------------------------------------
// Route chaining
// ---------------------------------------------------------------------------

/// Ordered segment indexes forming each truck's origin -> destination walk.
pub struct ChainedRoutes {
    /// Per truck: plan segment indexes in traversal order.
    pub order: BTreeMap<TruckIdx, Vec<usize>>,
}

pub fn chain_routes(instance: &Instance, plan: &Plan) -> Result<ChainedRoutes, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut by_truck: BTreeMap<TruckIdx, Vec<usize>> = BTreeMap::new();
    for (i, s) in plan.segments.iter().enumerate() {
        by_truck.entry(s.truck).or_default().push(i);
    }
    let mut order = BTreeMap::new();
    for (&truck, segs) in &by_truck {
        if truck >= instance.trucks.len() {
            violations.push(Violation::RouteContiguity {
                truck,
                detail: "unknown truck index".into(),
            });
            continue;
        }
        let td = &instance.trucks[truck];
        let mut by_tail: HashMap<NodeIdx, usize> = HashMap::new();
        let mut dup = false;
        for &i in segs {
            let tail = instance.network.arc(plan.segments[i].arc).tail;
            if by_tail.insert(tail, i).is_some() {
                violations.push(Violation::RouteContiguity {
                    truck,
                    detail: format!("two segments leave node {}", instance.network.node(tail).id),
                });
                dup = true;
            }
        }
        if dup {
            continue;
        }
        let mut chain = Vec::new();
        let mut visited = vec![td.origin];
        let mut at = td.origin;
        loop {
            match by_tail.remove(&at) {
                Some(i) => {
                    let head = instance.network.arc(plan.segments[i].arc).head;
                    if visited.contains(&head) {
                        violations.push(Violation::RouteContiguity {
                            truck,
                            detail: format!(
                                "node {} visited twice",
                                instance.network.node(head).id
                            ),
                        });
                        break;
                    }
                    visited.push(head);
                    chain.push(i);
                    at = head;
                    if at == td.destination {
                        break;
                    }
                }
                None => {
                    violations.push(Violation::RouteContiguity {
                        truck,
                        detail: if chain.is_empty() {
                            "no segment leaves the origin".into()
                        } else {
                            format!(
                                "walk stops at {} before reaching the destination",
                                instance.network.node(at).id
                            )
                        },
                    });
                    break;
                }
            }
        }
        if at == td.destination && by_tail.is_empty() {
            order.insert(truck, chain);
        } else if at == td.destination {
            violations.push(Violation::RouteContiguity {
                truck,
                detail: format!("{} segments disconnected from the walk", by_tail.len()),
            });
        }
    }
    if violations.is_empty() {
        Ok(ChainedRoutes { order })
    } else {
        Err(violations)
    }
}

// ---------------------------------------------------------------------------
// Grouping and effective ratios
// ---------------------------------------------------------------------------

/// Members of each (arc, platoon) group, as indexes into `plan.segments`,
/// sorted by truck id.
pub fn platoon_groups(plan: &Plan) -> BTreeMap<(ArcIdx, u32), Vec<usize>> {
    let mut groups: BTreeMap<(ArcIdx, u32), Vec<usize>> = BTreeMap::new();
    for (i, s) in plan.segments.iter().enumerate() {
        groups.entry((s.arc, s.platoon)).or_default().push(i);
    }
    for members in groups.values_mut() {
        members.sort_by_key(|&i| plan.segments[i].truck);
    }
    groups
}

/// Effective leading ratio used for energy: singleton platoons always
/// consume at the full (lead) rate.
fn effective_ratios(plan: &Plan) -> Vec<(f64, usize)> {
    let groups = platoon_groups(plan);
    let mut eff = vec![(1.0, 1usize); plan.segments.len()];
    for members in groups.values() {
        for &i in members {
            eff[i] = if members.len() == 1 {
                (1.0, 1)
            } else {
                (plan.segments[i].leading_ratio, members.len())
            };
        }
    }
    eff
}

/// Energy drawn by `seg`'s truck over its arc, given effective ratio `h` and
/// the group size.
fn consumption_units(instance: &Instance, arc: ArcIdx, h: f64, group_size: usize) -> f64 {
    let p = &instance.params;
    let t = instance.network.arc(arc).travel_hours;
    let rate = p.consumption_units_per_hr();
    if group_size <= 1 {
        rate * t
    } else {
        let beta = p.platoon_saving_ratio;
        rate * t * (h + (1.0 - beta) * (1.0 - h))
    }
}

// ---------------------------------------------------------------------------
// Schedule derivation
// ---------------------------------------------------------------------------

/// Derives arrival/dwell/SOC for every truck. Trucks sharing an (arc,
/// platoon) group depart the arc's tail simultaneously; the earlier arrival
/// waits. Dwell at a node is max(charging time, synchronization wait).
pub fn derive_schedule(instance: &Instance, plan: &Plan) -> Result<Schedule, ScheduleError> {
    let routes = chain_routes(instance, plan).map_err(ScheduleError::Malformed)?;
    derive_schedule_chained(instance, plan, &routes)
}

pub fn derive_schedule_chained(
    instance: &Instance,
    plan: &Plan,
    routes: &ChainedRoutes,
) -> Result<Schedule, ScheduleError> {
    let eff = effective_ratios(plan);
    let eta = instance.params.charge_units_per_hr();
    let cap = instance.params.soc_max * instance.params.battery_units();

    // Group ids per (arc, platoon); each truck position maps to one group.
    let mut group_ids: BTreeMap<(ArcIdx, u32), usize> = BTreeMap::new();
    let mut group_members: Vec<Vec<(TruckIdx, usize)>> = Vec::new(); // (truck, position)
    let mut pos_group: BTreeMap<(TruckIdx, usize), usize> = BTreeMap::new();
    for (&truck, chain) in &routes.order {
        for (pos, &si) in chain.iter().enumerate() {
            let s = &plan.segments[si];
            let gid = *group_ids.entry((s.arc, s.platoon)).or_insert_with(|| {
                group_members.push(Vec::new());
                group_members.len() - 1
            });
            group_members[gid].push((truck, pos));
            pos_group.insert((truck, pos), gid);
        }
    }

    let mut pending: Vec<usize> = group_members.iter().map(|m| m.len()).collect();
    let mut ready: VecDeque<usize> = VecDeque::new();
    // Per truck: time and energy on arrival at the tail of the next position.
    let mut arrival_time: BTreeMap<TruckIdx, f64> = BTreeMap::new();
    let mut arrival_energy: BTreeMap<TruckIdx, f64> = BTreeMap::new();
    let mut visits: BTreeMap<TruckIdx, Vec<NodeVisit>> = BTreeMap::new();

    for &truck in routes.order.keys() {
        arrival_time.insert(truck, 0.0);
        arrival_energy.insert(truck, cap);
        visits.insert(truck, Vec::new());
        let gid = pos_group[&(truck, 0)];
        pending[gid] -= 1;
        if pending[gid] == 0 {
            ready.push_back(gid);
        }
    }

    let mut processed = 0usize;
    while let Some(gid) = ready.pop_front() {
        processed += 1;
        // Synchronized departure from the shared tail.
        let mut departure = f64::NEG_INFINITY;
        for &(truck, pos) in &group_members[gid] {
            let _si = routes.order[&truck][pos];
            let charge = if pos == 0 {
                0.0
            } else {
                plan.segments[routes.order[&truck][pos - 1]].charge_at_head
            };
            let earliest = arrival_time[&truck] + charge / eta;
            departure = departure.max(earliest);
        }
        for &(truck, pos) in &group_members[gid] {
            let chain = &routes.order[&truck];
            let si = chain[pos];
            let seg = &plan.segments[si];
            let arc = instance.network.arc(seg.arc);
            let arr = arrival_time[&truck];
            let charge = if pos == 0 { 0.0 } else { plan.segments[chain[pos - 1]].charge_at_head };
            let energy = arrival_energy[&truck];
            visits.get_mut(&truck).unwrap().push(NodeVisit {
                node: arc.tail,
                arrival_hr: arr,
                dwell_hr: departure - arr,
                soc_arrival: energy / instance.params.battery_units(),
                charge_units: charge,
            });
            let (h, size) = eff[si];
            let used = consumption_units(instance, seg.arc, h, size);
            let next_energy = energy + charge - used;
            let next_time = departure + arc.travel_hours;
            if pos + 1 < chain.len() {
                arrival_time.insert(truck, next_time);
                arrival_energy.insert(truck, next_energy);
                let ngid = pos_group[&(truck, pos + 1)];
                pending[ngid] -= 1;
                if pending[ngid] == 0 {
                    ready.push_back(ngid);
                }
            } else {
                // Destination visit: dwell covers the forced recharge.
                let dest_charge = seg.charge_at_head;
                visits.get_mut(&truck).unwrap().push(NodeVisit {
                    node: arc.head,
                    arrival_hr: next_time,
                    dwell_hr: dest_charge / eta,
                    soc_arrival: next_energy / instance.params.battery_units(),
                    charge_units: dest_charge,
                });
            }
        }
    }
    if processed < group_members.len() {
        return Err(ScheduleError::SyncCycle);
    }
    Ok(Schedule { visits })
}

// ---------------------------------------------------------------------------
// Cost evaluation
// ---------------------------------------------------------------------------

/// Per (arc, platoon) group: index of the designated leader segment (largest
/// leading ratio, ties to the lowest truck id).
fn designated_leader(plan: &Plan, members: &[usize]) -> usize {
    let mut best = members[0];
    for &i in &members[1..] {
        let (hb, tb) = (plan.segments[best].leading_ratio, plan.segments[best].truck);
        let (hi, ti) = (plan.segments[i].leading_ratio, plan.segments[i].truck);
        if hi > hb || (hi == hb && ti < tb) {
            best = i;
        }
    }
    best
}

/// Number of extra leaders across all platoon-arcs: per group, the count of
/// members that lead for a positive fraction, minus one.
pub fn restructuring_count(plan: &Plan) -> usize {
    let groups = platoon_groups(plan);
    let mut count = 0usize;
    for members in groups.values() {
        if members.len() <= 1 {
            continue;
        }
        let leaders =
            members.iter().filter(|&&i| plan.segments[i].leading_ratio > 1e-9).count();
        count += leaders.saturating_sub(1);
    }
    count
}

pub fn evaluate(instance: &Instance, plan: &Plan) -> Result<CostBreakdown, ScheduleError> {
    let schedule = derive_schedule(instance, plan)?;
    Ok(evaluate_with_schedule(instance, plan, &schedule))
}

pub fn evaluate_with_schedule(
    instance: &Instance,
    plan: &Plan,
    schedule: &Schedule,
) -> CostBreakdown {
    let p = &instance.params;
    let mut cost = CostBreakdown::default();

    for visits in schedule.visits.values() {
        for (i, v) in visits.iter().enumerate() {
            cost.charging += v.charge_units * instance.unit_price(v.node);
            // Idle labor applies at intermediate nodes only.
            if i > 0 && i + 1 < visits.len() {
                cost.idle += p.idle_wage_per_hr * v.dwell_hr;
            }
        }
    }

    let groups = platoon_groups(plan);
    for ((arc, _), members) in &groups {
        let hours = instance.network.arc(*arc).travel_hours;
        let leader = designated_leader(plan, members);
        for &i in members {
            if i == leader {
                cost.leading_labor += p.leading_wage_per_hr * hours;
            } else {
                cost.following_labor += p.following_wage_per_hr * hours;
            }
        }
    }

    cost.restructuring = p.restructuring_cost * restructuring_count(plan) as f64;
    cost.close()
}

// ---------------------------------------------------------------------------
// Feasibility checking
// ---------------------------------------------------------------------------

pub fn check_feasibility(instance: &Instance, plan: &Plan) -> Vec<Violation> {
    let mut violations = Vec::new();
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let floor = p.soc_min * p.battery_units();

    // Every delivery must be served.
    let present = plan.trucks();
    for (k, td) in instance.trucks.iter().enumerate() {
        if !present.contains(&k) {
            violations.push(Violation::RouteContiguity {
                truck: k,
                detail: format!("truck {} has no segments", td.id),
            });
        }
    }

    for s in &plan.segments {
        if !(-FEAS_TOL..=1.0 + FEAS_TOL).contains(&s.leading_ratio) {
            violations.push(Violation::LeadingRatioRange {
                truck: s.truck,
                arc: s.arc,
                value: s.leading_ratio,
            });
        }
        if s.charge_at_head < -FEAS_TOL {
            violations.push(Violation::NegativeCharge { truck: s.truck, arc: s.arc });
        }
        let head = instance.network.arc(s.arc).head;
        if s.charge_at_head > FEAS_TOL {
            if s.truck < instance.trucks.len() && head == instance.trucks[s.truck].origin {
                violations.push(Violation::OriginCharge { truck: s.truck });
            } else if s.truck < instance.trucks.len() && !instance.can_charge(s.truck, head) {
                violations.push(Violation::ChargeAtNonCharger { truck: s.truck, node: head });
            }
        }
    }

    let groups = platoon_groups(plan);
    for (&(arc, platoon), members) in &groups {
        if members.len() > p.max_platoon_size {
            violations.push(Violation::PlatoonSize { arc, platoon, size: members.len() });
        }
        if members.len() >= 2 {
            let sum: f64 = members.iter().map(|&i| plan.segments[i].leading_ratio).sum();
            if (sum - 1.0).abs() > FEAS_TOL {
                violations.push(Violation::LeadingRatioSum { arc, platoon, sum });
            }
        }
    }

    let routes = match chain_routes(instance, plan) {
        Ok(r) => r,
        Err(mut v) => {
            violations.append(&mut v);
            return violations;
        }
    };
    let schedule = match derive_schedule_chained(instance, plan, &routes) {
        Ok(s) => s,
        Err(ScheduleError::SyncCycle) => {
            violations.push(Violation::SyncInfeasible);
            return violations;
        }
        Err(ScheduleError::Malformed(mut v)) => {
            violations.append(&mut v);
            return violations;
        }
    };

    for (&truck, visits) in &schedule.visits {
        let td = &instance.trucks[truck];
        for v in visits {
            let energy = v.soc_arrival * p.battery_units();
            if energy < floor - FEAS_TOL {
                violations.push(Violation::SocBelowFloor {
                    truck,
                    node: v.node,
                    soc: v.soc_arrival,
                });
            }
            if energy + v.charge_units > cap + FEAS_TOL {
                violations.push(Violation::Overcharge {
                    truck,
                    node: v.node,
                    soc: (energy + v.charge_units) / p.battery_units(),
                });
            }
        }
        let last = visits.last().expect("routes are non-empty");
        let final_energy = last.soc_arrival * p.battery_units() + last.charge_units;
        if (final_energy - cap).abs() > FEAS_TOL {
            violations.push(Violation::DestinationRecharge {
                truck,
                missing_units: cap - final_energy,
            });
        }
        if last.arrival_hr > td.latest_arrival_hr + FEAS_TOL {
            violations.push(Violation::LateArrival {
                truck,
                arrival_hr: last.arrival_hr,
                deadline_hr: td.latest_arrival_hr,
            });
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Charge-amount policies shared by construction heuristics
// ---------------------------------------------------------------------------

/// How construction and repair assign charge amounts along a fixed route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargePolicy {
    /// Charge as late and as little as possible: at each stop, exactly
    /// enough to reach the next charging opportunity at the SOC floor.
    Minimum,
    /// Price-aware placement: at each stop, buy just enough to reach the
    /// next opportunity that is at least as cheap, otherwise fill up.
    Cheapest,
}

pub fn recompute_charges(
    instance: &Instance,
    plan: &Plan,
    trucks: &[TruckIdx],
    policy: ChargePolicy,
) -> (Plan, Vec<TruckIdx>) {
    match policy {
        ChargePolicy::Minimum => recompute_min_charges(instance, plan, trucks),
        ChargePolicy::Cheapest => recompute_cheapest_charges(instance, plan, trucks),
    }
}

/// Recomputes the charge amounts of `trucks` to the minimum needed to reach
/// each next charging opportunity at the SOC floor, holding routes, platoon
/// structure and leading ratios fixed. Trucks whose route cannot be covered
/// by any charge assignment are returned in the failure list with their
/// charges untouched.
#[allow(clippy::needless_range_loop)]
pub fn recompute_min_charges(
    instance: &Instance,
    plan: &Plan,
    trucks: &[TruckIdx],
) -> (Plan, Vec<TruckIdx>) {
    let routes = match chain_routes(instance, plan) {
        Ok(r) => r,
        Err(_) => return (plan.clone(), trucks.to_vec()),
    };
    let eff = effective_ratios(plan);
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let floor = p.soc_min * p.battery_units();
    let mut plan = plan.clone();
    let mut failed = Vec::new();

    'trucks: for &truck in trucks {
        let Some(chain) = routes.order.get(&truck).cloned() else {
            failed.push(truck);
            continue;
        };
        // Consumption of each segment in order.
        let cons: Vec<f64> = chain
            .iter()
            .map(|&si| {
                let (h, size) = eff[si];
                consumption_units(instance, plan.segments[si].arc, h, size)
            })
            .collect();
        // Work on a copy of the charge column so a failing truck keeps its
        // original amounts.
        let mut charges: Vec<f64> = chain.iter().map(|&si| plan.segments[si].charge_at_head).collect();
        let n = chain.len();
        let mut energy = cap;
        for i in 0..n {
            // Arriving at head(i) after consuming cons[i].
            energy -= cons[i];
            if energy < floor - FEAS_TOL {
                failed.push(truck);
                continue 'trucks;
            }
            let head = instance.network.arc(plan.segments[chain[i]].arc).head;
            if i + 1 == n {
                // Destination: forced recharge to the maximum SOC.
                charges[i] = (cap - energy).max(0.0);
                break;
            }
            if !instance.can_charge(truck, head) {
                charges[i] = 0.0;
                continue;
            }
            // Energy needed to reach the next charging opportunity at floor.
            let mut needed = 0.0;
            for j in (i + 1)..n {
                needed += cons[j];
                let nh = instance.network.arc(plan.segments[chain[j]].arc).head;
                if instance.can_charge(truck, nh) {
                    break;
                }
            }
            let target = needed + floor;
            let charge = (target - energy).clamp(0.0, cap - energy);
            if energy + charge + FEAS_TOL < target {
                failed.push(truck);
                continue 'trucks; // even a full charge cannot bridge the gap
            }
            charges[i] = charge;
            energy += charge;
        }
        for (i, &si) in chain.iter().enumerate() {
            plan.segments[si].charge_at_head = charges[i];
        }
    }
    (plan, failed)
}

/// Recomputes the charge amounts of `trucks` to the cheapest placement for
/// their fixed routes and leading ratios: at each stop, buy just enough to
/// reach the first charging opportunity that is at least as cheap (the
/// destination counts, at its own price and free dwell), otherwise fill up.
/// En-route prices include the idle wage paid while charging. Failure
/// semantics match [`recompute_min_charges`].
#[allow(clippy::needless_range_loop)]
pub fn recompute_cheapest_charges(
    instance: &Instance,
    plan: &Plan,
    trucks: &[TruckIdx],
) -> (Plan, Vec<TruckIdx>) {
    let routes = match chain_routes(instance, plan) {
        Ok(r) => r,
        Err(_) => return (plan.clone(), trucks.to_vec()),
    };
    let eff = effective_ratios(plan);
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let floor = p.soc_min * p.battery_units();
    let usable = cap - floor;
    let idle_per_unit = p.idle_wage_per_hr / p.charge_units_per_hr();
    let mut plan = plan.clone();
    let mut failed = Vec::new();

    'trucks: for &truck in trucks {
        let Some(chain) = routes.order.get(&truck).cloned() else {
            failed.push(truck);
            continue;
        };
        let n = chain.len();
        let cons: Vec<f64> = chain
            .iter()
            .map(|&si| {
                let (h, size) = eff[si];
                consumption_units(instance, plan.segments[si].arc, h, size)
            })
            .collect();
        // Effective unit price when charging after segment i (at its head).
        let price_at = |i: usize| -> Option<f64> {
            let head = instance.network.arc(plan.segments[chain[i]].arc).head;
            if i + 1 == n {
                Some(instance.unit_price(head)) // destination: dwell is free
            } else if instance.can_charge(truck, head) {
                Some(instance.unit_price(head) + idle_per_unit)
            } else {
                None
            }
        };
        let mut charges = vec![0.0; n];
        let mut above_floor = usable; // start full
        for i in 0..n {
            above_floor -= cons[i];
            if above_floor < -FEAS_TOL {
                failed.push(truck);
                continue 'trucks;
            }
            if i + 1 == n {
                charges[i] = (usable - above_floor).max(0.0); // refill at the destination
                break;
            }
            let Some(my_price) = price_at(i) else {
                charges[i] = 0.0;
                continue;
            };
            // First charging opportunity within a full tank that is no more
            // expensive than here.
            let mut cheaper_within_reach: Option<f64> = None;
            let mut cum = 0.0;
            for m in (i + 1)..n {
                cum += cons[m];
                if cum > usable + FEAS_TOL {
                    break;
                }
                if let Some(q) = price_at(m) {
                    if q <= my_price {
                        cheaper_within_reach = Some(cum);
                        break;
                    }
                }
            }
            // Buy just enough to reach the cheaper opportunity; with nothing
            // cheaper in reach, fill up (either the tank limits the reach, or
            // every later purchase including the destination refill costs
            // more per unit).
            let amount = match cheaper_within_reach {
                Some(cum) => (cum - above_floor).max(0.0),
                None => usable - above_floor,
            };
            charges[i] = amount;
            above_floor += amount;
        }
        // Price-aware fill-ups lengthen the charging dwell; when that alone
        // would miss the deadline, fall back to the minimum placement for
        // this truck (which has the smallest possible dwell).
        let route_hours: f64 = chain
            .iter()
            .map(|&si| instance.network.arc(plan.segments[si].arc).travel_hours)
            .sum();
        let en_route: f64 = charges[..n.saturating_sub(1)].iter().sum();
        if route_hours + en_route / p.charge_units_per_hr()
            > instance.trucks[truck].latest_arrival_hr + FEAS_TOL
        {
            let (min_plan, min_failed) = recompute_min_charges(instance, &plan, &[truck]);
            if min_failed.is_empty() {
                plan = min_plan;
            } else {
                failed.push(truck);
            }
            continue;
        }
        for (i, &si) in chain.iter().enumerate() {
            plan.segments[si].charge_at_head = charges[i];
        }
    }
    (plan, failed)
}

/// Resets every truck's destination charge to exactly the amount that
/// restores the maximum SOC, given current routes/ratios. Other charges are
/// left untouched.
pub fn refit_destination_charges(instance: &Instance, plan: &Plan) -> Plan {
    let Ok(routes) = chain_routes(instance, plan) else {
        return plan.clone();
    };
    let eff = effective_ratios(plan);
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let mut plan = plan.clone();
    for chain in routes.order.values() {
        let mut energy = cap;
        for (i, &si) in chain.iter().enumerate() {
            let (h, size) = eff[si];
            energy -= consumption_units(instance, plan.segments[si].arc, h, size);
            if i + 1 == chain.len() {
                plan.segments[si].charge_at_head = (cap - energy).max(0.0);
            } else {
                energy += plan.segments[si].charge_at_head;
            }
        }
    }
    plan
}

// ---------------------------------------------------------------------------
// Solution files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SegmentFile {
    truck: String,
    platoon: u32,
    leading_ratio: f64,
    from: String,
    to: String,
    charge_at_to: f64,
}

#[derive(Serialize)]
struct VisitFile {
    truck: String,
    node: String,
    arrival_hr: f64,
    dwell_hr: f64,
    soc_arrival: f64,
    charge_units: f64,
}

#[derive(Serialize)]
struct SolutionFile {
    segments: Vec<SegmentFile>,
    schedule: Vec<VisitFile>,
    cost_breakdown: CostBreakdown,
}

#[derive(Deserialize)]
struct SolutionFileIn {
    segments: Vec<SegmentFile>,
}

/// Serializes a plan with its derived schedule and cost breakdown. Segments
/// are emitted in route order per truck for stable diffs.
pub fn solution_to_json(instance: &Instance, plan: &Plan) -> Result<String, ScheduleError> {
    let routes = chain_routes(instance, plan).map_err(ScheduleError::Malformed)?;
    let schedule = derive_schedule_chained(instance, plan, &routes)?;
    let cost = evaluate_with_schedule(instance, plan, &schedule);
    let mut segments = Vec::new();
    for (&truck, chain) in &routes.order {
        for &si in chain {
            let s = &plan.segments[si];
            let arc = instance.network.arc(s.arc);
            segments.push(SegmentFile {
                truck: instance.trucks[truck].id.clone(),
                platoon: s.platoon,
                leading_ratio: s.leading_ratio,
                from: instance.network.node(arc.tail).id.clone(),
                to: instance.network.node(arc.head).id.clone(),
                charge_at_to: s.charge_at_head,
            });
        }
    }
    let mut visits = Vec::new();
    for (&truck, vs) in &schedule.visits {
        for v in vs {
            visits.push(VisitFile {
                truck: instance.trucks[truck].id.clone(),
                node: instance.network.node(v.node).id.clone(),
                arrival_hr: v.arrival_hr,
                dwell_hr: v.dwell_hr,
                soc_arrival: v.soc_arrival,
                charge_units: v.charge_units,
            });
        }
    }
    let file = SolutionFile { segments, schedule: visits, cost_breakdown: cost };
    Ok(serde_json::to_string_pretty(&file).expect("solution serialization cannot fail"))
}

#[derive(Debug, Error)]
pub enum SolutionParseError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown truck id {0:?}")]
    UnknownTruck(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("no arc {0:?} -> {1:?}")]
    UnknownArc(String, String),
}

pub fn solution_from_json(instance: &Instance, text: &str) -> Result<Plan, SolutionParseError> {
    let file: SolutionFileIn = serde_json::from_str(text)?;
    let mut segments = Vec::with_capacity(file.segments.len());
    for s in &file.segments {
        let truck = instance
            .truck_index(&s.truck)
            .ok_or_else(|| SolutionParseError::UnknownTruck(s.truck.clone()))?;
        let tail = instance
            .network
            .node_index(&s.from)
            .ok_or_else(|| SolutionParseError::UnknownNode(s.from.clone()))?;
        let head = instance
            .network
            .node_index(&s.to)
            .ok_or_else(|| SolutionParseError::UnknownNode(s.to.clone()))?;
        let arc = instance
            .network
            .arc_between(tail, head)
            .ok_or_else(|| SolutionParseError::UnknownArc(s.from.clone(), s.to.clone()))?;
        segments.push(SegmentRecord {
            truck,
            platoon: s.platoon,
            leading_ratio: s.leading_ratio,
            arc,
            charge_at_head: s.charge_at_to,
        });
    }
    Ok(Plan::new(segments))
}
