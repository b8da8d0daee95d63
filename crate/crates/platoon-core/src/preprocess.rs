//! Candidate charging-station selection (zero to three en-route stops per
//! truck), truck classification, and the warm-start initial solution.
//!
//! Candidate scoring iterates stop counts and keeps the two cheapest
//! candidates at the first feasible count. A stop sequence is priced under
//! the exactly-enough charging policy: each charge tops the battery up to
//! precisely what the next leg needs, so the truck reaches every stop (and
//! the destination) at the SOC floor. At the first feasible stop count this
//! matches the true minimum-charge plan.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::alns::insertion;
use crate::instance::{Instance, TruckIdx};
use crate::network::{
    all_pairs_shortest, dijkstra, path_from_tree, ArcIdx, NodeIdx, SpMatrix, SpTree,
};
use crate::plan::{ChargePolicy, Plan};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("truck {truck:?} cannot be served with at most three en-route charges")]
    Unservable { truck: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMode {
    Solo,
    /// Consumption scaled by (1 - beta): the truck follows for its whole
    /// itinerary.
    Follower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruckGroup {
    NoDifference,
    Difference,
}

/// A routing-and-charging candidate for one truck: an ordered list of
/// en-route stops with the scored route through them.
#[derive(Debug, Clone)]
pub struct ChargingPlanCandidate {
    pub stations: Vec<NodeIdx>,
    pub route: Vec<ArcIdx>,
    /// Labor + idle + en-route charging money under the candidate policy.
    pub score: f64,
    pub route_hours: f64,
    /// Charging dwell along the route (destination recharge excluded).
    pub charge_dwell_hr: f64,
}

#[derive(Debug, Clone)]
pub struct TruckClass {
    pub truck: TruckIdx,
    pub group: TruckGroup,
    pub best: ChargingPlanCandidate,
    pub second_best: Option<ChargingPlanCandidate>,
    pub follower_best: ChargingPlanCandidate,
    /// |best - second best| score gap; zero when no alternative exists.
    pub regret: f64,
}

/// Preprocessing results shared by the search: shortest paths from every
/// node, per-truck candidates, and derived constants.
pub struct Cache {
    pub sp: SpMatrix,
    pub trees: Vec<SpTree>,
    pub classes: Vec<TruckClass>,
    /// Mean charging price over charger nodes, money per unit; used by
    /// insertion-ordering heuristics.
    pub mean_unit_price: f64,
}

pub fn prepare(instance: &Instance) -> Result<Cache, PreprocessError> {
    let sp = all_pairs_shortest(&instance.network);
    let trees: Vec<SpTree> = (0..instance.network.node_count())
        .map(|i| dijkstra(&instance.network, i).expect("valid node index"))
        .collect();
    let classes = classify_trucks(instance, &sp, &trees)?;
    let chargers: Vec<f64> = (0..instance.network.node_count())
        .filter(|&n| instance.network.node(n).has_charger)
        .map(|n| instance.unit_price(n))
        .collect();
    let mean_unit_price = if chargers.is_empty() {
        0.0
    } else {
        chargers.iter().sum::<f64>() / chargers.len() as f64
    };
    Ok(Cache { sp, trees, classes, mean_unit_price })
}

/// Concatenates shortest-path legs through `via`, rejecting compositions
/// that would visit a node twice.
fn compose_route(
    instance: &Instance,
    trees: &[SpTree],
    via: &[NodeIdx],
) -> Option<(Vec<ArcIdx>, f64)> {
    let mut arcs = Vec::new();
    let mut hours = 0.0;
    let mut visited = BTreeSet::new();
    visited.insert(via[0]);
    for w in via.windows(2) {
        let leg = path_from_tree(&instance.network, &trees[w[0]], w[1])?;
        for &ai in &leg.arcs {
            let head = instance.network.arc(ai).head;
            if !visited.insert(head) {
                return None;
            }
            arcs.push(ai);
        }
        hours += leg.total_hours;
    }
    Some((arcs, hours))
}

pub fn candidate_plan(
    instance: &Instance,
    sp: &SpMatrix,
    trees: &[SpTree],
    truck: TruckIdx,
    mode: CandidateMode,
) -> Result<(ChargingPlanCandidate, Option<ChargingPlanCandidate>), PreprocessError> {
    let p = &instance.params;
    let td = &instance.trucks[truck];
    let (o, d, tau) = (td.origin, td.destination, td.latest_arrival_hr);
    let scale = match mode {
        CandidateMode::Solo => 1.0,
        CandidateMode::Follower => 1.0 - p.platoon_saving_ratio,
    };
    let rho = scale * p.consumption_units_per_hr();
    let usable = p.usable_units();
    let max_leg_hr = usable / rho;
    let eta = p.charge_units_per_hr();
    let wage = p.leading_wage_per_hr;
    let t = |a: NodeIdx, b: NodeIdx| sp.get(a, b);
    // Money per unit charged at a station, including the idle wage paid
    // while it charges.
    let charge_factor =
        |n: NodeIdx| instance.unit_price(n) + p.idle_wage_per_hr / eta;

    // Zero stops: feasible whenever the full trip fits the usable range.
    if rho * t(o, d) <= usable + 1e-9 {
        let (route, hours) =
            compose_route(instance, trees, &[o, d]).expect("shortest path exists");
        return Ok((
            ChargingPlanCandidate {
                stations: vec![],
                route,
                score: wage * hours,
                route_hours: hours,
                charge_dwell_hr: 0.0,
            },
            None,
        ));
    }

    let stations: Vec<NodeIdx> = (0..instance.network.node_count())
        .filter(|&n| instance.network.node(n).has_charger && n != o && n != d)
        .collect();

    let push = |cands: &mut Vec<ChargingPlanCandidate>,
                    stops: Vec<NodeIdx>,
                    score: f64,
                    dwell: f64| {
        let mut via = vec![o];
        via.extend(&stops);
        via.push(d);
        if let Some((route, hours)) = compose_route(instance, trees, &via) {
            if hours + dwell <= tau + 1e-9 {
                cands.push(ChargingPlanCandidate {
                    stations: stops,
                    route,
                    score,
                    route_hours: hours,
                    charge_dwell_hr: dwell,
                });
            }
        }
    };

    for stop_count in 1..=3usize {
        let mut cands: Vec<ChargingPlanCandidate> = Vec::new();
        match stop_count {
            1 => {
                for &i in &stations {
                    if t(o, i) > max_leg_hr + 1e-9 || t(i, d) > max_leg_hr + 1e-9 {
                        continue;
                    }
                    let total = t(o, i) + t(i, d);
                    let deficit = (rho * total - usable).max(0.0);
                    let score = wage * total + deficit * charge_factor(i);
                    push(&mut cands, vec![i], score, deficit / eta);
                }
            }
            2 => {
                for &j in &stations {
                    if t(j, d) > max_leg_hr + 1e-9 || t(o, j) > 2.0 * max_leg_hr + 1e-9 {
                        continue;
                    }
                    let charge_j = rho * t(j, d);
                    let downstream = wage * t(j, d) + charge_j * charge_factor(j);
                    for &i in &stations {
                        if i == j
                            || t(o, i) > max_leg_hr + 1e-9
                            || t(i, j) > max_leg_hr + 1e-9
                        {
                            continue;
                        }
                        let charge_i = (rho * (t(o, i) + t(i, j)) - usable).max(0.0);
                        let score = wage * (t(o, i) + t(i, j))
                            + charge_i * charge_factor(i)
                            + downstream;
                        push(
                            &mut cands,
                            vec![i, j],
                            score,
                            (charge_i + charge_j) / eta,
                        );
                    }
                }
            }
            3 => {
                for &m in &stations {
                    if t(m, d) > max_leg_hr + 1e-9 || t(o, m) > 3.0 * max_leg_hr + 1e-9 {
                        continue;
                    }
                    let charge_m = rho * t(m, d);
                    let down_m = wage * t(m, d) + charge_m * charge_factor(m);
                    for &j in &stations {
                        if j == m
                            || t(j, m) > max_leg_hr + 1e-9
                            || t(o, j) > 2.0 * max_leg_hr + 1e-9
                        {
                            continue;
                        }
                        let charge_j = rho * t(j, m);
                        let down_j = wage * t(j, m) + charge_j * charge_factor(j);
                        for &i in &stations {
                            if i == j
                                || i == m
                                || t(o, i) > max_leg_hr + 1e-9
                                || t(i, j) > max_leg_hr + 1e-9
                            {
                                continue;
                            }
                            let charge_i = (rho * (t(o, i) + t(i, j)) - usable).max(0.0);
                            let score = wage * (t(o, i) + t(i, j))
                                + charge_i * charge_factor(i)
                                + down_j
                                + down_m;
                            push(
                                &mut cands,
                                vec![i, j, m],
                                score,
                                (charge_i + charge_j + charge_m) / eta,
                            );
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        if !cands.is_empty() {
            cands.sort_by(|a, b| {
                a.score
                    .partial_cmp(&b.score)
                    .unwrap()
                    .then_with(|| a.stations.cmp(&b.stations))
            });
            let best = cands[0].clone();
            let second = cands.into_iter().nth(1);
            return Ok((best, second));
        }
    }
    Err(PreprocessError::Unservable { truck: td.id.clone() })
}

pub fn classify_trucks(
    instance: &Instance,
    sp: &SpMatrix,
    trees: &[SpTree],
) -> Result<Vec<TruckClass>, PreprocessError> {
    let mut classes = Vec::with_capacity(instance.trucks.len());
    for truck in 0..instance.trucks.len() {
        let (best, second_best) =
            candidate_plan(instance, sp, trees, truck, CandidateMode::Solo)?;
        let (follower_best, _) =
            candidate_plan(instance, sp, trees, truck, CandidateMode::Follower)?;
        let group = if best.stations == follower_best.stations {
            TruckGroup::NoDifference
        } else {
            TruckGroup::Difference
        };
        let regret = second_best.as_ref().map_or(0.0, |s| (s.score - best.score).abs());
        classes.push(TruckClass { truck, group, best, second_best, follower_best, regret });
    }
    Ok(classes)
}

/// Builds the warm-start plan: no-difference trucks seed platoons in order
/// of latest feasible departure, difference trucks join when time-feasible
/// and cheaper than going solo, and whatever remains is inserted once more
/// or routed solo.
pub fn build_initial_solution(instance: &Instance, cache: &Cache) -> Plan {
    let mut order: Vec<TruckIdx> = (0..instance.trucks.len()).collect();
    let departure = |k: TruckIdx| {
        instance.trucks[k].latest_arrival_hr - cache.classes[k].best.route_hours
    };
    order.sort_by(|&a, &b| {
        departure(a).partial_cmp(&departure(b)).unwrap().then_with(|| a.cmp(&b))
    });
    let seeds: Vec<TruckIdx> = order
        .iter()
        .copied()
        .filter(|&k| cache.classes[k].group == TruckGroup::NoDifference)
        .collect();
    let difference: Vec<TruckIdx> = order
        .iter()
        .copied()
        .filter(|&k| cache.classes[k].group == TruckGroup::Difference)
        .collect();

    let allow_platoons = instance.params.max_platoon_size >= 2;
    let mut plan = Plan::empty();
    let mut placed: BTreeSet<TruckIdx> = BTreeSet::new();

    for &seed in &seeds {
        // A later seed may fit an already-grown platoon.
        if allow_platoons {
            if let Some(next) = insertion::join_if_cheaper(
                instance,
                cache,
                &plan,
                seed,
                None,
                ChargePolicy::Minimum,
            ) {
                plan = next;
                placed.insert(seed);
                continue;
            }
        }
        let seed_platoon = insertion::next_platoon_id(&plan);
        plan = insertion::insert_solo_truck(instance, cache, &plan, seed, ChargePolicy::Minimum);
        placed.insert(seed);
        if !allow_platoons {
            continue;
        }
        loop {
            let mut added = false;
            for &t in &difference {
                if placed.contains(&t) {
                    continue;
                }
                if let Some(next) = insertion::join_if_cheaper(
                    instance,
                    cache,
                    &plan,
                    t,
                    Some(seed_platoon),
                    ChargePolicy::Minimum,
                ) {
                    plan = next;
                    placed.insert(t);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
    }

    for &t in &difference {
        if placed.contains(&t) {
            continue;
        }
        if allow_platoons {
            if let Some(next) =
                insertion::join_if_cheaper(instance, cache, &plan, t, None, ChargePolicy::Minimum)
            {
                plan = next;
                placed.insert(t);
                continue;
            }
        }
        plan = insertion::insert_solo_truck(instance, cache, &plan, t, ChargePolicy::Minimum);
        placed.insert(t);
    }
    plan
}
