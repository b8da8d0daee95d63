//! Removal (destroy) operators. Each returns the partial plan plus the
//! removed truck ids, or `None` when the operator has no candidates and the
//! selection should retry with another operator.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::instance::{Instance, TruckIdx};
use crate::plan::{
    chain_routes, derive_schedule_chained, platoon_groups, recompute_charges, ChargePolicy, Plan,
};
use crate::preprocess::Cache;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalOp {
    Worst,
    Random,
    PlatoonNonExchange,
    PlatoonAny,
    Exchanged,
}

impl RemovalOp {
    pub fn name(self) -> &'static str {
        match self {
            RemovalOp::Worst => "remove-worst",
            RemovalOp::Random => "remove-random",
            RemovalOp::PlatoonNonExchange => "remove-platoon-nonexchange",
            RemovalOp::PlatoonAny => "remove-platoon",
            RemovalOp::Exchanged => "remove-exchanged",
        }
    }
}

/// Removes the trucks and re-floors the charges of survivors whose platoon
/// groups changed. Survivors that can no longer cover a leg at their new
/// consumption rate cascade into the removed set.
pub fn remove_and_repair(
    instance: &Instance,
    plan: &Plan,
    removed: Vec<TruckIdx>,
) -> (Plan, Vec<TruckIdx>) {
    let mut removed: BTreeSet<TruckIdx> = removed.into_iter().collect();
    loop {
        let removed_vec: Vec<TruckIdx> = removed.iter().copied().collect();
        let partial = plan.remove_trucks(&removed_vec);
        // Survivors that shared a group with any removed truck.
        let mut affected: BTreeSet<TruckIdx> = BTreeSet::new();
        for members in platoon_groups(plan).values() {
            let hit = members.iter().any(|&i| removed.contains(&plan.segments[i].truck));
            if hit {
                for &i in members {
                    let t = plan.segments[i].truck;
                    if !removed.contains(&t) {
                        affected.insert(t);
                    }
                }
            }
        }
        let affected: Vec<TruckIdx> = affected.into_iter().collect();
        let (repaired, failed) =
            recompute_charges(instance, &partial, &affected, ChargePolicy::Cheapest);
        if failed.is_empty() {
            return (repaired, removed_vec);
        }
        removed.extend(failed);
    }
}

/// Per-truck share of the current plan cost, destination recharge excluded:
/// en-route charging, in-vehicle labor at the truck's designated role, and
/// idle wage at its intermediate stops.
fn truck_costs(instance: &Instance, plan: &Plan) -> BTreeMap<TruckIdx, f64> {
    let mut costs: BTreeMap<TruckIdx, f64> = BTreeMap::new();
    let Ok(routes) = chain_routes(instance, plan) else {
        return costs;
    };
    let Ok(schedule) = derive_schedule_chained(instance, plan, &routes) else {
        return costs;
    };
    let p = &instance.params;
    for (&truck, visits) in &schedule.visits {
        let mut c = 0.0;
        for (i, v) in visits.iter().enumerate() {
            if i + 1 < visits.len() {
                c += v.charge_units * instance.unit_price(v.node);
            }
            if i > 0 && i + 1 < visits.len() {
                c += p.idle_wage_per_hr * v.dwell_hr;
            }
        }
        costs.insert(truck, c);
    }
    for members in platoon_groups(plan).values() {
        let leader = members
            .iter()
            .copied()
            .max_by(|&a, &b| {
                plan.segments[a]
                    .leading_ratio
                    .partial_cmp(&plan.segments[b].leading_ratio)
                    .unwrap()
                    .then_with(|| plan.segments[b].truck.cmp(&plan.segments[a].truck))
            })
            .expect("non-empty group");
        for &i in members {
            let s = &plan.segments[i];
            let hours = instance.network.arc(s.arc).travel_hours;
            let wage =
                if i == leader { p.leading_wage_per_hr } else { p.following_wage_per_hr };
            *costs.entry(s.truck).or_insert(0.0) += wage * hours;
        }
    }
    costs
}

/// Multi-truck platoon entities: id, member trucks, and the hours actually
/// traveled with at least two members.
struct Entity {
    members: BTreeSet<TruckIdx>,
    shared_hours: f64,
}

fn entities(instance: &Instance, plan: &Plan) -> Vec<Entity> {
    let groups = platoon_groups(plan);
    let mut by_id: BTreeMap<u32, Entity> = BTreeMap::new();
    for (&(arc, pid), members) in &groups {
        if members.len() < 2 {
            continue;
        }
        let e = by_id
            .entry(pid)
            .or_insert(Entity { members: BTreeSet::new(), shared_hours: 0.0 });
        for &i in members {
            e.members.insert(plan.segments[i].truck);
        }
        e.shared_hours += instance.network.arc(arc).travel_hours;
    }
    by_id.into_values().collect()
}

fn roulette<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub fn apply_removal<R: Rng>(
    op: RemovalOp,
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    rng: &mut R,
    kappa: usize,
) -> Option<(Plan, Vec<TruckIdx>)> {
    let all: Vec<TruckIdx> = plan.trucks();
    if all.is_empty() {
        return None;
    }
    let kappa = kappa.min(all.len());
    match op {
        RemovalOp::Worst => {
            let costs = truck_costs(instance, plan);
            let mut detours: Vec<(TruckIdx, f64)> = all
                .iter()
                .map(|&k| {
                    let current = costs.get(&k).copied().unwrap_or(0.0);
                    (k, current - cache.classes[k].best.score)
                })
                .collect();
            detours.sort_by(|a, b| {
                b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
            });
            let removed: Vec<TruckIdx> = detours.iter().take(kappa).map(|x| x.0).collect();
            Some(remove_and_repair(instance, plan, removed))
        }
        RemovalOp::Random => {
            let mut pool = all.clone();
            let mut removed = Vec::with_capacity(kappa);
            for _ in 0..kappa {
                let at = rng.random_range(0..pool.len());
                removed.push(pool.swap_remove(at));
            }
            Some(remove_and_repair(instance, plan, removed))
        }
        RemovalOp::PlatoonNonExchange => {
            let ents = entities(instance, plan);
            let multi_count = |t: TruckIdx| ents.iter().filter(|e| e.members.contains(&t)).count();
            let eligible: Vec<&Entity> = ents
                .iter()
                .filter(|e| e.members.iter().all(|&t| multi_count(t) == 1))
                .collect();
            if eligible.is_empty() {
                return None;
            }
            let weights: Vec<f64> = eligible
                .iter()
                .map(|e| 1.0 / (e.members.len() as f64 * e.shared_hours.max(1e-9)))
                .collect();
            let pick = roulette(&weights, rng);
            let removed: Vec<TruckIdx> = eligible[pick].members.iter().copied().collect();
            Some(remove_and_repair(instance, plan, removed))
        }
        RemovalOp::PlatoonAny => {
            let ents = entities(instance, plan);
            if ents.is_empty() {
                // Fall back to removing one singleton platoon.
                let at = rng.random_range(0..all.len());
                return Some(remove_and_repair(instance, plan, vec![all[at]]));
            }
            let weights: Vec<f64> =
                ents.iter().map(|e| 1.0 / e.members.len() as f64).collect();
            let pick = roulette(&weights, rng);
            let removed: Vec<TruckIdx> = ents[pick].members.iter().copied().collect();
            Some(remove_and_repair(instance, plan, removed))
        }
        RemovalOp::Exchanged => {
            let mut working = plan.clone();
            let mut removed: Vec<TruckIdx> = Vec::new();
            while removed.len() < kappa {
                let ents = entities(instance, &working);
                let counts: Vec<(TruckIdx, usize)> = working
                    .trucks()
                    .into_iter()
                    .map(|t| (t, ents.iter().filter(|e| e.members.contains(&t)).count()))
                    .filter(|&(_, c)| c >= 2)
                    .collect();
                if counts.is_empty() {
                    break;
                }
                let weights: Vec<f64> =
                    counts.iter().map(|&(_, c)| (c - 1) as f64).collect();
                let pick = roulette(&weights, rng);
                let truck = counts[pick].0;
                removed.push(truck);
                working = working.remove_trucks(&[truck]);
            }
            if removed.is_empty() {
                return None;
            }
            Some(remove_and_repair(instance, plan, removed))
        }
    }
}
