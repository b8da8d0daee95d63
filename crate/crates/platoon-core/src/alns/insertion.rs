//! Insertion (repair) operators: solo reinsertion, pairwise platoon
//! formation, and insertion into existing platoons.
//!
//! Every operator returns a complete plan containing all removed trucks;
//! when a platoon move fails its exact feasibility check the truck falls
//! back to its preprocessed solo candidate, which always fits.

use std::collections::BTreeSet;

use crate::instance::{Instance, TruckIdx};
use crate::network::{path_from_tree, ArcIdx};
use crate::plan::{
    chain_routes, check_feasibility, evaluate, platoon_groups, recompute_charges, ChargePolicy,
    Plan, SegmentRecord,
};
use crate::preprocess::Cache;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Longest shortest-path trips first.
    SpTime,
    /// Cheapest preprocessed charging-and-waiting cost first.
    MinCost,
    /// Largest best-to-second-best gap first.
    Regret,
}

pub fn next_platoon_id(plan: &Plan) -> u32 {
    plan.max_platoon_id().map_or(0, |m| m + 1)
}

fn solo_segments(cache: &Cache, truck: TruckIdx, platoon: u32) -> Vec<SegmentRecord> {
    cache.classes[truck]
        .best
        .route
        .iter()
        .map(|&arc| SegmentRecord {
            truck,
            platoon,
            leading_ratio: 1.0,
            arc,
            charge_at_head: 0.0,
        })
        .collect()
}

/// Adds `truck` on its best solo candidate route.
pub fn insert_solo_truck(
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    truck: TruckIdx,
    policy: ChargePolicy,
) -> Plan {
    let pid = next_platoon_id(plan);
    let mut segments = plan.segments.clone();
    segments.extend(solo_segments(cache, truck, pid));
    let candidate = Plan::new(segments);
    let (repaired, failed) = recompute_charges(instance, &candidate, &[truck], policy);
    debug_assert!(failed.is_empty(), "solo candidates are servable by construction");
    repaired
}

/// Orders removed trucks for reinsertion under the given criterion.
/// `discount_against` enables the modified-network reading of the min-cost
/// criterion for platoon insertions: arcs already traversed in the partial
/// plan discount a truck's estimate by the follower saving.
fn order_removed(
    instance: &Instance,
    cache: &Cache,
    removed: &[TruckIdx],
    criterion: Criterion,
    discount_against: Option<&Plan>,
) -> Vec<TruckIdx> {
    let mut out: Vec<TruckIdx> = removed.to_vec();
    out.sort_unstable();
    let key = |k: TruckIdx| -> f64 {
        let td = &instance.trucks[k];
        match criterion {
            Criterion::SpTime => -cache.sp.get(td.origin, td.destination),
            Criterion::Regret => -cache.classes[k].regret,
            Criterion::MinCost => {
                let base = cache.classes[k].best.score;
                match discount_against {
                    None => base,
                    Some(plan) => {
                        let covered: BTreeSet<ArcIdx> =
                            plan.segments.iter().map(|s| s.arc).collect();
                        let p = &instance.params;
                        let overlap_hours: f64 = cache.classes[k]
                            .best
                            .route
                            .iter()
                            .filter(|a| covered.contains(a))
                            .map(|&a| instance.network.arc(a).travel_hours)
                            .sum();
                        base - p.platoon_saving_ratio
                            * p.consumption_units_per_hr()
                            * overlap_hours
                            * cache.mean_unit_price
                    }
                }
            }
        }
    };
    out.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap().then_with(|| a.cmp(&b)));
    out
}

/// Greedy route insertion without platooning.
pub fn insert_solo(
    instance: &Instance,
    cache: &Cache,
    partial: &Plan,
    removed: &[TruckIdx],
    criterion: Criterion,
    policy: ChargePolicy,
) -> Plan {
    let mut plan = partial.clone();
    for k in order_removed(instance, cache, removed, criterion, None) {
        plan = insert_solo_truck(instance, cache, &plan, k, policy);
    }
    plan
}

/// Composes origin -> a, the merge arcs, b -> destination into one simple
/// route. Returns the arc list or `None` when a node repeats.
fn compose_via_run(
    instance: &Instance,
    cache: &Cache,
    truck: TruckIdx,
    run: &[ArcIdx],
) -> Option<Vec<ArcIdx>> {
    let td = &instance.trucks[truck];
    let a = instance.network.arc(run[0]).tail;
    let b = instance.network.arc(*run.last().unwrap()).head;
    let head_leg = path_from_tree(&instance.network, &cache.trees[td.origin], a)?;
    let tail_leg = path_from_tree(&instance.network, &cache.trees[b], td.destination)?;
    let mut arcs = head_leg.arcs;
    arcs.extend_from_slice(run);
    arcs.extend_from_slice(&tail_leg.arcs);
    let mut visited = BTreeSet::new();
    visited.insert(td.origin);
    for &ai in &arcs {
        if !visited.insert(instance.network.arc(ai).head) {
            return None;
        }
    }
    Some(arcs)
}

/// Longest contiguous run common to both routes that contains `arc`.
fn shared_run(instance: &Instance, route1: &[ArcIdx], route2: &[ArcIdx], arc: ArcIdx) -> Vec<ArcIdx> {
    let p1 = route1.iter().position(|&a| a == arc).expect("arc on route1");
    let p2 = route2.iter().position(|&a| a == arc).expect("arc on route2");
    let _ = instance;
    let mut start = 0usize;
    for back in 1..=p1.min(p2) {
        if route1[p1 - back] == route2[p2 - back] {
            start = back;
        } else {
            break;
        }
    }
    let mut end = 0usize;
    for fwd in 1..(route1.len() - p1).min(route2.len() - p2) {
        if route1[p1 + fwd] == route2[p2 + fwd] {
            end = fwd;
        } else {
            break;
        }
    }
    route1[p1 - start..=p1 + end].to_vec()
}

/// Builds a two-truck platoon plan merging on `arc` (extended to the longest
/// shared run). Leaders per arc go to the truck with more remaining virtual
/// energy. Returns `None` when routing, charging or the exact feasibility
/// check fails.
fn try_build_pair(
    instance: &Instance,
    cache: &Cache,
    base: &Plan,
    k1: TruckIdx,
    k2: TruckIdx,
    arc: ArcIdx,
    policy: ChargePolicy,
) -> Option<Plan> {
    let route1 = compose_via_run(instance, cache, k1, &[arc])?;
    let route2 = compose_via_run(instance, cache, k2, &[arc])?;
    let run = shared_run(instance, &route1, &route2, arc);

    let pid = next_platoon_id(base);
    let (shared_id, solo1, solo2) = (pid, pid + 1, pid + 2);
    let p = &instance.params;
    let rate = p.consumption_units_per_hr();
    let beta = p.platoon_saving_ratio;
    let cap = p.soc_max * p.battery_units();

    // Virtual energy at the head of the run per truck (no charging), used
    // only to pick leaders.
    let pre_hours = |route: &[ArcIdx]| -> f64 {
        route
            .iter()
            .take_while(|&&a| a != run[0])
            .map(|&a| instance.network.arc(a).travel_hours)
            .sum()
    };
    let mut e1 = cap - rate * pre_hours(&route1);
    let mut e2 = cap - rate * pre_hours(&route2);
    let mut lead1: Vec<bool> = Vec::with_capacity(run.len());
    for &a in &run {
        let t = instance.network.arc(a).travel_hours;
        let first_leads = e1 > e2 || (e1 == e2 && k1 < k2);
        let (lead_cost, follow_cost) = (rate * t, (1.0 - beta) * rate * t);
        if first_leads {
            e1 -= lead_cost;
            e2 -= follow_cost;
        } else {
            e1 -= follow_cost;
            e2 -= lead_cost;
        }
        lead1.push(first_leads);
    }

    let mut segments = base.segments.clone();
    let mut push_route = |truck: TruckIdx, route: &[ArcIdx], solo_id: u32, leads: &dyn Fn(usize) -> f64| {
        let mut run_pos = 0usize;
        for &a in route {
            if run_pos < run.len() && a == run[run_pos] {
                segments.push(SegmentRecord {
                    truck,
                    platoon: shared_id,
                    leading_ratio: leads(run_pos),
                    arc: a,
                    charge_at_head: 0.0,
                });
                run_pos += 1;
            } else {
                segments.push(SegmentRecord {
                    truck,
                    platoon: solo_id,
                    leading_ratio: 1.0,
                    arc: a,
                    charge_at_head: 0.0,
                });
            }
        }
    };
    let lead_flags = lead1.clone();
    push_route(k1, &route1, solo1, &|i| if lead_flags[i] { 1.0 } else { 0.0 });
    push_route(k2, &route2, solo2, &|i| if lead_flags[i] { 0.0 } else { 1.0 });

    let candidate = Plan::new(segments);
    let (candidate, failed) = recompute_charges(instance, &candidate, &[k1, k2], policy);
    if !failed.is_empty() {
        return None;
    }
    check_feasibility(instance, &candidate).is_empty().then_some(candidate)
}

/// Cheap screening gain of merging `k1` and `k2` on `arc` alone, from
/// shortest-path lookups only. Underestimates corridor merges (the shared
/// run may extend beyond one arc), so it ranks candidates rather than
/// filtering them.
fn pair_gain(
    instance: &Instance,
    cache: &Cache,
    k1: TruckIdx,
    k2: TruckIdx,
    arc: ArcIdx,
) -> Option<f64> {
    let p = &instance.params;
    let a = instance.network.arc(arc);
    let t_arc = a.travel_hours;
    let rate = p.consumption_units_per_hr();
    let mut extra_total = 0.0;
    for &k in &[k1, k2] {
        let td = &instance.trucks[k];
        let via = cache.sp.get(td.origin, a.tail) + t_arc + cache.sp.get(a.head, td.destination);
        if !via.is_finite() {
            return None;
        }
        // Rough time screen: driving plus worst-case charging dwell.
        let dwell = (via * rate - p.usable_units()).max(0.0) / p.charge_units_per_hr();
        if via + dwell > td.latest_arrival_hr + 1e-9 {
            return None;
        }
        extra_total += via - cache.sp.get(td.origin, td.destination);
    }
    let labor_saving = (p.leading_wage_per_hr - p.following_wage_per_hr) * t_arc;
    let energy_saving = p.platoon_saving_ratio * rate * t_arc * cache.mean_unit_price;
    let detour_cost =
        extra_total * (p.leading_wage_per_hr + rate * cache.mean_unit_price);
    Some(labor_saving + energy_saving - detour_cost)
}

/// Gain recomputed on the composed routes with the shared run extended to
/// its full length.
fn refined_pair_gain(
    instance: &Instance,
    cache: &Cache,
    k1: TruckIdx,
    k2: TruckIdx,
    arc: ArcIdx,
) -> Option<f64> {
    let route1 = compose_via_run(instance, cache, k1, &[arc])?;
    let route2 = compose_via_run(instance, cache, k2, &[arc])?;
    let run = shared_run(instance, &route1, &route2, arc);
    let p = &instance.params;
    let rate = p.consumption_units_per_hr();
    let run_hours: f64 = run.iter().map(|&a| instance.network.arc(a).travel_hours).sum();
    let mut extra_total = 0.0;
    for (&k, route) in [(&k1, &route1), (&k2, &route2)] {
        let td = &instance.trucks[k];
        let hours: f64 = route.iter().map(|&a| instance.network.arc(a).travel_hours).sum();
        extra_total += hours - cache.sp.get(td.origin, td.destination);
    }
    let saving = (p.leading_wage_per_hr - p.following_wage_per_hr) * run_hours
        + p.platoon_saving_ratio * rate * run_hours * cache.mean_unit_price;
    let detour_cost = extra_total * (p.leading_wage_per_hr + rate * cache.mean_unit_price);
    Some(saving - detour_cost)
}

/// Trucks whose every group in `plan` is a singleton.
fn solo_trucks(plan: &Plan) -> Vec<TruckIdx> {
    let groups = platoon_groups(plan);
    let mut multi: BTreeSet<TruckIdx> = BTreeSet::new();
    for members in groups.values() {
        if members.len() >= 2 {
            for &i in members {
                multi.insert(plan.segments[i].truck);
            }
        }
    }
    plan.trucks().into_iter().filter(|t| !multi.contains(t)).collect()
}

/// Greedy partial route insertion with platooning: pairs removed trucks
/// with each other or with solo incumbents on the best shared arc.
pub fn insert_pairwise(
    instance: &Instance,
    cache: &Cache,
    partial: &Plan,
    removed: &[TruckIdx],
    criterion: Criterion,
    policy: ChargePolicy,
) -> Plan {
    if instance.params.max_platoon_size < 2 {
        return insert_solo(instance, cache, partial, removed, criterion, policy);
    }
    let mut plan = partial.clone();
    let ordered = order_removed(instance, cache, removed, criterion, Some(partial));
    let mut pending: BTreeSet<TruckIdx> = ordered.iter().copied().collect();
    let mut incumbents: BTreeSet<TruckIdx> = solo_trucks(&plan).into_iter().collect();

    for &k1 in &ordered {
        if !pending.contains(&k1) {
            continue;
        }
        pending.remove(&k1);
        let partners: Vec<TruckIdx> = pending
            .iter()
            .copied()
            .chain(incumbents.iter().copied())
            .filter(|&k| k != k1)
            .collect();
        let mut options: Vec<(f64, TruckIdx, ArcIdx)> = Vec::new();
        for &k2 in &partners {
            for arc in 0..instance.network.arc_count() {
                if let Some(gain) = pair_gain(instance, cache, k1, k2, arc) {
                    options.push((gain, k2, arc));
                }
            }
        }
        options.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
        });
        // Re-score the leading candidates on their composed routes; only
        // merges that still look profitable get the exact build.
        let mut refined: Vec<(f64, TruckIdx, ArcIdx)> = options
            .iter()
            .take(24)
            .filter_map(|&(_, k2, arc)| {
                refined_pair_gain(instance, cache, k1, k2, arc).map(|g| (g, k2, arc))
            })
            .filter(|&(g, _, _)| g > 1e-9)
            .collect();
        refined.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
        });
        let mut placed = false;
        for &(_, k2, arc) in refined.iter().take(8) {
            let base = if incumbents.contains(&k2) { plan.remove_trucks(&[k2]) } else { plan.clone() };
            if let Some(next) = try_build_pair(instance, cache, &base, k1, k2, arc, policy) {
                plan = next;
                pending.remove(&k2);
                incumbents.remove(&k2);
                placed = true;
                break;
            }
        }
        if !placed {
            plan = insert_solo_truck(instance, cache, &plan, k1, policy);
            incumbents.insert(k1);
        }
    }
    plan
}

/// One existing platoon's joinable structure: its id and the maximal
/// contiguous runs of arcs on which at least two members travel together.
struct PlatoonEntity {
    id: u32,
    runs: Vec<Vec<ArcIdx>>,
}

fn platoon_entities(
    instance: &Instance,
    plan: &Plan,
    include_singletons: bool,
) -> Vec<PlatoonEntity> {
    let groups = platoon_groups(plan);
    let min_members = if include_singletons { 1 } else { 2 };
    let mut ids: Vec<u32> = Vec::new();
    for (&(_, pid), members) in &groups {
        if members.len() >= min_members && !ids.contains(&pid) {
            ids.push(pid);
        }
    }
    let Ok(routes) = chain_routes(instance, plan) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for pid in ids {
        let shared: BTreeSet<ArcIdx> = groups
            .iter()
            .filter(|(&(_, g), members)| g == pid && members.len() >= min_members)
            .map(|(&(arc, _), _)| arc)
            .collect();
        if shared.is_empty() {
            continue;
        }
        // Order the shared arcs along the member route that covers most of
        // them (lowest truck id among ties).
        let mut best: Option<(usize, TruckIdx, Vec<ArcIdx>)> = None;
        for (&truck, chain) in &routes.order {
            let on_route: Vec<ArcIdx> = chain
                .iter()
                .map(|&si| plan.segments[si].arc)
                .filter(|a| shared.contains(a))
                .collect();
            let count = on_route.len();
            if count == 0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((c, t, _)) => count > *c || (count == *c && truck < *t),
            };
            if better {
                best = Some((count, truck, on_route));
            }
        }
        let Some((_, truck, _)) = best else { continue };
        // Split into contiguous runs along that member's route.
        let chain = &routes.order[&truck];
        let mut runs: Vec<Vec<ArcIdx>> = Vec::new();
        let mut current: Vec<ArcIdx> = Vec::new();
        for &si in chain {
            let arc = plan.segments[si].arc;
            if shared.contains(&arc) {
                current.push(arc);
            } else if !current.is_empty() {
                runs.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            runs.push(current);
        }
        out.push(PlatoonEntity { id: pid, runs });
    }
    out
}

/// Candidate joins for `truck`, best heuristic score first.
fn join_options(
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    truck: TruckIdx,
    restrict: Option<u32>,
    include_singletons: bool,
) -> Vec<(f64, u32, Vec<ArcIdx>)> {
    let p = &instance.params;
    let rate = p.consumption_units_per_hr();
    let td = &instance.trucks[truck];
    let groups = platoon_groups(plan);
    let arc_member_count = |arc: ArcIdx, pid: u32| {
        groups.get(&(arc, pid)).map_or(0, |m| m.len())
    };
    let mut options = Vec::new();
    for entity in platoon_entities(instance, plan, include_singletons) {
        if restrict.is_some_and(|r| r != entity.id) {
            continue;
        }
        for run in &entity.runs {
            for i in 0..run.len() {
                for j in i..run.len() {
                    let sub = &run[i..=j];
                    if sub
                        .iter()
                        .any(|&a| arc_member_count(a, entity.id) + 1 > p.max_platoon_size)
                    {
                        continue;
                    }
                    let a = instance.network.arc(sub[0]).tail;
                    let b = instance.network.arc(*sub.last().unwrap()).head;
                    let via = cache.sp.get(td.origin, a)
                        + sub.iter().map(|&x| instance.network.arc(x).travel_hours).sum::<f64>()
                        + cache.sp.get(b, td.destination);
                    if !via.is_finite() {
                        continue;
                    }
                    let dwell =
                        (via * rate - p.usable_units()).max(0.0) / p.charge_units_per_hr();
                    if via + dwell > td.latest_arrival_hr + 1e-9 {
                        continue;
                    }
                    let overlap: f64 =
                        sub.iter().map(|&x| instance.network.arc(x).travel_hours).sum();
                    let extra = via - cache.sp.get(td.origin, td.destination);
                    // Hybrid score: overlap labor relief, platoon energy
                    // saving, incremental detour cost - equal weights.
                    let score = (p.leading_wage_per_hr - p.following_wage_per_hr) * overlap
                        + p.platoon_saving_ratio * rate * overlap * cache.mean_unit_price
                        - extra * (p.leading_wage_per_hr + rate * cache.mean_unit_price);
                    options.push((score, entity.id, sub.to_vec()));
                }
            }
        }
    }
    options.sort_by(|x, y| {
        y.0.partial_cmp(&x.0).unwrap().then_with(|| (x.1, x.2.clone()).cmp(&(y.1, y.2.clone())))
    });
    options
}

/// Tries to add `truck` as a follower onto an existing platoon run.
fn try_join(
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    truck: TruckIdx,
    pid: u32,
    run: &[ArcIdx],
    policy: ChargePolicy,
) -> Option<Plan> {
    let route = compose_via_run(instance, cache, truck, run)?;
    let solo_id = next_platoon_id(plan);
    let mut segments = plan.segments.clone();
    let run_set: BTreeSet<ArcIdx> = run.iter().copied().collect();
    for &a in &route {
        let on_run = run_set.contains(&a);
        segments.push(SegmentRecord {
            truck,
            platoon: if on_run { pid } else { solo_id },
            leading_ratio: if on_run { 0.0 } else { 1.0 },
            arc: a,
            charge_at_head: 0.0,
        });
    }
    let candidate = Plan::new(segments);
    let (candidate, failed) = recompute_charges(instance, &candidate, &[truck], policy);
    if !failed.is_empty() {
        return None;
    }
    check_feasibility(instance, &candidate).is_empty().then_some(candidate)
}

/// Best feasible join for `truck` among the highest-scoring options, or
/// `None` when nothing fits.
pub fn best_platoon_join(
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    truck: TruckIdx,
    restrict: Option<u32>,
    include_singletons: bool,
    policy: ChargePolicy,
) -> Option<Plan> {
    for (_, pid, run) in
        join_options(instance, cache, plan, truck, restrict, include_singletons)
            .into_iter()
            .take(10)
    {
        if let Some(next) = try_join(instance, cache, plan, truck, pid, &run, policy) {
            return Some(next);
        }
    }
    None
}

/// Joins `truck` to a platoon only when that beats inserting it solo.
pub fn join_if_cheaper(
    instance: &Instance,
    cache: &Cache,
    plan: &Plan,
    truck: TruckIdx,
    restrict: Option<u32>,
    policy: ChargePolicy,
) -> Option<Plan> {
    let joined = best_platoon_join(instance, cache, plan, truck, restrict, true, policy)?;
    let joined_cost = evaluate(instance, &joined).ok()?.total;
    let solo = insert_solo_truck(instance, cache, plan, truck, policy);
    let solo_cost = evaluate(instance, &solo).ok()?.total;
    (joined_cost < solo_cost - 1e-9).then_some(joined)
}

/// Partial route insertion into existing platoons, solo fallback.
pub fn insert_into_platoon(
    instance: &Instance,
    cache: &Cache,
    partial: &Plan,
    removed: &[TruckIdx],
    policy: ChargePolicy,
) -> Plan {
    let mut plan = partial.clone();
    let mut ordered: Vec<TruckIdx> = removed.to_vec();
    ordered.sort_unstable();
    for k in ordered {
        if instance.params.max_platoon_size >= 2 {
            if let Some(next) =
                best_platoon_join(instance, cache, &plan, k, None, false, policy)
            {
                plan = next;
                continue;
            }
        }
        plan = insert_solo_truck(instance, cache, &plan, k, policy);
    }
    plan
}
