//! Discretized brute-force solver for desk-scale instances: enumerates
//! simple routes, per-arc platoon groupings, leading-ratio grids and
//! charge-amount grids, evaluating every combination with the exact plan
//! evaluator. Exact within its grid; refuses instances beyond its size
//! guards.

use thiserror::Error;

use crate::instance::{Instance, TruckIdx};
use crate::network::ArcIdx;
use crate::plan::{
    check_feasibility, evaluate, refit_destination_charges, CostBreakdown, Plan, SegmentRecord,
};

#[derive(Debug, Clone, Copy)]
pub struct BruteForceOptions {
    /// Leading-ratio grid step (ratios are multiples of this).
    pub h_step: f64,
    /// Charge-amount grid step as a fraction of battery capacity.
    pub charge_step: f64,
    /// Restrict ratios to {0, 1}.
    pub binary_leading_ratios: bool,
    pub max_paths_per_truck: usize,
    pub max_evaluations: u64,
}

impl Default for BruteForceOptions {
    fn default() -> Self {
        Self {
            h_step: 0.5,
            charge_step: 0.25,
            binary_leading_ratios: false,
            max_paths_per_truck: 2000,
            max_evaluations: 50_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum BruteForceError {
    #[error("instance has {0} trucks; the oracle accepts at most 3")]
    TooManyTrucks(usize),
    #[error("instance has {0} nodes; the oracle accepts at most 12")]
    TooManyNodes(usize),
    #[error("truck {0} has no route within its deadline")]
    Unroutable(TruckIdx),
    #[error("enumeration exceeded {0} evaluations")]
    SearchSpaceTooLarge(u64),
    #[error("no feasible plan exists within the grid")]
    Infeasible,
}

/// All simple o->d paths whose pure driving time fits the deadline.
fn simple_paths(
    instance: &Instance,
    truck: TruckIdx,
    cap: usize,
) -> Result<Vec<Vec<ArcIdx>>, BruteForceError> {
    let td = &instance.trucks[truck];
    let net = &instance.network;
    let mut out: Vec<Vec<ArcIdx>> = Vec::new();
    let mut stack: Vec<ArcIdx> = Vec::new();
    let mut visited = vec![false; net.node_count()];
    visited[td.origin] = true;
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        instance: &Instance,
        at: usize,
        dest: usize,
        deadline: f64,
        t: f64,
        stack: &mut Vec<ArcIdx>,
        visited: &mut Vec<bool>,
        out: &mut Vec<Vec<ArcIdx>>,
        cap: usize,
    ) {
        if out.len() > cap {
            return;
        }
        if at == dest {
            out.push(stack.clone());
            return;
        }
        for &ai in instance.network.out_arcs(at) {
            let arc = instance.network.arc(ai);
            if visited[arc.head] || t + arc.travel_hours > deadline + 1e-9 {
                continue;
            }
            visited[arc.head] = true;
            stack.push(ai);
            dfs(instance, arc.head, dest, deadline, t + arc.travel_hours, stack, visited, out, cap);
            stack.pop();
            visited[arc.head] = false;
        }
    }
    dfs(
        instance,
        td.origin,
        td.destination,
        td.latest_arrival_hr,
        0.0,
        &mut stack,
        &mut visited,
        &mut out,
        cap,
    );
    if out.len() > cap {
        return Err(BruteForceError::SearchSpaceTooLarge(cap as u64));
    }
    if out.is_empty() {
        return Err(BruteForceError::Unroutable(truck));
    }
    Ok(out)
}

/// Partitions of `items` into non-empty groups of size at most `cap`.
fn partitions(items: &[TruckIdx], cap: usize) -> Vec<Vec<Vec<TruckIdx>>> {
    fn rec(rest: &[TruckIdx], cap: usize) -> Vec<Vec<Vec<TruckIdx>>> {
        if rest.is_empty() {
            return vec![vec![]];
        }
        let first = rest[0];
        let tail = &rest[1..];
        let mut out = Vec::new();
        for mut p in rec(tail, cap) {
            // First element joins each existing group or starts its own.
            for g in 0..p.len() {
                if p[g].len() < cap {
                    let mut q = p.clone();
                    q[g].insert(0, first);
                    out.push(q);
                }
            }
            p.insert(0, vec![first]);
            out.push(p);
        }
        out
    }
    rec(items, cap)
}

/// Ratio assignments for a group: compositions of 1.0 in `h_step`
/// increments (or one-hot vectors in binary mode).
fn ratio_grids(size: usize, h_step: f64, binary: bool) -> Vec<Vec<f64>> {
    if size == 1 {
        return vec![vec![1.0]];
    }
    if binary {
        return (0..size)
            .map(|lead| (0..size).map(|i| if i == lead { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    let steps = (1.0 / h_step).round() as usize;
    fn rec(remaining: usize, slots: usize, h_step: f64) -> Vec<Vec<f64>> {
        if slots == 1 {
            return vec![vec![remaining as f64 * h_step]];
        }
        let mut out = Vec::new();
        for take in 0..=remaining {
            for mut rest in rec(remaining - take, slots - 1, h_step) {
                rest.insert(0, take as f64 * h_step);
                out.push(rest);
            }
        }
        out
    }
    rec(steps, size, h_step)
}

/// Charge-amount grid values: multiples of `charge_step * Q` up to the cap.
fn charge_values(instance: &Instance, charge_step: f64) -> Vec<f64> {
    let q = instance.params.battery_units();
    let cap = instance.params.soc_max * q;
    let mut out = vec![0.0];
    let mut k = 1usize;
    loop {
        let amount = k as f64 * charge_step * q;
        if amount > cap + 1e-9 {
            break;
        }
        out.push(amount.min(cap));
        k += 1;
    }
    out
}

struct TruckLayout {
    /// Segment indexes (into the assembled plan) in route order.
    segments: Vec<usize>,
    /// Positions within `segments` whose head allows en-route charging.
    charge_positions: Vec<usize>,
}

/// Enumerates SOC-feasible charge combinations for one truck given fixed
/// consumption per segment. `charges[i]` applies at the head of segment i.
#[allow(clippy::needless_range_loop)]
fn feasible_charge_combos(
    instance: &Instance,
    consumption: &[f64],
    charge_positions: &[usize],
    values: &[f64],
) -> Vec<Vec<f64>> {
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let floor = p.soc_min * p.battery_units();
    let n = consumption.len();
    let mut out = Vec::new();
    // DFS over charging positions with SOC propagation between them.
    #[allow(clippy::too_many_arguments)]
    fn walk(
        consumption: &[f64],
        charge_positions: &[usize],
        values: &[f64],
        cap: f64,
        floor: f64,
        pos_idx: usize,
        from_seg: usize,
        energy_in: f64,
        acc: &mut Vec<f64>,
        out: &mut Vec<Vec<f64>>,
        n: usize,
    ) {
        let until = if pos_idx < charge_positions.len() { charge_positions[pos_idx] } else { n - 1 };
        let mut energy = energy_in;
        for seg in from_seg..=until {
            energy -= consumption[seg];
            if energy < floor - 1e-9 {
                return;
            }
        }
        if pos_idx == charge_positions.len() {
            // Tail reached: remaining segments after `until` were consumed
            // in the loop above only up to `until`; consume the rest.
            let mut e = energy;
            for seg in (until + 1)..n {
                e -= consumption[seg];
                if e < floor - 1e-9 {
                    return;
                }
            }
            out.push(acc.clone());
            return;
        }
        // Grid values that fit the headroom, plus the fill-to-capacity
        // endpoint (otherwise caps between grid points make tight legs
        // spuriously infeasible).
        let headroom = cap - energy;
        let mut candidates: Vec<f64> =
            values.iter().copied().filter(|&v| v <= headroom + 1e-9).collect();
        if headroom > 1e-9 && candidates.iter().all(|&v| (v - headroom).abs() > 1e-9) {
            candidates.push(headroom);
        }
        for val in candidates {
            acc.push(val);
            walk(
                consumption,
                charge_positions,
                values,
                cap,
                floor,
                pos_idx + 1,
                until + 1,
                energy + val,
                acc,
                out,
                n,
            );
            acc.pop();
        }
    }
    let mut acc = Vec::new();
    walk(consumption, charge_positions, values, cap, floor, 0, 0, cap, &mut acc, &mut out, n);
    out
}

/// Exhaustive search over the discretized plan space. Returns the cheapest
/// feasible plan and its cost.
pub fn brute_force_exact(
    instance: &Instance,
    opts: &BruteForceOptions,
) -> Result<(Plan, CostBreakdown), BruteForceError> {
    let n_trucks = instance.trucks.len();
    if n_trucks > 3 {
        return Err(BruteForceError::TooManyTrucks(n_trucks));
    }
    if instance.network.node_count() > 12 {
        return Err(BruteForceError::TooManyNodes(instance.network.node_count()));
    }
    let mut paths: Vec<Vec<Vec<ArcIdx>>> = Vec::with_capacity(n_trucks);
    for k in 0..n_trucks {
        paths.push(simple_paths(instance, k, opts.max_paths_per_truck)?);
    }
    let values = charge_values(instance, opts.charge_step);
    let capacity = instance.params.max_platoon_size;
    let rate = instance.params.consumption_units_per_hr();
    let beta = instance.params.platoon_saving_ratio;

    let mut best: Option<(Plan, CostBreakdown)> = None;
    let mut evaluations: u64 = 0;

    // Odometer over path choices.
    let mut choice = vec![0usize; n_trucks];
    'paths: loop {
        let routes: Vec<&Vec<ArcIdx>> = (0..n_trucks).map(|k| &paths[k][choice[k]]).collect();
        // Arcs used by two or more trucks, in index order.
        let mut shared: Vec<(ArcIdx, Vec<TruckIdx>)> = Vec::new();
        for a in 0..instance.network.arc_count() {
            let users: Vec<TruckIdx> =
                (0..n_trucks).filter(|&k| routes[k].contains(&a)).collect();
            if users.len() >= 2 {
                shared.push((a, users));
            }
        }
        // Partition choices per shared arc.
        let arc_partitions: Vec<Vec<Vec<Vec<TruckIdx>>>> =
            shared.iter().map(|(_, users)| partitions(users, capacity)).collect();
        let mut part_idx = vec![0usize; shared.len()];
        loop {
            // Ratio grids per multi-truck group of this partition combo.
            // grouping[arc_pos] = list of groups (each a list of trucks).
            let grouping: Vec<&Vec<Vec<TruckIdx>>> =
                (0..shared.len()).map(|i| &arc_partitions[i][part_idx[i]]).collect();
            // Collect multi groups for ratio enumeration.
            let mut multi_groups: Vec<(usize, usize)> = Vec::new(); // (arc_pos, group_idx)
            for (ap, groups) in grouping.iter().enumerate() {
                for (gi, g) in groups.iter().enumerate() {
                    if g.len() >= 2 {
                        multi_groups.push((ap, gi));
                    }
                }
            }
            let grids: Vec<Vec<Vec<f64>>> = multi_groups
                .iter()
                .map(|&(ap, gi)| {
                    ratio_grids(
                        grouping[ap][gi].len(),
                        opts.h_step,
                        opts.binary_leading_ratios,
                    )
                })
                .collect();
            let mut grid_idx = vec![0usize; multi_groups.len()];
            loop {
                evaluations += 1;
                if evaluations > opts.max_evaluations {
                    return Err(BruteForceError::SearchSpaceTooLarge(opts.max_evaluations));
                }
                if let Some(candidate) = assemble_and_search(
                    instance,
                    &routes,
                    &shared,
                    &grouping,
                    &multi_groups,
                    &grids,
                    &grid_idx,
                    &values,
                    rate,
                    beta,
                    &mut evaluations,
                    opts,
                    &mut best,
                )? {
                    best = Some(candidate);
                }
                // Advance ratio odometer.
                let mut g = 0;
                loop {
                    if g == grid_idx.len() {
                        break;
                    }
                    grid_idx[g] += 1;
                    if grid_idx[g] < grids[g].len() {
                        break;
                    }
                    grid_idx[g] = 0;
                    g += 1;
                }
                if grid_idx.iter().all(|&i| i == 0) {
                    break;
                }
            }
            // Advance partition odometer.
            let mut i = 0;
            loop {
                if i == part_idx.len() {
                    break;
                }
                part_idx[i] += 1;
                if part_idx[i] < arc_partitions[i].len() {
                    break;
                }
                part_idx[i] = 0;
                i += 1;
            }
            if part_idx.iter().all(|&i| i == 0) {
                break;
            }
        }
        // Advance path odometer.
        let mut k = 0;
        loop {
            if k == n_trucks {
                break 'paths;
            }
            choice[k] += 1;
            if choice[k] < paths[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
    best.ok_or(BruteForceError::Infeasible)
}

#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
fn assemble_and_search(
    instance: &Instance,
    routes: &[&Vec<ArcIdx>],
    shared: &[(ArcIdx, Vec<TruckIdx>)],
    grouping: &[&Vec<Vec<TruckIdx>>],
    multi_groups: &[(usize, usize)],
    grids: &[Vec<Vec<f64>>],
    grid_idx: &[usize],
    values: &[f64],
    rate: f64,
    beta: f64,
    evaluations: &mut u64,
    opts: &BruteForceOptions,
    best: &mut Option<(Plan, CostBreakdown)>,
) -> Result<Option<(Plan, CostBreakdown)>, BruteForceError> {
    let n_trucks = routes.len();
    // Resolve (arc, truck) -> (platoon id, ratio, group size).
    let mut assignment: std::collections::HashMap<(ArcIdx, TruckIdx), (u32, f64, usize)> =
        std::collections::HashMap::new();
    for (ap, &(arc, _)) in shared.iter().enumerate() {
        for (gi, group) in grouping[ap].iter().enumerate() {
            let pid = (arc as u32) * 4 + gi as u32 + 1000;
            let ratios: Vec<f64> = if group.len() == 1 {
                vec![1.0]
            } else {
                let slot = multi_groups
                    .iter()
                    .position(|&(a, g)| a == ap && g == gi)
                    .expect("multi group registered");
                grids[slot][grid_idx[slot]].clone()
            };
            for (i, &truck) in group.iter().enumerate() {
                assignment.insert((arc, truck), (pid, ratios[i], group.len()));
            }
        }
    }

    // Build per-truck segment templates and consumption.
    let mut segments: Vec<SegmentRecord> = Vec::new();
    let mut layouts: Vec<TruckLayout> = Vec::new();
    for k in 0..n_trucks {
        let mut seg_ids = Vec::new();
        let mut charge_positions = Vec::new();
        for (pos, &arc) in routes[k].iter().enumerate() {
            let (pid, ratio, _size) = assignment
                .get(&(arc, k))
                .copied()
                .unwrap_or(((arc as u32) * 4 + 4000 + k as u32, 1.0, 1));
            let si = segments.len();
            segments.push(SegmentRecord {
                truck: k,
                platoon: pid,
                leading_ratio: ratio,
                arc,
                charge_at_head: 0.0,
            });
            seg_ids.push(si);
            let head = instance.network.arc(arc).head;
            if pos + 1 < routes[k].len() && instance.can_charge(k, head) {
                charge_positions.push(pos);
            }
        }
        layouts.push(TruckLayout { segments: seg_ids, charge_positions });
    }

    // Per-truck consumption and feasible charge combos.
    let mut combos: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n_trucks);
    for k in 0..n_trucks {
        let consumption: Vec<f64> = routes[k]
            .iter()
            .map(|&arc| {
                let t = instance.network.arc(arc).travel_hours;
                let (_, ratio, size) =
                    assignment.get(&(arc, k)).copied().unwrap_or((0, 1.0, 1));
                if size <= 1 {
                    rate * t
                } else {
                    rate * t * (ratio + (1.0 - beta) * (1.0 - ratio))
                }
            })
            .collect();
        let c = feasible_charge_combos(instance, &consumption, &layouts[k].charge_positions, values);
        if c.is_empty() {
            return Ok(None);
        }
        combos.push(c);
    }

    // Cartesian product over per-truck charge combos.
    let mut pick = vec![0usize; n_trucks];
    let mut local_best: Option<(Plan, CostBreakdown)> = None;
    loop {
        *evaluations += 1;
        if *evaluations > opts.max_evaluations {
            return Err(BruteForceError::SearchSpaceTooLarge(opts.max_evaluations));
        }
        let mut segs = segments.clone();
        for k in 0..n_trucks {
            let combo = &combos[k][pick[k]];
            for (ci, &pos) in layouts[k].charge_positions.iter().enumerate() {
                segs[layouts[k].segments[pos]].charge_at_head = combo[ci];
            }
        }
        let plan = refit_destination_charges(instance, &Plan::new(segs));
        if check_feasibility(instance, &plan).is_empty() {
            let cost = evaluate(instance, &plan).expect("feasible plan evaluates");
            let incumbent = local_best
                .as_ref()
                .map(|(_, c)| c.total)
                .unwrap_or(f64::INFINITY)
                .min(best.as_ref().map(|(_, c)| c.total).unwrap_or(f64::INFINITY));
            if cost.total < incumbent - 1e-12 {
                local_best = Some((plan, cost));
            }
        }
        let mut k = 0;
        loop {
            if k == n_trucks {
                return Ok(local_best);
            }
            pick[k] += 1;
            if pick[k] < combos[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}
