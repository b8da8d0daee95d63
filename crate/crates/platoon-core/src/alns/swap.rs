//! Swapping operators: charging-amount perturbation and leading-ratio
//! transfers. Both re-check the whole plan and hand back the original when
//! the perturbed plan is infeasible.

use rand::Rng;

use crate::instance::{Instance, TruckIdx};
use crate::plan::{
    chain_routes, check_feasibility, platoon_groups, recompute_charges, refit_destination_charges,
    ChargePolicy, Plan, FEAS_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapOp {
    ChargeAmount,
    LeadingRatio,
}

impl SwapOp {
    pub fn name(self) -> &'static str {
        match self {
            SwapOp::ChargeAmount => "swap-charge",
            SwapOp::LeadingRatio => "swap-ratio",
        }
    }
}

pub struct SwapOutcome {
    pub plan: Plan,
    pub changed: bool,
    /// The perturbation produced an infeasible plan and was rolled back.
    pub violated: bool,
}

fn unchanged(plan: &Plan) -> SwapOutcome {
    SwapOutcome { plan: plan.clone(), changed: false, violated: false }
}

/// Arrival energies along one truck's chained route, in units.
fn energy_trace(instance: &Instance, plan: &Plan, chain: &[usize]) -> Vec<f64> {
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let groups = platoon_groups(plan);
    let mut sizes = vec![1usize; plan.segments.len()];
    for members in groups.values() {
        for &i in members {
            sizes[i] = members.len();
        }
    }
    let rate = p.consumption_units_per_hr();
    let beta = p.platoon_saving_ratio;
    let mut energy = cap;
    let mut out = vec![cap];
    for (pos, &si) in chain.iter().enumerate() {
        let s = &plan.segments[si];
        let t = instance.network.arc(s.arc).travel_hours;
        let h = if sizes[si] <= 1 { 1.0 } else { s.leading_ratio };
        let used = if sizes[si] <= 1 {
            rate * t
        } else {
            rate * t * (h + (1.0 - beta) * (1.0 - h))
        };
        if pos > 0 {
            energy += plan.segments[chain[pos - 1]].charge_at_head;
        }
        energy -= used;
        out.push(energy);
    }
    out
}

pub fn apply_swap<R: Rng>(
    op: SwapOp,
    instance: &Instance,
    plan: &Plan,
    rng: &mut R,
    binary_ratios: bool,
) -> SwapOutcome {
    match op {
        SwapOp::ChargeAmount => swap_charge_amount(instance, plan, rng),
        SwapOp::LeadingRatio => swap_leading_ratio(instance, plan, rng, binary_ratios),
    }
}

/// Perturbs one en-route charging amount: upward when the truck's SOC trace
/// dips below the floor, downward otherwise.
pub fn swap_charge_amount<R: Rng>(instance: &Instance, plan: &Plan, rng: &mut R) -> SwapOutcome {
    let Ok(routes) = chain_routes(instance, plan) else {
        return unchanged(plan);
    };
    let p = &instance.params;
    let cap = p.soc_max * p.battery_units();
    let floor = p.soc_min * p.battery_units();
    // (truck, position in chain) pairs whose head is an en-route charging
    // opportunity.
    let mut stops: Vec<(TruckIdx, usize)> = Vec::new();
    for (&truck, chain) in &routes.order {
        for (pos, &si) in chain.iter().enumerate() {
            if pos + 1 == chain.len() {
                continue; // destination recharge is forced, not adjustable
            }
            let head = instance.network.arc(plan.segments[si].arc).head;
            if instance.can_charge(truck, head) {
                stops.push((truck, pos));
            }
        }
    }
    if stops.is_empty() {
        return unchanged(plan);
    }
    let (truck, pos) = stops[rng.random_range(0..stops.len())];
    let chain = &routes.order[&truck];
    let si = chain[pos];
    let trace = energy_trace(instance, plan, chain);
    let deficit = trace.iter().any(|&e| e < floor - FEAS_TOL);
    let current = plan.segments[si].charge_at_head;
    // Energy on arrival at the node where this charge applies.
    let arrival = trace[pos + 1];
    let new_amount = if deficit {
        let hi = cap - arrival;
        if hi <= current + 1e-12 {
            return unchanged(plan);
        }
        rng.random_range(current..=hi)
    } else {
        if current <= 1e-12 {
            return unchanged(plan);
        }
        rng.random_range(0.0..=current)
    };
    let mut next = plan.clone();
    next.segments[si].charge_at_head = new_amount;
    let next = refit_destination_charges(instance, &next);
    if check_feasibility(instance, &next).is_empty() {
        SwapOutcome { plan: next, changed: true, violated: false }
    } else {
        SwapOutcome { plan: plan.clone(), changed: false, violated: true }
    }
}

/// Moves 0.1 of leading ratio between two members of one platoon-arc (or
/// swaps the whole ratios in binary mode), keeping the group sum at one.
/// The two trucks' charge amounts are re-derived for the new consumption
/// profile before the plan is re-checked.
pub fn swap_leading_ratio<R: Rng>(
    instance: &Instance,
    plan: &Plan,
    rng: &mut R,
    binary_ratios: bool,
) -> SwapOutcome {
    let groups = platoon_groups(plan);
    let multi: Vec<&Vec<usize>> = groups.values().filter(|m| m.len() >= 2).collect();
    if multi.is_empty() {
        return unchanged(plan);
    }
    let members = multi[rng.random_range(0..multi.len())];
    let donor_at = rng.random_range(0..members.len());
    let recipient_at = {
        let r = rng.random_range(0..members.len() - 1);
        if r >= donor_at {
            r + 1
        } else {
            r
        }
    };
    let (donor, recipient) = (members[donor_at], members[recipient_at]);
    let mut next = plan.clone();
    if binary_ratios {
        let (hd, hr) = (next.segments[donor].leading_ratio, next.segments[recipient].leading_ratio);
        if (hd - hr).abs() <= 1e-12 {
            return unchanged(plan);
        }
        next.segments[donor].leading_ratio = hr;
        next.segments[recipient].leading_ratio = hd;
    } else {
        let hd = next.segments[donor].leading_ratio;
        let hr = next.segments[recipient].leading_ratio;
        let transfer = 0.1f64.min(hd).min(1.0 - hr);
        if transfer <= 1e-12 {
            return unchanged(plan);
        }
        next.segments[donor].leading_ratio = hd - transfer;
        next.segments[recipient].leading_ratio = hr + transfer;
    }
    let affected = [next.segments[donor].truck, next.segments[recipient].truck];
    let (next, failed) = recompute_charges(instance, &next, &affected, ChargePolicy::Cheapest);
    if failed.is_empty() && check_feasibility(instance, &next).is_empty() {
        SwapOutcome { plan: next, changed: true, violated: false }
    } else {
        SwapOutcome { plan: plan.clone(), changed: false, violated: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn charge_swap_weakly_decreases_surplus_stop() {
        let inst = fixtures::illustrative_instance();
        // Overcharge the first stop by 50 units relative to the minimum.
        let mut plan = fixtures::illustrative_no_platoon_plan(&inst);
        plan.segments[0].charge_at_head += 50.0;
        let plan = crate::plan::refit_destination_charges(&inst, &plan);
        assert!(check_feasibility(&inst, &plan).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let out = swap_charge_amount(&inst, &plan, &mut rng);
            if out.changed {
                for (s_new, s_old) in out.plan.segments.iter().zip(&plan.segments) {
                    if s_new.arc == s_old.arc && s_new.truck == s_old.truck {
                        let head = inst.network.arc(s_new.arc).head;
                        let is_dest = inst.trucks[s_new.truck].destination == head;
                        if !is_dest {
                            assert!(s_new.charge_at_head <= s_old.charge_at_head + 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ratio_swap_preserves_sum_exactly() {
        let inst = fixtures::illustrative_instance();
        let plan = fixtures::illustrative_platoon_swap_plan(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let out = swap_leading_ratio(&inst, &plan, &mut rng, false);
            let groups = platoon_groups(&out.plan);
            for members in groups.values() {
                if members.len() >= 2 {
                    let sum: f64 =
                        members.iter().map(|&i| out.plan.segments[i].leading_ratio).sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ratio_swap_clamps_at_zero() {
        // h = (0, 1): transferring from the zero donor is a no-op; from the
        // full donor it moves exactly 0.1. The fixture plan is energy-tight,
        // so buy 20 units of slack at the M0 charger first.
        let inst = fixtures::illustrative_instance();
        let mut plan = fixtures::illustrative_platoon_swap_plan(&inst);
        let m0 = inst.network.node_index("M0").unwrap();
        let m2 = inst.network.node_index("M2").unwrap();
        let m4 = inst.network.node_index("M4").unwrap();
        for s in &mut plan.segments {
            let head = inst.network.arc(s.arc).head;
            if head == m0 || head == m4 {
                s.charge_at_head = 20.0;
            }
            if head == m2 {
                s.charge_at_head = 310.0;
            }
        }
        let plan = crate::plan::refit_destination_charges(&inst, &plan);
        assert!(check_feasibility(&inst, &plan).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut saw_change = false;
        let mut saw_noop = false;
        for _ in 0..200 {
            let out = swap_leading_ratio(&inst, &plan, &mut rng, false);
            if out.changed {
                saw_change = true;
                // Any changed ratio differs from the original by exactly 0.1.
                for (s_new, s_old) in out.plan.segments.iter().zip(&plan.segments) {
                    let d = (s_new.leading_ratio - s_old.leading_ratio).abs();
                    assert!(d < 1e-12 || (d - 0.1).abs() < 1e-12);
                }
            } else {
                saw_noop = true;
                assert_eq!(out.plan.segments, plan.segments);
            }
        }
        assert!(saw_change && saw_noop);
    }

    #[test]
    fn binary_mode_swaps_whole_ratios() {
        let inst = fixtures::illustrative_instance();
        let plan = fixtures::illustrative_platoon_swap_plan(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let out = swap_leading_ratio(&inst, &plan, &mut rng, true);
            for s in &out.plan.segments {
                assert!(s.leading_ratio == 0.0 || s.leading_ratio == 1.0);
            }
        }
    }

    #[test]
    fn swaps_never_accept_infeasible_plans() {
        let inst = fixtures::illustrative_instance();
        let plan = fixtures::illustrative_platoon_swap_plan(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for i in 0..2000 {
            let op = if i % 2 == 0 { SwapOp::ChargeAmount } else { SwapOp::LeadingRatio };
            let out = apply_swap(op, &inst, &plan, &mut rng, false);
            let v = check_feasibility(&inst, &out.plan);
            assert!(v.is_empty(), "iteration {i}: {v:?}");
        }
    }
}
