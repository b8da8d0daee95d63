//! Exact-model layer: the full mixed-integer formulation, LP-file export
//! for external solvers, and a discretized brute-force oracle for desk-scale
//! instances.

pub mod brute;
pub mod lp;

use std::collections::{BTreeMap, HashMap};

use crate::instance::{Instance, TruckIdx};
use crate::plan::{
    chain_routes, derive_schedule_chained, platoon_groups, Plan, ScheduleError,
};

pub use brute::{brute_force_exact, BruteForceError, BruteForceOptions};
pub use lp::{export_lp, parse_lp, write_lp, LpParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Objective coefficient.
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// (variable index, coefficient) pairs, deterministic order.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    index: HashMap<String, usize>,
}

impl MilpModel {
    fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), vars: Vec::new(), constraints: Vec::new(), index: HashMap::new() }
    }

    fn add_var(&mut self, name: String, kind: VarKind, lb: f64, ub: f64) -> usize {
        debug_assert!(name.len() <= 255);
        let id = self.vars.len();
        self.index.insert(name.clone(), id);
        self.vars.push(Variable { name, kind, lb, ub, obj: 0.0 });
        id
    }

    fn add_constraint(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        if terms.is_empty() {
            return;
        }
        self.constraints.push(Constraint { name, terms, sense, rhs });
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Objective value of a (possibly partial) assignment; absent variables
    /// count as zero.
    pub fn objective_value(&self, assignment: &BTreeMap<String, f64>) -> f64 {
        self.vars
            .iter()
            .map(|v| v.obj * assignment.get(&v.name).copied().unwrap_or(0.0))
            .sum()
    }

    /// Names of constraints (and violated variable bounds) the assignment
    /// breaks by more than `tol`.
    pub fn violated_constraints(&self, assignment: &BTreeMap<String, f64>, tol: f64) -> Vec<String> {
        let value =
            |i: usize| assignment.get(&self.vars[i].name).copied().unwrap_or(0.0);
        let mut out = Vec::new();
        for (i, v) in self.vars.iter().enumerate() {
            let x = value(i);
            if x < v.lb - tol || x > v.ub + tol {
                out.push(format!("bounds:{}", v.name));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(i, coef)| coef * value(i)).sum();
            let ok = match c.sense {
                Sense::Le => lhs <= c.rhs + tol,
                Sense::Ge => lhs >= c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                out.push(c.name.clone());
            }
        }
        out
    }
}

/// Big-M constants per constraint family; each strictly exceeds the largest
/// feasible slack of its family.
#[derive(Debug, Clone, Copy)]
pub struct BigMPolicy {
    /// Time-coupling constraints (schedule recursion and departure sync).
    pub time: f64,
    /// The SOC recursion.
    pub soc: f64,
    /// Leading-ratio sum activation.
    pub ratio: f64,
}

impl BigMPolicy {
    pub fn for_instance(instance: &Instance) -> Self {
        let p = &instance.params;
        let max_deadline = instance
            .trucks
            .iter()
            .map(|t| t.latest_arrival_hr)
            .fold(0.0, f64::max);
        let t_max = instance
            .network
            .arcs()
            .iter()
            .map(|a| a.travel_hours)
            .fold(0.0, f64::max);
        let q = p.battery_units();
        BigMPolicy {
            time: 2.0 * max_deadline + q / p.charge_units_per_hr() + t_max + 1.0,
            soc: q * (p.soc_max - p.soc_min)
                + (1.0 - p.platoon_saving_ratio) * p.consumption_units_per_hr() * t_max
                + 1.0,
            ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Declare the leading ratios binary (platooning without leader swaps).
    pub binary_leading_ratios: bool,
}

/// Builds the full model: routing flow, SOC tracking, schedule consistency,
/// platooning with linearized ratio products, and the operation-cost
/// objective.
#[allow(clippy::needless_range_loop)] // index loops mirror the model's (i,j,k) sets
pub fn build(instance: &Instance, opts: &BuildOptions) -> MilpModel {
    let p = &instance.params;
    let net = &instance.network;
    let trucks = &instance.trucks;
    let n_nodes = net.node_count();
    let n_arcs = net.arc_count();
    let n_trucks = trucks.len();
    let big_m = BigMPolicy::for_instance(instance);
    let eta = p.charge_units_per_hr();
    let sigma = p.consumption_units_per_hr();
    let beta = p.platoon_saving_ratio;
    let q = p.battery_units();
    let capacity = p.max_platoon_size;

    let mut model = MilpModel::new("electric-truck-platooning");

    // Variable blocks in deterministic order.
    let arc_name = |a: usize| {
        let arc = net.arc(a);
        format!("{}_{}", arc.tail, arc.head)
    };
    let mut x = vec![vec![0usize; n_trucks]; n_arcs];
    let mut l = vec![vec![0usize; n_trucks]; n_arcs];
    let mut e = vec![vec![0usize; n_trucks]; n_arcs];
    let mut h = vec![vec![0usize; n_trucks]; n_arcs];
    for a in 0..n_arcs {
        for k in 0..n_trucks {
            x[a][k] = model.add_var(format!("x_{}_{}", arc_name(a), k), VarKind::Binary, 0.0, 1.0);
        }
    }
    for a in 0..n_arcs {
        for k in 0..n_trucks {
            l[a][k] = model.add_var(format!("l_{}_{}", arc_name(a), k), VarKind::Binary, 0.0, 1.0);
        }
    }
    for a in 0..n_arcs {
        for k in 0..n_trucks {
            e[a][k] = model.add_var(format!("e_{}_{}", arc_name(a), k), VarKind::Binary, 0.0, 1.0);
        }
    }
    for a in 0..n_arcs {
        for k in 0..n_trucks {
            let kind =
                if opts.binary_leading_ratios { VarKind::Binary } else { VarKind::Continuous };
            h[a][k] = model.add_var(format!("h_{}_{}", arc_name(a), k), kind, 0.0, 1.0);
        }
    }
    // Pair variables exist only for k1 != k2.
    let mut f: BTreeMap<(usize, TruckIdx, TruckIdx), usize> = BTreeMap::new();
    let mut hbar: BTreeMap<(usize, TruckIdx, TruckIdx), usize> = BTreeMap::new();
    for a in 0..n_arcs {
        for k1 in 0..n_trucks {
            for k2 in 0..n_trucks {
                if k1 == k2 {
                    continue;
                }
                let id = model.add_var(
                    format!("f_{}_{}_{}", arc_name(a), k1, k2),
                    VarKind::Binary,
                    0.0,
                    1.0,
                );
                f.insert((a, k1, k2), id);
            }
        }
    }
    for a in 0..n_arcs {
        for k1 in 0..n_trucks {
            for k2 in 0..n_trucks {
                if k1 == k2 {
                    continue;
                }
                let id = model.add_var(
                    format!("hbar_{}_{}_{}", arc_name(a), k1, k2),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                );
                hbar.insert((a, k1, k2), id);
            }
        }
    }
    let mut y = vec![vec![0usize; n_trucks]; n_nodes];
    let mut v = vec![vec![0usize; n_trucks]; n_nodes];
    let mut s = vec![vec![0usize; n_trucks]; n_nodes];
    let mut w = vec![vec![0usize; n_trucks]; n_nodes];
    for i in 0..n_nodes {
        for k in 0..n_trucks {
            y[i][k] = model.add_var(format!("y_{i}_{k}"), VarKind::Continuous, 0.0, 1.0);
        }
    }
    for i in 0..n_nodes {
        for k in 0..n_trucks {
            v[i][k] =
                model.add_var(format!("v_{i}_{k}"), VarKind::Continuous, 0.0, q / eta);
        }
    }
    for i in 0..n_nodes {
        for k in 0..n_trucks {
            s[i][k] =
                model.add_var(format!("s_{i}_{k}"), VarKind::Continuous, 0.0, big_m.time);
        }
    }
    for i in 0..n_nodes {
        for k in 0..n_trucks {
            w[i][k] =
                model.add_var(format!("w_{i}_{k}"), VarKind::Continuous, 0.0, big_m.time);
        }
    }

    // Objective: charging + in-vehicle labor + idling + restructuring.
    for i in 0..n_nodes {
        let price = instance.unit_price(i);
        for k in 0..n_trucks {
            model.vars[v[i][k]].obj = eta * price;
        }
    }
    for a in 0..n_arcs {
        let t = net.arc(a).travel_hours;
        for k in 0..n_trucks {
            model.vars[l[a][k]].obj = t * p.leading_wage_per_hr - p.restructuring_cost;
            model.vars[e[a][k]].obj = p.restructuring_cost;
        }
        for k1 in 0..n_trucks {
            for k2 in 0..n_trucks {
                if k1 != k2 {
                    model.vars[f[&(a, k1, k2)]].obj = t * p.following_wage_per_hr;
                }
            }
        }
    }
    for (k, td) in trucks.iter().enumerate() {
        for i in 0..n_nodes {
            if i != td.origin && i != td.destination {
                model.vars[w[i][k]].obj = p.idle_wage_per_hr;
            }
        }
    }

    // Truck flow.
    for (k, td) in trucks.iter().enumerate() {
        for j in 0..n_nodes {
            if j == td.origin || j == td.destination {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for &ai in net.in_arcs(j) {
                terms.push((x[ai][k], 1.0));
            }
            for &ai in net.out_arcs(j) {
                terms.push((x[ai][k], -1.0));
            }
            model.add_constraint(format!("flow_{j}_{k}"), terms, Sense::Eq, 0.0);
        }
        let origin_out: Vec<(usize, f64)> =
            net.out_arcs(td.origin).iter().map(|&ai| (x[ai][k], 1.0)).collect();
        model.add_constraint(format!("origin_out_{k}"), origin_out, Sense::Eq, 1.0);
        let dest_in: Vec<(usize, f64)> =
            net.in_arcs(td.destination).iter().map(|&ai| (x[ai][k], 1.0)).collect();
        model.add_constraint(format!("dest_in_{k}"), dest_in, Sense::Eq, 1.0);
    }

    // SOC bounds, boundary conditions, charging permissions, recursion.
    for (k, td) in trucks.iter().enumerate() {
        for i in 0..n_nodes {
            model.add_constraint(
                format!("soc_floor_{i}_{k}"),
                vec![(y[i][k], 1.0)],
                Sense::Ge,
                p.soc_min,
            );
            model.add_constraint(
                format!("soc_cap_{i}_{k}"),
                vec![(y[i][k], q), (v[i][k], eta)],
                Sense::Le,
                p.soc_max * q,
            );
        }
        model.add_constraint(
            format!("soc_origin_{k}"),
            vec![(y[td.origin][k], 1.0)],
            Sense::Eq,
            p.soc_max,
        );
        model.add_constraint(
            format!("soc_dest_{k}"),
            vec![(y[td.destination][k], q), (v[td.destination][k], eta)],
            Sense::Eq,
            p.soc_max * q,
        );
        for i in 0..n_nodes {
            let charging_allowed =
                (net.node(i).has_charger || i == td.destination) && i != td.origin;
            if !charging_allowed {
                model.add_constraint(
                    format!("no_charge_{i}_{k}"),
                    vec![(v[i][k], 1.0)],
                    Sense::Eq,
                    0.0,
                );
            }
        }
        for a in 0..n_arcs {
            let arc = net.arc(a);
            let t = arc.travel_hours;
            // Q y_i + eta v_i - sigma t [(1-beta) + beta h] + M(1-x) >= Q y_j
            model.add_constraint(
                format!("soc_arc_{}_{}", arc_name(a), k),
                vec![
                    (y[arc.tail][k], q),
                    (v[arc.tail][k], eta),
                    (h[a][k], -sigma * t * beta),
                    (y[arc.head][k], -q),
                    (x[a][k], -big_m.soc),
                ],
                Sense::Ge,
                sigma * t * (1.0 - beta) - big_m.soc,
            );
        }
    }

    // Time consistency.
    for (k, td) in trucks.iter().enumerate() {
        for a in 0..n_arcs {
            let arc = net.arc(a);
            let t = arc.travel_hours;
            model.add_constraint(
                format!("time_ub_{}_{}", arc_name(a), k),
                vec![
                    (s[arc.tail][k], 1.0),
                    (w[arc.tail][k], 1.0),
                    (s[arc.head][k], -1.0),
                    (x[a][k], big_m.time),
                ],
                Sense::Le,
                big_m.time - t,
            );
            model.add_constraint(
                format!("time_lb_{}_{}", arc_name(a), k),
                vec![
                    (s[arc.tail][k], 1.0),
                    (w[arc.tail][k], 1.0),
                    (s[arc.head][k], -1.0),
                    (x[a][k], -big_m.time),
                ],
                Sense::Ge,
                -t - big_m.time,
            );
        }
        model.add_constraint(
            format!("deadline_{k}"),
            vec![(s[td.destination][k], 1.0)],
            Sense::Le,
            td.latest_arrival_hr,
        );
        for i in 0..n_nodes {
            model.add_constraint(
                format!("dwell_{i}_{k}"),
                vec![(w[i][k], 1.0), (v[i][k], -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    // Platooning.
    for a in 0..n_arcs {
        for k in 0..n_trucks {
            let mut terms = vec![(x[a][k], 1.0), (l[a][k], -1.0)];
            for k1 in 0..n_trucks {
                if k1 != k {
                    terms.push((f[&(a, k1, k)], -1.0));
                }
            }
            model.add_constraint(format!("role_{}_{}", arc_name(a), k), terms, Sense::Eq, 0.0);
            model.add_constraint(
                format!("ratio_cap_{}_{}", arc_name(a), k),
                vec![(x[a][k], 1.0), (h[a][k], -1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_constraint(
                format!("lead_ind_{}_{}", arc_name(a), k),
                vec![(e[a][k], 1.0), (h[a][k], -1.0)],
                Sense::Ge,
                0.0,
            );
        }
        for k1 in 0..n_trucks {
            if n_trucks >= 2 {
                let mut terms: Vec<(usize, f64)> = Vec::new();
                for k2 in 0..n_trucks {
                    if k2 != k1 {
                        terms.push((f[&(a, k1, k2)], 1.0));
                    }
                }
                terms.push((l[a][k1], -((capacity - 1) as f64)));
                model.add_constraint(
                    format!("psize_{}_{}", arc_name(a), k1),
                    terms,
                    Sense::Le,
                    0.0,
                );
            }
            // Linearized leading-ratio sum (active when k1 leads).
            let mut lo = vec![(h[a][k1], 1.0)];
            let mut hi = vec![(h[a][k1], 1.0)];
            for k2 in 0..n_trucks {
                if k2 != k1 {
                    lo.push((hbar[&(a, k1, k2)], 1.0));
                    hi.push((hbar[&(a, k1, k2)], 1.0));
                }
            }
            lo.push((l[a][k1], -big_m.ratio));
            hi.push((l[a][k1], big_m.ratio));
            model.add_constraint(
                format!("ratio_sum_lb_{}_{}", arc_name(a), k1),
                lo,
                Sense::Ge,
                1.0 - big_m.ratio,
            );
            model.add_constraint(
                format!("ratio_sum_ub_{}_{}", arc_name(a), k1),
                hi,
                Sense::Le,
                1.0 + big_m.ratio,
            );
            for k2 in 0..n_trucks {
                if k2 == k1 {
                    continue;
                }
                let tail = net.arc(a).tail;
                model.add_constraint(
                    format!("sync_lb_{}_{}_{}", arc_name(a), k1, k2),
                    vec![
                        (s[tail][k1], 1.0),
                        (w[tail][k1], 1.0),
                        (s[tail][k2], -1.0),
                        (w[tail][k2], -1.0),
                        (f[&(a, k1, k2)], -big_m.time),
                    ],
                    Sense::Ge,
                    -big_m.time,
                );
                model.add_constraint(
                    format!("sync_ub_{}_{}_{}", arc_name(a), k1, k2),
                    vec![
                        (s[tail][k1], 1.0),
                        (w[tail][k1], 1.0),
                        (s[tail][k2], -1.0),
                        (w[tail][k2], -1.0),
                        (f[&(a, k1, k2)], big_m.time),
                    ],
                    Sense::Le,
                    big_m.time,
                );
                // Product linearization: hbar = f * h_{k2}.
                model.add_constraint(
                    format!("lin_ub_h_{}_{}_{}", arc_name(a), k1, k2),
                    vec![(hbar[&(a, k1, k2)], 1.0), (h[a][k2], -1.0)],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    format!("lin_ub_f_{}_{}_{}", arc_name(a), k1, k2),
                    vec![(hbar[&(a, k1, k2)], 1.0), (f[&(a, k1, k2)], -1.0)],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    format!("lin_lb_{}_{}_{}", arc_name(a), k1, k2),
                    vec![
                        (hbar[&(a, k1, k2)], 1.0),
                        (h[a][k2], -1.0),
                        (f[&(a, k1, k2)], -1.0),
                    ],
                    Sense::Ge,
                    -1.0,
                );
            }
        }
    }

    model
}

/// Maps a plan (with its derived schedule) onto a model assignment. The
/// designated leader of each platoon-arc carries `l`; members with a
/// positive ratio carry `e`.
pub fn assignment_from_plan(
    instance: &Instance,
    plan: &Plan,
) -> Result<BTreeMap<String, f64>, ScheduleError> {
    let routes = chain_routes(instance, plan).map_err(ScheduleError::Malformed)?;
    let schedule = derive_schedule_chained(instance, plan, &routes)?;
    let p = &instance.params;
    let eta = p.charge_units_per_hr();
    let net = &instance.network;
    let mut a: BTreeMap<String, f64> = BTreeMap::new();
    let arc_name = |ai: usize| {
        let arc = net.arc(ai);
        format!("{}_{}", arc.tail, arc.head)
    };

    // Defaults: unvisited nodes keep a full battery and zero times.
    for k in 0..instance.trucks.len() {
        for i in 0..net.node_count() {
            a.insert(format!("y_{i}_{k}"), p.soc_max);
        }
    }

    for (&k, visits) in &schedule.visits {
        for visit in visits {
            a.insert(format!("y_{}_{}", visit.node, k), visit.soc_arrival);
            a.insert(format!("v_{}_{}", visit.node, k), visit.charge_units / eta);
            a.insert(format!("s_{}_{}", visit.node, k), visit.arrival_hr);
            a.insert(format!("w_{}_{}", visit.node, k), visit.dwell_hr);
        }
    }
    for (&k, chain) in &routes.order {
        for &si in chain {
            a.insert(format!("x_{}_{}", arc_name(plan.segments[si].arc), k), 1.0);
        }
    }

    let groups = platoon_groups(plan);
    for ((arc, _), members) in &groups {
        let an = arc_name(*arc);
        // Effective ratios: singletons lead outright.
        let eff: Vec<(TruckIdx, f64)> = members
            .iter()
            .map(|&i| {
                let seg = &plan.segments[i];
                let ratio = if members.len() == 1 { 1.0 } else { seg.leading_ratio };
                (seg.truck, ratio)
            })
            .collect();
        let leader = eff
            .iter()
            .copied()
            .max_by(|x, y| {
                x.1.partial_cmp(&y.1).unwrap().then_with(|| y.0.cmp(&x.0))
            })
            .expect("non-empty group")
            .0;
        for &(k, ratio) in &eff {
            a.insert(format!("h_{an}_{k}"), ratio);
            if ratio > 1e-9 {
                a.insert(format!("e_{an}_{k}"), 1.0);
            }
            if k == leader {
                a.insert(format!("l_{an}_{k}"), 1.0);
            } else {
                a.insert(format!("f_{an}_{leader}_{k}"), 1.0);
                a.insert(format!("hbar_{an}_{leader}_{k}"), ratio);
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::instance::{default_parameters, Instance, TruckDelivery};
    use crate::network::{Arc, Node, RoadNetwork};
    use crate::plan::evaluate;

    fn tiny_instance() -> Instance {
        let net = RoadNetwork::new(
            vec![
                Node { id: "o".into(), has_charger: false, price_per_kwh: None },
                Node { id: "d".into(), has_charger: false, price_per_kwh: Some(0.5) },
            ],
            vec![Arc { tail: 0, head: 1, travel_hours: 1.0 }],
        )
        .unwrap();
        Instance::new(
            net,
            default_parameters(),
            vec![TruckDelivery { id: "t".into(), origin: 0, destination: 1, latest_arrival_hr: 4.0 }],
        )
        .unwrap()
    }

    #[test]
    fn variable_census_one_truck_one_arc() {
        let inst = tiny_instance();
        let model = build(&inst, &BuildOptions::default());
        // x, l, e, h once per (arc, truck); y, v, s, w once per (node,
        // truck); no pair variables with a single truck.
        assert_eq!(model.vars.len(), 4 + 2 * 4);
        assert!(model.vars.iter().all(|v| !v.name.starts_with("f_")));
        assert!(model.vars.iter().all(|v| !v.name.starts_with("hbar_")));
    }

    #[test]
    fn no_platoon_mode_forces_followers_to_zero() {
        let mut inst = fixtures::illustrative_instance();
        inst.params.max_platoon_size = 1;
        let model = build(&inst, &BuildOptions::default());
        // psize: sum f <= 0 * l.
        let c = model
            .constraints
            .iter()
            .find(|c| c.name.starts_with("psize_"))
            .expect("psize constraints exist");
        let l_coefs: Vec<f64> = c
            .terms
            .iter()
            .filter(|&&(i, _)| model.vars[i].name.starts_with("l_"))
            .map(|&(_, co)| co)
            .collect();
        assert_eq!(l_coefs, vec![0.0]);
    }

    #[test]
    fn binary_mode_declares_ratios_binary() {
        let inst = tiny_instance();
        let model = build(&inst, &BuildOptions { binary_leading_ratios: true });
        let h = &model.vars[model.var_index("h_0_1_0").unwrap()];
        assert_eq!(h.kind, VarKind::Binary);
        let model = build(&inst, &BuildOptions::default());
        let h = &model.vars[model.var_index("h_0_1_0").unwrap()];
        assert_eq!(h.kind, VarKind::Continuous);
        assert_eq!((h.lb, h.ub), (0.0, 1.0));
    }

    #[test]
    fn fixture_assignments_satisfy_model_and_match_evaluator() {
        let inst = fixtures::illustrative_instance();
        let model = build(&inst, &BuildOptions::default());
        for plan in [
            fixtures::illustrative_no_platoon_plan(&inst),
            fixtures::illustrative_platoon_swap_plan(&inst),
        ] {
            let assignment = assignment_from_plan(&inst, &plan).unwrap();
            let violated = model.violated_constraints(&assignment, 1e-6);
            assert!(violated.is_empty(), "{violated:?}");
            let cost = evaluate(&inst, &plan).unwrap();
            assert!(
                (model.objective_value(&assignment) - cost.total).abs() < 1e-6,
                "objective {} vs evaluator {}",
                model.objective_value(&assignment),
                cost.total
            );
        }
    }

    #[test]
    fn small_test_assignments_match_too() {
        let inst = fixtures::small_test_instance();
        let model = build(&inst, &BuildOptions::default());
        for plan in [
            fixtures::small_test_no_platoon_plan(&inst),
            fixtures::small_test_swap_plan(&inst),
            fixtures::small_test_no_swap_plan(&inst),
        ] {
            let assignment = assignment_from_plan(&inst, &plan).unwrap();
            let violated = model.violated_constraints(&assignment, 1e-6);
            assert!(violated.is_empty(), "{violated:?}");
            let cost = evaluate(&inst, &plan).unwrap();
            assert!((model.objective_value(&assignment) - cost.total).abs() < 1e-6);
        }
    }
}
