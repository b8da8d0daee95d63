//! Adaptive large neighborhood search: three operator pools (removal,
//! insertion, swap) with softmax selection, segment-wise weight adaptation,
//! and simulated-annealing acceptance over exact plan evaluations.

pub mod insertion;
pub mod pool;
pub mod removal;
pub mod swap;

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;
use crate::plan::{check_feasibility, evaluate, ChargePolicy, CostBreakdown, Plan};
use crate::preprocess::{build_initial_solution, prepare, Cache, PreprocessError};
pub use insertion::Criterion;
pub use pool::OperatorPool;
pub use removal::RemovalOp;
pub use swap::SwapOp;

#[derive(Debug, Clone)]
pub struct AlnsConfig {
    /// Softmax sensitivity for operator selection.
    pub lambda: f64,
    /// Iterations per adaptive segment (weights update at boundaries).
    pub segment_length: u64,
    /// Score for finding a new global best.
    pub score_global_best: f64,
    /// Score for improving on the incumbent.
    pub score_improving: f64,
    /// Score for an accepted non-improving solution.
    pub score_accepted_worse: f64,
    /// Reaction factor blending segment scores into weights.
    pub reaction: f64,
    pub initial_temperature: f64,
    pub cooling: f64,
    pub kappa_min: usize,
    /// Probability of applying one swap operator after each repair.
    pub swap_probability: f64,
    pub time_limit_s: f64,
    /// Stop after this many consecutive iterations without a new global best.
    pub no_improve_limit: u64,
    /// Restrict leading ratios to {0, 1} (platooning without leader swaps).
    pub binary_leading_ratios: bool,
    /// Use one insertion entry per family instead of one per criterion.
    pub collapse_insertion_criteria: bool,
}

impl Default for AlnsConfig {
    fn default() -> Self {
        Self {
            lambda: 10.0,
            segment_length: 50,
            score_global_best: 3.0,
            score_improving: 2.0,
            score_accepted_worse: 1.0,
            reaction: 0.2,
            initial_temperature: 100.0,
            cooling: 0.95,
            kappa_min: 2,
            swap_probability: 0.3,
            time_limit_s: 3600.0,
            no_improve_limit: 50,
            binary_leading_ratios: false,
            collapse_insertion_criteria: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionOp {
    Solo(Criterion),
    Pairwise(Criterion),
    IntoPlatoon,
}

impl InsertionOp {
    pub fn name(self) -> &'static str {
        match self {
            InsertionOp::Solo(Criterion::SpTime) => "insert-solo-sptime",
            InsertionOp::Solo(Criterion::MinCost) => "insert-solo-mincost",
            InsertionOp::Solo(Criterion::Regret) => "insert-solo-regret",
            InsertionOp::Pairwise(Criterion::SpTime) => "insert-pair-sptime",
            InsertionOp::Pairwise(Criterion::MinCost) => "insert-pair-mincost",
            InsertionOp::Pairwise(Criterion::Regret) => "insert-pair-regret",
            InsertionOp::IntoPlatoon => "insert-into-platoon",
        }
    }
}

/// Removal-size bounds: at least `kappa_min`, at most a tenth of the fleet
/// (never below two). A one-truck fleet always removes its single truck.
pub fn kappa_bounds(truck_count: usize, kappa_min: usize) -> (usize, usize) {
    if truck_count < 2 {
        return (1, 1);
    }
    (kappa_min, kappa_min.max(2usize.max(truck_count / 10)))
}

/// Simulated-annealing acceptance: always take improvements, otherwise
/// accept with probability exp(-delta / temperature).
pub fn accept<R: Rng>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    let p = (-delta / temperature).exp();
    rng.random::<f64>() < p
}

#[derive(Debug, Clone)]
pub struct RunLogRecord {
    pub iteration: u64,
    pub removal: &'static str,
    pub insertion: &'static str,
    pub swap: Option<&'static str>,
    pub delta: f64,
    pub accepted: bool,
    pub temperature: f64,
    pub incumbent_total: f64,
    pub best_total: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Plan,
    pub best_cost: CostBreakdown,
    pub initial_cost: CostBreakdown,
    pub iterations: u64,
    pub wall_clock_s: f64,
    pub seed: u64,
    pub log: Vec<RunLogRecord>,
}

/// Writes the iteration log in the documented CSV layout.
pub fn run_log_csv(log: &[RunLogRecord]) -> String {
    let mut out = String::from(
        "iteration,removal_op,insertion_op,swap_op,delta,accepted,temperature,incumbent_total,best_total\n",
    );
    for r in log {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.9},{},{:.9e},{:.9},{:.9}",
            r.iteration,
            r.removal,
            r.insertion,
            r.swap.unwrap_or(""),
            r.delta,
            r.accepted,
            r.temperature,
            r.incumbent_total,
            r.best_total,
        );
    }
    out
}

pub fn run(instance: &Instance, config: &AlnsConfig, seed: u64) -> Result<RunResult, PreprocessError> {
    let cache = prepare(instance)?;
    Ok(run_with_cache(instance, &cache, config, seed))
}

pub fn run_with_cache(
    instance: &Instance,
    cache: &Cache,
    config: &AlnsConfig,
    seed: u64,
) -> RunResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truck_count = instance.trucks.len();

    let initial = build_initial_solution(instance, cache);
    debug_assert!(check_feasibility(instance, &initial).is_empty());
    let initial_cost = evaluate(instance, &initial).expect("initial solution is feasible");

    if truck_count == 0 {
        return RunResult {
            best: initial,
            best_cost: initial_cost,
            initial_cost,
            iterations: 0,
            wall_clock_s: start.elapsed().as_secs_f64(),
            seed,
            log: Vec::new(),
        };
    }

    let mut removal_pool = OperatorPool::new([
        RemovalOp::Worst,
        RemovalOp::Random,
        RemovalOp::PlatoonNonExchange,
        RemovalOp::PlatoonAny,
        RemovalOp::Exchanged,
    ]);
    let insertion_ops: Vec<InsertionOp> = if config.collapse_insertion_criteria {
        vec![
            InsertionOp::Solo(Criterion::MinCost),
            InsertionOp::Pairwise(Criterion::MinCost),
            InsertionOp::IntoPlatoon,
        ]
    } else {
        vec![
            InsertionOp::Solo(Criterion::SpTime),
            InsertionOp::Solo(Criterion::MinCost),
            InsertionOp::Solo(Criterion::Regret),
            InsertionOp::Pairwise(Criterion::SpTime),
            InsertionOp::Pairwise(Criterion::MinCost),
            InsertionOp::Pairwise(Criterion::Regret),
            InsertionOp::IntoPlatoon,
        ]
    };
    let mut insertion_pool = OperatorPool::new(insertion_ops);
    let mut swap_pool = OperatorPool::new([SwapOp::ChargeAmount, SwapOp::LeadingRatio]);

    let (kappa_lo, kappa_hi) = kappa_bounds(truck_count, config.kappa_min);
    let mut incumbent = initial.clone();
    let mut incumbent_cost = initial_cost;
    let mut best = initial;
    let mut best_cost = initial_cost;
    let mut temperature = config.initial_temperature;
    let mut no_improve: u64 = 0;
    let mut iteration: u64 = 0;
    let mut log = Vec::new();

    loop {
        iteration += 1;

        // Destroy: retry selection until an operator applies (random removal
        // always does).
        let (removal_idx, partial, removed) = loop {
            let idx = removal_pool.select(config.lambda, &mut rng);
            let kappa = rng.random_range(kappa_lo..=kappa_hi);
            if let Some((p, r)) = removal::apply_removal(
                removal_pool.op(idx),
                instance,
                cache,
                &incumbent,
                &mut rng,
                kappa,
            ) {
                break (idx, p, r);
            }
        };
        removal_pool.mark_used(removal_idx);

        // Repair.
        let insertion_idx = insertion_pool.select(config.lambda, &mut rng);
        let policy = ChargePolicy::Cheapest;
        let mut candidate = match insertion_pool.op(insertion_idx) {
            InsertionOp::Solo(c) => {
                insertion::insert_solo(instance, cache, &partial, &removed, c, policy)
            }
            InsertionOp::Pairwise(c) => {
                insertion::insert_pairwise(instance, cache, &partial, &removed, c, policy)
            }
            InsertionOp::IntoPlatoon => {
                insertion::insert_into_platoon(instance, cache, &partial, &removed, policy)
            }
        };
        insertion_pool.mark_used(insertion_idx);

        // Optional swap.
        let mut swap_used: Option<(usize, bool)> = None;
        if rng.random::<f64>() < config.swap_probability {
            let sidx = swap_pool.select(config.lambda, &mut rng);
            let outcome = swap::apply_swap(
                swap_pool.op(sidx),
                instance,
                &candidate,
                &mut rng,
                config.binary_leading_ratios,
            );
            candidate = outcome.plan;
            swap_pool.mark_used(sidx);
            swap_used = Some((sidx, outcome.violated));
        }

        // Gate on exact feasibility, then simulated annealing.
        let violations = check_feasibility(instance, &candidate);
        let mut accepted = false;
        let mut delta = f64::INFINITY;
        let mut new_best = false;
        if violations.is_empty() {
            let cand_cost = evaluate(instance, &candidate).expect("feasible candidate");
            delta = cand_cost.total - incumbent_cost.total;
            if accept(delta, temperature, &mut rng) {
                accepted = true;
                new_best = cand_cost.total < best_cost.total - 1e-9;
                let points = if new_best {
                    config.score_global_best
                } else if delta < -1e-9 {
                    config.score_improving
                } else {
                    config.score_accepted_worse
                };
                removal_pool.credit(removal_idx, points);
                insertion_pool.credit(insertion_idx, points);
                if let Some((sidx, _)) = swap_used {
                    swap_pool.credit(sidx, points);
                }
                if new_best {
                    log::debug!(
                        "iteration {iteration}: new best {:.6} (was {:.6})",
                        cand_cost.total,
                        best_cost.total
                    );
                    best = candidate.clone();
                    best_cost = cand_cost;
                }
                incumbent = candidate;
                incumbent_cost = cand_cost;
            }
        }
        // A rejected charging perturbation still earns its exploration
        // credit.
        if let Some((sidx, true)) = swap_used {
            if swap_pool.op(sidx) == SwapOp::ChargeAmount {
                swap_pool.credit(sidx, config.score_accepted_worse);
            }
        }

        no_improve = if new_best { 0 } else { no_improve + 1 };
        log.push(RunLogRecord {
            iteration,
            removal: removal_pool.op(removal_idx).name(),
            insertion: insertion_pool.op(insertion_idx).name(),
            swap: swap_used.map(|(s, _)| swap_pool.op(s).name()),
            delta,
            accepted,
            temperature,
            incumbent_total: incumbent_cost.total,
            best_total: best_cost.total,
        });

        temperature *= config.cooling;
        if iteration.is_multiple_of(config.segment_length) {
            removal_pool.update_weights(config.reaction);
            insertion_pool.update_weights(config.reaction);
            swap_pool.update_weights(config.reaction);
        }
        if no_improve >= config.no_improve_limit {
            break;
        }
        if start.elapsed().as_secs_f64() >= config.time_limit_s {
            break;
        }
    }

    log::info!(
        "seed {seed}: {} -> {} after {iteration} iterations ({:.2}s)",
        initial_cost.total,
        best_cost.total,
        start.elapsed().as_secs_f64()
    );
    RunResult {
        best,
        best_cost,
        initial_cost,
        iterations: iteration,
        wall_clock_s: start.elapsed().as_secs_f64(),
        seed,
        log,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn acceptance_rule_boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(accept(-1.0, 100.0, &mut rng));
        assert!(accept(0.0, 100.0, &mut rng));
    }

    #[test]
    fn acceptance_rate_matches_exp_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if accept(100.0, 100.0, &mut rng) {
                hits += 1;
            }
        }
        let p = (-1.0f64).exp();
        let freq = hits as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} vs {p}");
    }

    #[test]
    fn temperature_follows_geometric_schedule() {
        let inst = fixtures::illustrative_instance();
        let config = AlnsConfig { no_improve_limit: 60, ..AlnsConfig::default() };
        let result = run(&inst, &config, 7).unwrap();
        for r in &result.log {
            let expected = 100.0 * 0.95f64.powi((r.iteration - 1) as i32);
            assert!(
                (r.temperature - expected).abs() <= 1e-12 * expected.max(1e-300),
                "iteration {}: {} vs {}",
                r.iteration,
                r.temperature,
                expected
            );
        }
    }

    #[test]
    fn best_trajectory_non_increasing_and_feasible() {
        let inst = fixtures::illustrative_instance();
        let config = AlnsConfig { no_improve_limit: 80, ..AlnsConfig::default() };
        let result = run(&inst, &config, 3).unwrap();
        let mut prev = f64::INFINITY;
        for r in &result.log {
            assert!(r.best_total <= prev + 1e-12);
            prev = r.best_total;
        }
        assert!(result.best_cost.total <= result.initial_cost.total + 1e-9);
        assert!(check_feasibility(&inst, &result.best).is_empty());
    }

    #[test]
    fn same_seed_gives_identical_log() {
        let inst = fixtures::illustrative_instance();
        let config = AlnsConfig { no_improve_limit: 60, ..AlnsConfig::default() };
        let a = run(&inst, &config, 1234).unwrap();
        let b = run(&inst, &config, 1234).unwrap();
        assert_eq!(run_log_csv(&a.log), run_log_csv(&b.log));
        assert_eq!(a.best.segments, b.best.segments);
    }

    #[test]
    fn single_truck_keeps_solo_candidate_cost() {
        let inst = fixtures::illustrative_instance();
        let solo = crate::instance::Instance::new(
            inst.network.clone(),
            inst.params.clone(),
            vec![inst.trucks[0].clone()],
        )
        .unwrap();
        let config = AlnsConfig { no_improve_limit: 60, ..AlnsConfig::default() };
        let result = run(&solo, &config, 5).unwrap();
        assert!((result.best_cost.total - result.initial_cost.total).abs() < 1e-9);
    }

    #[test]
    fn finds_platooning_saving_on_illustrative_instance() {
        let inst = fixtures::illustrative_instance();
        let config = AlnsConfig { no_improve_limit: 150, ..AlnsConfig::default() };
        let result = run(&inst, &config, 1234).unwrap();
        // Two solo shortest paths cost $140; the corridor platoon reaches $136.
        assert!(
            result.best_cost.total < 140.0 - 1e-9,
            "expected platoon saving, got {}",
            result.best_cost.total
        );
    }
}
