//! Experiment suites: fixture comparisons, fleet-size scaling on the
//! 38-node stand-in network, and the parameter sensitivity sweeps.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use anyhow::{Context, Result};

use platoon_core::alns;
use platoon_core::fixtures;
use platoon_core::generate::{
    generate_deliveries, generate_grid, generate_standin_network, relax_deadlines,
};
use platoon_core::instance::{default_parameters, Instance, Parameters};
use platoon_core::plan::{check_feasibility, solution_to_json};

use crate::report::{append_report, fill_benefits, ReportRow};
use crate::{alns_config, Cli, ScenarioMode, SuiteName};

/// Solves one (instance, mode, seed) run, writes the solution and run-log
/// files, and returns the report row. `label_override` names suite rows.
pub fn solve_one(
    instance: &Instance,
    label: &str,
    mode: ScenarioMode,
    seed: u64,
    cli: &Cli,
    out_subdir: Option<&Path>,
) -> Result<ReportRow> {
    let (scenario, binary) = mode.apply(instance);
    let config = alns_config(cli, binary);
    let out_dir = out_subdir.unwrap_or(&cli.out);
    std::fs::create_dir_all(out_dir)?;
    let run = alns::run(&scenario, &config, seed)
        .with_context(|| format!("{label} ({}) is unservable", mode.label()))?;
    let violations = check_feasibility(&scenario, &run.best);
    anyhow::ensure!(violations.is_empty(), "{label}: solver returned an infeasible plan");

    let base = format!("{label}_{}_s{seed}", mode.label());
    let solution = solution_to_json(&scenario, &run.best)
        .map_err(|e| anyhow::anyhow!("serializing solution: {e}"))?;
    std::fs::write(out_dir.join(format!("solution_{base}.json")), solution)?;
    std::fs::write(out_dir.join(format!("runlog_{base}.csv")), alns::run_log_csv(&run.log))?;
    log::info!(
        "{label} {}: total {:.3} in {:.1}s / {} iterations",
        mode.label(),
        run.best_cost.total,
        run.wall_clock_s,
        run.iterations
    );
    println!(
        "{label} [{}] seed {seed}: total {:.3} (charging {:.3}) in {:.1}s, {} iterations",
        mode.label(),
        run.best_cost.total,
        run.best_cost.charging,
        run.wall_clock_s,
        run.iterations
    );
    Ok(ReportRow {
        instance: label.to_string(),
        seed,
        mode: mode.label(),
        status: "ok".into(),
        cost: Some(run.best_cost),
        wall_clock_s: run.wall_clock_s,
        iterations: run.iterations,
        platoon_benefit: None,
        platoon_benefit_pct: None,
    })
}

struct Job {
    index: usize,
    instance: Instance,
    label: String,
    mode: ScenarioMode,
    seed: u64,
}

/// Runs jobs on up to `workers` threads; row order follows job order, and
/// each job is an independent deterministic run. Failures become error rows
/// so the suite keeps going.
fn run_jobs(jobs: Vec<Job>, cli: &Cli, out_subdir: &Path) -> Vec<ReportRow> {
    let total = jobs.len();
    let queue: Mutex<VecDeque<Job>> = Mutex::new(jobs.into());
    let results: Mutex<Vec<Option<ReportRow>>> = Mutex::new(vec![None; total]);
    let workers = cli.workers.max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = { queue.lock().unwrap().pop_front() };
                let Some(job) = job else { break };
                let row = match solve_one(
                    &job.instance,
                    &job.label,
                    job.mode,
                    job.seed,
                    cli,
                    Some(out_subdir),
                ) {
                    Ok(row) => row,
                    Err(e) => ReportRow {
                        instance: job.label.clone(),
                        seed: job.seed,
                        mode: job.mode.label(),
                        status: format!("error: {e:#}").replace(',', ";"),
                        cost: None,
                        wall_clock_s: 0.0,
                        iterations: 0,
                        platoon_benefit: None,
                        platoon_benefit_pct: None,
                    },
                };
                results.lock().unwrap()[job.index] = Some(row);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job produces a row"))
        .collect()
}

pub fn run_suite(suite: SuiteName, cli: &Cli) -> Result<()> {
    let suite_name = match suite {
        SuiteName::Illustrative => "illustrative",
        SuiteName::Small3 => "small3",
        SuiteName::Scaling => "scaling",
        SuiteName::SensitivityBeta => "sensitivity-beta",
        SuiteName::SensitivityBattery => "sensitivity-battery",
        SuiteName::SensitivityAlpha1 => "sensitivity-alpha1",
    };
    let out_dir = cli.out.join(suite_name);
    std::fs::create_dir_all(&out_dir)?;

    let mut jobs: Vec<Job> = Vec::new();
    let push = |jobs: &mut Vec<Job>, instance: Instance, label: String, mode, seed| {
        let index = jobs.len();
        jobs.push(Job { index, instance, label, mode, seed });
    };
    let all_modes =
        [ScenarioMode::NoPlatoon, ScenarioMode::PlatoonNoSwap, ScenarioMode::PlatoonSwap];

    match suite {
        SuiteName::Illustrative => {
            let inst = fixtures::illustrative_instance();
            inst.save(out_dir.join("illustrative.json"))?;
            for mode in all_modes {
                push(&mut jobs, inst.clone(), "illustrative".into(), mode, cli.seed);
            }
        }
        SuiteName::Small3 => {
            let inst = fixtures::small_test_instance();
            inst.save(out_dir.join("small_test.json"))?;
            for mode in all_modes {
                push(&mut jobs, inst.clone(), "small_test".into(), mode, cli.seed);
            }
        }
        SuiteName::Scaling => {
            let params = default_parameters();
            let network = generate_standin_network(38001, &params);
            for size in (5..=150).step_by(5) {
                let seed = 38001 + size as u64;
                let trucks = generate_deliveries(&network, size, seed)?;
                let mut inst = Instance::new(network.clone(), params.clone(), trucks)?;
                relax_deadlines(&mut inst);
                let label = format!("scaling_k{size:03}");
                inst.save(out_dir.join(format!("{label}.json")))?;
                for mode in [ScenarioMode::NoPlatoon, ScenarioMode::PlatoonSwap] {
                    push(&mut jobs, inst.clone(), label.clone(), mode, cli.seed);
                }
            }
        }
        SuiteName::SensitivityBeta => {
            for &size in &[10usize, 15, 20] {
                for &beta in &[0.05, 0.075, 0.1, 0.125, 0.15] {
                    let params =
                        Parameters { platoon_saving_ratio: beta, ..default_parameters() };
                    let inst = grid_instance(&params, size, 4100 + size as u64)?;
                    let label = format!("beta{beta:.3}_k{size:02}");
                    push(&mut jobs, inst, label, ScenarioMode::PlatoonSwap, cli.seed);
                }
            }
        }
        SuiteName::SensitivityBattery => {
            // One fleet shared by every battery level, built so the
            // smallest battery can still serve each trip with at most three
            // en-route stops (four 150 km legs on this grid), and with
            // deadlines relaxed for the smallest battery's charging time.
            let ranges = [200.0f64, 270.0, 340.0, 410.0, 480.0];
            let base = default_parameters();
            let smallest =
                Parameters { battery_kwh: ranges[0] * base.kwh_per_km(), ..base.clone() };
            let network = generate_grid(4, 150.0, &smallest, 0.5)?;
            let sp = platoon_core::network::all_pairs_shortest(&network);
            let candidates = generate_deliveries(&network, 60, 4220)?;
            let trucks: Vec<_> = candidates
                .into_iter()
                .filter(|t| sp.get(t.origin, t.destination) <= 6.0 + 1e-9)
                .take(20)
                .collect();
            anyhow::ensure!(trucks.len() == 20, "not enough short trips for the battery sweep");
            let mut reference = Instance::new(network, smallest, trucks)?;
            relax_deadlines(&mut reference);
            for &range_km in &ranges {
                let params =
                    Parameters { battery_kwh: range_km * base.kwh_per_km(), ..base.clone() };
                let inst = Instance::new(
                    reference.network.clone(),
                    params,
                    reference.trucks.clone(),
                )?;
                let label = format!("range{range_km:.0}_k20");
                push(&mut jobs, inst, label, ScenarioMode::PlatoonSwap, cli.seed);
            }
        }
        SuiteName::SensitivityAlpha1 => {
            for &alpha1 in &[20.0f64, 25.0, 30.0, 35.0] {
                let params =
                    Parameters { leading_wage_per_hr: alpha1, ..default_parameters() };
                let inst = grid_instance(&params, 20, 4320)?;
                let label = format!("alpha1_{alpha1:.0}_k20");
                push(&mut jobs, inst, label, ScenarioMode::PlatoonSwap, cli.seed);
            }
        }
    }

    let mut rows = run_jobs(jobs, cli, &out_dir);
    fill_benefits(&mut rows);
    let report_path = out_dir.join("report.csv");
    // Suites rewrite their report from scratch.
    let _ = std::fs::remove_file(&report_path);
    append_report(&report_path, &rows)?;
    println!("suite {suite_name}: {} rows -> {}", rows.len(), report_path.display());
    Ok(())
}

/// A 4x4 grid instance (150 km edges) with seeded deliveries and deadlines
/// relaxed to guarantee servability.
fn grid_instance(params: &Parameters, trucks: usize, seed: u64) -> Result<Instance> {
    let network = generate_grid(4, 150.0, params, 0.5)?;
    let deliveries = generate_deliveries(&network, trucks, seed)?;
    let mut inst = Instance::new(network, params.clone(), deliveries)?;
    relax_deadlines(&mut inst);
    Ok(inst)
}
