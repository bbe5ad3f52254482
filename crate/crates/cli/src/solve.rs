//! Solve table: repeated seeded runs per `(n, variant)` with averages,
//! standard deviations, optimality gap and feasibility rate.

use std::collections::HashMap;

use serde::Serialize;
use tspcut::cpa::{gap_and_feasibility, run_cilp, run_cpa, Backend, CpaConfig, CpaTrace, Outcome};
use tspcut::model::{degree_constraint_count, Formulation};
use tspcut::reference::berlin52_row;

use crate::{instance_for, ExperimentSpec, Variant};

pub const HEADER: [&str; 18] = [
    "n",
    "variant",
    "backend",
    "runs",
    "of_avg",
    "of_dev",
    "time_avg",
    "time_dev",
    "solve_avg",
    "solve_dev",
    "iters_avg",
    "iters_dev",
    "cuts_avg",
    "cuts_dev",
    "qpu_us_avg",
    "gap_pct",
    "feas_pct",
    "seeds",
];

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub n: usize,
    pub variant: Variant,
    pub run: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<CpaTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregates over the runs of one `(n, variant)`. Averages of the
/// objective cover runs that ended in a tour; the other averages cover runs
/// that completed. Missing values print as `--`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub n: usize,
    pub variant: Variant,
    pub backend: Backend,
    pub runs: usize,
    pub of_avg: Option<f64>,
    pub of_dev: Option<f64>,
    /// Wall-clock seconds per run, all phases.
    pub time_avg: Option<f64>,
    pub time_dev: Option<f64>,
    /// Wall-clock seconds per run spent in the solver or sampler.
    pub solve_avg: Option<f64>,
    pub solve_dev: Option<f64>,
    pub iters_avg: Option<f64>,
    pub iters_dev: Option<f64>,
    pub cuts_avg: Option<f64>,
    pub cuts_dev: Option<f64>,
    /// Modelled annealer time per run, microseconds.
    pub qpu_us_avg: Option<f64>,
    pub gap_pct: Option<f64>,
    pub feas_pct: Option<f64>,
    /// Reference optimum the gap is measured against.
    pub optimum: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SolveRow {
    pub fn cells(&self) -> Vec<String> {
        // `+ 0.0` turns a negative zero into a positive one
        let f = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |v| format!("{:.2}", round2(v) + 0.0));
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        vec![
            self.n.to_string(),
            self.variant.to_string(),
            backend_label(self.backend).to_string(),
            self.runs.to_string(),
            f(self.of_avg),
            f(self.of_dev),
            f(self.time_avg),
            f(self.time_dev),
            f(self.solve_avg),
            f(self.solve_dev),
            f(self.iters_avg),
            f(self.iters_dev),
            f(self.cuts_avg),
            f(self.cuts_dev),
            f(self.qpu_us_avg),
            f(self.gap_pct),
            f(self.feas_pct),
            seeds.join(" "),
        ]
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

pub fn backend_label(b: Backend) -> &'static str {
    match b {
        Backend::Exact => "exact",
        Backend::Anneal => "anneal",
        Backend::HybridEmulation => "hybrid-emulation",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub rows: Vec<SolveRow>,
    pub runs: Vec<RunResult>,
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_dev(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() == 1 {
        return Some((m, 0.0));
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    Some((m, var.sqrt()))
}

/// Optimum and cutting-plane cut count of a prefix, used for the gap and to
/// size read counts of complete-formulation annealing.
#[derive(Debug, Clone, Copy)]
struct Baseline {
    optimum: f64,
    cuts: u64,
}

struct Baselines<'a> {
    spec: &'a ExperimentSpec,
    cache: HashMap<(usize, bool), Option<Baseline>>,
}

impl<'a> Baselines<'a> {
    fn new(spec: &'a ExperimentSpec) -> Self {
        Self {
            spec,
            cache: HashMap::new(),
        }
    }

    fn record(&mut self, n: usize, caf: bool, trace: &CpaTrace) {
        if let (Some(optimum), Outcome::Optimal) = (trace.objective(), trace.outcome) {
            self.cache.entry((n, caf)).or_insert(Some(Baseline {
                optimum,
                cuts: trace.total_cuts as u64,
            }));
        }
    }

    /// Bundled reference values for berlin52 prefixes, otherwise an exact
    /// cutting-plane run.
    fn get(&mut self, n: usize, caf: bool) -> Option<Baseline> {
        if let Some(b) = self.cache.get(&(n, caf)) {
            return *b;
        }
        let from_table = self.spec.is_berlin52().then(|| berlin52_row(n)).flatten().map(|r| {
            let (optimum, constraints) = if caf {
                (r.optimum_caf, r.cpa_constraints_caf)
            } else {
                (r.optimum, r.cpa_constraints)
            };
            Baseline {
                optimum,
                cuts: constraints - degree_constraint_count(n),
            }
        });
        let b = from_table.or_else(|| {
            let inst = instance_for(&self.spec.instance, n, caf).ok()?;
            let trace = run_cpa(&inst, &CpaConfig::new(Backend::Exact, n)).ok()?;
            trace.objective().map(|optimum| Baseline {
                optimum,
                cuts: trace.total_cuts as u64,
            })
        });
        self.cache.insert((n, caf), b);
        b
    }
}

fn config(spec: &ExperimentSpec, n: usize, seed: u64) -> CpaConfig {
    let mut cfg = CpaConfig::new(spec.backend, n).with_seed(seed);
    if let Some(s) = spec.sweeps {
        cfg.sweeps = s;
    }
    if spec.budget.is_some() {
        cfg.per_iteration_budget = spec.budget;
    }
    cfg
}

fn run_one(
    spec: &ExperimentSpec,
    baselines: &mut Baselines,
    n: usize,
    variant: Variant,
    seed: u64,
) -> tspcut::Result<CpaTrace> {
    let inst = instance_for(&spec.instance, n, variant.caf())?;
    let cfg = config(spec, n, seed);
    match variant.formulation() {
        Formulation::Cpa => run_cpa(&inst, &cfg),
        Formulation::Cilp => {
            // Read counts of direct annealing scale with the cut count a
            // cutting-plane run needs on the same prefix.
            let cuts_max = match spec.backend {
                Backend::Anneal => baselines.get(n, variant.caf()).map_or(0, |b| b.cuts),
                _ => 0,
            };
            run_cilp(&inst, &cfg, cuts_max)
        }
    }
}

/// Number of runs per row: the exact backend is deterministic and runs once.
pub fn effective_runs(spec: &ExperimentSpec) -> usize {
    if spec.backend == Backend::Exact {
        1
    } else {
        spec.runs
    }
}

fn aggregate(
    spec: &ExperimentSpec,
    n: usize,
    variant: Variant,
    results: &[RunResult],
    optimum: Option<f64>,
) -> SolveRow {
    let traces: Vec<&CpaTrace> = results.iter().filter_map(|r| r.trace.as_ref()).collect();
    let pick = |f: &dyn Fn(&CpaTrace) -> f64| mean_dev(&traces.iter().map(|t| f(t)).collect::<Vec<_>>());
    let split = |v: Option<(f64, f64)>| (v.map(|p| p.0), v.map(|p| p.1));

    let objectives: Vec<f64> = traces.iter().filter_map(|t| t.objective()).collect();
    let (of_avg, of_dev) = split(mean_dev(&objectives));
    let wall = |v: Option<(f64, f64)>| {
        if spec.wall_clock {
            split(v)
        } else {
            split(v.map(|_| (0.0, 0.0)))
        }
    };
    let (time_avg, time_dev) = wall(pick(&|t| t.total_time().total_s));
    let (solve_avg, solve_dev) = wall(pick(&|t| t.total_time().sampling_s));
    let (iters_avg, iters_dev) = split(pick(&|t| t.num_iterations() as f64));
    let (cuts_avg, cuts_dev) = split(pick(&|t| t.total_cuts as f64));
    let qpu_us_avg = match spec.backend {
        Backend::Exact => None,
        _ => pick(&|t| t.total_time().solver_modeled_us as f64).map(|p| p.0),
    };

    let all: Vec<CpaTrace> = traces.iter().map(|&t| t.clone()).collect();
    let feas_pct = (!results.is_empty()).then(|| objectives.len() as f64 / results.len() as f64 * 100.0);
    let gap_pct = optimum.and_then(|opt| gap_and_feasibility(&all, opt).average_gap_pct);
    let error = (traces.is_empty())
        .then(|| results.iter().find_map(|r| r.error.clone()))
        .flatten();

    SolveRow {
        n,
        variant,
        backend: spec.backend,
        runs: results.len(),
        of_avg,
        of_dev,
        time_avg,
        time_dev,
        solve_avg,
        solve_dev,
        iters_avg,
        iters_dev,
        cuts_avg,
        cuts_dev,
        qpu_us_avg,
        gap_pct,
        feas_pct: if traces.is_empty() { None } else { feas_pct },
        optimum,
        seeds: results.iter().map(|r| r.seed).collect(),
        error,
    }
}

/// Runs every `(n, variant, run)` in that order. Run `r` uses seed
/// `spec.seed + r`. A failing run is recorded with its error and the
/// experiment continues.
pub fn cmd_solve(spec: &ExperimentSpec) -> anyhow::Result<SolveReport> {
    spec.validate()?;
    let mut baselines = Baselines::new(spec);
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for &n in &spec.sizes {
        for &variant in &spec.variants {
            let mut results = Vec::new();
            for run in 0..effective_runs(spec) {
                let seed = spec.seed.wrapping_add(run as u64);
                let outcome = run_one(spec, &mut baselines, n, variant, seed);
                if let Ok(trace) = &outcome {
                    if spec.backend == Backend::Exact && variant.formulation() == Formulation::Cpa {
                        baselines.record(n, variant.caf(), trace);
                    }
                }
                let (trace, error) = match outcome {
                    Ok(t) => (Some(t), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                results.push(RunResult {
                    n,
                    variant,
                    run,
                    seed,
                    trace,
                    error,
                });
            }
            let optimum = if results.iter().any(|r| r.trace.is_some()) {
                baselines.get(n, variant.caf()).map(|b| b.optimum)
            } else {
                None
            };
            rows.push(aggregate(spec, n, variant, &results, optimum));
            runs.extend(results);
        }
    }
    Ok(SolveReport { rows, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_deviation() {
        assert_eq!(mean_dev(&[]), None);
        assert_eq!(mean_dev(&[3.0]), Some((3.0, 0.0)));
        let (m, d) = mean_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(m, 5.0);
        assert!((d - 2.138_089_935).abs() < 1e-9);
    }

    #[test]
    fn cells_use_two_decimals_and_dashes() {
        let row = SolveRow {
            n: 5,
            variant: Variant::CpaCaf,
            backend: Backend::Anneal,
            runs: 2,
            of_avg: Some(2314.554),
            of_dev: Some(0.0),
            time_avg: None,
            time_dev: None,
            solve_avg: None,
            solve_dev: None,
            iters_avg: Some(2.0),
            iters_dev: Some(0.0),
            cuts_avg: Some(4.0),
            cuts_dev: Some(0.0),
            qpu_us_avg: Some(430_000.0),
            gap_pct: Some(0.0),
            feas_pct: Some(100.0),
            optimum: Some(2314.55),
            seeds: vec![7, 8],
            error: None,
        };
        let cells = row.cells();
        assert_eq!(cells.len(), HEADER.len());
        assert_eq!(cells[..6], ["5", "cpa-caf", "anneal", "2", "2314.55", "0.00"]);
        assert_eq!(cells[6], "--");
        assert_eq!(cells[17], "7 8");
    }
}
