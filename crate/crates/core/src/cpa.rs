//! The cutting-plane loop.
//!
//! Start from the degree-constrained model with no subtour cuts, solve it,
//! split the solution into directed cycles, add one cut per cycle, repeat
//! until a single Hamiltonian cycle comes back. The solve step is pluggable:
//! exact branch and bound, direct simulated annealing of the QUBO, or the
//! time-budgeted hybrid emulation.

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::solve_restricted_exact;
use crate::model::{
    degree_constraint_count, enumerate_all_secs, ArcSolution, Instance, RestrictedModel, SecCut, VertexSet,
};
use crate::qubo::{
    account_time, anneal_budgeted, anneal_with, compute_num_reads, to_qubo, AnnealParams, MoveKernel, Penalty,
    PhaseTimers, ReadMode, ReadSchedule, TimeBreakdown,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Anneal,
    HybridEmulation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpaConfig {
    pub backend: Backend,
    pub max_iterations: usize,
    /// Wall-clock limit per solve. Required for the hybrid emulation,
    /// optional for the exact backend, ignored by direct annealing.
    pub per_iteration_budget: Option<Duration>,
    pub read_schedule: ReadSchedule,
    pub sweeps: usize,
    pub seed: u64,
    pub penalty: Penalty,
    /// Hybrid emulation: reads per batch.
    pub hybrid_batch: usize,
    /// Hybrid emulation: batches without improvement before stopping early.
    pub hybrid_patience: usize,
}

impl CpaConfig {
    pub fn new(backend: Backend, n: usize) -> Self {
        let (per_iteration_budget, sweeps) = match backend {
            Backend::Exact => (None, 0),
            Backend::Anneal => (None, 2000),
            Backend::HybridEmulation => (Some(Duration::from_secs(5)), 400),
        };
        Self {
            backend,
            max_iterations: n.div_ceil(2).max(1),
            per_iteration_budget,
            read_schedule: ReadSchedule::default(),
            sweeps,
            seed: 0,
            penalty: Penalty::Auto,
            hybrid_batch: 4,
            hybrid_patience: 3,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInstance("max_iterations must be at least 1".into()));
        }
        if self.per_iteration_budget.is_some_and(|b| b.is_zero()) {
            return Err(Error::InvalidInstance("per-iteration budget must be positive".into()));
        }
        if self.backend == Backend::HybridEmulation && self.per_iteration_budget.is_none() {
            return Err(Error::InvalidInstance(
                "hybrid emulation needs a per-iteration budget".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Exact backend proved the tour optimal for the candidate arcs.
    Optimal,
    /// A sampler returned a Hamiltonian cycle, without an optimality proof.
    FeasibleTour,
    /// No sample satisfied the degree constraints and active cuts.
    NoFeasible,
    IterationLimit,
}

impl Outcome {
    pub fn is_tour(self) -> bool {
        matches!(self, Outcome::Optimal | Outcome::FeasibleTour)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    #[serde(serialize_with = "solution_json")]
    pub solution: Option<ArcSolution>,
    #[serde(serialize_with = "cuts_json")]
    pub cuts_added: Vec<SecCut>,
    pub num_reads_used: u64,
    pub time: TimeBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpaTrace {
    pub n: usize,
    pub backend: Backend,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub total_cuts: usize,
    pub outcome: Outcome,
    /// Last solution produced, a tour when the outcome is a tour.
    #[serde(serialize_with = "solution_json")]
    pub solution: Option<ArcSolution>,
}

impl CpaTrace {
    pub fn objective(&self) -> Option<f64> {
        self.outcome
            .is_tour()
            .then(|| self.solution.as_ref().map(|s| s.objective))
            .flatten()
    }

    pub fn num_iterations(&self) -> usize {
        self.iterations.len()
    }

    /// Degree constraints plus every cut added along the way.
    pub fn total_constraints(&self) -> u64 {
        degree_constraint_count(self.n) + self.total_cuts as u64
    }

    pub fn total_time(&self) -> TimeBreakdown {
        let mut t = TimeBreakdown::default();
        for r in &self.iterations {
            t.build_s += r.time.build_s;
            t.conversion_s += r.time.conversion_s;
            t.overhead_s += r.time.overhead_s;
            t.sampling_s += r.time.sampling_s;
            t.solver_modeled_us += r.time.solver_modeled_us;
            t.decode_s += r.time.decode_s;
            t.total_s += r.time.total_s;
        }
        t
    }

    /// Pretty JSON. Measured wall-clock fields are zeroed unless
    /// `wall_clock` is set, which makes seeded traces byte-comparable.
    pub fn to_json(&self, wall_clock: bool) -> String {
        let mut trace = self.clone();
        if !wall_clock {
            for r in &mut trace.iterations {
                r.time = r.time.without_wall_clock();
            }
        }
        serde_json::to_string_pretty(&trace).expect("trace serializes")
    }
}

#[derive(Serialize)]
struct SolutionView {
    objective: f64,
    degree_feasible: bool,
    cycle_count: usize,
    /// 1-based vertex sequences, or 1-based arcs when not a permutation.
    #[serde(skip_serializing_if = "Option::is_none")]
    cycles: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arcs: Option<Vec<(usize, usize)>>,
}

fn solution_json<S: Serializer>(solution: &Option<ArcSolution>, s: S) -> std::result::Result<S::Ok, S::Error> {
    solution
        .as_ref()
        .map(|sol| {
            let n = sol.selected.len();
            let cycles = sol
                .cycles(n)
                .map(|cs| cs.into_iter().map(|c| c.into_iter().map(|v| v + 1).collect()).collect());
            let arcs = cycles
                .is_none()
                .then(|| sol.selected.iter().map(|&(i, j)| (i + 1, j + 1)).collect());
            SolutionView {
                objective: sol.objective,
                degree_feasible: sol.degree_feasible,
                cycle_count: sol.cycle_count,
                cycles,
                arcs,
            }
        })
        .serialize(s)
}

fn cuts_json<S: Serializer>(cuts: &[SecCut], s: S) -> std::result::Result<S::Ok, S::Error> {
    cuts.iter()
        .map(|c| c.subset().to_ids())
        .collect::<Vec<_>>()
        .serialize(s)
}

/// Vertex sets of the directed cycles of a degree-feasible solution.
pub fn detect_subtours(solution: &ArcSolution, n: usize) -> Result<Vec<VertexSet>> {
    let cycles = solution.cycles(n).ok_or(Error::NotDegreeFeasible)?;
    Ok(cycles.into_iter().map(|c| c.into_iter().collect()).collect())
}

/// One cut per proper subtour, skipping subsets already in `existing` or
/// repeated within `subtours`.
pub fn cuts_from_subtours(subtours: &[VertexSet], n: usize, existing: Option<&RestrictedModel>) -> Vec<SecCut> {
    let mut out: Vec<SecCut> = Vec::new();
    for s in subtours {
        if s.len() >= n || existing.is_some_and(|m| m.contains_cut(s)) || out.iter().any(|c| c.subset() == s) {
            continue;
        }
        if let Ok(cut) = SecCut::new(s.clone(), n) {
            out.push(cut);
        }
    }
    out
}

struct Solved {
    solution: Option<ArcSolution>,
    num_reads: u64,
    time: TimeBreakdown,
    proven: bool,
}

/// Per-iteration sampler seed; keeps iterations of one run independent.
fn iteration_seed(seed: u64, iteration: usize) -> u64 {
    seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn solve_once(
    model: &RestrictedModel,
    cfg: &CpaConfig,
    mode: ReadMode,
    iteration: usize,
    build: Duration,
) -> Result<Solved> {
    let mut phases = PhaseTimers {
        build,
        ..Default::default()
    };
    match cfg.backend {
        Backend::Exact => {
            let t = Instant::now();
            let r = solve_restricted_exact(model, cfg.per_iteration_budget);
            phases.sampling = t.elapsed();
            let r = match r {
                Ok(r) => r,
                Err(Error::Infeasible) => {
                    return Ok(Solved {
                        solution: None,
                        num_reads: 0,
                        time: account_time(&phases, 0, &cfg.read_schedule),
                        proven: true,
                    })
                }
                Err(e) => return Err(e),
            };
            Ok(Solved {
                solution: Some(r.solution),
                num_reads: 0,
                time: account_time(&phases, 0, &cfg.read_schedule),
                proven: r.optimal,
            })
        }
        Backend::Anneal | Backend::HybridEmulation => {
            let t = Instant::now();
            let qubo = to_qubo(model, cfg.penalty);
            phases.conversion = t.elapsed();

            let t = Instant::now();
            let kernel = match cfg.backend {
                Backend::Anneal => MoveKernel::SingleFlip,
                _ => MoveKernel::PermutationSwap,
            };
            let seed = iteration_seed(cfg.seed, iteration);
            let set = if cfg.backend == Backend::Anneal {
                let reads = compute_num_reads(&cfg.read_schedule, mode) as usize;
                let params = AnnealParams::new(reads, cfg.sweeps, seed).with_kernel(kernel);
                phases.overhead = t.elapsed();
                let t = Instant::now();
                let set = anneal_with(&qubo, &params);
                phases.sampling = t.elapsed();
                set
            } else {
                let params = AnnealParams::new(cfg.hybrid_batch.max(1), cfg.sweeps, seed).with_kernel(kernel);
                let budget = cfg.per_iteration_budget.expect("validated");
                phases.overhead = t.elapsed();
                let t = Instant::now();
                let set = anneal_budgeted(&qubo, &params, budget, cfg.hybrid_patience.max(1));
                phases.sampling = t.elapsed();
                set
            };

            let t = Instant::now();
            let solution = set.best_feasible;
            phases.decode = t.elapsed();
            let num_reads = set.num_reads_used as u64;
            Ok(Solved {
                solution,
                num_reads,
                time: account_time(&phases, num_reads, &cfg.read_schedule),
                proven: false,
            })
        }
    }
}

fn tour_outcome(cfg: &CpaConfig, proven: bool) -> Outcome {
    if cfg.backend == Backend::Exact && proven {
        Outcome::Optimal
    } else {
        Outcome::FeasibleTour
    }
}

/// Runs the cutting-plane loop from the cut-free model.
pub fn run_cpa(instance: &Instance, cfg: &CpaConfig) -> Result<CpaTrace> {
    cfg.validate()?;
    let n = instance.n();
    let t = Instant::now();
    let mut model = RestrictedModel::new(instance.clone());
    let mut build = t.elapsed();

    let mut iterations = Vec::new();
    let mut outcome = Outcome::IterationLimit;
    let mut last = None;
    for it in 1..=cfg.max_iterations {
        let mode = ReadMode::Cpa {
            cuts_so_far: model.cuts().len() as u64,
        };
        let solved = solve_once(&model, cfg, mode, it, build)?;
        let mut record = IterationRecord {
            iteration: it,
            solution: solved.solution.clone(),
            cuts_added: Vec::new(),
            num_reads_used: solved.num_reads,
            time: solved.time,
        };
        let Some(solution) = solved.solution else {
            iterations.push(record);
            outcome = Outcome::NoFeasible;
            break;
        };
        if solution.is_hamiltonian() {
            iterations.push(record);
            last = Some(solution);
            outcome = tour_outcome(cfg, solved.proven);
            break;
        }
        let t = Instant::now();
        let subtours = detect_subtours(&solution, n)?;
        let cuts = cuts_from_subtours(&subtours, n, Some(&model));
        for c in &cuts {
            model.add_cut(c.clone())?;
        }
        build = t.elapsed();
        record.cuts_added = cuts;
        iterations.push(record);
        last = Some(solution);
    }

    let total_cuts = iterations.iter().map(|r| r.cuts_added.len()).sum();
    Ok(CpaTrace {
        n,
        backend: cfg.backend,
        seed: cfg.seed,
        iterations,
        total_cuts,
        outcome,
        solution: last,
    })
}

/// Solves the model with every subtour cut enumerated up front, once.
/// `cuts_max` drives the annealing read count; it is normally the total cut
/// count of a previous cutting-plane run on the same instance.
pub fn run_cilp(instance: &Instance, cfg: &CpaConfig, cuts_max: u64) -> Result<CpaTrace> {
    cfg.validate()?;
    let n = instance.n();
    let t = Instant::now();
    let cuts = enumerate_all_secs(n)?;
    let total_cuts = cuts.len();
    let model = RestrictedModel::with_cuts(instance.clone(), cuts)?;
    let build = t.elapsed();

    let solved = solve_once(&model, cfg, ReadMode::Cilp { cuts_max }, 1, build)?;
    let outcome = match &solved.solution {
        Some(s) if s.is_hamiltonian() => tour_outcome(cfg, solved.proven),
        _ => Outcome::NoFeasible,
    };
    Ok(CpaTrace {
        n,
        backend: cfg.backend,
        seed: cfg.seed,
        iterations: vec![IterationRecord {
            iteration: 1,
            solution: solved.solution.clone(),
            cuts_added: Vec::new(),
            num_reads_used: solved.num_reads,
            time: solved.time,
        }],
        total_cuts,
        outcome,
        solution: solved.solution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapStats {
    /// Percentage gap per run, `None` for runs without a tour.
    pub gap_pct: Vec<Option<f64>>,
    /// Mean over runs with a tour, `None` when there are none.
    pub average_gap_pct: Option<f64>,
    pub feasibility_pct: f64,
}

pub fn gap_and_feasibility(runs: &[CpaTrace], optimum: f64) -> GapStats {
    let gap_pct: Vec<Option<f64>> = runs
        .iter()
        .map(|r| r.objective().map(|of| (of - optimum) / optimum * 100.0))
        .collect();
    let found: Vec<f64> = gap_pct.iter().flatten().copied().collect();
    let average_gap_pct = (!found.is_empty()).then(|| found.iter().sum::<f64>() / found.len() as f64);
    let feasibility_pct = if runs.is_empty() {
        0.0
    } else {
        found.len() as f64 / runs.len() as f64 * 100.0
    };
    GapStats {
        gap_pct,
        average_gap_pct,
        feasibility_pct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caf::{caf_filter, CafConfig};
    use crate::exact::held_karp;
    use crate::tsplib::berlin52_prefix;

    fn sol(n: usize, arcs: &[(usize, usize)]) -> ArcSolution {
        ArcSolution::from_arcs(n, |_, _| 1.0, arcs.to_vec())
    }

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn subtours_of_a_tour_and_two_cycles() {
        let tour = sol(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(detect_subtours(&tour, 5).unwrap(), vec![set(&[0, 1, 2, 3, 4])]);
        let split = sol(5, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 3)]);
        assert_eq!(detect_subtours(&split, 5).unwrap(), vec![set(&[0, 1, 2]), set(&[3, 4])]);
        let broken = sol(5, &[(0, 1), (1, 0)]);
        assert_eq!(detect_subtours(&broken, 5), Err(Error::NotDegreeFeasible));
    }

    #[test]
    fn three_cycles_partition_nine() {
        let succ = [2, 0, 1, 4, 5, 3, 7, 8, 6];
        let s = sol(9, &succ.iter().enumerate().map(|(i, &j)| (i, j)).collect::<Vec<_>>());
        let parts = detect_subtours(&s, 9).unwrap();
        assert_eq!(parts.len(), 3);
        let mut all = VertexSet::new();
        for p in &parts {
            assert!(p.iter().all(|v| !all.contains(v)));
            all.union_with(p);
        }
        assert_eq!(all.len(), 9);
    }

    #[test]
    fn cuts_skip_full_set_and_duplicates() {
        let cuts = cuts_from_subtours(&[set(&[0, 1, 2]), set(&[3, 4])], 5, None);
        assert_eq!(cuts.iter().map(|c| c.rhs()).collect::<Vec<_>>(), vec![2, 1]);
        assert!(cuts_from_subtours(&[set(&[0, 1, 2, 3, 4])], 5, None).is_empty());

        let mut model = RestrictedModel::new(berlin52_prefix(5).unwrap());
        model.add_cut(cuts[0].clone()).unwrap();
        let again = cuts_from_subtours(&[set(&[0, 1, 2]), set(&[3, 4]), set(&[3, 4])], 5, Some(&model));
        assert_eq!(again.len(), 1);
        assert_eq!(again[0].subset(), &set(&[3, 4]));
    }

    #[test]
    fn exact_five_complete() {
        let inst = berlin52_prefix(5).unwrap();
        let trace = run_cpa(&inst, &CpaConfig::new(Backend::Exact, 5)).unwrap();
        assert_eq!(trace.outcome, Outcome::Optimal);
        assert!((trace.objective().unwrap() - 2314.55).abs() < 0.01);
        assert_eq!(
            trace.total_cuts,
            trace.iterations.iter().map(|r| r.cuts_added.len()).sum::<usize>()
        );
        assert!(trace.total_constraints() <= 21);
    }

    #[test]
    fn exact_twelve_with_caf() {
        let inst = caf_filter(&berlin52_prefix(12).unwrap(), &CafConfig::for_size(12)).unwrap();
        let trace = run_cpa(&inst, &CpaConfig::new(Backend::Exact, 12).with_max_iterations(100)).unwrap();
        assert_eq!(trace.outcome, Outcome::Optimal);
        assert!((trace.objective().unwrap() - 4056.68).abs() < 0.01);
    }

    #[test]
    fn exact_iterations_always_add_new_cuts() {
        let inst = berlin52_prefix(14).unwrap();
        let trace = run_cpa(&inst, &CpaConfig::new(Backend::Exact, 14).with_max_iterations(100)).unwrap();
        let (last, rest) = trace.iterations.split_last().unwrap();
        assert!(rest.iter().all(|r| !r.cuts_added.is_empty()));
        assert!(last.cuts_added.is_empty());
        let mut seen = std::collections::HashSet::new();
        for r in &trace.iterations {
            for c in &r.cuts_added {
                assert!(seen.insert(c.subset().clone()));
            }
        }
        let hk = held_karp(&inst).unwrap().solution.objective;
        assert!((trace.objective().unwrap() - hk).abs() < 1e-6);
    }

    #[test]
    fn cilp_matches_cpa() {
        for n in [5, 7, 9] {
            let inst = berlin52_prefix(n).unwrap();
            let cfg = CpaConfig::new(Backend::Exact, n).with_max_iterations(100);
            let a = run_cilp(&inst, &cfg, 0).unwrap();
            let b = run_cpa(&inst, &cfg).unwrap();
            assert_eq!(a.outcome, Outcome::Optimal);
            assert!((a.objective().unwrap() - b.objective().unwrap()).abs() < 1e-6);
        }
        assert!(matches!(
            run_cilp(&berlin52_prefix(23).unwrap(), &CpaConfig::new(Backend::Exact, 23), 0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn iteration_limit_is_an_outcome() {
        let inst = berlin52_prefix(12).unwrap();
        let trace = run_cpa(&inst, &CpaConfig::new(Backend::Exact, 12).with_max_iterations(1)).unwrap();
        assert_eq!(trace.outcome, Outcome::IterationLimit);
        assert_eq!(trace.objective(), None);
    }

    #[test]
    fn bad_configs() {
        let inst = berlin52_prefix(5).unwrap();
        assert!(run_cpa(&inst, &CpaConfig::new(Backend::Exact, 5).with_max_iterations(0)).is_err());
        let mut cfg = CpaConfig::new(Backend::HybridEmulation, 5);
        cfg.per_iteration_budget = None;
        assert!(run_cpa(&inst, &cfg).is_err());
    }

    #[test]
    fn anneal_trace_is_reproducible() {
        let inst = caf_filter(&berlin52_prefix(5).unwrap(), &CafConfig::for_size(5)).unwrap();
        let mut cfg = CpaConfig::new(Backend::Anneal, 5).with_seed(11);
        cfg.sweeps = 200;
        let a = run_cpa(&inst, &cfg).unwrap();
        let b = run_cpa(&inst, &cfg).unwrap();
        assert_eq!(a.to_json(false), b.to_json(false));
        assert_eq!(a.iterations[0].num_reads_used, 1000);
    }

    #[test]
    fn gap_examples() {
        let inst = berlin52_prefix(5).unwrap();
        let ok = run_cpa(&inst, &CpaConfig::new(Backend::Exact, 5)).unwrap();
        let mut bad = ok.clone();
        bad.outcome = Outcome::NoFeasible;

        let all = gap_and_feasibility(&vec![ok.clone(); 5], 2314.55);
        assert!(all.average_gap_pct.unwrap().abs() < 1e-3);
        assert_eq!(all.feasibility_pct, 100.0);

        let runs = vec![ok.clone(), bad.clone(), ok, bad.clone(), bad.clone()];
        let some = gap_and_feasibility(&runs, 2314.55);
        assert_eq!(some.feasibility_pct, 40.0);
        assert_eq!(some.gap_pct[1], None);

        let none = gap_and_feasibility(&vec![bad; 5], 2314.55);
        assert_eq!((none.average_gap_pct, none.feasibility_pct), (None, 0.0));
    }
}
