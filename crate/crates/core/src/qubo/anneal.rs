//! Seeded simulated annealing over a [`QuboProblem`].
//!
//! Each read is an independent restart with its own ChaCha stream
//! (`seed`, stream = read index), so results do not depend on how reads are
//! scheduled across threads.
//!
//! Two move kernels are available:
//!
//! * [`MoveKernel::SingleFlip`]: Metropolis single-bit flips in sweep order
//!   under geometric cooling from `P` down to `1e-3 * mean|linear|`. This is
//!   the stand-in for a direct annealer submission.
//! * [`MoveKernel::PermutationSwap`]: starts from a random cycle cover and
//!   exchanges successors of two vertices (four arc flips plus the slack bits
//!   of every touched cut), then finishes with a greedy descent. Energies are
//!   still exact QUBO energies. Used to emulate the hybrid solver.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::QuboProblem;
use crate::exact::AssignmentMatrix;
use crate::model::ArcSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveKernel {
    SingleFlip,
    PermutationSwap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealParams {
    pub num_reads: usize,
    pub sweeps: usize,
    pub seed: u64,
    pub kernel: MoveKernel,
    /// Overrides the kernel's default starting temperature.
    pub initial_temperature: Option<f64>,
    /// Overrides the kernel's default final temperature.
    pub final_temperature: Option<f64>,
}

impl AnnealParams {
    pub fn new(num_reads: usize, sweeps: usize, seed: u64) -> Self {
        Self {
            num_reads,
            sweeps,
            seed,
            kernel: MoveKernel::SingleFlip,
            initial_temperature: None,
            final_temperature: None,
        }
    }

    pub fn with_kernel(mut self, kernel: MoveKernel) -> Self {
        self.kernel = kernel;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub assignment: Vec<u8>,
    pub energy: f64,
    pub feasible: bool,
    pub read: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    /// Ascending energy; ties keep read order.
    pub samples: Vec<Sample>,
    /// Cheapest feasible sample by objective, if any.
    pub best_feasible: Option<ArcSolution>,
    pub num_reads_used: usize,
}

impl SampleSet {
    fn from_samples(qubo: &QuboProblem, mut samples: Vec<Sample>) -> Self {
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.read.cmp(&b.read)));
        let best_feasible = samples
            .iter()
            .filter(|s| s.feasible)
            .map(|s| qubo.arc_solution(&s.assignment))
            .min_by(|a, b| a.objective.total_cmp(&b.objective));
        let num_reads_used = samples.len();
        Self {
            samples,
            best_feasible,
            num_reads_used,
        }
    }

    pub fn lowest_energy(&self) -> Option<&Sample> {
        self.samples.first()
    }
}

/// Single-flip annealing with the default schedule.
pub fn anneal(qubo: &QuboProblem, num_reads: usize, sweeps: usize, seed: u64) -> SampleSet {
    anneal_with(qubo, &AnnealParams::new(num_reads, sweeps, seed))
}

pub fn anneal_with(qubo: &QuboProblem, params: &AnnealParams) -> SampleSet {
    let sampler = Sampler::new(qubo, params);
    let samples = sampler.run_reads(0..params.num_reads);
    SampleSet::from_samples(qubo, samples)
}

/// Repeats batches of `params.num_reads` reads until `patience` consecutive
/// batches fail to improve the best feasible objective or the wall-clock
/// budget runs out. At least one batch always runs.
pub fn anneal_budgeted(qubo: &QuboProblem, params: &AnnealParams, budget: Duration, patience: usize) -> SampleSet {
    let start = Instant::now();
    let sampler = Sampler::new(qubo, params);
    let batch = params.num_reads.max(1);
    let mut samples = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut next = 0;
    loop {
        let fresh = sampler.run_reads(next..next + batch);
        next += batch;
        let batch_best = fresh
            .iter()
            .filter(|s| s.feasible)
            .map(|s| qubo.arc_solution(&s.assignment).objective)
            .fold(f64::INFINITY, f64::min);
        samples.extend(fresh);
        if batch_best < best - 1e-9 {
            best = batch_best;
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= patience || start.elapsed() >= budget {
            break;
        }
    }
    SampleSet::from_samples(qubo, samples)
}

/// Symmetric sparse couplings in CSR form, neighbours sorted.
struct Couplings {
    start: Vec<usize>,
    nbr: Vec<usize>,
    weight: Vec<f64>,
}

impl Couplings {
    fn new(qubo: &QuboProblem) -> Self {
        let nv = qubo.num_vars();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
        for (&(a, b), &q) in qubo.quadratic() {
            rows[a].push((b, q));
            rows[b].push((a, q));
        }
        let mut start = Vec::with_capacity(nv + 1);
        let mut nbr = Vec::new();
        let mut weight = Vec::new();
        start.push(0);
        for mut row in rows {
            row.sort_by_key(|&(v, _)| v);
            for (v, q) in row {
                nbr.push(v);
                weight.push(q);
            }
            start.push(nbr.len());
        }
        Self { start, nbr, weight }
    }

    fn row(&self, v: usize) -> (&[usize], &[f64]) {
        let r = self.start[v]..self.start[v + 1];
        (&self.nbr[r.clone()], &self.weight[r])
    }

    fn get(&self, u: usize, v: usize) -> f64 {
        let (nbr, w) = self.row(u);
        nbr.binary_search(&v).map_or(0.0, |k| w[k])
    }
}

struct Sampler<'a> {
    qubo: &'a QuboProblem,
    params: AnnealParams,
    couplings: Couplings,
    temperatures: Vec<f64>,
    /// Arc variable per `(i, j)`, `usize::MAX` when absent.
    arc_var: Vec<usize>,
    /// Cut blocks containing each arc variable.
    arc_cuts: Vec<Vec<usize>>,
}

impl<'a> Sampler<'a> {
    fn new(qubo: &'a QuboProblem, params: &AnnealParams) -> Self {
        let n = qubo.n();
        let mean_abs_linear = if qubo.num_vars() == 0 {
            1.0
        } else {
            qubo.linear().iter().map(|c| c.abs()).sum::<f64>() / qubo.num_vars() as f64
        };
        let (t0, t1) = match params.kernel {
            MoveKernel::SingleFlip => (qubo.penalty_weight(), 1e-3 * mean_abs_linear),
            MoveKernel::PermutationSwap => {
                let t0 = qubo.penalty_weight() / n as f64;
                (t0, 1e-3 * t0)
            }
        };
        let t0 = params.initial_temperature.unwrap_or(t0).max(f64::MIN_POSITIVE);
        let t1 = params.final_temperature.unwrap_or(t1).clamp(f64::MIN_POSITIVE, t0);
        let sweeps = params.sweeps.max(1);
        let temperatures = (0..sweeps)
            .map(|s| {
                if sweeps == 1 {
                    t1
                } else {
                    t0 * (t1 / t0).powf(s as f64 / (sweeps - 1) as f64)
                }
            })
            .collect();

        let mut arc_var = vec![usize::MAX; n * n];
        for k in 0..qubo.num_arc_vars() {
            let (i, j) = qubo.arc_of(k).expect("arc variable");
            arc_var[i * n + j] = k;
        }
        let mut arc_cuts = vec![Vec::new(); qubo.num_arc_vars()];
        for (c, block) in qubo.cut_blocks().iter().enumerate() {
            for &k in &block.arc_vars {
                arc_cuts[k].push(c);
            }
        }
        Self {
            qubo,
            params: *params,
            couplings: Couplings::new(qubo),
            temperatures,
            arc_var,
            arc_cuts,
        }
    }

    fn run_reads(&self, reads: std::ops::Range<usize>) -> Vec<Sample> {
        reads
            .into_par_iter()
            .map(|read| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
                rng.set_stream(read as u64);
                let assignment = match self.params.kernel {
                    MoveKernel::SingleFlip => self.single_flip_read(&mut rng),
                    MoveKernel::PermutationSwap => self
                        .permutation_read(&mut rng)
                        .unwrap_or_else(|| self.single_flip_read(&mut rng)),
                };
                Sample {
                    energy: self.qubo.energy(&assignment),
                    feasible: self.qubo.is_feasible(&assignment),
                    assignment,
                    read,
                }
            })
            .collect()
    }

    fn fields(&self, x: &[u8]) -> Vec<f64> {
        let mut h = self.qubo.linear().to_vec();
        for (v, hv) in h.iter_mut().enumerate() {
            let (nbr, w) = self.couplings.row(v);
            for (&u, &q) in nbr.iter().zip(w) {
                if x[u] != 0 {
                    *hv += q;
                }
            }
        }
        h
    }

    fn flip(&self, x: &mut [u8], h: &mut [f64], v: usize) {
        let d = if x[v] == 0 { 1.0 } else { -1.0 };
        x[v] ^= 1;
        let (nbr, w) = self.couplings.row(v);
        for (&u, &q) in nbr.iter().zip(w) {
            h[u] += q * d;
        }
    }

    fn single_flip_read(&self, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let nv = self.qubo.num_vars();
        let mut x: Vec<u8> = (0..nv).map(|_| rng.gen::<bool>() as u8).collect();
        let mut h = self.fields(&x);
        for &t in &self.temperatures {
            for v in 0..nv {
                let delta = if x[v] == 0 { h[v] } else { -h[v] };
                if metropolis(delta, t, rng) {
                    self.flip(&mut x, &mut h, v);
                }
            }
        }
        x
    }

    /// `None` when the candidate arcs admit no cycle cover.
    fn permutation_read(&self, rng: &mut ChaCha8Rng) -> Option<Vec<u8>> {
        let q = self.qubo;
        let n = q.n();
        let mut entries = vec![None; n * n];
        for k in 0..q.num_arc_vars() {
            let (i, j) = q.arc_of(k).expect("arc variable");
            entries[i * n + j] = Some(rng.gen::<f64>());
        }
        let (succ, _) = AssignmentMatrix::new(n, entries).solve().ok()?;
        let mut st = self.perm_state(succ);

        let proposals = q.num_arc_vars().max(n);
        let mut mv = Vec::with_capacity(3);
        let mut flips = Vec::with_capacity(16);
        for &t in &self.temperatures {
            for _ in 0..proposals {
                let i = rng.gen_range(0..n);
                let k = rng.gen_range(0..n);
                let built = if rng.gen::<bool>() {
                    swap_move(&st.succ, i, k, &mut mv)
                } else {
                    insert_move(&st.succ, &st.pred, i, k, &mut mv)
                };
                if !built || !self.move_flips(&st, &mv, &mut flips) {
                    continue;
                }
                let delta = self.multi_flip_delta(&st.x, &st.h, &flips);
                if metropolis(delta, t, rng) {
                    self.apply_move(&mut st, &mv, &flips);
                }
            }
        }
        // greedy descent over every exchange and insertion
        for _ in 0..100 {
            let mut improved = false;
            for i in 0..n {
                for k in 0..n {
                    for insertion in [false, true] {
                        let built = if insertion {
                            insert_move(&st.succ, &st.pred, i, k, &mut mv)
                        } else {
                            swap_move(&st.succ, i, k, &mut mv)
                        };
                        if built
                            && self.move_flips(&st, &mv, &mut flips)
                            && self.multi_flip_delta(&st.x, &st.h, &flips) < -1e-9
                        {
                            self.apply_move(&mut st, &mv, &flips);
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        Some(st.x)
    }

    fn perm_state(&self, succ: Vec<usize>) -> PermState {
        let q = self.qubo;
        let n = q.n();
        let mut pred = vec![0; n];
        let mut x = vec![0u8; q.num_vars()];
        for (i, &j) in succ.iter().enumerate() {
            pred[j] = i;
            x[self.arc_var[i * n + j]] = 1;
        }
        q.fix_slacks(&mut x);
        let lhs = q
            .cut_blocks()
            .iter()
            .map(|b| b.arc_vars.iter().map(|&k| x[k] as u64).sum())
            .collect();
        let h = self.fields(&x);
        PermState { succ, pred, x, h, lhs }
    }

    /// Variables flipped by re-pointing the rows in `mv` (arc variables
    /// first, then slack bits of every touched cut); `false` when a new arc
    /// is not a candidate.
    fn move_flips(&self, st: &PermState, mv: &[(usize, usize)], flips: &mut Vec<usize>) -> bool {
        let n = self.qubo.n();
        flips.clear();
        for &(i, j) in mv {
            let new = self.arc_var[i * n + j];
            if new == usize::MAX {
                return false;
            }
            flips.push(self.arc_var[i * n + st.succ[i]]);
            flips.push(new);
        }
        let arcs = flips.len();
        let mut touched: Vec<usize> = flips.iter().flat_map(|&v| self.arc_cuts[v].iter().copied()).collect();
        touched.sort_unstable();
        touched.dedup();
        let blocks = self.qubo.cut_blocks();
        for c in touched {
            let change: i64 = flips[..arcs]
                .iter()
                .enumerate()
                .filter(|(_, &v)| self.arc_cuts[v].binary_search(&c).is_ok())
                .map(|(k, _)| if k % 2 == 0 { -1 } else { 1 })
                .sum();
            if change == 0 {
                continue;
            }
            let new_lhs = (st.lhs[c] as i64 + change) as u64;
            let block = &blocks[c];
            let bits = super::encode_slack(block.rhs, block.rhs.saturating_sub(new_lhs));
            for (&(v, _), bit) in block.slack_vars.iter().zip(bits) {
                if (st.x[v] != 0) != bit {
                    flips.push(v);
                }
            }
        }
        true
    }

    fn multi_flip_delta(&self, x: &[u8], h: &[f64], flips: &[usize]) -> f64 {
        let d = |v: usize| if x[v] == 0 { 1.0 } else { -1.0 };
        let mut delta = 0.0;
        for (p, &u) in flips.iter().enumerate() {
            delta += d(u) * h[u];
            for &v in &flips[p + 1..] {
                delta += self.couplings.get(u, v) * d(u) * d(v);
            }
        }
        delta
    }

    fn apply_move(&self, st: &mut PermState, mv: &[(usize, usize)], flips: &[usize]) {
        let arcs = 2 * mv.len();
        for &v in &flips[..arcs] {
            let d: i64 = if st.x[v] == 0 { 1 } else { -1 };
            for &c in &self.arc_cuts[v] {
                st.lhs[c] = (st.lhs[c] as i64 + d) as u64;
            }
        }
        for &v in flips {
            self.flip(&mut st.x, &mut st.h, v);
        }
        for &(i, j) in mv {
            st.succ[i] = j;
            st.pred[j] = i;
        }
    }
}

/// Cycle cover under the permutation kernel with its incremental state.
struct PermState {
    succ: Vec<usize>,
    pred: Vec<usize>,
    x: Vec<u8>,
    h: Vec<f64>,
    lhs: Vec<u64>,
}

/// Exchange the successors of `i` and `k`.
fn swap_move(succ: &[usize], i: usize, k: usize, mv: &mut Vec<(usize, usize)>) -> bool {
    mv.clear();
    if i == k {
        return false;
    }
    mv.extend_from_slice(&[(i, succ[k]), (k, succ[i])]);
    true
}

/// Unlink `v` and reinsert it right after `a`.
fn insert_move(succ: &[usize], pred: &[usize], v: usize, a: usize, mv: &mut Vec<(usize, usize)>) -> bool {
    mv.clear();
    let (p, s) = (pred[v], succ[v]);
    if a == v || a == p || p == s {
        return false;
    }
    mv.extend_from_slice(&[(p, s), (a, v), (v, succ[a])]);
    true
}

fn metropolis(delta: f64, temperature: f64, rng: &mut ChaCha8Rng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    let z = delta / temperature;
    z < 40.0 && rng.gen::<f64>() < (-z).exp()
}
