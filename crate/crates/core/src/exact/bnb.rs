//! Branch and bound over the assignment relaxation.
//!
//! Every node solves a cycle-cover problem with some arcs forbidden and some
//! required. When the cover violates an active cut `S`, the arcs of the cover
//! inside `S` (ascending cost) are branched on in mutually exclusive children:
//! child `r` forbids arc `r` and requires arcs `0..r`. Only active cuts prune;
//! a cover whose subtours are not cut is a valid leaf of the restricted model.
//!
//! The active cuts are also priced into the arc costs with nonnegative
//! Lagrange multipliers, tuned once at the root by subgradient ascent. For any
//! such multipliers the assignment optimum minus `sum lambda_S (|S| - 1)` is a
//! valid lower bound, and a much tighter one than the plain assignment. A
//! priced cover that satisfies every cut is not necessarily optimal for its
//! node, so such nodes are re-solved at the true costs before being closed.

use std::rc::Rc;
use std::time::{Duration, Instant};

use super::hungarian::{AssignmentMatrix, Duals};
use super::ExactResult;
use crate::error::{Error, Result};
use crate::model::{Arc, ArcSolution, Instance, RestrictedModel};

const PRUNE_EPS: f64 = 1e-7;
const SUBGRADIENT_ROUNDS: usize = 400;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BnbNode {
    pub forbidden_arcs: Vec<Arc>,
    pub required_arcs: Vec<Arc>,
    pub lower_bound: f64,
}

impl BnbNode {
    fn matrix(&self, base: &AssignmentMatrix) -> AssignmentMatrix {
        let mut m = base.clone();
        for &(i, j) in &self.forbidden_arcs {
            m.mask(i, j);
        }
        for &(i, j) in &self.required_arcs {
            m.require(i, j);
        }
        m
    }
}

/// Greedy tour from vertex 0 over the candidate arcs, if one closes.
pub fn nearest_neighbor_tour(instance: &Instance) -> Option<Vec<usize>> {
    let n = instance.n();
    let mut tour = vec![0];
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut cur = 0;
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j] && instance.has_arc(cur, j))
            .min_by(|&a, &b| instance.cost(cur, a).total_cmp(&instance.cost(cur, b)).then(a.cmp(&b)))?;
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    instance.has_arc(cur, 0).then_some(tour)
}

/// 2-opt and Or-opt descent over candidate arcs. Only meaningful for
/// symmetric costs and a symmetric arc set; other instances are returned
/// unchanged.
fn local_search(instance: &Instance, mut tour: Vec<usize>) -> Vec<usize> {
    let n = tour.len();
    let symmetric = instance
        .arcs()
        .iter()
        .all(|&(i, j)| instance.has_arc(j, i) && (instance.cost(i, j) - instance.cost(j, i)).abs() < 1e-12);
    if !symmetric || n < 5 {
        return tour;
    }
    while two_opt_pass(instance, &mut tour) || or_opt_pass(instance, &mut tour) {}
    tour
}

fn two_opt_pass(instance: &Instance, tour: &mut [usize]) -> bool {
    let n = tour.len();
    let c = |a: usize, b: usize| instance.cost(a, b);
    let mut improved = false;
    for p in 0..n - 1 {
        for q in p + 2..n {
            let (a, b) = (tour[p], tour[p + 1]);
            let (x, y) = (tour[q], tour[(q + 1) % n]);
            if a == y || !instance.has_arc(a, x) || !instance.has_arc(b, y) {
                continue;
            }
            if c(a, x) + c(b, y) < c(a, b) + c(x, y) - 1e-9 {
                tour[p + 1..=q].reverse();
                improved = true;
            }
        }
    }
    improved
}

/// Moves a segment of one to three vertices to another position, in either
/// orientation. Applies the first improving move found.
fn or_opt_pass(instance: &Instance, tour: &mut Vec<usize>) -> bool {
    let n = tour.len();
    let c = |a: usize, b: usize| instance.cost(a, b);
    let ok = |a: usize, b: usize| instance.has_arc(a, b);
    for len in 1..=3 {
        for p in 0..n {
            // segment tour[p..p+len] (cyclic), neighbours prev and next
            let seg: Vec<usize> = (0..len).map(|k| tour[(p + k) % n]).collect();
            let prev = tour[(p + n - 1) % n];
            let next = tour[(p + len) % n];
            if !ok(prev, next) {
                continue;
            }
            let (first, last) = (seg[0], seg[len - 1]);
            let removed = c(prev, first) + c(last, next) - c(prev, next);
            let rest: Vec<usize> = (0..n - len).map(|k| tour[(p + len + k) % n]).collect();
            for q in 0..rest.len() {
                let (a, b) = (rest[q], rest[(q + 1) % rest.len()]);
                for (s, t, reversed) in [(first, last, false), (last, first, true)] {
                    if !ok(a, s) || !ok(t, b) {
                        continue;
                    }
                    if c(a, s) + c(t, b) - c(a, b) < removed - 1e-9 {
                        let mut out = Vec::with_capacity(n);
                        out.extend_from_slice(&rest[..=q]);
                        if reversed {
                            out.extend(seg.iter().rev());
                        } else {
                            out.extend_from_slice(&seg);
                        }
                        out.extend_from_slice(&rest[q + 1..]);
                        *tour = out;
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Best locally improved nearest-neighbour tour over all start vertices.
fn initial_tour(instance: &Instance) -> Option<Vec<usize>> {
    let n = instance.n();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for start in 0..n {
        let Some(tour) = nearest_neighbor_from(instance, start) else {
            continue;
        };
        let tour = local_search(instance, tour);
        let len: f64 = (0..n).map(|k| instance.cost(tour[k], tour[(k + 1) % n])).sum();
        if best.as_ref().is_none_or(|(b, _)| len < *b - 1e-9) {
            best = Some((len, tour));
        }
    }
    best.map(|(_, t)| t)
}

fn nearest_neighbor_from(instance: &Instance, start: usize) -> Option<Vec<usize>> {
    if start == 0 {
        return nearest_neighbor_tour(instance);
    }
    let n = instance.n();
    let mut tour = vec![start];
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut cur = start;
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j] && instance.has_arc(cur, j))
            .min_by(|&a, &b| instance.cost(cur, a).total_cmp(&instance.cost(cur, b)).then(a.cmp(&b)))?;
        visited[next] = true;
        tour.push(next);
        cur = next;
    }
    instance.has_arc(cur, start).then_some(tour)
}

/// A node plus the parent's solved potentials; the child differs from the
/// parent's assignment only in the forbidden row.
struct Pending {
    node: BnbNode,
    warm: Option<(Rc<Duals>, usize)>,
}

/// Multiplier-adjusted cost matrix and the constant `sum lambda_S (|S| - 1)`
/// to subtract from its assignment value.
fn priced_matrix(model: &RestrictedModel, base: &AssignmentMatrix, lambda: &[f64]) -> (AssignmentMatrix, f64) {
    let n = base.n();
    let mut entries: Vec<Option<f64>> = (0..n * n).map(|k| base.get(k / n, k % n)).collect();
    let mut constant = 0.0;
    for (cut, &l) in model.cuts().iter().zip(lambda) {
        if l <= 0.0 {
            continue;
        }
        constant += l * cut.rhs() as f64;
        for i in cut.subset().iter() {
            for j in cut.subset().iter() {
                if let Some(c) = &mut entries[i * n + j] {
                    *c += l;
                }
            }
        }
    }
    (AssignmentMatrix::new(n, entries), constant)
}

/// Subgradient ascent on the Lagrangian dual of the active cuts, aiming at
/// `target`. Returns the best multipliers found (all zero without cuts).
fn root_multipliers(model: &RestrictedModel, base: &AssignmentMatrix, target: f64) -> Vec<f64> {
    let cuts = model.cuts();
    let mut lambda = vec![0.0; cuts.len()];
    if cuts.is_empty() {
        return lambda;
    }
    let mut best = (f64::NEG_INFINITY, lambda.clone());
    let mut step = 2.0;
    let mut stall = 0;
    for _ in 0..SUBGRADIENT_ROUNDS {
        let (priced, constant) = priced_matrix(model, base, &lambda);
        let Ok((succ, value)) = priced.solve() else {
            break;
        };
        let bound = value - constant;
        if bound > best.0 + 1e-9 {
            best = (bound, lambda.clone());
            stall = 0;
        } else {
            stall += 1;
            if stall >= 20 {
                step /= 2.0;
                stall = 0;
            }
        }
        let grad: Vec<f64> = cuts
            .iter()
            .zip(&lambda)
            .map(|(cut, &l)| {
                let inside = cut.subset().iter().filter(|&i| cut.subset().contains(succ[i])).count();
                let g = inside as f64 - cut.rhs() as f64;
                if l <= 0.0 && g < 0.0 {
                    0.0
                } else {
                    g
                }
            })
            .collect();
        let norm: f64 = grad.iter().map(|g| g * g).sum();
        if norm == 0.0 || step < 1e-4 {
            break;
        }
        let goal = if target.is_finite() {
            target
        } else {
            bound + 0.05 * bound.abs() + 1.0
        };
        let t = step * (goal - bound).max(1e-6) / norm;
        for (l, g) in lambda.iter_mut().zip(&grad) {
            *l = (*l + t * g).max(0.0);
        }
    }
    best.1
}

/// Optimal selection satisfying the degree constraints and every active cut.
///
/// With a budget, an exhausted search returns the incumbent with
/// `optimal = false`, or [`Error::BudgetExhausted`] if there is none.
pub fn solve_restricted_exact(model: &RestrictedModel, budget: Option<Duration>) -> Result<ExactResult> {
    let start = Instant::now();
    let inst = model.instance();
    let plain = AssignmentMatrix::from_instance(inst);

    let mut incumbent: Option<ArcSolution> = initial_tour(inst).map(|t| super::tour_solution(inst, &t));
    let mut upper = incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);

    let lambda = root_multipliers(model, &plain, upper);
    let (priced, constant) = priced_matrix(model, &plain, &lambda);
    let big = priced.sentinel();
    let true_cost = |succ: &[usize]| -> f64 { succ.iter().enumerate().map(|(i, &j)| inst.cost(i, j)).sum() };

    let mut stack = vec![Pending {
        node: BnbNode::default(),
        warm: None,
    }];
    let mut nodes = 0u64;
    let mut exhausted = false;

    while let Some(Pending { mut node, warm }) = stack.pop() {
        if budget.is_some_and(|b| start.elapsed() >= b) {
            exhausted = true;
            break;
        }
        nodes += 1;
        let matrix = node.matrix(&priced);
        let (duals, solved) = match warm {
            Some((parent, row)) => {
                let mut d = Rc::unwrap_or_clone(parent);
                let r = matrix.reoptimize(&mut d, row, big);
                (d, r)
            }
            None => matrix.solve_with_duals(big),
        };
        let (succ, value) = match solved {
            Ok(r) => r,
            Err(Error::Infeasible) => continue,
            Err(e) => return Err(e),
        };
        let bound = value - constant;
        node.lower_bound = bound;
        if bound >= upper - PRUNE_EPS {
            continue;
        }

        let (succ, cut, duals) = match model.smallest_violated_cut(&succ) {
            Some(cut) => (succ, cut, Some(Rc::new(duals))),
            None => {
                let cost = true_cost(&succ);
                if cost < upper - PRUNE_EPS {
                    upper = cost;
                    incumbent = Some(ArcSolution::from_successors(inst, &succ));
                }
                if bound >= upper - PRUNE_EPS {
                    continue;
                }
                // the priced optimum is feasible but may not be optimal here
                let Ok((succ, cost)) = node.matrix(&plain).solve() else {
                    continue;
                };
                if cost >= upper - PRUNE_EPS {
                    continue;
                }
                match model.smallest_violated_cut(&succ) {
                    Some(cut) => (succ, cut, None),
                    None => {
                        upper = cost;
                        incumbent = Some(ArcSolution::from_successors(inst, &succ));
                        continue;
                    }
                }
            }
        };

        let mut inside: Vec<Arc> = cut
            .iter()
            .map(|i| (i, succ[i]))
            .filter(|a| !node.required_arcs.contains(a))
            .collect();
        inside.sort_by(|a, b| inst.cost(a.0, a.1).total_cmp(&inst.cost(b.0, b.1)).then(a.cmp(b)));

        for (r, &arc) in inside.iter().enumerate().rev() {
            let mut child = BnbNode {
                forbidden_arcs: node.forbidden_arcs.clone(),
                required_arcs: node.required_arcs.clone(),
                lower_bound: bound,
            };
            child.forbidden_arcs.push(arc);
            child.required_arcs.extend_from_slice(&inside[..r]);
            stack.push(Pending {
                node: child,
                warm: duals.as_ref().map(|d| (Rc::clone(d), arc.0)),
            });
        }
    }

    let wall_time = start.elapsed();
    match incumbent {
        Some(solution) => Ok(ExactResult {
            solution,
            optimal: !exhausted,
            nodes_explored: nodes,
            wall_time,
        }),
        None if exhausted => Err(Error::BudgetExhausted(budget.unwrap_or_default())),
        None => Err(Error::Infeasible),
    }
}
