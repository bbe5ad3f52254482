//! Penalised QUBO encoding of a restricted model.
//!
//! Energy of an assignment `x`:
//!
//! ```text
//! E(x) = sum c_ij x_ij
//!      + P * sum_j (sum_i x_ij - 1)^2          in-degree
//!      + P * sum_j (sum_i x_ji - 1)^2          out-degree
//!      + P * sum_S (x(A(S)) + slack_S - (|S| - 1))^2
//! ```
//!
//! `slack_S` is a binary expansion whose top coefficient is clipped so it
//! spans exactly `0..=|S|-1`. Arc variables come first in the registry, in
//! the instance's arc order, followed by slack bits cut by cut.

mod anneal;
mod schedule;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{evaluate, Arc, ArcSolution, RestrictedModel};

pub use anneal::{anneal, anneal_budgeted, anneal_with, AnnealParams, MoveKernel, Sample, SampleSet};
pub use schedule::{account_time, compute_num_reads, PhaseTimers, ReadMode, ReadSchedule, TimeBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VarTag {
    /// Arc `(i, j)`, 0-based.
    Arc(usize, usize),
    /// Bit `bit` of the slack for the model's cut `cut`.
    Slack { cut: usize, bit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `n * c_max + 1`.
    Auto,
    Weight(f64),
}

/// Variable layout of one penalised cut.
#[derive(Debug, Clone, PartialEq)]
pub struct CutBlock {
    pub arc_vars: Vec<usize>,
    /// `(variable, coefficient)` per slack bit.
    pub slack_vars: Vec<(usize, u64)>,
    pub rhs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    tags: Vec<VarTag>,
    registry: BTreeMap<VarTag, usize>,
    num_arc_vars: usize,
    arc_costs: Vec<f64>,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    penalty_weight: f64,
    cut_blocks: Vec<CutBlock>,
}

/// Slack coefficients covering exactly `0..=upper`.
pub fn slack_coefficients(upper: u64) -> Vec<u64> {
    if upper == 0 {
        return Vec::new();
    }
    let bits = 64 - upper.leading_zeros() as usize;
    let mut coeffs: Vec<u64> = (0..bits - 1).map(|b| 1u64 << b).collect();
    coeffs.push(upper - ((1u64 << (bits - 1)) - 1));
    coeffs
}

/// Bits for `value` under [`slack_coefficients`]`(upper)`.
fn encode_slack(upper: u64, value: u64) -> Vec<bool> {
    let coeffs = slack_coefficients(upper);
    let Some((&top, low)) = coeffs.split_last() else {
        return Vec::new();
    };
    let low_max = (1u64 << low.len()) - 1;
    let (top_on, rest) = if value > low_max {
        (true, value - top)
    } else {
        (false, value)
    };
    let mut bits: Vec<bool> = (0..low.len()).map(|b| rest & (1 << b) != 0).collect();
    bits.push(top_on);
    bits
}

struct Builder {
    linear: Vec<f64>,
    quadratic: HashMap<(usize, usize), f64>,
    offset: f64,
}

impl Builder {
    /// Adds `weight * (sum a_v x_v + constant)^2` using `x^2 = x`.
    fn add_square(&mut self, weight: f64, terms: &[(usize, f64)], constant: f64) {
        self.offset += weight * constant * constant;
        for (k, &(u, a)) in terms.iter().enumerate() {
            self.linear[u] += weight * (a * a + 2.0 * constant * a);
            for &(v, b) in &terms[k + 1..] {
                let key = if u < v { (u, v) } else { (v, u) };
                *self.quadratic.entry(key).or_insert(0.0) += 2.0 * weight * a * b;
            }
        }
    }
}

pub fn auto_penalty(model: &RestrictedModel) -> f64 {
    model.n() as f64 * model.instance().max_arc_cost() + 1.0
}

pub fn to_qubo(model: &RestrictedModel, penalty: Penalty) -> QuboProblem {
    let inst = model.instance();
    let n = inst.n();
    let p = match penalty {
        Penalty::Auto => auto_penalty(model),
        Penalty::Weight(w) => w,
    };
    assert!(p > 0.0, "penalty weight must be positive");

    let mut tags: Vec<VarTag> = inst.arcs().iter().map(|&(i, j)| VarTag::Arc(i, j)).collect();
    let num_arc_vars = tags.len();
    let arc_costs: Vec<f64> = inst.arcs().iter().map(|&(i, j)| inst.cost(i, j)).collect();

    let mut cut_blocks = Vec::with_capacity(model.cuts().len());
    for (c, cut) in model.cuts().iter().enumerate() {
        let s = cut.subset();
        let arc_vars: Vec<usize> = inst
            .arcs()
            .iter()
            .enumerate()
            .filter(|(_, &(i, j))| s.contains(i) && s.contains(j))
            .map(|(k, _)| k)
            .collect();
        let rhs = cut.rhs() as u64;
        let slack_vars = slack_coefficients(rhs)
            .into_iter()
            .enumerate()
            .map(|(bit, w)| {
                tags.push(VarTag::Slack { cut: c, bit });
                (tags.len() - 1, w)
            })
            .collect();
        cut_blocks.push(CutBlock {
            arc_vars,
            slack_vars,
            rhs,
        });
    }

    let mut b = Builder {
        linear: vec![0.0; tags.len()],
        quadratic: HashMap::new(),
        offset: 0.0,
    };
    for (k, &c) in arc_costs.iter().enumerate() {
        b.linear[k] += c;
    }
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut outgoing: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, &(i, j)) in inst.arcs().iter().enumerate() {
        outgoing[i].push((k, 1.0));
        incoming[j].push((k, 1.0));
    }
    for v in 0..n {
        b.add_square(p, &incoming[v], -1.0);
        b.add_square(p, &outgoing[v], -1.0);
    }
    for block in &cut_blocks {
        let terms: Vec<(usize, f64)> = block
            .arc_vars
            .iter()
            .map(|&k| (k, 1.0))
            .chain(block.slack_vars.iter().map(|&(k, w)| (k, w as f64)))
            .collect();
        b.add_square(p, &terms, -(block.rhs as f64));
    }

    let registry = tags.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    QuboProblem {
        n,
        tags,
        registry,
        num_arc_vars,
        arc_costs,
        linear: b.linear,
        quadratic: b.quadratic.into_iter().collect(),
        offset: b.offset,
        penalty_weight: p,
        cut_blocks,
    }
}

impl QuboProblem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vars(&self) -> usize {
        self.tags.len()
    }

    pub fn num_arc_vars(&self) -> usize {
        self.num_arc_vars
    }

    pub fn num_slack_vars(&self) -> usize {
        self.tags.len() - self.num_arc_vars
    }

    pub fn tags(&self) -> &[VarTag] {
        &self.tags
    }

    pub fn index_of(&self, tag: VarTag) -> Option<usize> {
        self.registry.get(&tag).copied()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Coefficients keyed by `(a, b)` with `a < b`.
    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    pub fn cut_blocks(&self) -> &[CutBlock] {
        &self.cut_blocks
    }

    pub fn arc_cost(&self, var: usize) -> f64 {
        self.arc_costs[var]
    }

    pub fn arc_of(&self, var: usize) -> Option<Arc> {
        match self.tags.get(var) {
            Some(&VarTag::Arc(i, j)) => Some((i, j)),
            _ => None,
        }
    }

    pub fn energy(&self, x: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars());
        let mut e = self.offset;
        for (v, &c) in self.linear.iter().enumerate() {
            if x[v] != 0 {
                e += c;
            }
        }
        for (&(a, b), &q) in &self.quadratic {
            if x[a] != 0 && x[b] != 0 {
                e += q;
            }
        }
        e
    }

    /// Assignment for the given arcs with every slack set to its exact value
    /// (clamped into range when the cut is violated).
    pub fn encode_selection(&self, selected: &[Arc]) -> Result<Vec<u8>> {
        let mut x = vec![0u8; self.num_vars()];
        for &(i, j) in selected {
            let k = self.index_of(VarTag::Arc(i, j)).ok_or(Error::UnknownArc(i, j))?;
            x[k] = 1;
        }
        self.fix_slacks(&mut x);
        Ok(x)
    }

    /// Resets every slack block to the value that zeroes (or minimises) its
    /// residual given the current arc variables.
    pub fn fix_slacks(&self, x: &mut [u8]) {
        for block in &self.cut_blocks {
            let lhs: u64 = block.arc_vars.iter().map(|&k| x[k] as u64).sum();
            let value = block.rhs.saturating_sub(lhs);
            for (&(k, _), bit) in block.slack_vars.iter().zip(encode_slack(block.rhs, value)) {
                x[k] = bit as u8;
            }
        }
    }

    pub fn selected_arcs(&self, x: &[u8]) -> Vec<Arc> {
        (0..self.num_arc_vars)
            .filter(|&k| x[k] != 0)
            .filter_map(|k| self.arc_of(k))
            .collect()
    }

    /// Degree constraints and every penalised cut hold on the arc variables.
    pub fn is_feasible(&self, x: &[u8]) -> bool {
        let mut indeg = vec![0u32; self.n];
        let mut outdeg = vec![0u32; self.n];
        for (k, &bit) in x[..self.num_arc_vars].iter().enumerate() {
            if bit != 0 {
                let (i, j) = self.arc_of(k).expect("arc variable");
                outdeg[i] += 1;
                indeg[j] += 1;
            }
        }
        if indeg.iter().chain(outdeg.iter()).any(|&d| d != 1) {
            return false;
        }
        self.cut_blocks
            .iter()
            .all(|b| b.arc_vars.iter().map(|&k| x[k] as u64).sum::<u64>() <= b.rhs)
    }

    /// Arc part of an assignment as a solution record.
    pub fn arc_solution(&self, x: &[u8]) -> ArcSolution {
        let arcs = self.selected_arcs(x);
        let cost: HashMap<Arc, f64> = (0..self.num_arc_vars)
            .map(|k| (self.arc_of(k).expect("arc variable"), self.arc_costs[k]))
            .collect();
        ArcSolution::from_arcs(self.n, |i, j| cost[&(i, j)], arcs)
    }

    /// Plain-text export: header comments, then one `i j coeff` line per
    /// term sorted by `(i, j)`, linear terms written as `i i coeff`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tspcut qubo v1");
        let _ = writeln!(out, "# n {}", self.n);
        let _ = writeln!(
            out,
            "# variables {} arcs {} slacks {}",
            self.num_vars(),
            self.num_arc_vars,
            self.num_slack_vars()
        );
        let _ = writeln!(out, "# offset {}", self.offset);
        let _ = writeln!(out, "# penalty {}", self.penalty_weight);
        for (k, tag) in self.tags.iter().enumerate() {
            match *tag {
                VarTag::Arc(i, j) => {
                    let _ = writeln!(out, "# var {k} arc {} {}", i + 1, j + 1);
                }
                VarTag::Slack { cut, bit } => {
                    let w = self.cut_blocks[cut].slack_vars[bit].1;
                    let _ = writeln!(out, "# var {k} slack {} {} {}", cut + 1, bit, w);
                }
            }
        }
        let mut terms: Vec<((usize, usize), f64)> = self.linear.iter().enumerate().map(|(k, &c)| ((k, k), c)).collect();
        terms.extend(self.quadratic.iter().map(|(&k, &v)| (k, v)));
        terms.sort_by_key(|&(k, _)| k);
        for ((a, b), c) in terms {
            let _ = writeln!(out, "{a} {b} {c}");
        }
        out
    }
}

/// Maps an annealer assignment back to the restricted model. Slack bits are
/// discarded; feasibility covers the degree constraints and every active cut.
pub fn decode(qubo: &QuboProblem, assignment: &[u8], model: &RestrictedModel) -> Result<(ArcSolution, bool)> {
    if assignment.len() != qubo.num_vars() {
        return Err(Error::LengthMismatch {
            expected: qubo.num_vars(),
            found: assignment.len(),
        });
    }
    let arcs = qubo.selected_arcs(assignment);
    let solution = evaluate(model, &arcs)?;
    let feasible = solution.degree_feasible && model.violated_cuts(&solution.selected).is_empty();
    Ok((solution, feasible))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caf::{caf_filter, CafConfig};
    use crate::exact::held_karp;
    use crate::model::{SecCut, VertexSet};
    use crate::tsplib::berlin52_prefix;

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn slack_ranges_are_exact() {
        for upper in 1..=40u64 {
            let c = slack_coefficients(upper);
            assert_eq!(c.len(), (upper as f64 + 1.0).log2().ceil() as usize, "upper {upper}");
            let mut reach = std::collections::BTreeSet::new();
            for m in 0..(1u32 << c.len()) {
                reach.insert(
                    c.iter()
                        .enumerate()
                        .filter(|(b, _)| m & (1 << b) != 0)
                        .map(|(_, w)| w)
                        .sum::<u64>(),
                );
            }
            assert_eq!(reach, (0..=upper).collect());
            for v in 0..=upper {
                let bits = encode_slack(upper, v);
                let got: u64 = bits.iter().zip(&c).filter(|(b, _)| **b).map(|(_, w)| w).sum();
                assert_eq!(got, v);
            }
        }
    }

    #[test]
    fn variable_counts() {
        let five = berlin52_prefix(5).unwrap();
        let q = to_qubo(&RestrictedModel::new(five.clone()), Penalty::Auto);
        assert_eq!((q.num_vars(), q.num_slack_vars()), (20, 0));
        let caf = caf_filter(&five, &CafConfig::for_size(5)).unwrap();
        let q = to_qubo(&RestrictedModel::new(caf), Penalty::Auto);
        assert_eq!(q.num_vars(), 18);
        let cut = SecCut::new(set(&[0, 1, 2, 3]), 5).unwrap();
        let q = to_qubo(&RestrictedModel::with_cuts(five, [cut]).unwrap(), Penalty::Auto);
        assert_eq!(q.num_slack_vars(), 2);
        assert_eq!(q.index_of(VarTag::Slack { cut: 0, bit: 1 }), Some(21));
    }

    #[test]
    fn tour_energy_is_tour_cost() {
        let six = berlin52_prefix(6).unwrap();
        let cuts = [set(&[0, 1]), set(&[2, 3, 4]), set(&[0, 2, 4, 5])].map(|s| SecCut::new(s, 6).unwrap());
        let model = RestrictedModel::with_cuts(six.clone(), cuts).unwrap();
        let q = to_qubo(&model, Penalty::Auto);
        let tour = held_karp(&six).unwrap().solution;
        let x = q.encode_selection(&tour.selected).unwrap();
        assert!((q.energy(&x) - tour.objective).abs() < 1e-6);
        assert!(q.is_feasible(&x));
    }

    #[test]
    fn missing_out_arc_costs_a_penalty() {
        let five = berlin52_prefix(5).unwrap();
        let model = RestrictedModel::new(five.clone());
        let q = to_qubo(&model, Penalty::Auto);
        let tour = held_karp(&five).unwrap().solution;
        let dropped = tour.selected[0];
        let partial: Vec<Arc> = tour.selected[1..].to_vec();
        let x = q.encode_selection(&partial).unwrap();
        let cost_part = tour.objective - five.cost(dropped.0, dropped.1);
        assert!(q.energy(&x) >= cost_part + q.penalty_weight() - 1e-6);
    }

    #[test]
    fn decode_cases() {
        let five = berlin52_prefix(5).unwrap();
        let cut = SecCut::new(set(&[0, 1]), 5).unwrap();
        let model = RestrictedModel::with_cuts(five.clone(), [cut]).unwrap();
        let q = to_qubo(&model, Penalty::Auto);

        let tour = held_karp(&five).unwrap().solution;
        let (sol, ok) = decode(&q, &q.encode_selection(&tour.selected).unwrap(), &model).unwrap();
        assert!(ok);
        assert!((sol.objective - tour.objective).abs() < 1e-9);

        let (_, ok) = decode(&q, &vec![0; q.num_vars()], &model).unwrap();
        assert!(!ok);

        let two_cycles = vec![(0, 1), (1, 0), (2, 3), (3, 4), (4, 2)];
        let (sol, ok) = decode(&q, &q.encode_selection(&two_cycles).unwrap(), &model).unwrap();
        assert!(sol.degree_feasible && !ok);

        assert_eq!(
            decode(&q, &[0, 1], &model),
            Err(Error::LengthMismatch {
                expected: q.num_vars(),
                found: 2
            })
        );
    }

    #[test]
    fn text_export_reproduces_energy() {
        let five = berlin52_prefix(5).unwrap();
        let cut = SecCut::new(set(&[0, 1, 2]), 5).unwrap();
        let q = to_qubo(&RestrictedModel::with_cuts(five.clone(), [cut]).unwrap(), Penalty::Auto);
        let text = q.to_text();
        assert_eq!(text, q.to_text());
        let mut offset = 0.0;
        let mut terms = Vec::new();
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("# offset ") {
                offset = v.parse().unwrap();
            } else if !line.starts_with('#') {
                let f: Vec<&str> = line.split_whitespace().collect();
                terms.push((
                    f[0].parse::<usize>().unwrap(),
                    f[1].parse::<usize>().unwrap(),
                    f[2].parse::<f64>().unwrap(),
                ));
            }
        }
        let tour = held_karp(&five).unwrap().solution;
        let x = q.encode_selection(&tour.selected).unwrap();
        let e: f64 = offset
            + terms
                .iter()
                .filter(|&&(a, b, _)| x[a] != 0 && x[b] != 0)
                .map(|t| t.2)
                .sum::<f64>();
        assert!((e - q.energy(&x)).abs() < 1e-6);
    }
}
