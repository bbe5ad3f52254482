//! Formulation types: instances, subtour elimination cuts, the restricted
//! model, arc solutions and model-size statistics.
//!
//! Vertices are 0-based internally. Anything user facing (serialized cuts,
//! exported QUBO files, CLI output) uses 1-based vertex ids.

use std::collections::HashSet;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Directed arc `(from, to)`, 0-based.
pub type Arc = (usize, usize);

const NO_ARC: usize = usize::MAX;

/// Vertex count, symmetric cost matrix and candidate arc set.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    n: usize,
    costs: Vec<f64>,
    arcs: Vec<Arc>,
    arc_index: Vec<usize>,
}

impl Instance {
    /// Instance over the complete directed arc set.
    pub fn complete(n: usize, costs: Vec<f64>) -> Result<Self> {
        let arcs = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self::with_arcs(n, costs, arcs)
    }

    /// Instance over an explicit candidate arc set. Arcs are sorted and
    /// deduplicated.
    pub fn with_arcs(n: usize, costs: Vec<f64>, mut arcs: Vec<Arc>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidInstance(format!("need at least 3 vertices, got {n}")));
        }
        if costs.len() != n * n {
            return Err(Error::InvalidInstance(format!(
                "cost matrix has {} entries, expected {}",
                costs.len(),
                n * n
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let c = costs[i * n + j];
                if i != j && (!c.is_finite() || c < 0.0) {
                    return Err(Error::InvalidInstance(format!("cost({i},{j}) = {c}")));
                }
                if c != costs[j * n + i] {
                    return Err(Error::InvalidInstance(format!(
                        "cost matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        arcs.sort_unstable();
        arcs.dedup();
        let mut arc_index = vec![NO_ARC; n * n];
        for (k, &(i, j)) in arcs.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidInstance(format!("arc ({i},{j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidInstance(format!("self-loop at {i}")));
            }
            arc_index[i * n + j] = k;
        }
        Ok(Self {
            n,
            costs,
            arcs,
            arc_index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    /// Candidate arcs in lexicographic order.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_index(&self, i: usize, j: usize) -> Option<usize> {
        match self.arc_index.get(i * self.n + j) {
            Some(&k) if k != NO_ARC && i < self.n && j < self.n => Some(k),
            _ => None,
        }
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.arc_index(i, j).is_some()
    }

    pub fn is_complete(&self) -> bool {
        self.arcs.len() == self.n * (self.n - 1)
    }

    /// Largest cost over the candidate arcs.
    pub fn max_arc_cost(&self) -> f64 {
        self.arcs.iter().map(|&(i, j)| self.cost(i, j)).fold(0.0, f64::max)
    }

    /// Same costs, different candidate arcs.
    pub fn restrict_arcs(&self, arcs: Vec<Arc>) -> Result<Self> {
        Self::with_arcs(self.n, self.costs.clone(), arcs)
    }
}

/// A set of vertices stored as a bitset. Trailing zero words are trimmed so
/// equal sets compare and hash equal regardless of how they were built.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct VertexSet(SmallVec<[u64; 1]>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: usize) {
        let (w, b) = (v / 64, v % 64);
        if self.0.len() <= w {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.get(v / 64).is_some_and(|w| w & (1 << (v % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        if self.0.len() < other.0.len() {
            self.0.resize(other.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a |= b;
        }
    }

    /// Vertices as 1-based ids, ascending.
    pub fn to_ids(&self) -> Vec<usize> {
        self.iter().map(|v| v + 1).collect()
    }

    fn trim(mut self) -> Self {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
        self
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = VertexSet::new();
        for v in iter {
            s.insert(v);
        }
        s.trim()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.to_ids()).finish()
    }
}

/// Subtour elimination constraint `x(A(S)) <= |S| - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecCut {
    subset: VertexSet,
}

impl SecCut {
    pub fn new(subset: VertexSet, n: usize) -> Result<Self> {
        let size = subset.len();
        if size < 2 || size > n.saturating_sub(1) {
            return Err(Error::InvalidCut(format!(
                "|S| = {size} must lie in 2..={}",
                n.saturating_sub(1)
            )));
        }
        if let Some(v) = subset.iter().find(|&v| v >= n) {
            return Err(Error::InvalidCut(format!("vertex {} outside 1..={n}", v + 1)));
        }
        Ok(Self { subset })
    }

    pub fn subset(&self) -> &VertexSet {
        &self.subset
    }

    pub fn len(&self) -> usize {
        self.subset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subset.is_empty()
    }

    pub fn rhs(&self) -> usize {
        self.subset.len() - 1
    }

    /// Number of `selected` arcs with both endpoints inside the subset.
    pub fn lhs(&self, selected: &[Arc]) -> usize {
        selected
            .iter()
            .filter(|&&(i, j)| self.subset.contains(i) && self.subset.contains(j))
            .count()
    }

    pub fn is_violated_by(&self, selected: &[Arc]) -> bool {
        self.lhs(selected) > self.rhs()
    }
}

impl Serialize for SecCut {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SecCut", 2)?;
        s.serialize_field("subset", &self.subset.to_ids())?;
        s.serialize_field("rhs", &self.rhs())?;
        s.end()
    }
}

/// Objective, degree constraints and the currently active cuts.
#[derive(Debug, Clone)]
pub struct RestrictedModel {
    instance: Instance,
    cuts: Vec<SecCut>,
    index: HashSet<VertexSet>,
}

impl RestrictedModel {
    pub fn new(instance: Instance) -> Self {
        Self {
            instance,
            cuts: Vec::new(),
            index: HashSet::new(),
        }
    }

    pub fn with_cuts(instance: Instance, cuts: impl IntoIterator<Item = SecCut>) -> Result<Self> {
        let mut model = Self::new(instance);
        for cut in cuts {
            model.add_cut(cut)?;
        }
        Ok(model)
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n
    }

    pub fn cuts(&self) -> &[SecCut] {
        &self.cuts
    }

    pub fn contains_cut(&self, subset: &VertexSet) -> bool {
        self.index.contains(subset)
    }

    /// Adds a cut; returns `false` if the same subset is already active.
    pub fn add_cut(&mut self, cut: SecCut) -> Result<bool> {
        let n = self.n();
        if cut.subset.iter().any(|v| v >= n) {
            return Err(Error::InvalidCut(format!("cut {:?} exceeds n = {n}", cut.subset)));
        }
        if !self.index.insert(cut.subset.clone()) {
            return Ok(false);
        }
        self.cuts.push(cut);
        Ok(true)
    }

    /// Smallest active cut violated by the permutation `succ` (each vertex's
    /// successor). Ties are broken by the set ordering so the result does
    /// not depend on how many cuts are active.
    pub fn smallest_violated_cut(&self, succ: &[usize]) -> Option<VertexSet> {
        if self.cuts.is_empty() {
            return None;
        }
        let cycles = cycles_of_permutation(succ);
        let k = cycles.len();
        if k < 2 {
            return None;
        }
        let cycle_sets: Vec<VertexSet> = cycles.iter().map(|c| c.iter().copied().collect()).collect();
        let unions = if k < 63 { (1u64 << k) - 2 } else { u64::MAX };
        let mut best: Option<VertexSet> = None;
        let mut consider = |s: &VertexSet| {
            let better = match &best {
                None => true,
                Some(b) => (s.len(), s) < (b.len(), b),
            };
            if better {
                best = Some(s.clone());
            }
        };
        if unions <= self.cuts.len() as u64 {
            for mask in 1..(1u64 << k) - 1 {
                let mut s = VertexSet::new();
                for (c, set) in cycle_sets.iter().enumerate() {
                    if mask & (1 << c) != 0 {
                        s.union_with(set);
                    }
                }
                if self.index.contains(&s) {
                    consider(&s);
                }
            }
        } else {
            for cut in &self.cuts {
                if cut.subset.iter().all(|v| cut.subset.contains(succ[v])) {
                    consider(&cut.subset);
                }
            }
        }
        best
    }

    /// Active cuts violated by an arbitrary arc selection.
    pub fn violated_cuts(&self, selected: &[Arc]) -> Vec<&SecCut> {
        self.cuts.iter().filter(|c| c.is_violated_by(selected)).collect()
    }
}

/// Binary arc selection with its objective and structural flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcSolution {
    /// Selected arcs (0-based), lexicographically sorted.
    pub selected: Vec<Arc>,
    pub objective: f64,
    pub degree_feasible: bool,
    /// Number of directed cycles when degree feasible, otherwise 0.
    pub cycle_count: usize,
}

impl ArcSolution {
    /// Builds the record from raw arcs. Arcs are not checked against any
    /// candidate set; use [`evaluate`] for that.
    pub fn from_arcs(n: usize, costs: impl Fn(usize, usize) -> f64, mut selected: Vec<Arc>) -> Self {
        selected.sort_unstable();
        selected.dedup();
        let objective = selected.iter().map(|&(i, j)| costs(i, j)).sum();
        let succ = successors(n, &selected);
        let (degree_feasible, cycle_count) = match &succ {
            Some(s) => (true, cycles_of_permutation(s).len()),
            None => (false, 0),
        };
        Self {
            selected,
            objective,
            degree_feasible,
            cycle_count,
        }
    }

    pub fn from_successors(instance: &Instance, succ: &[usize]) -> Self {
        let arcs = succ.iter().enumerate().map(|(i, &j)| (i, j)).collect();
        Self::from_arcs(instance.n(), |i, j| instance.cost(i, j), arcs)
    }

    /// Successor array when every vertex has exactly one outgoing and one
    /// incoming arc.
    pub fn successors(&self, n: usize) -> Option<Vec<usize>> {
        if !self.degree_feasible {
            return None;
        }
        successors(n, &self.selected)
    }

    /// Directed cycles of a degree-feasible selection, each starting at its
    /// smallest vertex, ordered by that vertex.
    pub fn cycles(&self, n: usize) -> Option<Vec<Vec<usize>>> {
        self.successors(n).map(|s| cycles_of_permutation(&s))
    }

    /// Weakly connected components of the selected arcs over all `n`
    /// vertices. Diagnostic view for selections that are not permutations.
    pub fn components(&self, n: usize) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j) in &self.selected {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(v);
        }
        groups
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.degree_feasible && self.cycle_count == 1
    }
}

fn successors(n: usize, selected: &[Arc]) -> Option<Vec<usize>> {
    if selected.len() != n {
        return None;
    }
    let mut succ = vec![usize::MAX; n];
    let mut has_pred = vec![false; n];
    for &(i, j) in selected {
        if i >= n || j >= n || succ[i] != usize::MAX || has_pred[j] {
            return None;
        }
        succ[i] = j;
        has_pred[j] = true;
    }
    Some(succ)
}

/// Cycle decomposition of a permutation given as a successor array.
pub fn cycles_of_permutation(succ: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; succ.len()];
    let mut cycles = Vec::new();
    for start in 0..succ.len() {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = succ[v];
        }
        cycles.push(cycle);
    }
    cycles
}

/// Evaluates an arc selection against the model's candidate arcs.
pub fn evaluate(model: &RestrictedModel, selected: &[Arc]) -> Result<ArcSolution> {
    let inst = model.instance();
    if let Some(&(i, j)) = selected.iter().find(|&&(i, j)| !inst.has_arc(i, j)) {
        return Err(Error::UnknownArc(i, j));
    }
    Ok(ArcSolution::from_arcs(
        inst.n(),
        |i, j| inst.cost(i, j),
        selected.to_vec(),
    ))
}

/// `2n`: one in-degree and one out-degree equality per vertex.
pub fn degree_constraint_count(n: usize) -> u64 {
    2 * n as u64
}

/// `2^n - 2 - n`: proper subsets with at least two vertices.
pub fn sec_count_complete(n: usize) -> Result<u64> {
    if n < 3 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: 62,
        });
    }
    if n > 62 {
        return Err(Error::TooLarge {
            what: "subtour constraint count",
            n,
            limit: 62,
        });
    }
    Ok((1u64 << n) - 2 - n as u64)
}

pub const ENUMERATION_LIMIT: usize = 22;

/// Every subtour elimination cut for `n` vertices, ordered by subset bitmask.
pub fn enumerate_all_secs(n: usize) -> Result<Vec<SecCut>> {
    if n < 3 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 3,
            max: ENUMERATION_LIMIT,
        });
    }
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            what: "subtour constraint enumeration",
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    let full = (1u64 << n) - 1;
    Ok((1..full)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| SecCut {
            subset: VertexSet(SmallVec::from_slice(&[m])),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComplexityStats {
    pub num_vars: u64,
    pub num_degree_constraints: u64,
    pub num_sec_constraints: u64,
    pub total_constraints: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Every subtour constraint up front.
    Cilp,
    /// Only the model's active cuts.
    Cpa,
}

pub fn complexity_of(model: &RestrictedModel, formulation: Formulation) -> Result<ComplexityStats> {
    let n = model.n();
    let secs = match formulation {
        Formulation::Cilp => sec_count_complete(n)?,
        Formulation::Cpa => model.cuts().len() as u64,
    };
    let degree = degree_constraint_count(n);
    Ok(ComplexityStats {
        num_vars: model.instance().arcs().len() as u64,
        num_degree_constraints: degree,
        num_sec_constraints: secs,
        total_constraints: degree + secs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> Instance {
        // points on a line; costs |i - j|
        let costs = (0..n * n).map(|k| ((k / n) as f64 - (k % n) as f64).abs()).collect();
        Instance::complete(n, costs).unwrap()
    }

    fn set(v: &[usize]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn degree_counts() {
        assert_eq!(degree_constraint_count(3), 6);
        assert_eq!(degree_constraint_count(5), 10);
        assert_eq!(degree_constraint_count(20), 40);
    }

    #[test]
    fn sec_counts() {
        assert_eq!(sec_count_complete(5).unwrap(), 25);
        assert_eq!(sec_count_complete(12).unwrap() + 24, 4106);
        assert_eq!(sec_count_complete(20).unwrap() + 40, 1_048_594);
        assert!(matches!(sec_count_complete(63), Err(Error::TooLarge { .. })));
        assert!(sec_count_complete(62).is_ok());
    }

    #[test]
    fn enumeration_matches_explicit_subsets() {
        let cuts = enumerate_all_secs(4).unwrap();
        assert_eq!(cuts.len(), 10);
        // independent count over subsets of {0,1,2,3}
        let mut expect = 0;
        for a in 0..16u32 {
            let k = a.count_ones();
            if (2..=3).contains(&k) {
                expect += 1;
            }
        }
        assert_eq!(cuts.len(), expect);
        assert!(cuts.iter().all(|c| c.rhs() == c.len() - 1));

        let three = enumerate_all_secs(3).unwrap();
        assert_eq!(three.len(), 3);
        assert!(three.iter().all(|c| c.len() == 2));
        assert!(matches!(enumerate_all_secs(23), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn cut_validation() {
        assert!(SecCut::new(set(&[0]), 5).is_err());
        assert!(SecCut::new(set(&[0, 1, 2, 3, 4]), 5).is_err());
        assert!(SecCut::new(set(&[0, 7]), 5).is_err());
        assert_eq!(SecCut::new(set(&[1, 3]), 5).unwrap().rhs(), 1);
    }

    #[test]
    fn vertex_set_canonical() {
        let mut a = set(&[1, 70]);
        let b = set(&[1]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 70]);
        a = a.iter().filter(|&v| v < 64).collect();
        assert_eq!(a, b);
        assert_eq!(format!("{b:?}"), "{2}");
    }

    #[test]
    fn evaluate_full_tour_and_two_cycles() {
        let inst = square(6);
        let model = RestrictedModel::new(inst);
        let tour: Vec<Arc> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let s = evaluate(&model, &tour).unwrap();
        assert!(s.degree_feasible);
        assert_eq!(s.cycle_count, 1);
        assert_eq!(s.objective, 10.0);

        let two = vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)];
        let s = evaluate(&model, &two).unwrap();
        assert!(s.degree_feasible);
        assert_eq!(s.cycle_count, 2);
        assert_eq!(s.cycles(6).unwrap(), vec![vec![0, 1, 2], vec![3, 4, 5]]);

        let partial = vec![(0, 1), (1, 0)];
        let s = evaluate(&model, &partial).unwrap();
        assert!(!s.degree_feasible);
        assert_eq!(s.cycle_count, 0);
        assert_eq!(s.components(6).len(), 5);
    }

    #[test]
    fn evaluate_rejects_unknown_arcs() {
        let inst = square(4);
        let reduced = inst.restrict_arcs(vec![(0, 1), (1, 0)]).unwrap();
        let model = RestrictedModel::new(reduced);
        assert_eq!(evaluate(&model, &[(0, 2)]), Err(Error::UnknownArc(0, 2)));
    }

    #[test]
    fn violated_cut_lookup_both_paths() {
        let inst = square(6);
        let succ = vec![1, 0, 3, 2, 5, 4];
        // few cuts: scan path
        let mut model = RestrictedModel::new(inst.clone());
        model.add_cut(SecCut::new(set(&[2, 3]), 6).unwrap()).unwrap();
        model.add_cut(SecCut::new(set(&[0, 1, 4, 5]), 6).unwrap()).unwrap();
        assert_eq!(model.smallest_violated_cut(&succ), Some(set(&[2, 3])));
        // all cuts: union enumeration path
        let all = RestrictedModel::with_cuts(inst, enumerate_all_secs(6).unwrap()).unwrap();
        assert_eq!(all.smallest_violated_cut(&succ), Some(set(&[0, 1])));
        assert_eq!(all.smallest_violated_cut(&[1, 2, 3, 4, 5, 0]), None);
    }

    #[test]
    fn duplicate_cuts_are_ignored() {
        let mut model = RestrictedModel::new(square(5));
        assert!(model.add_cut(SecCut::new(set(&[0, 1]), 5).unwrap()).unwrap());
        assert!(!model.add_cut(SecCut::new(set(&[1, 0]), 5).unwrap()).unwrap());
        assert_eq!(model.cuts().len(), 1);
    }

    #[test]
    fn complexity_records() {
        let model = RestrictedModel::new(square(10));
        let c = complexity_of(&model, Formulation::Cilp).unwrap();
        assert_eq!((c.num_vars, c.total_constraints), (90, 1032));
        let mut model = RestrictedModel::new(square(5));
        for s in [[0, 1], [2, 3], [1, 4], [0, 3]] {
            model.add_cut(SecCut::new(set(&s), 5).unwrap()).unwrap();
        }
        let c = complexity_of(&model, Formulation::Cpa).unwrap();
        assert_eq!(c.total_constraints, 14);
        assert_eq!(c.num_degree_constraints, 10);
    }
}
