use crate::error::{Error, Result};
use crate::model::{ArcSolution, Instance};

/// Square cost matrix for the assignment relaxation; `None` marks a
/// forbidden entry (always including the diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    n: usize,
    entries: Vec<Option<f64>>,
}

impl AssignmentMatrix {
    pub fn new(n: usize, entries: Vec<Option<f64>>) -> Self {
        assert_eq!(entries.len(), n * n, "assignment matrix must be n x n");
        Self { n, entries }
    }

    /// Entries for every candidate arc of `instance`.
    pub fn from_instance(instance: &Instance) -> Self {
        let n = instance.n();
        let mut entries = vec![None; n * n];
        for &(i, j) in instance.arcs() {
            entries[i * n + j] = Some(instance.cost(i, j));
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries[i * self.n + j]
    }

    pub fn mask(&mut self, i: usize, j: usize) {
        self.entries[i * self.n + j] = None;
    }

    /// Forces row `i` to column `j` by masking the rest of both.
    pub fn require(&mut self, i: usize, j: usize) {
        for k in 0..self.n {
            if k != j {
                self.mask(i, k);
            }
            if k != i {
                self.mask(k, j);
            }
        }
    }

    /// Minimum-cost perfect assignment as a successor array.
    pub fn solve(&self) -> Result<(Vec<usize>, f64)> {
        self.solve_with_duals(self.sentinel()).1
    }

    pub(super) fn solve_with_duals(&self, big: f64) -> (Duals, Result<(Vec<usize>, f64)>) {
        let mut duals = Duals::new(self.n);
        for i in 0..self.n {
            self.augment(&mut duals, i, big);
        }
        let r = self.extract(&duals);
        (duals, r)
    }

    /// Stand-in cost for masked entries. Any perfect matching over finite
    /// entries costs at most `n * max_cost`, so an optimum touching the
    /// sentinel means none exists.
    pub(super) fn sentinel(&self) -> f64 {
        let max_cost = self.entries.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs()));
        self.n as f64 * max_cost + 1.0
    }

    /// Re-solves after row `row` was unmatched in `duals`. The potentials
    /// stay valid when entries were only masked since they were computed,
    /// provided `big` is the same sentinel.
    pub(super) fn reoptimize(&self, duals: &mut Duals, row: usize, big: f64) -> Result<(Vec<usize>, f64)> {
        // slot 0 is the dummy column and may still name the row
        if let Some(j) = (1..=self.n).find(|&j| duals.p[j] == row + 1) {
            duals.p[j] = 0;
        }
        self.augment(duals, row, big);
        self.extract(duals)
    }

    /// One shortest-augmenting-path step of the potentials-based Hungarian
    /// method (1-based, dummy column 0) that matches row `row`.
    fn augment(&self, d: &mut Duals, row: usize, big: f64) {
        let n = self.n;
        let cost = |i: usize, j: usize| self.entries[i * n + j].unwrap_or(big);
        let (u, v, p) = (&mut d.u, &mut d.v, &mut d.p);
        let mut way = vec![0usize; n + 1];
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        p[0] = row + 1;
        let mut j0 = 0;
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    fn extract(&self, d: &Duals) -> Result<(Vec<usize>, f64)> {
        let mut succ = vec![0usize; self.n];
        for j in 1..=self.n {
            succ[d.p[j] - 1] = j - 1;
        }
        let mut total = 0.0;
        for (i, &j) in succ.iter().enumerate() {
            match self.get(i, j) {
                Some(c) => total += c,
                None => return Err(Error::Infeasible),
            }
        }
        Ok((succ, total))
    }
}

/// Row/column potentials and the column-to-row matching (1-based, 0 free).
#[derive(Debug, Clone)]
pub(super) struct Duals {
    u: Vec<f64>,
    v: Vec<f64>,
    p: Vec<usize>,
}

impl Duals {
    fn new(n: usize) -> Self {
        Self {
            u: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            p: vec![0; n + 1],
        }
    }
}

/// Degree-constraints-only relaxation: a minimum-cost cycle cover.
pub fn hungarian_assignment(matrix: &AssignmentMatrix) -> Result<ArcSolution> {
    let (succ, _) = matrix.solve()?;
    let arcs = succ.iter().enumerate().map(|(i, &j)| (i, j)).collect();
    Ok(ArcSolution::from_arcs(
        matrix.n(),
        |i, j| matrix.get(i, j).expect("assignment uses unmasked entries"),
        arcs,
    ))
}
