//! Exact solvers for restricted models plus independent verification oracles.

mod bnb;
mod brute;
mod held_karp;
mod hungarian;

use std::time::Duration;

use crate::model::{ArcSolution, Instance};

pub use bnb::{nearest_neighbor_tour, solve_restricted_exact, BnbNode};
pub use brute::{brute_force_tsp, BRUTE_FORCE_LIMIT};
pub use held_karp::{held_karp, HELD_KARP_LIMIT};
pub use hungarian::{hungarian_assignment, AssignmentMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub solution: ArcSolution,
    /// `false` only when a time budget cut the search short.
    pub optimal: bool,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

fn tour_solution(instance: &Instance, tour: &[usize]) -> ArcSolution {
    let n = tour.len();
    let arcs = (0..n).map(|k| (tour[k], tour[(k + 1) % n])).collect();
    ArcSolution::from_arcs(instance.n(), |i, j| instance.cost(i, j), arcs)
}
