use std::time::Instant;

use super::{tour_solution, ExactResult};
use crate::error::{Error, Result};
use crate::model::Instance;

pub const HELD_KARP_LIMIT: usize = 18;

/// Subset dynamic program over paths from vertex 0. Missing candidate arcs
/// are treated as absent edges.
pub fn held_karp(instance: &Instance) -> Result<ExactResult> {
    let start = Instant::now();
    let n = instance.n();
    if n > HELD_KARP_LIMIT {
        return Err(Error::TooLarge {
            what: "held_karp",
            n,
            limit: HELD_KARP_LIMIT,
        });
    }
    // vertices 1..n are bits 0..m
    let m = n - 1;
    let full = 1usize << m;
    let cost = |i: usize, j: usize| {
        if instance.has_arc(i, j) {
            instance.cost(i, j)
        } else {
            f64::INFINITY
        }
    };
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = cost(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = dp[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = here + cost(j + 1, k + 1);
                if cand < dp[next * m + k] {
                    dp[next * m + k] = cand;
                    parent[next * m + k] = j as u8;
                }
            }
        }
    }
    let last = full - 1;
    let (best_end, best) = (0..m)
        .map(|j| (j, dp[last * m + j] + cost(j + 1, 0)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("n >= 3");
    if !best.is_finite() {
        return Err(Error::Infeasible);
    }
    let mut tour = Vec::with_capacity(n);
    let (mut mask, mut j) = (last, best_end);
    loop {
        tour.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    tour.push(0);
    tour.reverse();
    Ok(ExactResult {
        solution: tour_solution(instance, &tour),
        optimal: true,
        nodes_explored: (full * m) as u64,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caf::{caf_filter, CafConfig};
    use crate::tsplib::berlin52_prefix;

    #[test]
    fn berlin_optima() {
        let nine = berlin52_prefix(9).unwrap();
        let r = held_karp(&nine).unwrap();
        assert!((r.solution.objective - 2820.38).abs() < 0.01);
        assert!(r.solution.is_hamiltonian());
        let caf = caf_filter(&nine, &CafConfig::for_size(9)).unwrap();
        assert!((held_karp(&caf).unwrap().solution.objective - 2874.44).abs() < 0.01);
    }

    #[test]
    fn triangle() {
        let three = berlin52_prefix(3).unwrap();
        let expect = three.cost(0, 1) + three.cost(1, 2) + three.cost(2, 0);
        assert!((held_karp(&three).unwrap().solution.objective - expect).abs() < 1e-9);
    }

    #[test]
    fn limits() {
        assert!(matches!(
            held_karp(&berlin52_prefix(19).unwrap()),
            Err(Error::TooLarge { .. })
        ));
        let star = berlin52_prefix(4)
            .unwrap()
            .restrict_arcs(vec![(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)])
            .unwrap();
        assert_eq!(held_karp(&star), Err(Error::Infeasible));
    }
}
