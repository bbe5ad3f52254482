use std::time::Instant;

use super::{tour_solution, ExactResult};
use crate::error::{Error, Result};
use crate::model::Instance;

pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Enumerates every directed tour starting at vertex 0.
pub fn brute_force_tsp(instance: &Instance) -> Result<ExactResult> {
    let start = Instant::now();
    let n = instance.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "brute_force_tsp",
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut count = 0u64;
    permute(&mut rest, 0, &mut |perm| {
        count += 1;
        let mut total = 0.0;
        let mut prev = 0;
        for &v in perm.iter().chain(std::iter::once(&0)) {
            if !instance.has_arc(prev, v) {
                return;
            }
            total += instance.cost(prev, v);
            prev = v;
        }
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm.to_vec()));
        }
    });
    let (_, order) = best.ok_or(Error::Infeasible)?;
    let tour: Vec<usize> = std::iter::once(0).chain(order).collect();
    Ok(ExactResult {
        solution: tour_solution(instance, &tour),
        optimal: true,
        nodes_explored: count,
        wall_time: start.elapsed(),
    })
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caf::{caf_filter, CafConfig};
    use crate::tsplib::berlin52_prefix;

    #[test]
    fn unit_square() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let costs = (0..16)
            .map(|k| {
                let (a, b) = (pts[k / 4], pts[k % 4]);
                f64::hypot(a.0 - b.0, a.1 - b.1)
            })
            .collect();
        let inst = Instance::complete(4, costs).unwrap();
        let r = brute_force_tsp(&inst).unwrap();
        assert!((r.solution.objective - 4.0).abs() < 1e-12);
        assert_eq!(r.nodes_explored, 6);
    }

    #[test]
    fn berlin_prefixes() {
        let five = berlin52_prefix(5).unwrap();
        assert!((brute_force_tsp(&five).unwrap().solution.objective - 2314.55).abs() < 0.01);
        let six = caf_filter(&berlin52_prefix(6).unwrap(), &CafConfig::for_size(6)).unwrap();
        assert!((brute_force_tsp(&six).unwrap().solution.objective - 2323.20).abs() < 0.01);
        assert!(matches!(
            brute_force_tsp(&berlin52_prefix(11).unwrap()),
            Err(Error::TooLarge { .. })
        ));
    }
}
