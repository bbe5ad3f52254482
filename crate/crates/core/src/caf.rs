//! Cost-based arc filtering.
//!
//! Every vertex keeps its `k` cheapest neighbours; each kept pair contributes
//! both directed arcs. With `k = ceil(n/2)` the undirected support has
//! minimum degree at least `n/2`, so Dirac's theorem guarantees a Hamiltonian
//! cycle survives. The filter may still drop arcs of the unfiltered optimum.

use crate::error::{Error, Result};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CafConfig {
    pub k: usize,
    pub symmetrize: bool,
}

impl CafConfig {
    pub fn new(k: usize) -> Self {
        Self { k, symmetrize: true }
    }

    pub fn for_size(n: usize) -> Self {
        Self::new(default_k(n))
    }
}

/// `ceil(n/2)`, the smallest `k` that carries the Dirac certificate.
pub fn default_k(n: usize) -> usize {
    n.div_ceil(2)
}

/// Reduces a complete instance to the `k` cheapest neighbours per vertex.
/// Equal costs are ordered by ascending vertex index.
pub fn caf_filter(instance: &Instance, cfg: &CafConfig) -> Result<Instance> {
    let n = instance.n();
    if cfg.k == 0 || cfg.k > n - 1 {
        return Err(Error::BadK { k: cfg.k, max: n - 1 });
    }
    if !instance.is_complete() {
        return Err(Error::InvalidInstance(
            "arc filtering expects the complete arc set".into(),
        ));
    }
    let mut arcs = Vec::with_capacity(2 * n * cfg.k);
    for i in 0..n {
        for j in nearest_neighbors(instance, i, cfg.k) {
            arcs.push((i, j));
            if cfg.symmetrize {
                arcs.push((j, i));
            }
        }
    }
    instance.restrict_arcs(arcs)
}

/// The `k` cheapest neighbours of `i`, ties broken by ascending index.
pub fn nearest_neighbors(instance: &Instance, i: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.n()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| instance.cost(i, a).total_cmp(&instance.cost(i, b)).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Dirac's minimum-degree test on the undirected support. `true` proves a
/// Hamiltonian cycle exists; `false` is inconclusive.
pub fn hamiltonicity_certificate(reduced: &Instance) -> Result<bool> {
    let n = reduced.n();
    let mut degree = vec![0usize; n];
    for &(i, j) in reduced.arcs() {
        if !reduced.has_arc(j, i) {
            return Err(Error::AsymmetricArcSet(i + 1, j + 1));
        }
        degree[i] += 1;
    }
    Ok(n >= 3 && degree.iter().all(|&d| 2 * d >= n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsplib::berlin52_prefix;

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(4), 2);
        assert_eq!(default_k(5), 3);
        assert_eq!(default_k(10), 5);
    }

    #[test]
    fn berlin_arc_counts() {
        let five = caf_filter(&berlin52_prefix(5).unwrap(), &CafConfig::new(3)).unwrap();
        assert_eq!(five.arcs().len(), 18);
        let ten = caf_filter(&berlin52_prefix(10).unwrap(), &CafConfig::new(5)).unwrap();
        assert_eq!(ten.arcs().len(), 64);
    }

    #[test]
    fn keeping_every_neighbour_is_identity() {
        let four = berlin52_prefix(4).unwrap();
        let all = caf_filter(&four, &CafConfig::new(3)).unwrap();
        assert_eq!(all.arcs().len(), 12);
        assert_eq!(all, four);
    }

    #[test]
    fn bad_k() {
        let five = berlin52_prefix(5).unwrap();
        assert_eq!(caf_filter(&five, &CafConfig::new(0)), Err(Error::BadK { k: 0, max: 4 }));
        assert_eq!(caf_filter(&five, &CafConfig::new(5)), Err(Error::BadK { k: 5, max: 4 }));
    }

    #[test]
    fn ties_prefer_smaller_index() {
        // vertex 0 is equidistant from 1, 2 and 3
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (5.0, 5.0)];
        let n = pts.len();
        let mut costs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                costs[i * n + j] = f64::hypot(pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
            }
        }
        let inst = Instance::complete(n, costs).unwrap();
        assert_eq!(nearest_neighbors(&inst, 0, 2), vec![1, 2]);
        assert_eq!(nearest_neighbors(&inst, 0, 3), vec![1, 2, 3]);
        let reduced = caf_filter(&inst, &CafConfig::new(1)).unwrap();
        // 0 keeps 1 and 1 keeps 0
        assert!(reduced.has_arc(0, 1) && reduced.has_arc(1, 0));
    }

    #[test]
    fn certificate_cases() {
        let complete = berlin52_prefix(7).unwrap();
        assert!(hamiltonicity_certificate(&complete).unwrap());

        let cycle: Vec<_> = (0..6).flat_map(|i| [(i, (i + 1) % 6), ((i + 1) % 6, i)]).collect();
        let six = berlin52_prefix(6).unwrap().restrict_arcs(cycle).unwrap();
        assert!(!hamiltonicity_certificate(&six).unwrap());

        let one_way = berlin52_prefix(4).unwrap().restrict_arcs(vec![(0, 1)]).unwrap();
        assert_eq!(hamiltonicity_certificate(&one_way), Err(Error::AsymmetricArcSet(1, 2)));
    }
}
