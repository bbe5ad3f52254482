//! Published reference values for berlin52 prefixes.
//!
//! Per prefix size: variable counts with and without arc filtering, the
//! constraint count of the complete formulation, the constraint counts
//! reached by the cutting-plane loop, and the optimal tour length with and
//! without filtering. `None` marks values that are not published.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub n: usize,
    pub vars: u64,
    pub vars_caf: u64,
    /// Complete formulation: degree constraints plus every subtour cut.
    pub cilp_constraints: Option<u64>,
    pub cpa_constraints: u64,
    pub cpa_constraints_caf: u64,
    pub optimum: f64,
    pub optimum_caf: f64,
}

const fn row(
    n: usize,
    vars_caf: u64,
    cilp_constraints: Option<u64>,
    cpa: (u64, u64),
    optimum: f64,
    optimum_caf: f64,
) -> ReferenceRow {
    ReferenceRow {
        n,
        vars: (n * (n - 1)) as u64,
        vars_caf,
        cilp_constraints,
        cpa_constraints: cpa.0,
        cpa_constraints_caf: cpa.1,
        optimum,
        optimum_caf,
    }
}

pub const BERLIN52: &[ReferenceRow] = &[
    row(5, 18, Some(35), (14, 14), 2314.55, 2314.55),
    row(6, 24, Some(68), (17, 17), 2315.15, 2323.20),
    row(7, 34, Some(133), (20, 20), 2321.39, 2321.39),
    row(8, 42, Some(262), (21, 21), 2550.94, 2550.94),
    row(9, 58, Some(519), (22, 24), 2820.38, 2874.44),
    row(10, 64, Some(1032), (27, 27), 2826.50, 2826.50),
    row(11, 88, Some(2057), (31, 31), 4038.44, 4038.44),
    row(12, 96, Some(4106), (36, 36), 4056.68, 4056.68),
    row(13, 118, Some(8203), (39, 39), 4564.46, 4564.46),
    row(14, 126, Some(16396), (44, 46), 4946.85, 4965.33),
    row(15, 154, Some(32781), (46, 46), 4967.30, 4967.30),
    row(20, 262, Some(1_048_594), (61, 61), 5270.86, 5270.86),
    row(25, 420, None, (83, 83), 5460.94, 5460.94),
    row(30, 562, None, (99, 99), 6146.65, 6146.65),
    row(35, 806, None, (91, 91), 6557.12, 6557.12),
    row(40, 1056, None, (104, 104), 6652.63, 6652.63),
    row(45, 1358, None, (116, 116), 6887.37, 6887.37),
];

pub fn berlin52_row(n: usize) -> Option<&'static ReferenceRow> {
    BERLIN52.iter().find(|r| r.n == n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(berlin52_row(10).unwrap().vars, 90);
        assert!(berlin52_row(16).is_none());
    }
}
