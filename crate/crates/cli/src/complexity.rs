//! Model-size table: variable and constraint counts per prefix size.

use serde::Serialize;
use tspcut::cpa::{run_cpa, Backend, CpaConfig};
use tspcut::model::{complexity_of, Formulation, ENUMERATION_LIMIT};
use tspcut::RestrictedModel;

use crate::{instance_for, ExperimentSpec};

pub const HEADER: [&str; 8] = [
    "n",
    "var_no_caf",
    "var_caf",
    "var_reduction_pct",
    "constr_cilp",
    "constr_cpa_no_caf",
    "constr_cpa_caf",
    "constr_reduction_pct",
];

/// `None` cells print as `--`: the complete formulation beyond the
/// enumeration limit, or a cutting-plane run that did not reach a tour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub n: usize,
    pub var_no_caf: u64,
    pub var_caf: u64,
    pub var_reduction_pct: u64,
    pub constr_cilp: Option<u64>,
    pub constr_cpa_no_caf: Option<u64>,
    pub constr_cpa_caf: Option<u64>,
    /// Complete formulation against the filtered cutting-plane model.
    pub constr_reduction_pct: Option<u64>,
}

impl ComplexityRow {
    pub fn cells(&self) -> Vec<String> {
        let opt = |v: Option<u64>| v.map_or_else(|| "--".to_string(), |v| v.to_string());
        vec![
            self.n.to_string(),
            self.var_no_caf.to_string(),
            self.var_caf.to_string(),
            self.var_reduction_pct.to_string(),
            opt(self.constr_cilp),
            opt(self.constr_cpa_no_caf),
            opt(self.constr_cpa_caf),
            opt(self.constr_reduction_pct),
        ]
    }
}

/// `(before - after) / before` as a whole percentage.
pub fn reduction_pct(before: u64, after: u64) -> u64 {
    if before == 0 {
        return 0;
    }
    ((before as f64 - after as f64) / before as f64 * 100.0)
        .round()
        .max(0.0) as u64
}

fn cpa_constraints(spec: &ExperimentSpec, n: usize, caf: bool) -> Option<u64> {
    let inst = instance_for(&spec.instance, n, caf).ok()?;
    let mut cfg = CpaConfig::new(Backend::Exact, n);
    cfg.per_iteration_budget = spec.budget;
    let trace = run_cpa(&inst, &cfg).ok()?;
    trace.outcome.is_tour().then(|| trace.total_constraints())
}

pub fn complexity_row(spec: &ExperimentSpec, n: usize) -> tspcut::Result<ComplexityRow> {
    let plain = RestrictedModel::new(instance_for(&spec.instance, n, false)?);
    let filtered = RestrictedModel::new(instance_for(&spec.instance, n, true)?);
    let var_no_caf = complexity_of(&plain, Formulation::Cpa)?.num_vars;
    let var_caf = complexity_of(&filtered, Formulation::Cpa)?.num_vars;
    let constr_cilp = if n <= ENUMERATION_LIMIT {
        Some(complexity_of(&plain, Formulation::Cilp)?.total_constraints)
    } else {
        None
    };
    let constr_cpa_no_caf = cpa_constraints(spec, n, false);
    let constr_cpa_caf = cpa_constraints(spec, n, true);
    Ok(ComplexityRow {
        n,
        var_no_caf,
        var_caf,
        var_reduction_pct: reduction_pct(var_no_caf, var_caf),
        constr_cilp,
        constr_cpa_no_caf,
        constr_cpa_caf,
        constr_reduction_pct: constr_cilp.zip(constr_cpa_caf).map(|(a, b)| reduction_pct(a, b)),
    })
}

/// One row per requested size, in ascending order. Cutting-plane counts come
/// from the exact backend.
pub fn cmd_complexity(spec: &ExperimentSpec) -> anyhow::Result<Vec<ComplexityRow>> {
    spec.validate()?;
    spec.sizes
        .iter()
        .map(|&n| complexity_row(spec, n).map_err(Into::into))
        .collect()
}
