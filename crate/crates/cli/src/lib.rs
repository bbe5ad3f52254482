//! Experiment runner behind the `tspcut` binary: model-complexity tables,
//! solve tables over the exact, annealing and hybrid-emulation backends, and
//! QUBO export. Rows come back in `(n, variant, run)` order so output is
//! stable for a given experiment and seed.

pub mod check;
pub mod complexity;
pub mod export;
pub mod output;
pub mod solve;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context};
use serde::Serialize;
use tspcut::caf::{caf_filter, CafConfig};
use tspcut::cpa::Backend;
use tspcut::model::Formulation;
use tspcut::tsplib::{build_costs, parse_tsplib, truncate, RawInstance, BERLIN52};
use tspcut::Instance;

/// Directory searched for `--instance` names and for the default
/// `berlin52.tsp`.
pub const INSTANCE_DIR_ENV: &str = "TSPCUT_INSTANCE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub enum Variant {
    Cpa,
    CpaCaf,
    Cilp,
    CilpCaf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Cilp, Variant::CilpCaf, Variant::Cpa, Variant::CpaCaf];

    pub fn caf(self) -> bool {
        matches!(self, Variant::CpaCaf | Variant::CilpCaf)
    }

    pub fn formulation(self) -> Formulation {
        match self {
            Variant::Cpa | Variant::CpaCaf => Formulation::Cpa,
            Variant::Cilp | Variant::CilpCaf => Formulation::Cilp,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Cpa => "cpa",
            Variant::CpaCaf => "cpa-caf",
            Variant::Cilp => "cilp",
            Variant::CilpCaf => "cilp-caf",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.label().to_string()
    }
}

impl FromStr for Variant {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s.trim() {
            "cpa" => Variant::Cpa,
            "cpa-caf" => Variant::CpaCaf,
            "cilp" => Variant::Cilp,
            "cilp-caf" => Variant::CilpCaf,
            other => bail!("unknown variant {other:?} (expected cpa, cpa-caf, cilp, cilp-caf or all)"),
        })
    }
}

/// Comma-separated variants, or `all`.
pub fn parse_variants(s: &str) -> anyhow::Result<Vec<Variant>> {
    if s.trim() == "all" {
        return Ok(Variant::ALL.to_vec());
    }
    let mut out: Vec<Variant> = s.split(',').map(str::parse).collect::<anyhow::Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Comma-separated sizes and inclusive ranges, e.g. `5-15,20,25`.
pub fn parse_sizes(s: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
                if a > b {
                    bail!("empty size range {part:?}");
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().with_context(|| format!("bad size {part:?}"))?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        bail!("no sizes given");
    }
    Ok(out)
}

/// Reads `path`, resolving bare names against [`INSTANCE_DIR_ENV`]. Without
/// a path, `berlin52.tsp` from that directory is used when present and the
/// bundled copy otherwise.
pub fn load_instance(path: Option<&Path>) -> anyhow::Result<RawInstance> {
    let dir = std::env::var_os(INSTANCE_DIR_ENV).map(PathBuf::from);
    let resolved = match path {
        Some(p) if p.exists() => Some(p.to_path_buf()),
        Some(p) => match &dir {
            Some(d) if d.join(p).exists() => Some(d.join(p)),
            _ => bail!("instance file {} not found", p.display()),
        },
        None => dir.map(|d| d.join("berlin52.tsp")).filter(|p| p.exists()),
    };
    let text = match &resolved {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => BERLIN52.to_string(),
    };
    let raw = parse_tsplib(&text).with_context(|| match &resolved {
        Some(p) => format!("parsing {}", p.display()),
        None => "parsing bundled berlin52".into(),
    })?;
    Ok(raw)
}

/// First `n` nodes of `raw`, arc-filtered when `caf` is set.
pub fn instance_for(raw: &RawInstance, n: usize, caf: bool) -> tspcut::Result<Instance> {
    let inst = build_costs(&truncate(raw, n)?);
    if caf {
        caf_filter(&inst, &CafConfig::for_size(n))
    } else {
        Ok(inst)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub instance: RawInstance,
    pub sizes: Vec<usize>,
    pub variants: Vec<Variant>,
    pub backend: Backend,
    pub runs: usize,
    pub seed: u64,
    /// Overrides the backend's default sweep count.
    pub sweeps: Option<usize>,
    /// Overrides the per-iteration budget (hybrid emulation, exact).
    pub budget: Option<Duration>,
    /// Report measured wall-clock times; off gives reproducible output.
    pub wall_clock: bool,
}

impl ExperimentSpec {
    pub fn new(instance: RawInstance, sizes: Vec<usize>) -> Self {
        Self {
            instance,
            sizes,
            variants: vec![Variant::CpaCaf],
            backend: Backend::Exact,
            runs: 5,
            seed: 0,
            sweeps: None,
            budget: None,
            wall_clock: true,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let dim = self.instance.dimension;
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 3 || n > dim) {
            bail!("size {n} outside 3..={dim} for instance {}", self.instance.name);
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        if self.variants.is_empty() {
            bail!("no variants selected");
        }
        if self.budget.is_some_and(|b| b.is_zero()) {
            bail!("budget must be positive");
        }
        Ok(())
    }

    /// True when the instance is berlin52 itself, so the bundled reference
    /// values apply to its prefixes.
    pub fn is_berlin52(&self) -> bool {
        self.instance.name.trim_end_matches(".tsp") == "berlin52"
            && self.instance.coords == parse_tsplib(BERLIN52).expect("bundled instance").coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_ranges() {
        assert_eq!(parse_sizes("5-8, 10,20").unwrap(), vec![5, 6, 7, 8, 10, 20]);
        assert_eq!(parse_sizes("7,5,7").unwrap(), vec![5, 7]);
        assert!(parse_sizes("9-5").is_err());
        assert!(parse_sizes("x").is_err());
        assert!(parse_sizes("").is_err());
    }

    #[test]
    fn variants() {
        assert_eq!(parse_variants("all").unwrap().len(), 4);
        assert_eq!(
            parse_variants("cpa-caf,cpa").unwrap(),
            vec![Variant::Cpa, Variant::CpaCaf]
        );
        assert!(parse_variants("lp").is_err());
        assert!(Variant::CilpCaf.caf() && !Variant::Cpa.caf());
        assert_eq!(Variant::CilpCaf.to_string(), "cilp-caf");
    }

    #[test]
    fn bundled_instance_is_berlin52() {
        let raw = load_instance(None).unwrap();
        assert_eq!(raw.dimension, 52);
        let spec = ExperimentSpec::new(raw, vec![5]);
        assert!(spec.is_berlin52());
        spec.validate().unwrap();
        let mut bad = spec.clone();
        bad.sizes = vec![53];
        assert!(bad.validate().is_err());
        assert_eq!(instance_for(&spec.instance, 5, true).unwrap().arcs().len(), 18);
    }
}
