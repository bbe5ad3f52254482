//! QUBO export for one prefix size: the cut-free model for cutting-plane
//! variants, the complete formulation for the others.

use tspcut::model::{enumerate_all_secs, Formulation};
use tspcut::qubo::{to_qubo, Penalty};
use tspcut::tsplib::RawInstance;
use tspcut::{Error, RestrictedModel};

use crate::{instance_for, Variant};

/// Largest size exported with every subtour cut; the text is about 1.5 GB
/// at this size and grows fivefold per extra city.
pub const CILP_EXPORT_LIMIT: usize = 18;

pub fn cmd_export_qubo(raw: &RawInstance, n: usize, variant: Variant) -> tspcut::Result<String> {
    if variant.formulation() == Formulation::Cilp && n > CILP_EXPORT_LIMIT && n <= raw.dimension {
        return Err(Error::TooLarge {
            what: "complete-formulation QUBO export",
            n,
            limit: CILP_EXPORT_LIMIT,
        });
    }
    let inst = instance_for(raw, n, variant.caf())?;
    let model = match variant.formulation() {
        Formulation::Cpa => RestrictedModel::new(inst),
        Formulation::Cilp => RestrictedModel::with_cuts(inst, enumerate_all_secs(n)?)?,
    };
    Ok(to_qubo(&model, Penalty::Auto).to_text())
}
