//! Cutting-plane toolkit for the symmetric Traveling Salesman Problem.
//!
//! The crate is organised around the restricted master problem of a
//! subtour-elimination cutting-plane loop:
//!
//! * [`tsplib`] reads EUC_2D TSPLIB files and builds real-valued cost matrices.
//! * [`model`] holds instances, subtour elimination cuts, the restricted
//!   model and solution/complexity records.
//! * [`caf`] implements cost-based arc filtering with a Dirac certificate.
//! * [`exact`] solves restricted models exactly (assignment-relaxation
//!   branch and bound) and provides Held-Karp and brute-force oracles.
//! * [`qubo`] converts restricted models to penalised QUBOs and samples them
//!   with a seeded simulated annealer that emulates the annealer workflow.
//! * [`cpa`] drives the cutting-plane loop over any of the backends.
//! * [`reference`] carries published berlin52 prefix values for checks.

pub mod caf;
pub mod cpa;
pub mod error;
pub mod exact;
pub mod model;
pub mod qubo;
pub mod reference;
pub mod tsplib;

pub use error::{Error, Result};
pub use model::{Arc, ArcSolution, ComplexityStats, Instance, RestrictedModel, SecCut, VertexSet};
