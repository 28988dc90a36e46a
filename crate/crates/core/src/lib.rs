//! k-symplectic Lagrangian and Hamiltonian field theory on Lie algebroids.
//!
//! The crate works in local coordinates throughout. A [`LieAlgebroid`] is
//! given by its anchor and structure functions; everything else (prolonged
//! algebroids, Poincaré–Cartan sections, field equations, the Legendre map
//! and discrete field verification) is built on top of it.

#![allow(clippy::needless_range_loop)]

pub mod ad;
pub mod algebroid;
pub mod error;
pub mod function;
pub mod grid;
pub mod hamiltonian;
pub mod lagrangian;
pub mod legendre;
pub mod models;
pub mod poly;
pub mod prolongation;
pub mod registry;

pub use algebroid::{LieAlgebroid, SectionField, StructureFields, StructureTensor};
pub use error::{Error, Result};
pub use function::{AdFunction, FieldFunction, OpaqueFunction};
pub use grid::{Grid, GridField};
pub use hamiltonian::HamiltonianSystem;
pub use lagrangian::LagrangianSystem;
pub use legendre::LegendreMap;
pub use prolongation::{CoWhitneyPoint, ProlongedElement, Side, WhitneyPoint};
