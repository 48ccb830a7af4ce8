//! Taylor-Hood P2/P1 discretization.

pub mod assemble;
pub mod element;
pub mod forcing;
pub mod quadrature;
pub mod space;

pub use assemble::{assemble, DiscreteSystem, RefTables, DEFAULT_QUADRATURE_DEGREE};
pub use forcing::{read_vertex_field, write_vertex_field, Forcing, ManufacturedSolution};
pub use quadrature::{simplex_rule, Quadrature};
pub use space::{build_space, BcProfile, FunctionSpace};
