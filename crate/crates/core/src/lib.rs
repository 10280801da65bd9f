//! Standing waves of the cubic focusing NLS equation on a dumbbell metric
//! graph: spectral theory of the graph Laplacian, pitchfork bifurcation
//! quantities, closed-form elliptic solution branches, and the nonlinear
//! solvers (Petviashvili, Newton, parameter continuation) that connect them.

pub mod closedform;
pub mod elliptic;
pub mod grid;
pub mod normalform;
pub mod operators;
pub mod solve;
pub mod spectrum;

pub use grid::{DumbbellGrid, Edge, GraphFunction, GridError};
pub use operators::{DiscreteOperator, OperatorError};
pub use solve::{BranchTable, SolveError, StateTag, StationaryState};
