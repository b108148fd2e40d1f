//! Hilbert modules over finite-dimensional C*-algebras, finite groups and
//! their unitary representations, and group actions on modules.

pub mod dynamics;
pub mod group;
pub mod module;
pub mod representation;

pub use dynamics::{
    check_dynamical_system, induced_algebra_action, standard_action, DynamicsReport,
    InducedActionReport, ModuleDynamicalSystem, StandardAction,
};
pub use group::{group_average, FiniteGroup, GroupJson, UnitaryRep, UnitaryRepReport};
pub use module::{check_module_axioms, HilbertModule, ModuleAxiomReport, ModuleJson};
pub use representation::{
    check_covariant_representation, check_module_representation, CovariantRepresentation,
    CovariantRepresentationReport, ModuleRepresentation, ModuleRepresentationJson,
    ModuleRepresentationReport,
};
