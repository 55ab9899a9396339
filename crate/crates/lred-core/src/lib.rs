//! Symmetry reduction of differential equations without the transversality assumption.

pub mod checks;
pub mod dynamic;
pub mod fields;
pub mod linalg;
pub mod kinematic;
pub mod numcheck;
pub mod problem;
pub mod residual;
pub mod symkernel;
