//! Verification and generation laboratory for axially symmetric relativistic
//! membranes in four spacetime dimensions.
//!
//! The library evaluates the defect of every governing equation of the
//! light-cone, level-set, graph and orthonormal descriptions against a
//! catalog of closed-form solutions, implements the characteristic-pair
//! solution-generating transformation numerically, reproduces the exact
//! exponent and amplitude algebra of the perturbative modes, and integrates
//! the self-similar profile reductions down to Abel canonical form.

pub mod catalog;
pub mod error;
pub mod grid;
pub mod interp;
pub mod jet;
pub mod perturb;
pub mod rational;
pub mod reduction;
pub mod transform;
pub mod residual;

pub use error::{Error, Result};
