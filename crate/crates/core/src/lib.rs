//! Exact-arithmetic workbench for the linear-algebra calculus behind
//! quiver models of perverse sheaves: symplectic triple forms and Maslov
//! holonomy, quiver categories with group-equivariant structure, vanishing
//! cycles, fiber products of categories, melded systems, and finite-site
//! stacks with descent and gluing.

pub mod category;
pub mod equivariant;
pub mod fiber;
pub mod gen;
pub mod group;
pub mod groupoid;
pub mod kernel;
pub mod matrix;
pub mod melded;
pub mod scalar;
pub mod signature;
pub mod quiver;
pub mod sheaf;
pub mod site;
pub mod solve;
pub mod stack;
pub mod suite;
pub mod symplectic;
