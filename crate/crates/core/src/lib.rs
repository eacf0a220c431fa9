//! Exact-arithmetic tensor network states.
//!
//! The crate is organised around a dense [`Tensor`] type with two scalar
//! backends (exact rationals and complex doubles) and a [`TensorNetwork`]
//! whose contraction and norm drive everything else:
//!
//! - [`boolean`]: Boolean functions and relations as 0/1 tensors, the
//!   standard gate/relation library and the support map.
//! - [`sat`]: CNF formulas as tensor networks, model counting through the
//!   squared two-norm, and the tree-network satisfiability condition.
//! - [`physicality`]: zero-norm (unphysical) network detection, the
//!   closed-timelike-curve paradox fixtures and chained gate libraries.
//! - [`gadget`]: integer matrices realised as unitary/copy/postselection
//!   gadgets through the singular value decomposition.
//! - [`mortality`]: bounded zero-word search over integer matrix libraries.
//! - [`lattice`]: polymorphisms, invariants, Post's lattice and co-clone
//!   membership.
//!
//! Sweep-style loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`Exec`].

pub mod boolean;
pub mod exec;
pub mod gadget;
pub mod lattice;
pub mod mortality;
pub mod network;
pub mod order;
pub mod parse;
pub mod physicality;
pub mod sat;
pub mod scalar;
mod svd;
pub mod tensor;
pub mod tnf;

pub use exec::Exec;
pub use network::{contract_network, contract_pair, norm_squared, Bond, LegRef, TensorNetwork};
pub use order::{optimize_order, ContractionOrder};
pub use parse::ParseError;
pub use scalar::{Backend, Complex, Rational, Scalar};
pub use tensor::{conjugate, tensor_product, Leg, Tensor, TensorError};
