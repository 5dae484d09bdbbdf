//! Exact-arithmetic engine for Mackey products of commutative algebraic
//! groups over finite fields.
//!
//! The crate is organized around a tower of finite fields ([`ffield`]),
//! the value groups of the implemented group functors ([`groups`]),
//! exact integer linear algebra ([`zlinalg`]), the Mackey-product
//! presentation engine and its certified symbol rewriting ([`mackey`]),
//! a reciprocity-law checker for sections on open subsets of the
//! projective line ([`reciprocity`]), and relative Chow groups with
//! modulus ([`chow`]).

pub mod chow;
pub mod error;
pub mod ffield;
pub mod groups;
pub mod mackey;
pub mod poly;
pub mod reciprocity;
pub mod report;
pub mod zlinalg;

pub use error::{Error, Result};
pub use ffield::{Field, FieldElem};
