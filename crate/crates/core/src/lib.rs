//! Exact tools for tilings `A ⊕ B = Z_M` of finite cyclic groups.

pub mod arith;
pub mod boxes;
pub mod cuboids;
pub mod cyclotomic;
pub mod error;
pub mod fibers;
pub mod multiset;
pub mod reductions;
pub mod saturation;
pub mod search;
pub mod tiling;
pub mod zmod;

pub use error::{Error, Result};
pub use multiset::Multiset;
pub use tiling::TilingPair;
pub use zmod::{DivisorIdx, Modulus};
