//! Discrete laboratory for exotic bilinear paraproducts.
//!
//! The crate is split into an exact combinatorial half ([`rational`],
//! [`dyadic`], [`lacunary`], [`lemmas`]) and a numerical half on periodic
//! grids ([`signal`], [`symbols`], [`variation`], [`normest`]).

pub mod dyadic;
pub mod error;
pub mod lacunary;
pub mod lemmas;
pub mod normest;
pub mod rational;
pub mod registry;
pub mod signal;
pub mod stats;
pub mod symbols;
pub mod variation;

pub use error::{Error, Result};
pub use rational::Dyadic;
