//! Prescribed-pressure-drop Navier-Stokes flow in a finite pipe whose middle
//! section is a sieve: a wall perforated by many tiny holes.
//!
//! The crate builds perforated layouts, meshes the pipe with the sieve as a
//! zero-thickness wall, discretizes the rotational form of the equations with
//! Taylor-Hood elements and a Bernoulli pressure, and measures the quantities
//! that govern the small-hole limit: flux, sieve trace, pressure split,
//! trace/Poincare/Bogovskii constants and distances to the homogenized states.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod solve;
pub mod sparse;

pub use error::{Error, ErrorKind, Result};
