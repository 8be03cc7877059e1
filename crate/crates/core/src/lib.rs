//! Numerical construction of a self-similar bounded-above subharmonic
//! function on the strip `|Im z| <= 4/3`, its transport to the annulus
//! `1 < |ζ| < 2`, and a verification engine for every inequality the
//! construction relies on.
//!
//! The pipeline is
//!
//! 1. [`geometry`]: exact dyadic squares, covering and disjointness;
//! 2. [`laplace`]: Dirichlet solves on the perforated period cell and the
//!    Green function of the fundamental square;
//! 3. [`assembler`]: constants `M`, `t`, `β` for both half strips and the glued
//!    potential;
//! 4. [`verify`]: named checks with signed margins and the decay table;
//! 5. [`annulus`]: the logarithmic change of variable and the outer extension;
//! 6. [`pipeline`]: configuration, reports, model files and exports.
//!
//! Numerical code is generic over [`Scalar`] (`f32`, `f64`); geometry is
//! generic over [`Coord`], which adds the exact [`Rational`].

pub mod annulus;
pub mod assembler;
pub mod error;
pub mod geometry;
pub mod laplace;
pub mod pipeline;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Coord, Rational, Scalar};

pub type Point64 = num_complex::Complex<f64>;
pub type Field64 = laplace::Field<f64>;
pub type Field32 = laplace::Field<f32>;
pub type GreenField64 = laplace::GreenField<f64>;
pub type HalfStripModel64 = assembler::HalfStripModel<f64>;
pub type GluedPotential64 = assembler::GluedPotential<f64>;
pub type AnnulusPotential64 = annulus::AnnulusPotential<f64>;
