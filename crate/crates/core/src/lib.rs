//! Planning, simulation and analysis of two-stage genome-wide association
//! studies.
//!
//! The analytic layers ([`genetics`], [`power`], [`design`]) are generic over
//! the scalar type; the type aliases below fix it to `f64`, which is what the
//! simulation and inference layers use throughout.

pub mod assoc;
pub mod bivariate;
pub mod cohort;
pub mod design;
pub mod error;
pub mod genetics;
pub mod gxe;
pub mod logistic;
pub mod normal;
pub mod pipeline;
pub mod power;
pub mod quadrature;
pub mod reseq;
pub mod rng;
pub mod scalar;
pub mod significance;

pub use error::{Error, Result};
pub use scalar::{Field, Real};

pub type MarkerCausalModel = genetics::MarkerCausalModel<f64>;
pub type GameteCellTable = genetics::GameteCellTable<f64>;
pub type TwoStageDesign = power::TwoStageDesign<f64>;
pub type CoverageDistribution = power::CoverageDistribution<f64>;
pub type TypePrior = power::TypePrior<f64>;
pub type CostModel = design::CostModel<f64>;
pub type DesignConstraints = design::DesignConstraints<f64>;
pub type OptimizedDesign = design::OptimizedDesign<f64>;
