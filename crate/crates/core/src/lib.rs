//! Statistical modelling of functional innovation types in open source
//! software from expert agreement ratings.
//!
//! The pipeline runs from raw Likert ratings to an agreement matrix, then
//! through ANOVA, principal components and canonical discriminant analysis
//! to a banded typology of group profiles.

pub mod aggregation;
pub mod cli;
pub mod datamodel;
pub mod discriminant;
pub mod error;
pub mod numkernel;
pub mod pca;
pub mod render;
pub mod report;
pub mod reproduce;
pub mod typology;
pub mod univariate;

pub use datamodel::{
    reference_dataset, Dimension, EvaluationMatrix, InnovationType, LikertResponse, MatrixRow,
    RatingRecord, RatingSet,
};
pub use error::{Error, Result};
