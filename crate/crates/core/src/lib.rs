//! Graph classification with adaptive, attention-weighted R-convolution
//! kernels.
//!
//! Pipeline: substructure counts ([`features`]) are reweighted by a
//! feature-channel attention block ([`attention`]), turned into a Gram matrix
//! whose rows serve as graph embeddings ([`kernel`]), and classified by an MLP
//! ([`nn`]); the composite is trained end to end ([`model`]) and evaluated by
//! repeated k-fold cross-validation ([`experiment`]).

pub mod attention;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod kernel;
pub mod model;
pub mod nn;
pub mod tudataset;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, KernelKind};
pub use graph::{Graph, GraphDataset};
pub use kernel::KernelMatrix;
