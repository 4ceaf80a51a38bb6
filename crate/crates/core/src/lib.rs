//! Label propagation from point annotations for nuclei segmentation.
//!
//! Starting from one annotated pixel per nucleus on an H&E image, this crate
//! produces:
//!
//! - coarse tri-state supervision ([`coarse`]): a Voronoi label and a
//!   k-means cluster label, where code 2 marks pixels left out of the loss;
//! - the hematoxylin component used as network input ([`stain`]);
//! - EMA-averaged, cluster-merged pseudo labels plus the reference loss and
//!   schedule functions a co-training harness needs ([`propagation`]);
//! - pixel- and object-level evaluation ([`metrics`]).
//!
//! Probability maps travel between this crate and any external trainer as
//! `PFG1` files ([`dataio::probmap`]).

pub mod coarse;
pub mod dataio;
pub mod error;
pub mod metrics;
pub mod propagation;
pub mod stain;
pub mod synthetic;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    code, GrayImage, InstanceMap, Point, PointSet, ProbMap, RgbImage, StainModel, TriLabelMap,
    Validate, Violation,
};
