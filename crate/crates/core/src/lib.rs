// SPDX-License-Identifier: Apache-2.0

//! Place-and-route feasibility estimation for digital blocks dropped into a
//! rectilinear floorplan region.
//!
//! The model reads three features: the region's shape factor, the number of
//! routing layers and the initial row utilization. It is a depth-limited
//! Gini decision tree trained with balanced class weights; a hand-built
//! reference tree ships with the crate.

pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod learner;
pub mod scoring;
pub mod synthgen;

pub use dataset::{DesignRecord, Feature, FeatureVector, Label};
pub use geometry::{Point2, RectilinearPolygon, ShapeMetrics};
pub use learner::{reference_model, train, DecisionTree, TrainConfig};
