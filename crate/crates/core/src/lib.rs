//! Graph-based hierarchical agglomerative clustering.

pub mod average;
pub mod dendrogram;
pub mod engine;
pub mod evaluation;
pub mod generators;
pub mod graph;
pub mod heap;
pub mod linkage;
pub mod orientation;
pub mod reference;
