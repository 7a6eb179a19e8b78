//! Random walks on free groups whose harmonic measure is a prescribed Gibbs
//! measure on the boundary of the Cayley tree.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read closer to the matrix formulas
#![allow(clippy::needless_range_loop)]

pub mod decompose;
pub mod error;
pub mod function;
pub mod geodesic;
pub mod gibbs;
pub mod h2;
pub mod measure;
pub mod potential;
pub mod preset;
pub mod spike;
pub mod tree;
pub mod walk;
pub mod word;

pub use decompose::{decompose, DecomposerConfig, Decomposition, StopReason};
pub use error::{Error, Result};
pub use function::CylinderFn;
pub use gibbs::{critical_exponent, GibbsStream};
pub use h2::{comparison_audit, h2_distance, sh_distance_numeric, H2Geodesic, H2Point, H2Report};
pub use measure::{MarkovMeasure, MeasureId};
pub use potential::Potential;
pub use preset::{Pipeline, Setup};
pub use spike::{DecayCert, Kernel, SpikeRecord};
pub use walk::{simulate_hitting, stationarity_error, walk_statistics, WalkMeasure};
pub use geodesic::{sh_distance, GeodesicSpec};
pub use tree::{busemann, gromov_product, quasimetric_pi, shadow, Cylinder, CylinderIndexer, Shadow, TreePoint};
pub use word::{reduce_word, Alphabet, BoundaryWord, Letter, ReducedWord};
