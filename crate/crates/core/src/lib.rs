//! Part-level semantic discovery and latent-space navigation for 3D point clouds.
//!
//! The numerical core is generic over the scalar type through [`Real`]; the
//! pipeline runs in double precision and the aliases at the crate root pin
//! the common types to `f64`.

pub mod directions;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod navigation;
pub mod parallel;
pub mod neural;
pub mod real;
pub mod rng;
pub mod semdiscovery;
pub mod synthgen;

pub use error::{Error, Result};
pub use real::Real;

pub type PointCloud = geometry::PointCloud<f64>;
pub type SpatialIndex = geometry::SpatialIndex<f64>;
pub type LatentCode = neural::LatentCode<f64>;
pub type PointEncoder = neural::PointEncoder<f64>;
pub type PointDecoder = neural::PointDecoder<f64>;
pub type AutoEncoder = neural::AutoEncoder<f64>;
pub type Segmenter = neural::Segmenter<f64>;
pub type Classifier = neural::Classifier<f64>;
pub type PartLatentBank = semdiscovery::PartLatentBank<f64>;

pub use directions::{DirectionBank, SemanticDirection};
pub use semdiscovery::SemanticCluster;
