//! Part latent bank and weakly supervised discovery of part-level semantics
//! by agglomerative clustering of part latents.

mod bank;
mod clustering;
mod silhouette;

pub use bank::{build_part_latent_bank, dataset_part_input, part_input, sentinel_cloud, BankBuild, BankEntry, PartLatentBank};
pub use clustering::{agglomerate, cut_dendrogram, discover_part, name_clusters, ward_dendrogram, Candidate, ClusteringConfig, KRule, Merge, Partition, SemanticCluster};
pub use silhouette::{silhouette_from_distances, silhouette_score};
