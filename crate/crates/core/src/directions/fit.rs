use super::{build_examples, fit_linear_svm, ObjectLatents, SemanticDirection, SvmConfig};
use crate::semdiscovery::SemanticCluster;
use crate::synthgen::PartId;
use crate::Result;

/// One SVM direction per discovered cluster. A part split into exactly two
/// clusters gets a single direction towards its smaller cluster, since the
/// two one-vs-rest hyperplanes would coincide up to sign; single-cluster
/// parts get none.
pub fn fit_part_directions(clusters: &[SemanticCluster], latents: &ObjectLatents, config: &SvmConfig, seed: u64) -> Result<Vec<SemanticDirection>> {
    let mut out = Vec::new();
    for part in PartId::ALL {
        let mut own: Vec<&SemanticCluster> = clusters.iter().filter(|c| c.part == part).collect();
        if own.len() < 2 {
            continue;
        }
        if own.len() == 2 {
            own.sort_by_key(|c| (c.members.len(), c.cluster_id));
            own.truncate(1);
        }
        for c in own {
            let set = build_examples(c, latents, seed)?;
            out.push(fit_linear_svm(&set, config)?);
        }
    }
    Ok(out)
}
