use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::silhouette::{euclidean_matrix, silhouette_from_distances};
use super::PartLatentBank;
use crate::synthgen::{attribute_part, DatasetManifest, PartId};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub min_fraction: f64,
    /// Absolute floor on cluster size; the effective minimum is `max(min_size, min_fraction * n)`.
    pub min_size: usize,
    /// A cut at K clusters is gap-supported when the merge above it is at least this
    /// many times higher than the merge below it. The largest supported K wins;
    /// without one, K maximises the silhouette. `None` always uses the silhouette.
    pub gap_ratio: Option<f64>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self { k_min: 2, k_max: 8, min_fraction: 0.05, min_size: 20, gap_ratio: Some(2.0) }
    }
}

impl ClusteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_min < 2 || self.k_max < self.k_min {
            return Err(Error::InvalidInput(format!("empty cluster count range {}..={}", self.k_min, self.k_max)));
        }
        if let Some(g) = self.gap_ratio {
            if !(g > 1.0) {
                return Err(Error::InvalidInput(format!("gap_ratio {g} must exceed 1")));
            }
        }
        if !(0.0..1.0).contains(&self.min_fraction) {
            return Err(Error::InvalidInput(format!("min_fraction {} outside [0, 1)", self.min_fraction)));
        }
        Ok(())
    }

    pub fn effective_min_size(&self, n: usize) -> usize {
        self.min_size.max((self.min_fraction * n as f64).ceil() as usize)
    }
}

/// One agglomeration step. Ids below `n` are samples; id `n + s` is the cluster formed at step `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// Ward-linkage dendrogram by Lance-Williams updates on squared distances.
///
/// Ties go to the pair whose smaller, then larger, lowest member index is least.
pub fn ward_dendrogram(points: &[Vec<f64>]) -> Vec<Merge> {
    let n = points.len();
    let mut d2: Vec<Vec<f64>> = euclidean_matrix(points).into_iter().map(|r| r.into_iter().map(|v| v * v).collect()).collect();
    let mut size = vec![1usize; n];
    let mut low = (0..n).collect::<Vec<_>>();
    let mut node = (0..n).collect::<Vec<_>>();
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                let v = d2[i][j];
                let key = (low[i].min(low[j]), low[i].max(low[j]));
                let better = match best {
                    None => true,
                    Some((bv, _, _, k0, k1)) => v < bv || (v == bv && key < (k0, k1)),
                };
                if better {
                    best = Some((v, i, j, key.0, key.1));
                }
            }
        }
        let (dij, i, j, _, _) = best.expect("at least two active clusters");
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((ni + nk) * d2[i][k] + (nj + nk) * d2[j][k] - nk * dij) / (ni + nj + nk);
            let v = v.max(0.0);
            d2[i][k] = v;
            d2[k][i] = v;
        }
        merges.push(Merge { a: node[i].min(node[j]), b: node[i].max(node[j]), height: dij.sqrt(), size: size[i] + size[j] });
        size[i] += size[j];
        low[i] = low[i].min(low[j]);
        node[i] = n + merges.len() - 1;
        active.retain(|&k| k != j);
    }
    merges
}

/// Flat labels for the `k`-cluster cut, numbered by first appearance.
pub fn cut_dendrogram(merges: &[Merge], n: usize, k: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n + merges.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let steps = n.saturating_sub(k.max(1)).min(merges.len());
    for (s, m) in merges.iter().take(steps).enumerate() {
        let root = n + s;
        let ra = find(&mut parent, m.a);
        let rb = find(&mut parent, m.b);
        parent[ra] = root;
        parent[rb] = root;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    relabel(&roots)
}

fn relabel(raw: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    raw.iter()
        .map(|r| {
            let next = map.len();
            *map.entry(*r).or_insert(next)
        })
        .collect()
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points.first().map_or(0, Vec::len);
    let mut c = vec![vec![0.0; dim]; k];
    let mut count = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        count[l] += 1;
        c[l].iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    for (ci, &n) in c.iter_mut().zip(&count) {
        if n > 0 {
            ci.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    c
}

/// Folds clusters smaller than `min_size` into the cluster with the nearest centroid,
/// smallest first, until every remaining cluster is large enough or one is left.
fn merge_small(points: &[Vec<f64>], labels: &[usize], min_size: usize) -> Vec<usize> {
    let mut labels = labels.to_vec();
    loop {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        if k <= 1 {
            return labels;
        }
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        let Some(small) = (0..k).filter(|&c| sizes[c] < min_size).min_by_key(|&c| (sizes[c], c)) else {
            return labels;
        };
        let cents = centroids(points, &labels, k);
        let target = (0..k)
            .filter(|&c| c != small)
            .map(|c| (c, cents[c].iter().zip(&cents[small]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
            .map(|(c, _)| c)
            .expect("k > 1");
        let raw: Vec<usize> = labels.iter().map(|&l| if l == small { target } else { l }).collect();
        labels = relabel(&raw);
    }
}

/// Result of clustering one part's latents.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub labels: Vec<usize>,
    pub k: usize,
    /// Silhouette of the chosen partition; `None` when it has a single cluster.
    pub silhouette: Option<f64>,
    pub rule: KRule,
    pub candidates: Vec<Candidate>,
}

/// Diagnostics of one candidate cut.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    /// Clusters left after small-cluster merging.
    pub clusters: usize,
    pub silhouette: Option<f64>,
    pub gap: f64,
}

/// Ratio of the merge heights just above and just below the `k`-cluster cut.
fn gap_at(merges: &[Merge], n: usize, k: usize) -> f64 {
    if k < 2 || k >= n {
        return 0.0;
    }
    let up = merges[n - k].height;
    let down = merges[n - k - 1].height;
    if down > 0.0 {
        up / down
    } else if up > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// How the number of clusters was chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KRule {
    Gap,
    Silhouette,
    /// No partition had positive silhouette.
    Single,
}

/// Ward clustering with small-cluster merging and cut selection.
///
/// Candidate cuts keep their K only if no cluster needed merging. Among those,
/// the largest gap-supported K is taken; otherwise the cut with the highest
/// positive silhouette; otherwise a single cluster.
pub fn agglomerate(points: &[Vec<f64>], config: &ClusteringConfig) -> Result<Partition> {
    config.validate()?;
    let n = points.len();
    let min_size = config.effective_min_size(n);
    if n < 2 * min_size.max(1) {
        return Err(Error::Precondition(format!("{n} samples, need at least {}", 2 * min_size.max(1))));
    }
    let dist = euclidean_matrix(points);
    let merges = ward_dendrogram(points);
    let mut candidates = Vec::new();
    let mut by_silhouette: Option<(f64, Vec<usize>)> = None;
    let mut by_gap: Option<Vec<usize>> = None;
    let mut seen = BTreeSet::new();
    for k in config.k_min..=config.k_max.min(n) {
        let labels = merge_small(points, &cut_dendrogram(&merges, n, k), min_size);
        let kk = labels.iter().copied().max().map_or(0, |m| m + 1);
        let s = if kk >= 2 { Some(silhouette_from_distances(&dist, &labels)?) } else { None };
        let gap = gap_at(&merges, n, k);
        candidates.push(Candidate { k, clusters: kk, silhouette: s, gap });
        if !seen.insert(labels.clone()) {
            continue;
        }
        let Some(s) = s.filter(|&s| s > 0.0) else { continue };
        if kk == k && config.gap_ratio.is_some_and(|g| gap >= g) {
            by_gap = Some(labels.clone());
        }
        if by_silhouette.as_ref().is_none_or(|(b, _)| s > *b) {
            by_silhouette = Some((s, labels));
        }
    }
    let (labels, rule) = match (by_gap, by_silhouette) {
        (Some(l), _) => (l, KRule::Gap),
        (None, Some((_, l))) => (l, KRule::Silhouette),
        (None, None) => (vec![0; n], KRule::Single),
    };
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let silhouette = if k >= 2 { Some(silhouette_from_distances(&dist, &labels)?) } else { None };
    Ok(Partition { labels, k, silhouette, rule, candidates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticCluster {
    pub part: PartId,
    pub cluster_id: usize,
    /// Oracle-majority name, e.g. `swivel`; unique within the part.
    pub name: String,
    pub members: Vec<String>,
    /// Manifest indices of the members.
    pub member_indices: Vec<usize>,
    pub centroid: Vec<f64>,
    pub size_fraction: f64,
    /// Fraction of members carrying the named attribute.
    pub purity: f64,
    /// Silhouette of the part's partition, when it has more than one cluster.
    pub silhouette: Option<f64>,
}

impl SemanticCluster {
    /// `part/name`, the id used for the direction fitted from this cluster.
    pub fn semantic_id(&self) -> String {
        format!("{}/{}", self.part.name(), self.name)
    }
}

/// Clusters one part of the bank and names the clusters against the manifest attributes.
pub fn discover_part(bank: &PartLatentBank<f64>, part: PartId, manifest: &DatasetManifest, config: &ClusteringConfig) -> Result<Vec<SemanticCluster>> {
    let entries = bank.for_part(part);
    let points: Vec<Vec<f64>> = entries.iter().map(|e| e.latent.values.clone()).collect();
    let partition = agglomerate(&points, config).map_err(|e| match e {
        Error::Precondition(m) => Error::Precondition(format!("part {part}: {m}")),
        other => other,
    })?;
    let n = entries.len();
    let cents = centroids(&points, &partition.labels, partition.k);
    let mut clusters: Vec<SemanticCluster> = (0..partition.k)
        .map(|c| {
            let idx: Vec<usize> = (0..n).filter(|&i| partition.labels[i] == c).collect();
            SemanticCluster {
                part,
                cluster_id: c,
                name: String::new(),
                members: idx.iter().map(|&i| entries[i].object_id.clone()).collect(),
                member_indices: idx.iter().map(|&i| entries[i].object_index).collect(),
                centroid: cents[c].clone(),
                size_fraction: idx.len() as f64 / n as f64,
                purity: 0.0,
                silhouette: partition.silhouette,
            }
        })
        .collect();
    name_clusters(&mut clusters, manifest);
    Ok(clusters)
}

/// Names each cluster by the part attribute most over-represented among its members
/// relative to the part's population; repeated names get `-2`, `-3`, ... suffixes.
pub fn name_clusters(clusters: &mut [SemanticCluster], manifest: &DatasetManifest) {
    let all: Vec<usize> = clusters.iter().flat_map(|c| c.member_indices.iter().copied()).collect();
    let freq = |idx: &[usize], attr: &str| -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        idx.iter().filter(|&&i| manifest.objects[i].attributes.contains(attr)).count() as f64 / idx.len() as f64
    };
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for c in clusters.iter_mut() {
        let candidates: BTreeSet<&str> = c
            .member_indices
            .iter()
            .flat_map(|&i| manifest.objects[i].attributes.iter())
            .filter(|a| attribute_part(a) == Some(c.part))
            .map(String::as_str)
            .collect();
        let best = candidates
            .into_iter()
            .map(|a| (a, freq(&c.member_indices, a), freq(&c.member_indices, a) - freq(&all, a)))
            .max_by(|x, y| x.2.total_cmp(&y.2).then(x.1.total_cmp(&y.1)).then(y.0.cmp(x.0)));
        let (base, purity) = match best {
            Some((a, f, _)) => (a.split_once('/').map_or(a, |(_, s)| s).to_string(), f),
            None => (format!("cluster{}", c.cluster_id), 0.0),
        };
        let count = used.entry(base.clone()).or_insert(0);
        *count += 1;
        c.name = if *count == 1 { base } else { format!("{base}-{count}") };
        c.purity = purity;
    }
}
