use latnav_core::directions::{closedform_baseline_directions, fit_part_directions, pca_baseline_directions, DirectionBank, ObjectLatents};
use latnav_core::geometry::{chamfer_distance, PointCloud, SpatialIndex};
use latnav_core::metrics::{render_table, train_semantic_classifier, ClassifierLevel, PartLabeler};
use latnav_core::neural::{train_autoencoder, train_segmenter, AutoEncoder, Checkpoint, LatentSpace, Segmenter};
use latnav_core::semdiscovery::{build_part_latent_bank, dataset_part_input, discover_part};
use latnav_core::synthgen::{attribute_part, generate_dataset, Dataset, PartId, Split};

use crate::config::PipelineConfig;
use crate::eval;
use crate::pipeline::Stage;
use crate::workspace::*;
use crate::{Error, Result};

pub const OBJECT_SPACE: &str = "object";

pub(crate) fn execute(stage: Stage, ws: &WorkspaceLayout, cfg: &PipelineConfig, quiet: bool) -> Result<Vec<String>> {
    match stage {
        Stage::GenData => gen_data(ws, cfg),
        Stage::TrainPartAe => train_part_ae(ws, cfg),
        Stage::TrainObjectAe => train_object_ae(ws, cfg),
        Stage::TrainSeg => train_seg(ws, cfg),
        Stage::BuildBank => build_bank(ws, cfg),
        Stage::Discover => discover(ws, cfg),
        Stage::FitDirections => fit_directions(ws, cfg),
        Stage::Baselines => baselines(ws, cfg),
        Stage::TrainCls => train_cls(ws, cfg),
        Stage::Evaluate => eval::evaluate(ws, cfg, quiet),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3}"))
}

fn gen_data(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let dir = ws.path(DATA_DIR);
    if dir.exists() {
        std::fs::remove_dir_all(&dir)?;
    }
    let ds = generate_dataset(&cfg.data)?;
    ds.write(&dir)?;
    let mut out = vec![MANIFEST.to_string()];
    out.extend(ds.manifest.objects.iter().map(|e| format!("{DATA_DIR}/{}", e.file)));
    Ok(out)
}

pub(crate) fn unlabeled(ds: &Dataset, split: Split) -> Vec<PointCloud<f64>> {
    ds.indices(split).iter().map(|&i| ds.clouds[i].unlabeled()).collect()
}

fn train_part_ae(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let n = cfg.part_ae.arch.input_points;
    let mut data = Vec::new();
    for i in ds.indices(Split::Train) {
        for part in PartId::ALL {
            let (c, _, empty) = dataset_part_input(&ds, i, part, n, cfg.seed)?;
            if !empty {
                data.push(c);
            }
        }
    }
    let (ae, curve) = train_autoencoder(&data, &cfg.part_ae.arch, &cfg.part_ae.train, LatentSpace::Part)?;
    Checkpoint::from_autoencoder(&ae, &cfg.part_ae.arch, Some(&cfg.part_ae.train), &curve).save(&ws.path(PART_AE))?;
    Ok(vec![PART_AE.into()])
}

pub(crate) fn mean_reconstruction_cd(ae: &AutoEncoder<f64>, clouds: &[PointCloud<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for c in clouds {
        total += chamfer_distance(&ae.reconstruct(c)?, c)?;
    }
    Ok(total / clouds.len().max(1) as f64)
}

fn train_object_ae(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, curve) = train_autoencoder(&unlabeled(&ds, Split::Train), &cfg.object_ae.arch, &cfg.object_ae.train, LatentSpace::Object)?;
    let mut ck = Checkpoint::from_autoencoder(&ae, &cfg.object_ae.arch, Some(&cfg.object_ae.train), &curve);
    ck.metrics.insert("heldout_chamfer".into(), mean_reconstruction_cd(&ae, &unlabeled(&ds, Split::Heldout))?);
    ck.save(&ws.path(OBJECT_AE))?;
    Ok(vec![OBJECT_AE.into()])
}

/// Reconstruction of a labelled cloud, labelled by the nearest original point.
pub(crate) fn labelled_reconstruction(ae: &AutoEncoder<f64>, cloud: &PointCloud<f64>) -> Result<PointCloud<f64>> {
    let labels = cloud.labels().ok_or_else(|| latnav_core::Error::InvalidInput("reconstruction labels need a labelled cloud".into()))?;
    let rec = ae.reconstruct(&cloud.unlabeled())?;
    let index = SpatialIndex::build(cloud);
    let transferred = rec.points().iter().map(|p| labels[index.nearest(p).0]).collect();
    Ok(rec.relabeled(transferred)?)
}

fn mean_accuracy(seg: &Segmenter<f64>, clouds: &[PointCloud<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for c in clouds {
        total += seg.accuracy(c)?;
    }
    Ok(total / clouds.len().max(1) as f64)
}

fn train_seg(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, _) = ws.autoencoder(OBJECT_AE)?;
    let mut data: Vec<PointCloud<f64>> = ds.indices(Split::Train).iter().map(|&i| ds.clouds[i].clone()).collect();
    if cfg.segmenter.reconstructions {
        for i in ds.indices(Split::Train) {
            data.push(labelled_reconstruction(&ae, &ds.clouds[i])?);
        }
    }
    let (seg, curve) = train_segmenter(&data, &cfg.segmenter.arch, &cfg.segmenter.train)?;
    let held: Vec<PointCloud<f64>> = ds.indices(Split::Heldout).iter().map(|&i| ds.clouds[i].clone()).collect();
    let held_rec = held.iter().map(|c| labelled_reconstruction(&ae, c)).collect::<Result<Vec<_>>>()?;
    let mut ck = Checkpoint::from_segmenter(&seg, &cfg.segmenter.arch, Some(&cfg.segmenter.train), &curve);
    ck.metrics.insert("heldout_accuracy".into(), mean_accuracy(&seg, &held)?);
    ck.metrics.insert("heldout_reconstruction_accuracy".into(), mean_accuracy(&seg, &held_rec)?);
    ck.save(&ws.path(SEGMENTER))?;
    Ok(vec![SEGMENTER.into()])
}

fn build_bank(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, _) = ws.autoencoder(PART_AE)?;
    let build = build_part_latent_bank(&ds, &ds.indices(Split::Train), &ae.encoder, cfg.seed);
    ws.write_json(PART_BANK, &build.bank)?;
    ws.write_json("reports/bank_errors.json", &build.errors)?;
    Ok(vec![PART_BANK.into(), "reports/bank_errors.json".into()])
}

fn discover(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let bank = ws.part_bank()?;
    let mut clusters = Vec::new();
    for part in PartId::ALL {
        clusters.extend(discover_part(&bank, part, &ds.manifest, &cfg.clustering)?);
    }
    ws.write_json(CLUSTERS, &clusters)?;
    let rows: Vec<Vec<String>> = clusters
        .iter()
        .map(|c| vec![c.semantic_id(), c.members.len().to_string(), format!("{:.3}", c.size_fraction), format!("{:.3}", c.purity), fmt_opt(c.silhouette)])
        .collect();
    ws.write_text("reports/discover.txt", &render_table(&["cluster", "size", "fraction", "purity", "silhouette"], &rows))?;
    Ok(vec![CLUSTERS.into(), "reports/discover.txt".into()])
}

pub(crate) fn object_latents(ae: &AutoEncoder<f64>, ds: &Dataset, split: Split) -> Result<ObjectLatents> {
    let idx = ds.indices(split);
    let ids = idx.iter().map(|&i| ds.manifest.objects[i].id.clone()).collect();
    let z = idx.iter().map(|&i| ae.encoder.encode(&ds.clouds[i].unlabeled())).collect::<latnav_core::Result<Vec<_>>>()?;
    Ok(ObjectLatents::new(ids, z)?)
}

fn fit_directions(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, hash) = ws.autoencoder(OBJECT_AE)?;
    let clusters = ws.clusters()?;
    let latents = object_latents(&ae, &ds, Split::Train)?;
    let dirs = fit_part_directions(&clusters, &latents, &cfg.svm, cfg.seed)?;
    let bank = DirectionBank::new(OBJECT_SPACE, hash, dirs)?;
    bank.save(&ws.path(DIRECTIONS))?;
    let rows: Vec<Vec<String>> = bank
        .directions
        .iter()
        .map(|d| vec![d.id.clone(), fmt_opt(d.train_acc), fmt_opt(d.heldout_acc), format!("{:.4}", d.dist_std)])
        .collect();
    ws.write_text("reports/directions.txt", &render_table(&["direction", "train acc", "held-out acc", "dist std"], &rows))?;
    Ok(vec![DIRECTIONS.into(), "reports/directions.txt".into()])
}

fn baselines(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, hash) = ws.autoencoder(OBJECT_AE)?;
    let z = object_latents(&ae, &ds, Split::Train)?.vectors();
    let m = cfg.evaluation.baseline_components;
    pca_baseline_directions(&z, m, OBJECT_SPACE, &hash)?.save(&ws.path(PCA_BANK))?;
    closedform_baseline_directions(&ae.decoder, m, &z, OBJECT_SPACE, &hash)?.save(&ws.path(CLOSEDFORM_BANK))?;
    Ok(vec![PCA_BANK.into(), CLOSEDFORM_BANK.into()])
}

/// Attribute a semantic direction stands for: its id without a `-N` duplicate suffix.
pub fn direction_attribute(id: &str) -> String {
    match id.rsplit_once('-') {
        Some((head, tail)) if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => head.to_string(),
        _ => id.to_string(),
    }
}

pub fn classifier_file(attribute: &str, level: ClassifierLevel) -> String {
    let lvl = match level {
        ClassifierLevel::Object => "object",
        ClassifierLevel::Part => "part",
    };
    format!("{CLASSIFIER_DIR}/{}.{lvl}.json", attribute.replace('/', "_"))
}

fn train_cls(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Vec<String>> {
    let ds = ws.dataset()?;
    let (ae, _) = ws.autoencoder(OBJECT_AE)?;
    let (seg, _) = ws.segmenter()?;
    let bank = ws.direction_bank(DIRECTIONS)?;
    let mut attributes: Vec<String> = bank.directions.iter().map(|d| direction_attribute(&d.id)).collect();
    attributes.dedup();
    let idx = ds.indices(Split::Train);
    let mut recs = Vec::with_capacity(idx.len());
    for &i in &idx {
        let r = ae.reconstruct(&ds.clouds[i].unlabeled())?;
        let l = seg.part_labels(&r)?;
        recs.push((r, l));
    }
    let samples: Vec<_> = recs.iter().zip(&idx).map(|((c, l), &i)| (c, l.as_slice(), &ds.manifest.objects[i].attributes)).collect();
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    let mut out = Vec::new();
    for attr in &attributes {
        let part = attribute_part(attr).ok_or_else(|| Error::Workspace(format!("direction {attr} names no part")))?;
        for level in [ClassifierLevel::Object, ClassifierLevel::Part] {
            let sc = train_semantic_classifier(&samples, attr, part, level, &cfg.classifier.arch, &cfg.classifier.train)?;
            let file = classifier_file(attr, level);
            Checkpoint::from_classifier(&sc.model, &cfg.classifier.arch, Some(&cfg.classifier.train), &[]).save(&ws.path(&file))?;
            rows.push(vec![attr.clone(), format!("{level:?}").to_lowercase(), format!("{:.3}", sc.report.train_accuracy), format!("{:.3}", sc.report.heldout_accuracy)]);
            entries.push(ClassifierEntry { attribute: attr.clone(), part, level, file: file.clone(), report: sc.report });
            out.push(file);
        }
    }
    ws.write_json(CLASSIFIER_INDEX, &entries)?;
    ws.write_text("reports/classifiers.txt", &render_table(&["attribute", "level", "train acc", "held-out acc"], &rows))?;
    out.push(CLASSIFIER_INDEX.into());
    out.push("reports/classifiers.txt".into());
    Ok(out)
}
