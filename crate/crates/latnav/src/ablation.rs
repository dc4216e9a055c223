use latnav_core::directions::{fit_part_directions, DirectionBank};
use latnav_core::metrics::{render_table, run_subclass_ablation, ClassifierLevel, SubclassAblation};
use latnav_core::neural::{train_autoencoder, AutoEncoder, Checkpoint, LatentSpace};
use latnav_core::synthgen::{naive_part_mix, Split};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::eval::{heldout_probes, EvalContext, SlsCell};
use crate::stages::{mean_reconstruction_cd, object_latents, unlabeled, OBJECT_SPACE};
use crate::workspace::*;
use crate::Result;

pub const SUBCLASS_JSON: &str = "reports/subclass.json";
pub const PARTMIX_JSON: &str = "reports/partmix.json";
pub const PARTMIX_AE: &str = "checkpoints/object_ae_partmix.json";

fn f3(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3}"))
}

pub fn subclass(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<(SubclassAblation, String)> {
    let ctx = EvalContext::load(ws, cfg)?;
    let latents = object_latents(&ctx.ae, &ctx.dataset, Split::Train)?;
    let object_level: Vec<_> = ctx.classifiers.iter().filter(|c| c.level == ClassifierLevel::Object).cloned().collect();
    let report = run_subclass_ablation(
        &ctx.dataset.manifest,
        &ws.part_bank()?,
        &ws.clusters()?,
        &latents,
        &ctx.bank,
        &ctx.probes,
        &ctx.ae.decoder,
        &ctx.segmenter,
        &object_level,
        &cfg.subclass,
    )?;
    ws.write_json(SUBCLASS_JSON, &report)?;
    let mut text = String::from("Silhouette in the part latent spaces\n");
    let rows: Vec<Vec<String>> = report.silhouettes.iter().map(|s| vec![s.part.to_string(), f3(s.discovered), format!("{:.3}", s.subclass)]).collect();
    text.push_str(&render_table(&["part", "discovered", "subclass"], &rows));
    text.push_str("\nDirections\n");
    let rows: Vec<Vec<String>> = report
        .latnav
        .iter()
        .chain(&report.subclass)
        .map(|d| vec![d.id.clone(), f3(d.heldout_acc), f3(d.sls), format!("{:.3}", d.multi_part_rate)])
        .collect();
    text.push_str(&render_table(&["direction", "held-out acc", "sls", "multi-part rate"], &rows));
    text.push_str(&format!(
        "\nmean sls: latnav {} vs subclass {}\nmulti-part rate: latnav {:.3} vs subclass {:.3}\n",
        f3(report.mean_sls_latnav),
        f3(report.mean_sls_subclass),
        report.multi_part_rate_latnav,
        report.multi_part_rate_subclass
    ));
    ws.write_text("reports/subclass.txt", &text)?;
    Ok((report, text))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSls {
    pub checkpoint_hash: String,
    pub heldout_chamfer: f64,
    pub directions: Vec<(String, SlsCell)>,
    pub mean_sls: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartMixReport {
    pub mixed_count: usize,
    pub real: CheckpointSls,
    pub partmix: CheckpointSls,
    /// Whether training on mixed objects raised the mean SLS.
    pub improved: Option<bool>,
}

fn checkpoint_sls(ws: &WorkspaceLayout, cfg: &PipelineConfig, ctx: &EvalContext, ae: &AutoEncoder<f64>, hash: &str) -> Result<CheckpointSls> {
    let clusters = ws.clusters()?;
    let latents = object_latents(ae, &ctx.dataset, Split::Train)?;
    let bank = DirectionBank::new(OBJECT_SPACE, hash, fit_part_directions(&clusters, &latents, &cfg.svm, cfg.seed)?)?;
    let probes = heldout_probes(&ctx.dataset, ae, &ctx.segmenter)?;
    let mut directions = Vec::new();
    for d in &bank.directions {
        let batch = latnav_core::metrics::EditBatch::build(&probes, d, cfg.partmix.alpha * d.dist_std, cfg.partmix.n_samples, cfg.seed, &ae.decoder, &ctx.segmenter)?;
        let r = latnav_core::metrics::sls_report(&probes, &batch, d.part.expect("part"), &ctx.segmenter_hash)?;
        directions.push((d.id.clone(), SlsCell { part: r.part, mean: r.mean, count: r.count, excluded: r.excluded.len() }));
    }
    let means: Vec<f64> = directions.iter().filter_map(|(_, c)| c.mean).collect();
    Ok(CheckpointSls {
        checkpoint_hash: hash.to_string(),
        heldout_chamfer: mean_reconstruction_cd(ae, &unlabeled(&ctx.dataset, Split::Heldout))?,
        mean_sls: (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64),
        directions,
    })
}

/// Retrains the object autoencoder on real plus naively part-mixed chairs
/// and compares the mean SLS of directions refitted in each latent space.
pub fn partmix(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<(PartMixReport, String)> {
    let ctx = EvalContext::load(ws, cfg)?;
    let train_idx = ctx.dataset.indices(Split::Train);
    let mixed = naive_part_mix(&ctx.dataset, &train_idx, cfg.partmix.mixed_count, cfg.seed)?;
    let mut data = unlabeled(&ctx.dataset, Split::Train);
    data.extend(mixed.iter().map(|m| m.cloud.unlabeled()));
    let (ae, curve) = train_autoencoder(&data, &cfg.object_ae.arch, &cfg.object_ae.train, LatentSpace::Object)?;
    Checkpoint::from_autoencoder(&ae, &cfg.object_ae.arch, Some(&cfg.object_ae.train), &curve).save(&ws.path(PARTMIX_AE))?;
    let mix_hash = file_hash(&ws.path(PARTMIX_AE))?;
    let real = checkpoint_sls(ws, cfg, &ctx, &ctx.ae, &ctx.checkpoint_hash)?;
    let partmix = checkpoint_sls(ws, cfg, &ctx, &ae, &mix_hash)?;
    let improved = match (real.mean_sls, partmix.mean_sls) {
        (Some(a), Some(b)) => Some(b > a),
        _ => None,
    };
    let report = PartMixReport { mixed_count: mixed.len(), real, partmix, improved };
    ws.write_json(PARTMIX_JSON, &report)?;
    let mut rows: Vec<Vec<String>> = report
        .real
        .directions
        .iter()
        .map(|(id, c)| {
            let other = report.partmix.directions.iter().find(|(o, _)| o == id).and_then(|(_, c)| c.mean);
            vec![id.clone(), f3(c.mean), f3(other)]
        })
        .collect();
    rows.push(vec!["average".into(), f3(report.real.mean_sls), f3(report.partmix.mean_sls)]);
    rows.push(vec!["held-out chamfer".into(), format!("{:.5}", report.real.heldout_chamfer), format!("{:.5}", report.partmix.heldout_chamfer)]);
    let mut text = render_table(&["direction", "real", "real + part-mix"], &rows);
    text.push_str(&format!(
        "part-mix training {} the mean SLS\n",
        match report.improved {
            Some(true) => "raised",
            Some(false) => "did not raise",
            None => "left undefined",
        }
    ));
    ws.write_text("reports/partmix.txt", &text)?;
    Ok((report, text))
}
