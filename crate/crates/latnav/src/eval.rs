use std::collections::HashMap;

use latnav_core::directions::{cosine_similarity_matrix, match_baselines_to_semantics, random_directions, DirectionBank, SemanticDirection};
use latnav_core::metrics::{render_table, scs_report, sls_report, ClassifierLevel, EditBatch, ProbeSet, SemanticClassifier};
use latnav_core::neural::{AutoEncoder, Segmenter};
use latnav_core::synthgen::{Dataset, PartId, Split};
use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, PipelineConfig};
use crate::stages::{direction_attribute, object_latents, OBJECT_SPACE};
use crate::workspace::*;
use crate::{Error, Result};

pub const EVALUATION_JSON: &str = "reports/evaluation.json";
pub const EVALUATION_TXT: &str = "reports/evaluation.txt";

/// Everything the evaluations read, loaded once.
pub struct EvalContext {
    pub dataset: Dataset,
    pub ae: AutoEncoder<f64>,
    pub checkpoint_hash: String,
    pub segmenter: Segmenter<f64>,
    pub segmenter_hash: String,
    pub bank: DirectionBank,
    pub classifiers: Vec<SemanticClassifier>,
    pub probes: ProbeSet,
    pub config: EvalConfig,
    pub seed: u64,
}

impl EvalContext {
    pub fn load(ws: &WorkspaceLayout, cfg: &PipelineConfig) -> Result<Self> {
        let dataset = ws.dataset()?;
        let (bank, ae, checkpoint_hash) = ws.checked_direction_bank(DIRECTIONS)?;
        let (segmenter, segmenter_hash) = ws.segmenter()?;
        let classifiers = if ws.path(CLASSIFIER_INDEX).exists() { ws.classifiers()? } else { Vec::new() };
        let probes = heldout_probes(&dataset, &ae, &segmenter)?;
        Ok(Self { dataset, ae, checkpoint_hash, segmenter, segmenter_hash, bank, classifiers, probes, config: cfg.evaluation.clone(), seed: cfg.seed })
    }

    pub fn classifier(&self, attribute: &str, level: ClassifierLevel) -> Option<&SemanticClassifier> {
        self.classifiers.iter().find(|c| c.attribute == attribute && c.level == level)
    }

    pub fn batch(&self, d: &SemanticDirection, alpha_std: f64, n: usize) -> Result<EditBatch> {
        Ok(EditBatch::build(&self.probes, d, alpha_std * d.dist_std, n, self.seed, &self.ae.decoder, &self.segmenter)?)
    }

    pub fn sls(&self, batch: &EditBatch, part: PartId) -> Result<SlsCell> {
        let r = sls_report(&self.probes, batch, part, &self.segmenter_hash)?;
        Ok(SlsCell { part, mean: r.mean, count: r.count, excluded: r.excluded.len() })
    }

    pub fn scs(&self, batch: &EditBatch, attribute: &str, level: ClassifierLevel) -> Result<Option<ScsCell>> {
        let Some(c) = self.classifier(attribute, level) else { return Ok(None) };
        let r = scs_report(batch, c)?;
        Ok(Some(ScsCell { attribute: attribute.to_string(), level, rate: r.rate, mean_probability: r.mean_probability }))
    }
}

pub fn heldout_probes(ds: &Dataset, ae: &AutoEncoder<f64>, seg: &Segmenter<f64>) -> Result<ProbeSet> {
    let idx = ds.indices(Split::Heldout);
    let ids = idx.iter().map(|&i| ds.manifest.objects[i].id.clone()).collect();
    let clouds: Vec<_> = idx.iter().map(|&i| ds.clouds[i].unlabeled()).collect();
    Ok(ProbeSet::build(ids, &clouds, ae, seg)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlsCell {
    pub part: PartId,
    pub mean: Option<f64>,
    pub count: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScsCell {
    pub attribute: String,
    pub level: ClassifierLevel,
    pub rate: f64,
    pub mean_probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeCell {
    pub level: ClassifierLevel,
    pub rate_plus: f64,
    pub rate_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionEval {
    pub id: String,
    pub part: PartId,
    pub attribute: String,
    pub heldout_acc: Option<f64>,
    pub dist_std: f64,
    /// Edit length in latent units.
    pub alpha: f64,
    pub sls: SlsCell,
    pub scs: Vec<ScsCell>,
    /// Classifiers of the other semantics of the same part, on the same edits.
    pub cross: Vec<ScsCell>,
    pub negative: Vec<NegativeCell>,
}

impl DirectionEval {
    pub fn own_scs(&self, level: ClassifierLevel) -> Option<&ScsCell> {
        self.scs.iter().find(|c| c.level == level)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineCell {
    pub semantic: String,
    pub attribute: String,
    pub part: PartId,
    pub component: String,
    pub sign: i8,
    pub match_score: f64,
    pub sls: SlsCell,
    pub scs: Vec<ScsCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineEval {
    pub kind: String,
    pub matches: Vec<BaselineCell>,
    pub mean_sls: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomEval {
    pub id: String,
    pub sls: Vec<SlsCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineReport {
    pub ids: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Most negative off-diagonal entry.
    pub most_negative: Option<(String, String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSls {
    pub part: PartId,
    /// Mean over the part's directions.
    pub sls: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub checkpoint_hash: String,
    pub segmenter_hash: String,
    /// Edit length in units of each direction's signed-distance deviation.
    pub alpha: f64,
    pub n_samples: usize,
    pub directions: Vec<DirectionEval>,
    pub parts: Vec<PartSls>,
    pub mean_sls: Option<f64>,
    pub baselines: Vec<BaselineEval>,
    pub random: Vec<RandomEval>,
    pub cosine: CosineReport,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

const LEVELS: [ClassifierLevel; 2] = [ClassifierLevel::Object, ClassifierLevel::Part];

pub fn eval_directions(ctx: &EvalContext) -> Result<Vec<DirectionEval>> {
    let cfg = &ctx.config;
    let mut out = Vec::new();
    for d in &ctx.bank.directions {
        let part = d.part.ok_or_else(|| Error::Workspace(format!("direction {} has no part", d.id)))?;
        let attribute = direction_attribute(&d.id);
        let batch = ctx.batch(d, cfg.alpha, cfg.n_samples)?;
        let mut scs = Vec::new();
        let mut cross = Vec::new();
        for level in LEVELS {
            scs.extend(ctx.scs(&batch, &attribute, level)?);
            for other in ctx.bank.directions.iter().filter(|o| o.part == d.part && o.id != d.id) {
                cross.extend(ctx.scs(&batch, &direction_attribute(&other.id), level)?);
            }
        }
        let k = cfg.negative_probes.min(batch.len());
        let plus = EditBatch { draws: batch.draws[..k].to_vec(), clouds: batch.clouds[..k].to_vec(), labels: batch.labels[..k].to_vec(), ..batch.clone() };
        let minus = ctx.batch(d, -cfg.alpha, k)?;
        let mut negative = Vec::new();
        for level in LEVELS {
            if let (Some(p), Some(m)) = (ctx.scs(&plus, &attribute, level)?, ctx.scs(&minus, &attribute, level)?) {
                negative.push(NegativeCell { level, rate_plus: p.rate, rate_minus: m.rate });
            }
        }
        out.push(DirectionEval {
            id: d.id.clone(),
            part,
            attribute,
            heldout_acc: d.heldout_acc,
            dist_std: d.dist_std,
            alpha: cfg.alpha * d.dist_std,
            sls: ctx.sls(&batch, part)?,
            scs,
            cross,
            negative,
        });
    }
    Ok(out)
}

pub fn part_sls(directions: &[DirectionEval]) -> Vec<PartSls> {
    PartId::ALL
        .iter()
        .map(|&part| PartSls { part, sls: mean(directions.iter().filter(|d| d.part == part).filter_map(|d| d.sls.mean)) })
        .collect()
}

/// Matches each semantic to the baseline component and sign whose edits its
/// part-level classifier accepts most often, then scores the match like a
/// discovered direction.
pub fn eval_baseline(ctx: &EvalContext, kind: &str, baseline: &DirectionBank) -> Result<BaselineEval> {
    let cfg = &ctx.config;
    let semantics: Vec<String> = ctx.bank.directions.iter().map(|d| d.id.clone()).collect();
    let mut cache: HashMap<(String, bool), EditBatch> = HashMap::new();
    let matches = match_baselines_to_semantics(baseline, &semantics, |sem, oriented| {
        let key = (oriented.id.clone(), baseline.get(&oriented.id).is_ok_and(|b| b.normal == oriented.normal));
        if !cache.contains_key(&key) {
            let b = ctx.batch(oriented, cfg.alpha, cfg.match_probes).map_err(to_core)?;
            cache.insert(key.clone(), b);
        }
        let attr = direction_attribute(sem);
        let cell = ctx.scs(&cache[&key], &attr, ClassifierLevel::Part).map_err(to_core)?;
        Ok(cell.map_or(0.0, |c| c.rate + 1e-3 * c.mean_probability))
    })?;
    let mut cells = Vec::new();
    for sem in &semantics {
        let m = &matches[sem];
        let d = &baseline.directions[m.index];
        let oriented = if m.sign > 0 { d.clone() } else { d.flipped() };
        let part = ctx.bank.get(sem)?.part.expect("discovered directions have a part");
        let attribute = direction_attribute(sem);
        let batch = ctx.batch(&oriented, cfg.alpha, cfg.n_samples)?;
        let mut scs = Vec::new();
        for level in LEVELS {
            scs.extend(ctx.scs(&batch, &attribute, level)?);
        }
        cells.push(BaselineCell {
            semantic: sem.clone(),
            attribute,
            part,
            component: m.direction_id.clone(),
            sign: m.sign,
            match_score: m.score,
            sls: ctx.sls(&batch, part)?,
            scs,
        });
    }
    let mean_sls = mean(cells.iter().filter_map(|c| c.sls.mean));
    Ok(BaselineEval { kind: kind.to_string(), matches: cells, mean_sls })
}

fn to_core(e: Error) -> latnav_core::Error {
    match e {
        Error::Core(c) => c,
        other => latnav_core::Error::InvalidInput(other.to_string()),
    }
}

pub fn eval_random(ctx: &EvalContext) -> Result<Vec<RandomEval>> {
    let cfg = &ctx.config;
    if cfg.random_directions == 0 {
        return Ok(Vec::new());
    }
    let z = object_latents(&ctx.ae, &ctx.dataset, Split::Train)?.vectors();
    let bank = random_directions(&z, cfg.random_directions, ctx.seed, OBJECT_SPACE, &ctx.checkpoint_hash)?;
    let mut out = Vec::new();
    for d in &bank.directions {
        let batch = ctx.batch(d, cfg.alpha, cfg.n_samples)?;
        let sls = PartId::ALL.iter().map(|&p| ctx.sls(&batch, p)).collect::<Result<_>>()?;
        out.push(RandomEval { id: d.id.clone(), sls });
    }
    Ok(out)
}

pub fn cosine_report(bank: &DirectionBank) -> Result<CosineReport> {
    let matrix = cosine_similarity_matrix(bank)?;
    let ids: Vec<String> = bank.directions.iter().map(|d| d.id.clone()).collect();
    let mut most_negative: Option<(String, String, f64)> = None;
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if most_negative.as_ref().is_none_or(|m| matrix[i][j] < m.2) {
                most_negative = Some((ids[i].clone(), ids[j].clone(), matrix[i][j]));
            }
        }
    }
    Ok(CosineReport { ids, matrix, most_negative })
}

fn f3(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3}"))
}

pub fn sls_table(report: &EvaluationReport) -> String {
    let base = |kind: &str, part: PartId| {
        report.baselines.iter().find(|b| b.kind == kind).and_then(|b| mean(b.matches.iter().filter(|c| c.part == part).filter_map(|c| c.sls.mean)))
    };
    let mut rows: Vec<Vec<String>> = report.parts.iter().map(|p| vec![p.part.to_string(), f3(p.sls), f3(base("pca", p.part)), f3(base("closedform", p.part))]).collect();
    let bm = |kind: &str| report.baselines.iter().find(|b| b.kind == kind).and_then(|b| b.mean_sls);
    rows.push(vec!["average".into(), f3(report.mean_sls), f3(bm("pca")), f3(bm("closedform"))]);
    render_table(&["part", "latnav", "pca", "closedform"], &rows)
}

pub fn scs_table(report: &EvaluationReport, level: ClassifierLevel) -> String {
    let rows: Vec<Vec<String>> = report
        .directions
        .iter()
        .map(|d| {
            let base = |kind: &str| {
                report
                    .baselines
                    .iter()
                    .find(|b| b.kind == kind)
                    .and_then(|b| b.matches.iter().find(|c| c.semantic == d.id))
                    .and_then(|c| c.scs.iter().find(|s| s.level == level))
                    .map(|s| s.rate)
            };
            vec![d.id.clone(), f3(d.own_scs(level).map(|s| s.rate)), f3(base("pca")), f3(base("closedform"))]
        })
        .collect();
    render_table(&["semantic", "latnav", "pca", "closedform"], &rows)
}

pub fn render_report(report: &EvaluationReport) -> String {
    let mut out = format!("alpha = {} x dist std, {} probes\n\nSLS by part\n", report.alpha, report.n_samples);
    out.push_str(&sls_table(report));
    out.push_str("\nSCS, part level\n");
    out.push_str(&scs_table(report, ClassifierLevel::Part));
    out.push_str("\nSCS, object level\n");
    out.push_str(&scs_table(report, ClassifierLevel::Object));
    let rows: Vec<Vec<String>> = report
        .directions
        .iter()
        .flat_map(|d| {
            d.cross.iter().map(move |c| {
                let own = d.own_scs(c.level).map(|s| s.rate);
                vec![d.id.clone(), c.attribute.clone(), format!("{:?}", c.level).to_lowercase(), f3(own), format!("{:.3}", c.rate)]
            })
        })
        .collect();
    out.push_str("\nCross-semantic control\n");
    out.push_str(&render_table(&["edit", "classifier", "level", "own rate", "other rate"], &rows));
    let rows: Vec<Vec<String>> = report
        .directions
        .iter()
        .flat_map(|d| d.negative.iter().map(move |n| vec![d.id.clone(), format!("{:?}", n.level).to_lowercase(), format!("{:.3}", n.rate_plus), format!("{:.3}", n.rate_minus)]))
        .collect();
    out.push_str("\nPositive vs negative edits\n");
    out.push_str(&render_table(&["direction", "level", "+alpha", "-alpha"], &rows));
    if !report.random.is_empty() {
        let rows: Vec<Vec<String>> = report.random.iter().map(|r| std::iter::once(r.id.clone()).chain(r.sls.iter().map(|c| f3(c.mean))).collect()).collect();
        out.push_str("\nRandom directions, SLS by part\n");
        out.push_str(&render_table(&["direction", "backrest", "seat", "legs", "armrest"], &rows));
    }
    out.push_str("\nCosine similarity\n");
    out.push_str(&cosine_table(&report.cosine));
    out
}

pub fn cosine_table(c: &CosineReport) -> String {
    let headers: Vec<&str> = std::iter::once("").chain(c.ids.iter().map(String::as_str)).collect();
    let rows: Vec<Vec<String>> = c.ids.iter().zip(&c.matrix).map(|(id, r)| std::iter::once(id.clone()).chain(r.iter().map(|v| format!("{v:+.2}"))).collect()).collect();
    let mut out = render_table(&headers, &rows);
    if let Some((a, b, v)) = &c.most_negative {
        out.push_str(&format!("most negative: {a} vs {b} ({v:+.3})\n"));
    }
    out
}

pub fn evaluate(ws: &WorkspaceLayout, cfg: &PipelineConfig, quiet: bool) -> Result<Vec<String>> {
    let ctx = EvalContext::load(ws, cfg)?;
    let log = |m: &str| {
        if !quiet {
            eprintln!("[evaluate] {m}");
        }
    };
    log("discovered directions");
    let directions = eval_directions(&ctx)?;
    let mut baselines = Vec::new();
    for (kind, rel) in [("pca", PCA_BANK), ("closedform", CLOSEDFORM_BANK)] {
        log(kind);
        baselines.push(eval_baseline(&ctx, kind, &ws.direction_bank(rel)?)?);
    }
    log("random directions");
    let random = eval_random(&ctx)?;
    let report = EvaluationReport {
        checkpoint_hash: ctx.checkpoint_hash.clone(),
        segmenter_hash: ctx.segmenter_hash.clone(),
        alpha: ctx.config.alpha,
        n_samples: ctx.config.n_samples,
        parts: part_sls(&directions),
        mean_sls: mean(directions.iter().filter_map(|d| d.sls.mean)),
        directions,
        baselines,
        random,
        cosine: cosine_report(&ctx.bank)?,
    };
    ws.write_json(EVALUATION_JSON, &report)?;
    ws.write_text(EVALUATION_TXT, &render_report(&report))?;
    Ok(vec![EVALUATION_JSON.into(), EVALUATION_TXT.into()])
}
