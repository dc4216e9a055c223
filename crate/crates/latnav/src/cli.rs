use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use latnav_core::geometry::io::write_cloud;
use latnav_core::geometry::PointCloud;
use latnav_core::metrics::{render_table, ClassifierLevel};
use latnav_core::navigation::{sweep, AlphaUnits, EditTerm, ReferenceSet};
use latnav_core::neural::LatentCode;
use latnav_core::synthgen::{PartId, Split};

use crate::ablation;
use crate::eval::{cosine_report, cosine_table, scs_table, sls_table, EvaluationReport};
use crate::pipeline::{Pipeline, Stage};
use crate::service::{EditRequest, EditService};
use crate::stages::object_latents;
use crate::workspace::{WorkspaceLayout, DIRECTIONS};
use crate::{Error, PipelineConfig, Result};

pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Parser)]
#[command(name = "latnav", version, about = "Part-level semantic editing of point cloud latent spaces")]
pub struct Cli {
    /// Workspace root.
    #[arg(long, global = true, env = "LATNAV_WORKSPACE", default_value = "workspace")]
    pub workspace: PathBuf,
    /// Pipeline configuration; defaults to `<workspace>/config.json` when present.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    /// Re-run the stage even when its outputs are up to date.
    #[arg(long)]
    pub force: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Space {
    Part,
    Object,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Part,
    Object,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic chair dataset.
    GenData {
        #[arg(long, default_value = "chair")]
        class: String,
        /// Training objects.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Train the part and/or object autoencoder.
    TrainAe {
        #[arg(long, value_enum, default_value = "object")]
        space: Space,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Train the part segmenter.
    TrainSeg(StageArgs),
    /// Train the semantic classifiers.
    TrainCls(StageArgs),
    /// Encode every part into the part latent bank.
    BuildBank(StageArgs),
    /// Cluster the part latent bank into semantics.
    Discover {
        /// Only print clusters of this part.
        #[arg(long, value_parser = parse_part)]
        part: Option<PartId>,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Fit semantic directions in the object latent space.
    FitDirections(StageArgs),
    /// Build the PCA and closed-form baseline banks.
    Baselines(StageArgs),
    /// Edit one object along semantic directions.
    Edit {
        #[arg(long)]
        object: String,
        /// `part/semantic:alpha`, alpha in dist-std units; repeatable.
        #[arg(long = "term")]
        terms: Vec<EditTerm>,
        /// Output cloud (.ply or .xyz).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode an object along one direction at several alphas.
    Sweep {
        #[arg(long)]
        object: String,
        #[arg(long)]
        direction: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-6,-4,-2,0,2,4,6")]
        alphas: Vec<f64>,
        /// Directory for one `.ply` per alpha.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Semantic localization scores; a single edit when `--object` is given.
    EvalSls {
        #[arg(long, requires = "direction")]
        object: Option<String>,
        #[arg(long)]
        direction: Option<String>,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        alpha: f64,
    },
    /// Semantic consistency scores.
    EvalScs {
        #[arg(long, value_enum, default_value = "both")]
        level: Level,
    },
    /// Compare discovered semantics with object-level subclass labels.
    AblateSubclass,
    /// Retrain the object autoencoder with part-mixed chairs and compare SLS.
    AblatePartmix,
    /// Cosine similarity between semantic directions.
    AnalyzeCosine,
    /// Run every stage, skipping those already up to date.
    Pipeline,
    /// Serve the editing API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

impl Cli {
    pub fn load_config(&self) -> Result<PipelineConfig> {
        let default_path = self.workspace.join(CONFIG_FILE);
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None if default_path.is_file() => PipelineConfig::load(&default_path)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn pipeline(&self) -> Result<Pipeline> {
        Pipeline::open(WorkspaceLayout::new(&self.workspace), &self.load_config()?)
    }

    fn layout(&self) -> WorkspaceLayout {
        WorkspaceLayout::new(&self.workspace)
    }
}

fn parse_part(s: &str) -> std::result::Result<PartId, String> {
    PartId::ALL.into_iter().find(|p| p.to_string().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown part {s:?}"))
}

fn stage(p: &mut Pipeline, s: Stage, force: bool) -> Result<()> {
    if force { p.force(s) } else { p.ensure(s) }
}

fn print_report(ws: &WorkspaceLayout, rel: &str) -> Result<()> {
    print!("{}", std::fs::read_to_string(ws.path(rel))?);
    Ok(())
}

fn write_out(path: &Path, cloud: &PointCloud<f64>) -> Result<()> {
    write_cloud(path, cloud)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    latnav_core::parallel::set_threads(cli.threads);
    let ws = cli.layout();
    match &cli.command {
        Command::GenData { class, count, points, stage: s } => {
            if class != "chair" {
                return Err(Error::Usage(format!("unsupported class {class:?}; only chair is generated")));
            }
            let mut cfg = cli.load_config()?;
            if let Some(c) = count {
                cfg.data.train_count = *c;
            }
            if let Some(p) = points {
                cfg.data.points = *p;
            }
            let mut p = Pipeline::open(ws.clone(), &cfg)?;
            if count.is_some() || points.is_some() {
                std::fs::write(ws.path(CONFIG_FILE), cfg.to_json())?;
            }
            stage(&mut p, Stage::GenData, s.force)?;
            println!("{} objects in {}", cfg.data.train_count + cfg.data.heldout_count, ws.path("data").display());
        }
        Command::TrainAe { space, stage: s } => {
            let mut p = cli.pipeline()?;
            if matches!(space, Space::Part | Space::Both) {
                stage(&mut p, Stage::TrainPartAe, s.force)?;
            }
            if matches!(space, Space::Object | Space::Both) {
                stage(&mut p, Stage::TrainObjectAe, s.force)?;
            }
        }
        Command::TrainSeg(s) => stage(&mut cli.pipeline()?, Stage::TrainSeg, s.force)?,
        Command::TrainCls(s) => {
            stage(&mut cli.pipeline()?, Stage::TrainCls, s.force)?;
            print_report(&ws, "reports/classifiers.txt")?;
        }
        Command::BuildBank(s) => stage(&mut cli.pipeline()?, Stage::BuildBank, s.force)?,
        Command::Discover { part, stage: s } => {
            stage(&mut cli.pipeline()?, Stage::Discover, s.force)?;
            match part {
                None => print_report(&ws, "reports/discover.txt")?,
                Some(part) => {
                    let rows: Vec<Vec<String>> = ws
                        .clusters()?
                        .iter()
                        .filter(|c| c.part == *part)
                        .map(|c| vec![c.semantic_id(), c.members.len().to_string(), format!("{:.3}", c.purity)])
                        .collect();
                    print!("{}", render_table(&["cluster", "size", "purity"], &rows));
                }
            }
        }
        Command::FitDirections(s) => {
            stage(&mut cli.pipeline()?, Stage::FitDirections, s.force)?;
            print_report(&ws, "reports/directions.txt")?;
        }
        Command::Baselines(s) => stage(&mut cli.pipeline()?, Stage::Baselines, s.force)?,
        Command::Edit { object, terms, out } => {
            let svc = EditService::load(&ws)?;
            let r = svc.edit(&EditRequest { object_id: Some(object.clone()), latent: None, terms: terms.clone(), checkpoint_hash: None })?;
            if let Some(path) = out {
                let cloud = PointCloud::with_labels(PointCloud::from_flat(&r.edited)?.points().to_vec(), r.edited_labels.clone())?;
                write_out(path, &cloud)?;
            }
            let summary = serde_json::json!({
                "object_id": r.object_id,
                "checkpoint_hash": r.checkpoint_hash,
                "applied_alphas": r.applied_alphas,
                "diagnostics": r.diagnostics,
                "sls": r.sls,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Sweep { object, direction, alphas, out_dir } => {
            let svc = EditService::load(&ws)?;
            let z: LatentCode<f64> = svc.ae.encoder.encode(&svc.object(object)?.unlabeled())?;
            let train = object_latents(&svc.ae, &svc.dataset, Split::Train)?;
            let refs = ReferenceSet::new(
                train.vectors(),
                train.vectors().iter().map(|v| svc.ae.decoder.decode(&LatentCode::new(v.clone(), z.space))).collect::<latnav_core::Result<_>>()?,
            )?;
            let steps = sweep(&z, direction, alphas, AlphaUnits::DistStd, &svc.ae, &svc.bank, &refs)?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                for s in &steps {
                    write_out(&dir.join(format!("{}_{:+.2}.ply", direction.replace('/', "_"), s.alpha)), &s.cloud)?;
                }
            }
            let rows: Vec<Vec<String>> = steps
                .iter()
                .map(|s| {
                    vec![
                        format!("{:+.2}", s.alpha),
                        format!("{:+.4}", s.absolute_alpha),
                        format!("{:+.4}", s.signed_distance),
                        format!("{:.4}", s.latent_norm),
                        s.quality.map_or("-".into(), |q| format!("{q:.5}")),
                    ]
                })
                .collect();
            print!("{}", render_table(&["alpha", "absolute", "distance", "norm", "quality"], &rows));
        }
        Command::EvalSls { object, direction, alpha } => match (object, direction) {
            (Some(object), Some(direction)) => {
                let svc = EditService::load(&ws)?;
                let d = svc.bank.get(direction)?;
                let r = svc.edit(&EditRequest {
                    object_id: Some(object.clone()),
                    latent: None,
                    terms: vec![EditTerm::new(direction.clone(), *alpha, AlphaUnits::DistStd)],
                    checkpoint_hash: None,
                })?;
                let part = d.part.ok_or_else(|| Error::Usage(format!("{direction} is not tied to a part")))?;
                match r.sls[&part] {
                    Some(v) => println!("{v:.6}"),
                    None => println!("undefined"),
                }
            }
            (None, None) => {
                let mut p = cli.pipeline()?;
                p.ensure(Stage::Evaluate)?;
                let report: EvaluationReport = ws.read_json("reports/evaluation.json")?;
                print!("{}", sls_table(&report));
            }
            _ => return Err(Error::Usage("--direction needs --object".into())),
        },
        Command::EvalScs { level } => {
            let mut p = cli.pipeline()?;
            p.ensure(Stage::Evaluate)?;
            let report: EvaluationReport = ws.read_json("reports/evaluation.json")?;
            if matches!(level, Level::Part | Level::Both) {
                print!("{}", scs_table(&report, ClassifierLevel::Part));
            }
            if matches!(level, Level::Object | Level::Both) {
                print!("{}", scs_table(&report, ClassifierLevel::Object));
            }
        }
        Command::AblateSubclass => {
            let mut p = cli.pipeline()?;
            p.ensure(Stage::TrainCls)?;
            p.ensure(Stage::BuildBank)?;
            let (_, text) = ablation::subclass(&ws, &p.config)?;
            print!("{text}");
        }
        Command::AblatePartmix => {
            let mut p = cli.pipeline()?;
            p.ensure(Stage::TrainCls)?;
            let (_, text) = ablation::partmix(&ws, &p.config)?;
            print!("{text}");
        }
        Command::AnalyzeCosine => {
            let mut p = cli.pipeline()?;
            p.ensure(Stage::FitDirections)?;
            print!("{}", cosine_table(&cosine_report(&ws.direction_bank(DIRECTIONS)?)?));
        }
        Command::Pipeline => {
            let mut p = cli.pipeline()?;
            p.run_all()?;
            let rows: Vec<Vec<String>> = p
                .log
                .iter()
                .map(|r| vec![r.stage.name().to_string(), if r.skipped { "skipped".into() } else { "ran".into() }, format!("{:.1}", r.seconds)])
                .collect();
            print!("{}", render_table(&["stage", "status", "seconds"], &rows));
            println!("index hash {}", p.index.index_hash);
        }
        Command::Serve { addr } => {
            let svc = EditService::load(&ws)?;
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::server::serve(svc, addr))?;
        }
    }
    Ok(())
}
