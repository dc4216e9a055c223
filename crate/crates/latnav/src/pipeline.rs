use std::collections::BTreeMap;
use std::time::Instant;

use crate::config::PipelineConfig;
use crate::stages;
use crate::workspace::{file_hash, sha256_hex, StageRecord, WorkspaceIndex, WorkspaceLayout};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    GenData,
    TrainPartAe,
    TrainObjectAe,
    TrainSeg,
    BuildBank,
    Discover,
    FitDirections,
    Baselines,
    TrainCls,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::GenData,
        Stage::TrainPartAe,
        Stage::TrainObjectAe,
        Stage::TrainSeg,
        Stage::BuildBank,
        Stage::Discover,
        Stage::FitDirections,
        Stage::Baselines,
        Stage::TrainCls,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::TrainPartAe => "train-part-ae",
            Stage::TrainObjectAe => "train-ae",
            Stage::TrainSeg => "train-seg",
            Stage::BuildBank => "build-bank",
            Stage::Discover => "discover",
            Stage::FitDirections => "fit-directions",
            Stage::Baselines => "baselines",
            Stage::TrainCls => "train-cls",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn deps(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            GenData => &[],
            TrainPartAe | TrainObjectAe => &[GenData],
            TrainSeg => &[GenData, TrainObjectAe],
            BuildBank => &[GenData, TrainPartAe],
            Discover => &[GenData, BuildBank],
            FitDirections => &[GenData, TrainObjectAe, Discover],
            Baselines => &[GenData, TrainObjectAe],
            TrainCls => &[GenData, TrainObjectAe, TrainSeg, FitDirections],
            Evaluate => &[GenData, TrainObjectAe, TrainSeg, FitDirections, Baselines, TrainCls],
        }
    }

    /// The configuration sections the stage reads.
    fn settings(self, c: &PipelineConfig) -> String {
        let v = match self {
            Stage::GenData => serde_json::to_value(&c.data),
            Stage::TrainPartAe => serde_json::to_value((&c.part_ae, c.seed)),
            Stage::TrainObjectAe => serde_json::to_value(&c.object_ae),
            Stage::TrainSeg => serde_json::to_value(&c.segmenter),
            Stage::BuildBank => serde_json::to_value(c.seed),
            Stage::Discover => serde_json::to_value(&c.clustering),
            Stage::FitDirections => serde_json::to_value((&c.svm, c.seed)),
            Stage::Baselines => serde_json::to_value(c.evaluation.baseline_components),
            Stage::TrainCls => serde_json::to_value(&c.classifier),
            Stage::Evaluate => serde_json::to_value((&c.evaluation, c.seed)),
        };
        v.expect("config serialises").to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRun {
    pub stage: Stage,
    pub skipped: bool,
    pub seconds: f64,
}

/// Staged runner over a workspace; stages whose key and outputs are unchanged are skipped.
pub struct Pipeline {
    pub layout: WorkspaceLayout,
    pub config: PipelineConfig,
    pub index: WorkspaceIndex,
    pub log: Vec<StageRun>,
    pub quiet: bool,
}

impl Pipeline {
    pub fn open(layout: WorkspaceLayout, config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        layout.create_dirs()?;
        let index = layout.load_index()?;
        Ok(Self { layout, config: config.resolved(), index, log: Vec::new(), quiet: false })
    }

    fn key(&self, stage: Stage) -> Result<String> {
        let mut text = format!("{}\n{}\n", stage.name(), stage.settings(&self.config));
        for d in stage.deps() {
            let r = self.index.stages.get(d.name()).ok_or_else(|| Error::Workspace(format!("{} has not run", d.name())))?;
            text.push_str(&format!("{}\t{}\n", d.name(), r.digest()));
        }
        Ok(sha256_hex(text.as_bytes()))
    }

    fn up_to_date(&self, stage: Stage, key: &str) -> bool {
        self.index.stages.get(stage.name()).is_some_and(|r| {
            r.key == key && r.outputs.iter().all(|(p, h)| file_hash(&self.layout.path(p)).ok().as_deref() == Some(h.as_str()))
        })
    }

    /// Runs `stage` after its dependencies unless it is already up to date.
    pub fn ensure(&mut self, stage: Stage) -> Result<()> {
        self.run(stage, false)
    }

    /// Re-runs `stage` even when up to date; dependencies are only ensured.
    pub fn force(&mut self, stage: Stage) -> Result<()> {
        self.run(stage, true)
    }

    fn run(&mut self, stage: Stage, force: bool) -> Result<()> {
        for &d in stage.deps() {
            self.ensure(d)?;
        }
        let key = self.key(stage)?;
        if !force && self.up_to_date(stage, &key) {
            if !self.log.iter().any(|r| r.stage == stage) {
                self.log.push(StageRun { stage, skipped: true, seconds: 0.0 });
            }
            return Ok(());
        }
        if !self.quiet {
            eprintln!("[{}] running", stage.name());
        }
        let start = Instant::now();
        self.index.stages.remove(stage.name());
        let outputs = stages::execute(stage, &self.layout, &self.config, self.quiet).map_err(|e| match e {
            Error::Core(source) => Error::Stage { stage: stage.name(), source },
            other => other,
        })?;
        let mut hashes = BTreeMap::new();
        for p in outputs {
            let h = file_hash(&self.layout.path(&p))?;
            hashes.insert(p, h);
        }
        self.index.stages.insert(stage.name().to_string(), StageRecord { key, outputs: hashes });
        self.layout.save_index(&mut self.index)?;
        let seconds = start.elapsed().as_secs_f64();
        if !self.quiet {
            eprintln!("[{}] done in {seconds:.1} s", stage.name());
        }
        self.log.push(StageRun { stage, skipped: false, seconds });
        Ok(())
    }

    pub fn run_all(&mut self) -> Result<&WorkspaceIndex> {
        for s in Stage::ALL {
            self.ensure(s)?;
        }
        Ok(&self.index)
    }
}

/// Runs every stage, resuming from whatever is already complete.
pub fn run_pipeline(layout: WorkspaceLayout, config: &PipelineConfig) -> Result<WorkspaceIndex> {
    let mut p = Pipeline::open(layout, config)?;
    p.run_all()?;
    Ok(p.index)
}
