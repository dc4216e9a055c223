#![allow(dead_code)]

use latnav::{Pipeline, PipelineConfig, Stage, WorkspaceLayout};

/// A configuration small enough to run every stage in seconds.
pub fn tiny_config() -> PipelineConfig {
    PipelineConfig::from_json(
        r#"{
            "seed": 3,
            "data": {"train_count": 60, "heldout_count": 20, "points": 64, "part_points": 32},
            "part_ae": {
                "arch": {"trunk": {"hidden": [8], "feat": 16}, "latent": 8, "decoder_hidden": [32], "input_points": 32, "output_points": 32},
                "train": {"epochs": 2, "batch_size": 16}
            },
            "object_ae": {
                "arch": {"trunk": {"hidden": [8], "feat": 16}, "latent": 8, "decoder_hidden": [32], "input_points": 64, "output_points": 64},
                "train": {"epochs": 2, "batch_size": 16}
            },
            "segmenter": {"arch": {"trunk": {"hidden": [8], "feat": 16}, "hidden": 16, "parts": 4}, "train": {"epochs": 1, "batch_size": 16}},
            "classifier": {"arch": {"trunk": {"hidden": [8], "feat": 8}}, "train": {"epochs": 1, "batch_size": 16}},
            "clustering": {"min_size": 3},
            "svm": {"epochs": 100},
            "evaluation": {"n_samples": 6, "negative_probes": 4, "baseline_components": 3, "match_probes": 4, "random_directions": 2},
            "subclass": {"n_samples": 6, "min_count": 3},
            "partmix": {"mixed_count": 10, "n_samples": 6}
        }"#,
    )
    .expect("tiny config parses")
}

/// Runs the stages the editing service needs.
pub fn service_workspace(root: &std::path::Path) -> WorkspaceLayout {
    let layout = WorkspaceLayout::new(root);
    let mut p = Pipeline::open(layout.clone(), &tiny_config()).unwrap();
    p.quiet = true;
    p.ensure(Stage::FitDirections).unwrap();
    p.ensure(Stage::TrainSeg).unwrap();
    layout
}
