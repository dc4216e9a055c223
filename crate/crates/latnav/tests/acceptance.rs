//! Acceptance suite: one test per criterion, run on the seeded default
//! workspace (600 training and 150 held-out chairs of 512 points).

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use latnav::ablation;
use latnav::eval::{DirectionEval, EvaluationReport};
use latnav::pipeline::StageRun;
use latnav::workspace::{DIRECTIONS, OBJECT_AE};
use latnav::{Pipeline, PipelineConfig, Stage, WorkspaceLayout};
use latnav_core::directions::{DirectionBank, Provenance, SemanticDirection};
use latnav_core::geometry::{chamfer_distance, PointCloud};
use latnav_core::metrics::{subclass_labels, ClassifierLevel, PartLabeler};
use latnav_core::navigation::{translate_latent, AlphaUnits, EditTerm};
use latnav_core::neural::{finite_diff_check, AeConfig, AutoEncoder, LatentCode, LatentSpace, TrunkConfig};
use latnav_core::semdiscovery::silhouette_score;
use latnav_core::synthgen::{realize_point_cloud, sample_spec, PartId, Split, StyleWeights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DISCRETE_PARTS: [PartId; 2] = [PartId::Legs, PartId::Armrest];

struct Shared {
    layout: WorkspaceLayout,
    config: PipelineConfig,
    index_hash: String,
    log: Vec<StageRun>,
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

fn run_default(name: &str) -> (WorkspaceLayout, Pipeline) {
    let layout = WorkspaceLayout::new(scratch(name));
    let mut p = Pipeline::open(layout.clone(), &PipelineConfig::default()).unwrap();
    p.run_all().unwrap();
    (layout, p)
}

fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| {
        let (layout, p) = run_default("acceptance-workspace");
        Shared { layout, config: p.config.clone(), index_hash: p.index.index_hash.clone(), log: p.log }
    })
}

fn report() -> &'static EvaluationReport {
    static REPORT: OnceLock<EvaluationReport> = OnceLock::new();
    REPORT.get_or_init(|| shared().layout.read_json("reports/evaluation.json").unwrap())
}

fn stage_seconds(stage: Stage) -> f64 {
    shared().log.iter().find(|r| r.stage == stage).map(|r| r.seconds).unwrap()
}

fn part_rate(d: &DirectionEval) -> f64 {
    d.own_scs(ClassifierLevel::Part).map(|c| c.rate).unwrap()
}

fn brute_force_chamfer(a: &PointCloud<f64>, b: &PointCloud<f64>) -> f64 {
    let directed = |x: &PointCloud<f64>, y: &PointCloud<f64>| {
        x.points()
            .iter()
            .map(|p| y.points().iter().map(|q| (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum::<f64>()).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    directed(a, b) + directed(b, a)
}

#[test]
fn criterion_01_indexed_chamfer_matches_brute_force() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cloud = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..=512);
        PointCloud::new((0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()).unwrap()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a, b) = (cloud(&mut rng), cloud(&mut rng));
        let (fast, slow) = (chamfer_distance(&a, &b).unwrap(), brute_force_chamfer(&a, &b));
        worst = worst.max((fast - slow).abs() / slow.abs().max(f64::MIN_POSITIVE));
    }
    let secs = start.elapsed().as_secs_f64();
    eprintln!("criterion 1: max relative difference {worst:.2e} in {secs:.1} s");
    assert!(worst <= 1e-12, "relative difference {worst}");
    assert!(secs < 30.0);
}

#[test]
fn criterion_02_gradients_match_finite_differences() {
    let start = Instant::now();
    let cfg = AeConfig { trunk: TrunkConfig { hidden: vec![8, 16], feat: 16 }, latent: 8, decoder_hidden: vec![16, 24], input_points: 32, output_points: 32 };
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let ae = AutoEncoder::<f64>::new(&cfg, LatentSpace::Object, seed);
        let spec = sample_spec(seed + 10, &StyleWeights::default()).unwrap();
        let c = latnav_core::geometry::resample(&realize_point_cloud(&spec, 128, seed).unwrap(), 32, seed).unwrap().unlabeled();
        let (_, g) = ae.batch_loss_grad(&[&c], None).unwrap();
        worst = worst.max(finite_diff_check(&ae, &g, |m| m.batch_loss_grad(&[&c], None).unwrap().0, 1e-5));
    }
    let secs = start.elapsed().as_secs_f64();
    eprintln!("criterion 2: max relative error {worst:.2e} in {secs:.1} s");
    assert!(worst < 1e-4, "max relative error {worst}");
    assert!(secs < 60.0);
}

#[test]
fn criterion_03_reconstruction() {
    let s = shared();
    let ds = s.layout.dataset().unwrap();
    let (ae, _) = s.layout.autoencoder(OBJECT_AE).unwrap();
    let cds: Vec<f64> = ds
        .indices(Split::Heldout)
        .iter()
        .map(|&i| {
            let c = ds.clouds[i].unlabeled();
            chamfer_distance(&ae.reconstruct(&c).unwrap(), &c).unwrap()
        })
        .collect();
    let mean = cds.iter().sum::<f64>() / cds.len() as f64;
    let below = cds.iter().filter(|&&c| c < 0.01).count() as f64 / cds.len() as f64;
    let secs = stage_seconds(Stage::TrainObjectAe);
    eprintln!("criterion 3: held-out mean chamfer {mean:.5}, {:.1}% below 0.01, trained in {secs:.0} s", 100.0 * below);
    assert_eq!(cds.len(), 150);
    assert!(mean < 0.01);
    assert!(below >= 0.9);
    assert!(secs <= 1200.0);
}

#[test]
fn criterion_04_segmenter_accuracy() {
    let s = shared();
    let ds = s.layout.dataset().unwrap();
    let (seg, _) = s.layout.segmenter().unwrap();
    let (mut correct, mut total) = (0usize, 0usize);
    for i in ds.indices(Split::Heldout) {
        let c = &ds.clouds[i];
        let predicted = seg.part_labels(&c.unlabeled()).unwrap();
        correct += predicted.iter().zip(c.labels().unwrap()).filter(|(a, b)| a == b).count();
        total += predicted.len();
    }
    let acc = correct as f64 / total as f64;
    eprintln!("criterion 4: held-out per-point accuracy {acc:.4}");
    assert!(acc >= 0.92);
}

#[test]
fn criterion_05_discovery_recovers_styles() {
    let s = shared();
    let ds = s.layout.dataset().unwrap();
    let clusters = s.layout.clusters().unwrap();
    let bank = s.layout.part_bank().unwrap();
    for part in DISCRETE_PARTS {
        let own: Vec<_> = clusters.iter().filter(|c| c.part == part).collect();
        let styles: BTreeSet<&str> = ds
            .manifest
            .objects
            .iter()
            .flat_map(|o| o.attributes.iter())
            .filter(|a| a.starts_with(&format!("{part}/")))
            .map(String::as_str)
            .collect();
        let majority: BTreeSet<String> = own.iter().map(|c| c.semantic_id()).collect();
        eprintln!("criterion 5: {part} clusters {majority:?}, purities {:?}", own.iter().map(|c| c.purity).collect::<Vec<_>>());
        assert_eq!(own.len(), styles.len());
        assert_eq!(majority.iter().map(String::as_str).collect::<BTreeSet<_>>(), styles);
        for c in &own {
            let style = c.semantic_id();
            let hits = c.member_indices.iter().filter(|&&i| ds.manifest.objects[i].attributes.contains(&style)).count();
            assert!(hits as f64 / c.members.len() as f64 >= 0.8, "{style} purity");
        }
    }
    for part in PartId::ALL {
        let entries = bank.for_part(part);
        let idx: Vec<usize> = entries.iter().map(|e| e.object_index).collect();
        let names = subclass_labels(&ds.manifest, &idx);
        let ids: Vec<&String> = names.iter().collect::<BTreeSet<_>>().into_iter().collect();
        let labels: Vec<usize> = names.iter().map(|n| ids.iter().position(|k| *k == n).unwrap()).collect();
        let points: Vec<Vec<f64>> = entries.iter().map(|e| e.latent.values.clone()).collect();
        let proxy = silhouette_score(&points, &labels).unwrap();
        let discovered = clusters.iter().find(|c| c.part == part).and_then(|c| c.silhouette).unwrap();
        eprintln!("criterion 5: {part} silhouette discovered {discovered:.3} vs subclass proxy {proxy:.3}");
        assert!(discovered > 0.0 && discovered > proxy);
    }
}

#[test]
fn criterion_06_svm_accuracy_for_discrete_styles() {
    let bank = shared().layout.direction_bank(DIRECTIONS).unwrap();
    let discrete: Vec<&SemanticDirection> = bank.directions.iter().filter(|d| d.part.is_some_and(|p| DISCRETE_PARTS.contains(&p))).collect();
    for d in &discrete {
        eprintln!("criterion 6: {} held-out accuracy {:.3}", d.id, d.heldout_acc.unwrap());
    }
    assert_eq!(discrete.len(), 6);
    assert!(discrete.iter().all(|d| d.heldout_acc.unwrap() >= 0.9));
}

#[test]
fn criterion_07_localization() {
    let r = report();
    let sls = |p: PartId| r.parts.iter().find(|s| s.part == p).and_then(|s| s.sls).unwrap();
    let (legs, armrest, backrest, seat) = (sls(PartId::Legs), sls(PartId::Armrest), sls(PartId::Backrest), sls(PartId::Seat));
    let secs = stage_seconds(Stage::Evaluate);
    eprintln!("criterion 7: SLS legs {legs:.3} armrest {armrest:.3} backrest {backrest:.3} seat {seat:.3}; evaluation {secs:.0} s");
    assert_eq!(r.n_samples, 200);
    assert_eq!(r.alpha, 2.0);
    assert!(legs > 1.5 && armrest > 1.5 && backrest > 1.0 && seat < legs);
    assert!(secs < 600.0);
}

#[test]
fn criterion_08_beats_baselines() {
    let r = report();
    let latnav = r.mean_sls.unwrap();
    for b in &r.baselines {
        let base = b.mean_sls.unwrap();
        let cells: Vec<(f64, f64)> = b
            .matches
            .iter()
            .map(|m| {
                let own = r.directions.iter().find(|d| d.attribute == m.attribute).map(part_rate).unwrap();
                let theirs = m.scs.iter().find(|c| c.level == ClassifierLevel::Part).unwrap().rate;
                (own, theirs)
            })
            .collect();
        let wins = cells.iter().filter(|(a, b)| a >= b).count();
        eprintln!("criterion 8: mean SLS {latnav:.3} vs {} {base:.3}; part-level SCS at least as high on {wins}/{}", b.kind, cells.len());
        assert!(latnav >= base);
        assert!(3 * wins >= 2 * cells.len());
    }
    assert_eq!(r.baselines.len(), 2);
}

#[test]
fn criterion_09_consistency() {
    let r = report();
    let rates: Vec<f64> = r.directions.iter().map(part_rate).collect();
    let good = rates.iter().filter(|&&x| x >= 0.7).count();
    eprintln!("criterion 9: part-level SCS >= 0.7 for {good}/{} directions", rates.len());
    assert!(3 * good >= 2 * rates.len());
    for d in &r.directions {
        for other in d.cross.iter().filter(|c| c.level == ClassifierLevel::Part) {
            eprintln!("criterion 9: edit {} rate {:.3}, under {} {:.3}", d.attribute, part_rate(d), other.attribute, other.rate);
            assert!(other.rate < part_rate(d), "{} vs {}", d.attribute, other.attribute);
        }
    }
}

#[test]
fn criterion_10_negative_attribute() {
    let s = shared();
    let r = report();
    let d = r.directions.iter().find(|d| d.attribute == "armrest/connected").unwrap();
    let cell = d.negative.iter().find(|c| c.level == ClassifierLevel::Part).unwrap();
    eprintln!("criterion 10: armrest/connected rate {:.3} at +2 vs {:.3} at -2", cell.rate_plus, cell.rate_minus);
    assert_eq!(s.config.evaluation.negative_probes, 100);
    assert!(cell.rate_plus - cell.rate_minus >= 0.3);
}

#[test]
fn criterion_11_translation_algebra() {
    let dim = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dirs = (0..4)
        .map(|i| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            SemanticDirection {
                id: format!("legs/s{i}"),
                part: Some(PartId::Legs),
                semantic: format!("s{i}"),
                normal: v.iter().map(|x| x / n).collect(),
                bias: rng.random_range(-1.0..1.0),
                train_acc: None,
                heldout_acc: None,
                dist_std: rng.random_range(0.1..2.0),
                provenance: Provenance::LatNav,
                eigenvalue: None,
            }
        })
        .collect();
    let bank = DirectionBank::new("object", "hash", dirs).unwrap();
    let close = |a: &LatentCode<f64>, b: &LatentCode<f64>| a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= 1e-12);
    for _ in 0..1000 {
        let z = LatentCode::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect(), LatentSpace::Object);
        let units = if rng.random_bool(0.5) { AlphaUnits::DistStd } else { AlphaUnits::Absolute };
        let term = |rng: &mut ChaCha8Rng| EditTerm::new(format!("legs/s{}", rng.random_range(0..4)), rng.random_range(-4.0..4.0), units);

        let zero: Vec<EditTerm> = (0..3).map(|_| EditTerm { alpha: 0.0, ..term(&mut rng) }).collect();
        let same = translate_latent(&z, &zero, &bank).unwrap();
        assert!(same.values.iter().zip(&z.values).all(|(a, b)| a.to_bits() == b.to_bits()));

        let (t1, t2) = (term(&mut rng), term(&mut rng));
        let both = translate_latent(&z, &[t1.clone(), t2.clone()], &bank).unwrap();
        let chained = translate_latent(&translate_latent(&z, std::slice::from_ref(&t1), &bank).unwrap(), std::slice::from_ref(&t2), &bank).unwrap();
        let swapped = translate_latent(&z, &[t2.clone(), t1.clone()], &bank).unwrap();
        assert!(close(&both, &chained));
        assert!(close(&both, &swapped));

        let split = rng.random_range(-4.0..4.0);
        let halves = [EditTerm { alpha: split, ..t1.clone() }, EditTerm { alpha: t1.alpha - split, ..t1.clone() }];
        assert!(close(&translate_latent(&z, &halves, &bank).unwrap(), &translate_latent(&z, std::slice::from_ref(&t1), &bank).unwrap()));
    }
    eprintln!("criterion 11: 1000 cases hold");
}

#[test]
fn criterion_12_contrasting_armrests_are_most_opposed() {
    let c = &report().cosine;
    let (a, b, v) = c.most_negative.clone().unwrap();
    eprintln!("criterion 12: most negative pair {a} vs {b} ({v:.3})");
    let pair: BTreeSet<String> = [a, b].into_iter().collect();
    assert_eq!(pair, ["armrest/connected".to_string(), "armrest/none".to_string()].into_iter().collect());
}

#[test]
fn criterion_13_partmix_ablation_runs() {
    let s = shared();
    let (r, _) = ablation::partmix(&s.layout, &s.config).unwrap();
    let (real, mixed) = (r.real.mean_sls.unwrap(), r.partmix.mean_sls.unwrap());
    eprintln!("criterion 13: mean SLS real {real:.3}, real + part-mix {mixed:.3}");
    assert!(real.is_finite() && mixed.is_finite());
    assert_eq!(r.improved, Some(mixed > real));
    assert!(s.layout.path(ablation::PARTMIX_JSON).is_file());
}

#[test]
fn criterion_14_seeded_pipeline_is_deterministic() {
    let first = shared().index_hash.clone();
    let (_, p) = run_default("acceptance-workspace-rerun");
    eprintln!("criterion 14: index hashes {first} and {}", p.index.index_hash);
    assert_eq!(first, p.index.index_hash);
}
