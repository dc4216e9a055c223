//! Evaluation: semantic localisation (SLS), semantic consistency (SCS), and
//! the subclass-proxy ablation, with plain-text table rendering.

mod ablation;
mod probes;
mod scs;
mod sls;
mod table;

pub use ablation::{multi_part_change_rate, run_subclass_ablation, subclass_labels, SubclassAblation, SubclassConfig, SubclassDirection};
pub use probes::{probe_order, EditBatch, GroundTruth, PartLabeler, ProbeSet};
pub use scs::{classifier_input, scs, scs_report, train_semantic_classifier, ClassifierLevel, ScsReport, SemanticClassifier};
pub use sls::{sls_expectation, sls_from_labels, sls_report, sls_single, Excluded, SlsOutcome, SlsReport, DENOMINATOR_FLOOR};
pub use table::render_table;
