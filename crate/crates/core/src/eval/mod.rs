//! Classification metrics, ROC analysis and report rendering.

mod metrics;
mod render;

pub use metrics::{
    classification_report, confusion, roc_auc, ClassMetrics, ClassReport, ConfusionMatrix,
    RocCurve,
};
pub use render::{
    artifact_path, auc_summary, confusion_csv, confusion_svg, parse_confusion_csv,
    parse_text_report, render_text_report, report_csv, roc_csv, roc_svg, training_curves_svg,
    write_eval_artifacts, EvalArtifacts,
};
