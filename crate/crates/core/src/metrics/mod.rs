//! Evaluation: detection mAP by face size, segmentation IoU / iIoU /
//! relative IoU change, and embedding distances.

mod ap;
mod embedding;
mod seg;

pub use ap::{
    coco_iou_thresholds, evaluate_detection, image_set_difference, match_and_ap, DetEvalReport,
    REPORT_SCHEMA_VERSION,
};
pub use embedding::{
    embedding_l2, face_distances, histogram, EmbeddingDistanceRecord, Histogram, HistogramBin,
};
pub use seg::{
    class_of, compute_avg_instance_size, compute_iiou, compute_iou, delta_iou_rel,
    evaluate_segmentation, instance_of, pixel_counts, weighted_counts, ClassRaster, ClassSegResult,
    InstanceRaster, PixelCounts, SegEvalReport, WeightedCounts, INSTANCE_ID_BASE,
};
