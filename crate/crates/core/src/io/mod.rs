//! File formats: MPV volumes, CSV tables, PPM/PGM rasters and study
//! manifests.

mod image;
mod manifest;
mod mpv;
mod tables;

pub use image::{decode_ppm, encode_pgm, encode_ppm};
pub use manifest::{
    check_config_ranges, parse_manifest, ChannelSource, StudyManifest, CLUSTER_RANGE, DIM_RANGE,
    H_RANGE, K_RANGE, SIGMA_RANGE,
};
pub use mpv::{read_mpv, read_mpv_file, write_mpv, write_mpv_file, MPV_MAGIC, RAW_SUFFIX};
pub use tables::{
    fmt_f64, read_embedding_csv, read_labelmap_csv, write_clusters_csv, write_embedding_csv,
    write_labelmap_csv, write_labels_csv, write_report_csv,
};
