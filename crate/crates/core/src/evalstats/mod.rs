//! Correlation and regression, partition agreement, the synthetic stroke
//! phantom and the bundled lesion-area tables.

mod agreement;
mod phantom;
mod stats;
mod tables;

pub use agreement::{adjusted_rand_index, dice};
pub use phantom::{
    generate_phantom, synthesize_dwi_series, synthesize_t2_series, Phantom, PhantomRegion,
    PhantomSpec, Shape, TissueValues, AT_RISK_TISSUE, DWI_B_VALUES, INFARCTED_TISSUE,
    NORMAL_TISSUE, T2_ECHO_TIMES,
};
pub use stats::{
    average_ranks, correlation, linear_regression, Correlation, CorrelationMethod, PairedSamples,
    Regression,
};
pub use tables::{
    table_correlations, LesionRow, LesionTable, AREA_COLUMNS, TABLE1_CSV, TABLE2_CSV,
};

use crate::pipeline::{LabelMap, TissueClass};

/// Dice of one tissue class between two label maps of the same grid.
pub fn class_dice(a: &LabelMap, b: &LabelMap, class: TissueClass) -> f64 {
    dice(&a.class_mask(class), &b.class_mask(class))
}
