//! Fixtures shared by the criterion benchmarks.

pub use cultdyn;

use cultdyn::generators::path;
use cultdyn::{MassVector, ModelParams, TypeGraph, Variant};

/// The 3-path at alpha = 2 from (2/5, 1/5, 2/5).
pub fn three_path_start(variant: Variant) -> (TypeGraph, MassVector, ModelParams) {
    (
        path(3).expect("3-path").with_variant(variant),
        MassVector::new(vec![0.4, 0.2, 0.4]).expect("valid masses"),
        ModelParams::with_alpha(2.0).expect("valid alpha"),
    )
}
