//! Closed-form curvature of warped and doubly warped products.

pub mod frame;
pub mod function;
pub mod oracle;
pub mod product;

pub use frame::{combine, convex_weights, curvature_terms, doubly_warped_K, single_warp_K, DoublyWarpedFrame};
pub use function::WarpFunction;
pub use product::{
    assemble_doubly_warped, assemble_rescaled, assemble_warped, warped_curvature_images, DoublyWarped,
    tagged_to_chart, FactorCurvature, TaggedVector, TwoFormImage, TwoFormType,
};
pub use oracle::{oracle_check, OracleReport, OracleSample};
