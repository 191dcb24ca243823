//! Detection of row and column block boundaries in noisy block-wise
//! constant matrices.
//!
//! An `n × n` observation `Y` is modelled as `U + E` with `U` constant on the
//! rectangles of an unknown grid. Writing `vec(U) = X β` with
//! `X = T ⊗ T` (`T` the lower-triangular all-ones matrix) turns boundary
//! detection into a LASSO problem whose nonzero coefficients mark the grid
//! corners. [`lars_path`] traces its solution path without ever forming
//! `X`, and [`stability_scores`] with [`select_changepoints`] turn resampled
//! fits into a final segmentation.
//!
//! ```
//! use blockseg::{extract_changepoints, generate, lars_path, LarsConfig, Scenario};
//!
//! let data = generate(&Scenario::new(1, 20, 0.0, 7)).unwrap();
//! let path = lars_path(&data.y, &LarsConfig::new(25)).unwrap();
//! assert_eq!(extract_changepoints(&path.last().active), data.truth);
//! ```

pub mod cholesky;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod gram;
pub mod io;
pub mod lars;
pub mod linops;
pub mod metrics;
pub mod oracle;
pub mod simgen;
pub mod stability;

pub use cholesky::CholeskyFactor;
pub use error::{Error, Result};
pub use gram::{gram_entry, gram_submatrix, ActiveSet, GramMatrix};
pub use lars::{
    extract_changepoints, fitted_means, kkt_violation, lars_path, Axis, Breakpoint,
    ChangePointSet, LarsConfig, PathRecord,
};
pub use linops::{apply_design, apply_design_transpose, unvec, vec, FlatVector, ObservationMatrix};
pub use metrics::{hausdorff_parts, roc_from_path, HausdorffParts, RocCurve};
pub use oracle::{lasso_oracle, materialize_design, DenseDesign};
pub use simgen::{generate, generate_checkerboard_k, GeneratedDataset, Scenario};
pub use stability::{
    reconstruct_u, select_changepoints, stability_scores, SelectionConfig, StabilityScores,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
    #[doc = include_str!("../../../book/src/path.md")]
    mod path {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
