//! Decentralized fixed-mode analysis for partitioned LTI systems.
//!
//! The pipeline mirrors how the crate is meant to be used:
//!
//! 1. [`model`] loads and validates a station-partitioned `(A, B, C, D)`.
//! 2. [`spectral`] catalogs the modes and decouples a chosen mode.
//! 3. [`fixedmode`] tests for exact decentralized fixed modes and computes the
//!    condition-number measure that flags approximate ones.
//! 4. [`rdfm`] perturbs an approximate fixed mode into an exact one.
//! 5. [`overlap`] expands overlapping feedback patterns, finds the minimal
//!    link sets that free a fixed mode and ranks the candidates by measure.

pub mod error;
pub mod fixedmode;
pub mod linalg;
pub mod model;
pub mod overlap;
pub(crate) mod par;
pub mod rdfm;
pub(crate) mod serde_ext;
pub mod spectral;

pub use error::{Error, Result};
pub use fixedmode::{
    adfm_measure, build_w, classify_modes, dfm_test, m_matrix, random_feedback_oracle, Bipartition, MMatrix,
    MeasureOptions, MeasureResult, OracleConfig, OracleVerdict,
};
pub use model::{central_check, SystemModel};
pub use overlap::{
    combine_sets, expand_structure, measure_under_pattern, minimal_removal_sets, rank_patterns,
    structured_fixed_test, ExpandedSystem, FixedTestOptions, InteractionPattern, RankedSelection, RemovalSets,
};
pub use rdfm::{
    candidate_bipartitions, epsilon_scan, make_rdfm, make_rdfm_all, make_rdfm_default, verify_rdfm, PerturbationRecord,
    PerturbedSystem, RdfmVerification,
};
pub use spectral::{canonicalize, modes, CanonicalSystem, Mode};

pub use num_complex::Complex64;

/// Compact complex rendering: `3`, `-0.2+3.1i`, `2i`.
pub fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
