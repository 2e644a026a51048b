//! Strategic-sensor decisions: rank test, Gramian test, closed-form loci,
//! collar crossing check and location scans.

mod crossing;
mod gramian;
mod locus;
mod rank;
mod scan;

pub use crossing::{
    boundary_completeness, collar_completeness, crossing_check, Collar, CompletenessDiagnostic,
    CrossingReport,
};
pub use gramian::{gramian, positive_definite_test, GramianSummary, ObservabilityGramian, DEFAULT_PD_TOL};
pub use locus::{locus_check, LocusReport, LocusRule};
pub use rank::{assemble_all, rank_test, GMatrix, GroupDiagnostic, StrategicVerdict, DEFAULT_RANK_TOL};
pub use scan::{
    interior_grid, interior_point_grid, relocate, scan_locations, ScanLocation, ScanOutcome,
    ScanRecord,
};
