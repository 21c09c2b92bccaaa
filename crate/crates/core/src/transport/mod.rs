//! Transport operators `J`, `S_Omega`, whole-space `S`, the zero extension,
//! the iterates `g_i = (S_Omega K)^i J g` and the change-of-variable checks.

mod boundary;
mod checks;
mod operators;
mod picard;

pub use boundary::{BoundaryData, BoundaryKind, BoundarySpec};
pub use checks::{
    change_of_variable_check, cone_jacobian, sk_square_bound_check, sk_square_theory_constant, ConeReport, CovReport,
    CovVariant, SkSquareReport,
};
pub use operators::{
    apply_j, apply_s_omega, apply_s_wholespace, j_field, sk_field, zero_extension, ChordRule, JField, KField,
    SOmegaField, TransportSetup, WholeSpaceS, ZeroExtension,
};
pub use picard::{
    iterate_field, nested_cost, picard_field, picard_term, truncated_series_solve, SeriesValue, MAX_DEPTH,
};
