//! Fractional Sobolev norms: Monte Carlo Slobodeckij seminorms, the spectral
//! norm on a periodic box, and the regularity sweep over Picard terms.

mod fourier;
mod multiplier;
mod slobodeckij;
mod sweep;

pub use fourier::{fourier_fractional_norm, FourierNorm, ALIAS_THRESHOLD};
pub use multiplier::{multiplier_constant, multiplier_decay_check, multiplier_integral, MultiplierReport};
pub use slobodeckij::{
    extrapolate_subfloor, extrapolate_subfloor_resolved, slobodeckij_multi, slobodeckij_seminorm, SeminormEstimate, SeminormOptions, SeminormRegion,
    VelocityMeasure,
};
pub use sweep::{
    bump_family, equivalence_ratio, regularity_sweep, smooth_bump, EquivalenceReport, SweepPlan, SweepRow, SweepTerm,
};
