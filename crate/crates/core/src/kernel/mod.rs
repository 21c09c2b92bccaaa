//! Collision frequency, the Caflisch-envelope kernel, velocity quadrature
//! and kernel moment estimates.

mod model;
mod moments;
mod velocity;

pub use model::{CollisionModel, DECAY_RATE};
pub use moments::{
    apply_k, caflisch_integral, inverse_square_moment, kernel_moment, kernel_tail_fraction, schur_test,
    MomentEstimate, MomentRule, SchurReport, TAIL_TOL,
};
pub use velocity::{VelocityNode, VelocityQuadrature, VelocityScheme};
