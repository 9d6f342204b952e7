//! Gaussian states in the mean/covariance representation (hbar = 1, vacuum
//! variance 1/2), symplectic maps, and homodyne measurement with Gaussian
//! conditioning.

mod homodyne;
mod state;
mod symplectic;

pub use homodyne::{homodyne_measure, reduce_angle, HomodyneOutcome};
pub use state::{
    db_to_variance, symplectic_form, variance_to_db, GaussianState, MIN_VARIANCE, SHOT_NOISE,
};
pub use symplectic::SymplecticTransform;
