//! Excursion statistics of simple random walks on the integers, the layer
//! model of diagonal lamplighter products built on top of them, and the
//! Monte Carlo harness that compares distance bounds with their scaling
//! functions.

pub mod config;
pub mod distance;
pub mod excursion;
pub mod layers;
pub mod lil;
pub mod rng;
pub mod sites;
pub mod stats;
pub mod tracker;
pub mod verify;
pub mod walk;

pub use excursion::{Cap, Completion, ExcursionTally, InducedWalk};
pub use layers::{LayerParams, LayerValue, SpeedFunction};
pub use walk::Trajectory;

/// `ln ln n`, the iterated logarithm used by every threshold in the crate.
/// Only meaningful for `n > e`; callers guard with `n >= 16`.
#[inline]
pub fn loglog(n: f64) -> f64 {
    n.ln().ln()
}
