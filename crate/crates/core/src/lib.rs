//! Inert-investor market simulation: semi-Markov agent moods, fractional
//! Brownian motion, the feedback and no-feedback price models with their
//! fluid and fluctuation limits, and the estimators used to check them.

pub mod error;
pub mod fractional;
pub mod market;
pub mod rng;
pub mod semi_markov;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use rng::{stream, substream, SimRng};
pub use semi_markov::{SemiMarkovSpec, SojournLaw};
pub use series::{GridSeries, SeriesRole};
