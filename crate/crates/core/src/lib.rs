//! Monte-Carlo comparison of qualification formats for the champions of
//! lower-ranked football associations.
//!
//! [`data`] loads the five-season sample, [`bracket`] plays one iteration of a
//! format, [`mc`] repeats it under common random numbers, and [`analysis`]
//! turns the tallies into probabilities and comparisons.

pub mod analysis;
pub mod bracket;
pub mod data;
pub mod elo;
pub mod mc;
pub mod model;
