pub mod analysis;
pub mod cli;
pub mod error;
pub mod filter;
pub mod io;
pub mod kinematics;
mod linalg;
pub mod sampling;
pub mod series;
pub mod stats;
pub mod synth;
