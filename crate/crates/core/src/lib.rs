//! Simulation and stability analysis of an Endex calcium-looping reactor:
//! a carboniser that chemisorbs CO2 onto lime, thermally coupled to a calciner
//! that regenerates the sorbent, both treated as well-stirred segments.

pub mod model;
pub mod numerics;
pub mod continuation;
pub mod scenarios;
pub mod cli;
