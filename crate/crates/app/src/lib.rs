//! Command line and HTTP front ends over the `mirrormatch` library.

pub mod cli;
pub mod data;
pub mod pipeline;
pub mod service;
