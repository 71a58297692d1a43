pub mod collapse;
pub mod format;
pub mod gauge_algebra;
pub mod quantum_grid;
pub mod seed;
pub mod ym_lattice;
pub mod experiments;
pub mod config;
pub mod runner;
