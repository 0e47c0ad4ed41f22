//! Equilibrium existence for two-good exchange economies in which one agent
//! has a utility that is neither quasiconcave nor quasiconvex.

pub mod demand;
pub mod model;
pub mod special;
pub mod equilibrium;
pub mod oracle;
pub mod cli;
