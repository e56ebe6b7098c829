//! Semiclassical scar wavefunctions on unstable periodic orbits of a magnetic
//! strip resonator, with an exact quantum reference solver.

pub mod analysis;
pub mod benchmark;
pub mod classical;
pub mod exactqm;
pub mod model;
pub mod numerics;
pub mod semiclassics;
pub mod specfun;
pub mod variation;
