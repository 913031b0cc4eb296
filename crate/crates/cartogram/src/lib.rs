//! Circular-arc cartograms: bend the edges of a planar polygonal map into
//! circular arcs (vertices stay fixed) so that face areas approach given
//! targets. Area is routed between neighboring faces with a max-flow model
//! whose capacities come from per-face straight skeletons.

pub mod bend;
pub mod cli;
pub mod flow;
pub mod geometry;
pub mod hardness;
pub mod io;
pub mod metrics;
pub mod skeleton;
pub mod subdivision;
