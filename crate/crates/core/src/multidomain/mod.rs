//! Coupling of subdomains: bounding-box trees, grid intersections (glue),
//! coupling stencils and the coupling managers for conforming fractures,
//! embedded root networks and point exchange.

mod bvh;
mod embedded;
mod facet;
mod glue;
mod point;

pub use bvh::BvhTree;
pub use embedded::EmbeddedCoupling;
pub use facet::{FacetCoupling, FractureKind};
pub use glue::{
    clip_segment, coupling_stencils_from_glue, glue, glue_brute_force, glue_meshes,
    CouplingStencils, Glue, Intersection,
};
pub use point::PointSourceCoupling;
