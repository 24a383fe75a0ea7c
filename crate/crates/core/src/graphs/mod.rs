pub mod ball;
pub mod canon;
pub mod coord;
pub mod family;

pub use ball::{ball, ball_with_limit, balls_isomorphic, growth_upper, root_neighbor_classes, root_stabilizer_orbits, matching_radius, rooted_certificate, rw_return_probability, Ball};
pub use canon::{CanonicalCert, ColoredGraph};
pub use coord::{EdgeId, VertexCoord};
pub use family::{GraphFamilySpec, GraphHandle};
