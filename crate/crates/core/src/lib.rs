//! Supercritical bond percolation on boxes of `Z^d`: sampling, clusters,
//! effective resistances and flow certificates, random-walk cover times,
//! Gaussian free fields and renormalized crossing grids.

pub mod cluster;
pub mod config;
pub mod crossings;
pub mod electrical;
pub mod error;
pub mod experiments;
pub mod gff;
pub mod lattice;
pub mod linalg;
pub mod network;
pub mod par;
pub mod renorm;
pub mod rng;
pub mod special;
pub mod walks;

pub use cluster::{check_giant_event, chemical_distance, largest_cluster, Cluster, GiantEvent};
pub use config::{sample_configuration, BondConfiguration};
pub use error::{Error, Result};
pub use lattice::{format_point, parse_point, Lattice, LatticeSpec, Point};
pub use network::Network;
pub use special::{special_vertex_census, SpecialVertexReport};
