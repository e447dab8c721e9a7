//! Absolutely continuous spectrum diagnostics for random Schrödinger
//! operators on regular rooted trees and their quantum-graph analogues.

pub mod error;
pub mod green;
pub mod pool;
pub mod qgraph;
pub mod resolvent;
pub mod sampler;
pub mod scattering;
pub mod sparse;
pub mod spectral;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use green::{free_fixed_point, EtaLadder, GammaField, GammaValue, SpectralPoint};
pub use pool::{run_pool, GammaPool, PoolParams, PoolRun};
pub use tree::{
    build_instance, Correlation, DisorderFamily, DisorderSpec, PotentialSpec, TreeInstance, TreeTopology, VertexId,
};
