//! Joint slice-to-service mapping, energy-efficient power allocation and VNF
//! placement for the downlink of a sliced ORAN system, with brute-force
//! reference solvers for small instances.

// `!(x >= 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod feasibility;
pub mod io;
pub mod oracle;
pub mod placement;
pub mod power;
pub mod queueing;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod slicing;
#[doc(hidden)]
pub mod testkit;

pub use error::{Error, Result};
pub use placement::{Placement, PlacementWeights};
pub use power::{solve_joint, JointSolution, PowerOptions};
pub use radio::{Beamformers, ChannelSet, MappingAs, PowerAllocation, Radio};
pub use scenario::{generate_scenario, validate, GeneratorConfig, Resources, Scenario, SystemParams};
pub use slicing::{map_slices_to_services, RankingWeights};
