//! Runtime monitoring of ReLU neural control barrier functions on linear
//! control-affine systems.
//!
//! The monitor builds a short-horizon reachability cone from each observed
//! state and, when the cone meets the unsafe set, verifies the barrier
//! conditions on the linear regions (activation-pattern cubes) of the network
//! that lie on its zero level set.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod dynamics;
pub mod geometry;
pub mod harness;
pub mod monitor;
pub mod relu_network;
pub mod synthetic;
pub mod verifier;

pub use cone::{calibrate_bloat, construct_cone, Cone, ConeResult};
pub use dynamics::{cwh_system, LinearAffineSystem, SystemSpec};
pub use geometry::{AffineForm, Halfspace, IntervalBox, Polytope};
pub use monitor::{monitor_init, Cause, Monitor, MonitorConfig, Verdict};
pub use relu_network::{load_network, ActivationPattern, ReluNetwork};
pub use verifier::{CubeVerifier, QuantifierMode, VerifierConfig};
pub use synthetic::{make_synthetic_cbf, SyntheticKind, SyntheticParams};
