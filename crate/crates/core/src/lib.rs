//! Decentralized policy-gradient methods for cooperative multi-agent
//! reinforcement learning: the momentum-based tracker MDPGT, its tracker-free
//! variant MDPG, and a plain gossip baseline DPG, together with the
//! environments, policies, estimators and analysis constants they rely on.
//!
//! ```
//! use mdpgt::{parse_config, simulate};
//!
//! let overrides: Vec<(String, String)> = [
//!     ("algo", "mdpgt"), ("env", "lineworld"), ("episodes", "3"),
//!     ("agents", "2"), ("horizon", "5"), ("hidden", "4,4"),
//! ]
//! .iter()
//! .map(|(k, v)| (k.to_string(), v.to_string()))
//! .collect();
//! let cfg = parse_config(None, &overrides).unwrap();
//! let out = simulate(&cfg, 1).unwrap();
//! assert_eq!(out.records.len(), 3);
//! ```

pub mod decentral;
pub mod envsim;
pub mod error;
pub mod gradient;
pub mod harness;
pub mod policy;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod topology;

pub use decentral::{AgentState, Algorithm, OutputIterate, RunOutput, RunRecord, Swarm, TrainConfig};
pub use envsim::{Env, EnvConfig, EnvKind, EnvState, Step, Trajectory};
pub use error::{Error, Result};
pub use gradient::{Estimator, ImportanceWeight, Surrogate};
pub use harness::{execute, parse_config, simulate, sweep, RunConfig, RunSummary};
pub use policy::{Action, LinearGaussianSpec, MlpSpec, Policy, PolicyParams};
pub use theory::{DerivedConstants, ProblemConstants, TheoryReport};
pub use topology::{Graph, MixingMatrix, Topology};
