//! Certified Lipschitz bounds for feed-forward ReLU networks.
//!
//! Computes upper bounds — and, on convergence, the exact value — of the
//! local or global Lipschitz constant of a ReLU network under any of the
//! 1, 2, ∞, or Frobenius operator norms. The method is branch and bound
//! over activation patterns: every linear region of the network has a
//! Jacobian whose norm the engine bounds from above with interval
//! arithmetic, then tightens by splitting undecided neurons until upper and
//! lower bounds meet (or an approximation factor, iteration cap, or time
//! budget is reached first). Bounds are valid at every intermediate step.
//!
//! ```
//! use lipcert::{certify, BabConfig, Interval, Network, NormKind};
//!
//! // f(x) = relu(x): slope 0 on the left, 1 on the right.
//! let net = Network::from_json_str(
//!     r#"{"layers":[{"weights":[[1.0]],"bias":[0.0]},
//!                   {"weights":[[1.0]],"bias":[0.0]}]}"#,
//! )?;
//! let cfg = BabConfig { norm: NormKind::Two, ..BabConfig::default() };
//! let result = certify(&net, &[Interval::new(-1.0, 1.0)], &cfg)?;
//! assert_eq!(result.gub, 1.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The `guide` directory of the repository walks through each layer of the
//! machinery; [`oracle`] holds the brute-force enumeration used to validate
//! results on small networks.

pub mod affine;
pub mod bab;
pub mod feasibility;
pub mod interval;
pub mod matrix;
pub mod network;
pub mod norm;
pub mod oracle;
pub mod report;
mod simplex;
pub mod subproblem;
pub mod symprop;

pub use affine::{AffineForm, VarBounds, VarId};
pub use bab::{certify, BabConfig, BabError, BabResult, BabStatus, TraceRow};
pub use feasibility::{feasible, fix_decided_states, Feasibility, FeasibilityConfig, Witness};
pub use interval::{Interval, NUM_TOL};
pub use matrix::{mul_real_interval, IntervalMatrix, RealMatrix};
pub use network::{ActivationPattern, Network, NetworkError, NeuronState};
pub use norm::{op_norm, op_norm_seeded, NormError, NormKind};
pub use oracle::{enumerate_regions, sample_lower_bound, RegionCatalog};
pub use report::Report;
pub use subproblem::{ConstraintSet, HalfSpace, Mode, Sense, SubProblem};
pub use symprop::{naive_ibp, sym_prop, IbpBounds, SymPropResult};
