//! Channel-coefficients canceller: per-chain, per-carrier inner weights feed
//! a basis-function bank whose outer gains are fitted by least squares, and
//! the inner weights adapt by stochastic gradient steps between LS refreshes.

pub mod basis;
pub mod coeffs;
pub mod filter;
pub mod ls;
pub mod refs;
pub mod run;
pub mod sgd;

pub use basis::{build_bf_matrix, BasisSet, BfTerm};
pub use coeffs::{combine, ChannelCoeffs};
pub use ls::ls_fit;
pub use refs::{build_cc_references, rx_at_rate, CcReferences};
pub use run::{cancel, cancel_chain, prepare, CancelMetrics, CancelOutput, CancellerConfig, ChainMetrics, ChainResult, ConvergenceLog, LogEntry};
pub use sgd::{sgd_update, BlockProblem};
