//! Decoy-state analysis for measurement-device-independent QKD with three
//! source intensities per party, none of which needs to be vacuum.
//!
//! The pipeline runs observed gains and error rates through [`bounds`] to
//! obtain a lower bound on the single-photon-pair yield and an upper bound
//! on its error rate, and from there to a secure key rate in [`key_rate`].
//! [`channel`] produces synthetic observations from a simple detection
//! model, [`oracle`] cross-checks everything against brute-force forward
//! sums, and [`scenario`] drives the loss sweeps behind the CLI.

pub mod bounds;
pub mod channel;
pub mod error;
pub mod key_rate;
pub mod lp;
pub mod oracle;
pub mod scenario;
pub mod search;
pub mod source;
pub mod table;

pub use bounds::{
    bound_e11, bound_y11_14, bound_y11_three_eq, full_report, reduce, report_for_basis, Basis, BasisReports,
    BoundReport, Equation, EquationSelector, ObservedStatistics, ReducedSystem, Variant,
};

pub use error::{Error, Result};

pub use channel::{observe, true_yields, ChannelParams, YieldTable};
pub use key_rate::{
    binary_entropy, key_rate, key_rate_for, optimize_signal_intensity, KeyRateResult, LinkSetup, OptimizationResult,
    RateMethod, SignalSearch,
};
pub use oracle::{check_instance, run_suite, SuiteConfig, SuiteReport, SyntheticInstance, VerificationReport};
pub use scenario::{run_optimize, run_sweep, Scenario};
pub use source::{ConditionVerdict, HRatioTable, Member, PhotonDistribution, SourceFamily, SourceTriple};
pub use table::PhotonTable;
