//! d-tolerant compressed sensing.
//!
//! Sensing matrices whose neighbouring columns are strongly correlated
//! (partial Fourier matrices with consecutive rows, for instance) cannot
//! resolve a spike to its exact index, but they can localise it to within `d`
//! positions. This crate measures that trade-off and recovers signals under it:
//!
//! * [`matrices`]: the partially coherent and incoherent matrix families.
//! * [`coherence`]: coherence, d-coherence, cumulative d-coherence, and the
//!   checks for the tolerant recovery guarantees.
//! * [`metrics`]: d-closures and the tolerant measures `rho_d`, `rho_2`.
//! * [`signals`]: seeded sparse signals and SNR-scaled noise.
//! * [`recovery`]: DtOMP, OMP and the grid-coarsening baselines.
//! * [`harness`]: seeded Monte-Carlo sweeps with CSV output.
//!
//! Column and support indices in the public API are 1-based.

pub mod coherence;
pub mod error;
pub mod harness;
pub mod matrices;
pub mod metrics;
pub mod recovery;
pub mod seeding;
pub mod signals;

pub use coherence::{
    check_theorem2, check_trc_bruteforce, coherence, cumulative_d_coherence, d_coherence, welch_bound,
    CorrelationTable, GuaranteeReport,
};
pub use error::{Error, Result};
pub use matrices::{build, MatrixKind, MatrixSpec, SensingMatrix, C64};
pub use metrics::{d_closure, rho_2, rho_d, SupportSet};
pub use recovery::{dtomp, omp, RecoveryResult};
pub use signals::{generate_signal, measure, NoiseSpec, SparseSignal};
