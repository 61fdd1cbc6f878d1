//! Chronology-ordered simulation of two-party Bell experiments.
//!
//! A Bell test is simulated on one classical machine by drawing outcomes from
//! a pre-generated file of uniform reals. The party treated as measuring
//! first samples from its Born marginal; the second party samples from the
//! collapsed state. Swapping the order (the chronology) leaves every joint
//! distribution unchanged but changes which outcome pair a given pair of
//! random words produces.
//!
//! Modules:
//!
//! * [`quantum`]: exact two-qubit states, spin projectors, collapse and CHSH.
//! * [`lambda`]: the persistent random-word file and block-split streams.
//! * [`chronology`]: first/second-party samplers, trial runs, covariance checks.
//! * [`nogo`]: strategy quadruples, reduction to local models, the local
//!   polytope (vertex enumeration, dense simplex membership, CHSH facets) and
//!   the exhaustive finite-alphabet search.
//! * [`flash`]: a toy spontaneous-localization process on a periodic grid.
//! * [`report`]: canonical text serialization shared by the command line tool.

#![allow(clippy::needless_range_loop)]

pub mod chronology;
pub mod error;
pub mod flash;
pub mod lambda;
pub mod nogo;
pub mod quantum;
pub mod report;

pub use num_complex;

pub use chronology::{Chronology, CovarianceReport, TrialResult};
pub use error::{Error, Result};
pub use flash::{FlashHistory, FlashRecord, GridWavefunction, HitKernel};
pub use lambda::{LambdaFile, LambdaSource, LambdaStream};
pub use nogo::{BehaviorVector, LocalModel, StrategyQuadruple};
pub use quantum::{BlochSetting, CorrelationTable, JointDistribution, Outcome, Party, TwoQubitState};

/// Number of worker threads used by the Monte Carlo drivers.
///
/// Results never depend on this value; it only controls scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Default for Workers {
    fn default() -> Self {
        Workers(1)
    }
}

impl Workers {
    pub(crate) fn run<T: Send>(self, f: impl FnOnce() -> T + Send) -> T {
        if self.0 <= 1 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.0).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
}
