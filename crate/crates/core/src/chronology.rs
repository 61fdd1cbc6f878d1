//! Frame-dependent samplers and the trials built from them.
//!
//! In chronology AB Alice is treated as measuring first: her outcome is a
//! function of her setting and the first λ word, Bob's outcome a function of
//! both settings, Alice's outcome and the second λ word. Chronology BA swaps
//! the roles. Both samplers use the inverse-CDF rule with `+` before `-`.
//!
//! Exact joint distributions agree across chronologies; the outcome pair a
//! fixed `(λ1, λ2)` produces does not.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::LambdaStream;
use crate::quantum::{
    born_marginal, collapse, BlochSetting, CorrelationTable, JointDistribution, Outcome, Party, TwoQubitState,
    EXACT_TOL,
};
use crate::Workers;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Chronology {
    /// Alice first.
    AB,
    /// Bob first.
    BA,
}

impl Chronology {
    pub const BOTH: [Chronology; 2] = [Chronology::AB, Chronology::BA];
}

impl fmt::Display for Chronology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Chronology::AB => "ab",
            Chronology::BA => "ba",
        })
    }
}

impl FromStr for Chronology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ab" => Ok(Chronology::AB),
            "ba" => Ok(Chronology::BA),
            other => Err(Error::Parameter(format!("unknown chronology '{other}'"))),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaDomain(lambda))
    }
}

/// Outcome of the chronologically first measurement: `+` iff
/// `λ1 < P(+)`.
pub fn sample_first(state: &TwoQubitState, setting: &BlochSetting, lambda: f64) -> Result<Outcome> {
    check_lambda(lambda)?;
    let p_plus = born_marginal(state, setting, Outcome::Plus)?;
    Ok(Outcome::from_sign(lambda < p_plus))
}

/// Outcome of the second measurement, drawn from the state collapsed by the
/// first.
pub fn sample_second(
    state: &TwoQubitState,
    first_setting: &BlochSetting,
    first_outcome: Outcome,
    second_setting: &BlochSetting,
    lambda: f64,
) -> Result<Outcome> {
    check_lambda(lambda)?;
    let post = collapse(state, first_setting, first_outcome)?;
    sample_first(&post, second_setting, lambda)
}

/// One simulated run of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub chronology: Chronology,
    pub a: BlochSetting,
    pub b: BlochSetting,
    pub alpha: Outcome,
    pub beta: Outcome,
    /// `[λ1, λ2]`; λ1 always drives the first party in this chronology.
    pub lambdas: [f64; 2],
    pub index: u64,
}

impl TrialResult {
    pub fn outcomes(&self) -> (Outcome, Outcome) {
        (self.alpha, self.beta)
    }
}

/// Outcome pair for explicit λ values, without touching a stream.
pub fn outcomes_for(
    state: &TwoQubitState,
    a: &BlochSetting,
    b: &BlochSetting,
    chronology: Chronology,
    lambdas: [f64; 2],
) -> Result<(Outcome, Outcome)> {
    if a.party() != Party::A || b.party() != Party::B {
        return Err(Error::InvalidSetting("expected an A setting and a B setting".into()));
    }
    Ok(match chronology {
        Chronology::AB => {
            let alpha = sample_first(state, a, lambdas[0])?;
            (alpha, sample_second(state, a, alpha, b, lambdas[1])?)
        }
        Chronology::BA => {
            let beta = sample_first(state, b, lambdas[0])?;
            (sample_second(state, b, beta, a, lambdas[1])?, beta)
        }
    })
}

/// Reads two values from `stream` and simulates one trial.
pub fn run_trial(
    state: &TwoQubitState,
    a: &BlochSetting,
    b: &BlochSetting,
    chronology: Chronology,
    stream: &mut LambdaStream,
    index: u64,
) -> Result<TrialResult> {
    let lambdas = [stream.next_real()?, stream.next_real()?];
    let (alpha, beta) = outcomes_for(state, a, b, chronology, lambdas)?;
    Ok(TrialResult {
        chronology,
        a: *a,
        b: *b,
        alpha,
        beta,
        lambdas,
        index,
    })
}

/// Runs trials `0..trials`, trial `t` drawing from substream
/// `first_block + t` of `stream`.
#[allow(clippy::too_many_arguments)]
pub fn run_trials(
    state: &TwoQubitState,
    a: &BlochSetting,
    b: &BlochSetting,
    chronology: Chronology,
    trials: u64,
    stream: &LambdaStream,
    first_block: u64,
    workers: Workers,
) -> Result<Vec<TrialResult>> {
    workers.run(|| {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut sub = stream.split(first_block + t)?;
                run_trial(state, a, b, chronology, &mut sub, t)
            })
            .collect()
    })
}

/// Empirical correlation table with per-cell standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatedTable {
    pub chronology: Chronology,
    pub trials: u64,
    pub table: CorrelationTable,
    /// `sqrt(p(1-p)/trials)` per cell, same layout as the table.
    pub std_errors: Vec<[f64; 4]>,
}

/// Frequencies from `trials` runs per setting pair. Pair `k` (row major)
/// uses substreams `k*trials .. (k+1)*trials` of `stream`.
pub fn estimate_table(
    state: &TwoQubitState,
    a_settings: &[BlochSetting],
    b_settings: &[BlochSetting],
    chronology: Chronology,
    trials: u64,
    stream: &LambdaStream,
    workers: Workers,
) -> Result<EstimatedTable> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let mut cells = Vec::new();
    let mut std_errors = Vec::new();
    for (k, (a, b)) in setting_pairs(a_settings, b_settings).enumerate() {
        let results = run_trials(state, a, b, chronology, trials, stream, k as u64 * trials, workers)?;
        let mut counts = [0u64; 4];
        for r in &results {
            counts[2 * r.alpha.index() + r.beta.index()] += 1;
        }
        let n = trials as f64;
        let probs = counts.map(|c| c as f64 / n);
        std_errors.push(probs.map(|p| (p * (1.0 - p) / n).sqrt()));
        cells.push(JointDistribution::new(probs, *a, *b));
    }
    Ok(EstimatedTable {
        chronology,
        trials,
        table: CorrelationTable::new(a_settings.to_vec(), b_settings.to_vec(), cells)?,
        std_errors,
    })
}

fn setting_pairs<'a>(
    a_settings: &'a [BlochSetting],
    b_settings: &'a [BlochSetting],
) -> impl Iterator<Item = (&'a BlochSetting, &'a BlochSetting)> {
    a_settings
        .iter()
        .flat_map(move |a| b_settings.iter().map(move |b| (a, b)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionCheck {
    /// Max entrywise difference between the AB and BA tables, per pair.
    pub per_pair: Vec<f64>,
    pub max_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationCheck {
    pub trials_per_pair: u64,
    pub divergent_per_pair: Vec<u64>,
    pub fraction_per_pair: Vec<f64>,
    /// Divergent share over all pairs together.
    pub fraction: f64,
}

/// Chronology comparison for one state over a grid of settings. Either part
/// may be absent depending on which check produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub a_settings: Vec<BlochSetting>,
    pub b_settings: Vec<BlochSetting>,
    pub distribution: Option<DistributionCheck>,
    pub realization: Option<RealizationCheck>,
}

impl CovarianceReport {
    /// Keeps the parts present in `other` over those in `self`.
    pub fn combine(mut self, other: CovarianceReport) -> CovarianceReport {
        if other.distribution.is_some() {
            self.distribution = other.distribution;
        }
        if other.realization.is_some() {
            self.realization = other.realization;
        }
        self
    }
}

/// Exact tables under AB and BA, compared entrywise against `tolerance`
/// (1e-12 unless overridden).
pub fn distribution_covariance_check(
    state: &TwoQubitState,
    a_settings: &[BlochSetting],
    b_settings: &[BlochSetting],
    tolerance: Option<f64>,
) -> Result<CovarianceReport> {
    let tolerance = tolerance.unwrap_or(EXACT_TOL);
    let ab = CorrelationTable::exact(state, a_settings, b_settings, Chronology::AB)?;
    let ba = CorrelationTable::exact(state, a_settings, b_settings, Chronology::BA)?;
    let per_pair: Vec<f64> = ab
        .cells()
        .iter()
        .zip(ba.cells())
        .map(|(x, y)| x.max_abs_diff(y))
        .collect();
    let max_diff = per_pair.iter().copied().fold(0.0, f64::max);
    Ok(CovarianceReport {
        a_settings: a_settings.to_vec(),
        b_settings: b_settings.to_vec(),
        distribution: Some(DistributionCheck {
            per_pair,
            max_diff,
            tolerance,
            pass: max_diff <= tolerance,
        }),
        realization: None,
    })
}

/// Runs both chronologies on the same substream for each trial and counts
/// trials whose `(α, β)` pairs differ. Substream layout as in
/// [`estimate_table`].
pub fn realization_divergence(
    state: &TwoQubitState,
    a_settings: &[BlochSetting],
    b_settings: &[BlochSetting],
    trials: u64,
    stream: &LambdaStream,
    workers: Workers,
) -> Result<CovarianceReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let mut divergent_per_pair = Vec::new();
    for (k, (a, b)) in setting_pairs(a_settings, b_settings).enumerate() {
        let base = k as u64 * trials;
        let flags: Vec<bool> = workers.run(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| trial_diverges(state, a, b, stream, base + t, t))
                .collect::<Result<_>>()
        })?;
        divergent_per_pair.push(flags.iter().filter(|d| **d).count() as u64);
    }
    Ok(realization_report(a_settings, b_settings, trials, divergent_per_pair))
}

/// Whether the two chronologies realize different outcome pairs on block
/// `block` of `stream`.
pub fn trial_diverges(
    state: &TwoQubitState,
    a: &BlochSetting,
    b: &BlochSetting,
    stream: &LambdaStream,
    block: u64,
    index: u64,
) -> Result<bool> {
    let mut sub = stream.split(block)?;
    let ab = run_trial(state, a, b, Chronology::AB, &mut sub, index)?;
    sub.rewind();
    let ba = run_trial(state, a, b, Chronology::BA, &mut sub, index)?;
    Ok(ab.outcomes() != ba.outcomes())
}

pub(crate) fn realization_report(
    a_settings: &[BlochSetting],
    b_settings: &[BlochSetting],
    trials: u64,
    divergent_per_pair: Vec<u64>,
) -> CovarianceReport {
    let n = trials as f64;
    let fraction_per_pair = divergent_per_pair.iter().map(|&d| d as f64 / n).collect();
    let total: u64 = divergent_per_pair.iter().sum();
    let fraction = if divergent_per_pair.is_empty() {
        0.0
    } else {
        total as f64 / (n * divergent_per_pair.len() as f64)
    };
    CovarianceReport {
        a_settings: a_settings.to_vec(),
        b_settings: b_settings.to_vec(),
        distribution: None,
        realization: Some(RealizationCheck {
            trials_per_pair: trials,
            divergent_per_pair,
            fraction_per_pair,
            fraction,
        }),
    }
}
