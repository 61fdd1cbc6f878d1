//! Toy spontaneous-localization process with flash ontology.
//!
//! Wavefunctions live on a periodic grid of `N` sites, for one or two
//! particles. A hit on particle `p` centered at site `x` multiplies the
//! wavefunction by `G[x][y_p]` and renormalizes; the hit location is the
//! flash. Columns of `G` are scaled so that `Σ_x G[x][y]² = 1`, which makes
//! the hit-center probabilities `‖G_x ψ‖²` sum to one for every state.
//!
//! There is no evolution between hits. Hits on different particles commute,
//! so the joint flash distribution does not depend on which particle is hit
//! first; the flash pair realized from a fixed pair of λ values does.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda::{LambdaStream, DEFAULT_BLOCK};
use crate::quantum::EXACT_TOL;
use crate::Workers;

pub const DEFAULT_SITES: usize = 16;
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_SPACING: f64 = 1.0;
pub const DEFAULT_RATE: f64 = 1.0;
pub const DEFAULT_DURATION: f64 = 4.0;
/// Largest per-particle grid accepted by [`ordering_invariance_exact`].
pub const MAX_EXACT_SITES: usize = 32;

const PHASE_EPS: f64 = 1e-12;

/// One or two particles on an `N`-site periodic grid. Two-particle
/// amplitudes are stored at `x1 * N + x2`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWavefunction {
    sites: usize,
    particles: usize,
    spacing: f64,
    amps: Vec<Complex64>,
}

impl GridWavefunction {
    /// Requires unit squared norm within 1e-12.
    pub fn new(sites: usize, particles: usize, spacing: f64, amps: Vec<Complex64>) -> Result<Self> {
        if sites < 2 {
            return Err(Error::Parameter(format!("grid needs at least 2 sites, got {sites}")));
        }
        if !(1..=2).contains(&particles) {
            return Err(Error::Parameter(format!("1 or 2 particles supported, got {particles}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Parameter(format!("spacing must be positive, got {spacing}")));
        }
        if amps.len() != sites.pow(particles as u32) {
            return Err(Error::Parameter(format!(
                "{} amplitudes for {particles} particle(s) on {sites} sites",
                amps.len()
            )));
        }
        let s: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !s.is_finite() || (s - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(s));
        }
        Ok(GridWavefunction {
            sites,
            particles,
            spacing,
            amps,
        })
    }

    /// Rescales nonzero amplitudes to unit norm.
    pub fn normalized(sites: usize, particles: usize, spacing: f64, amps: Vec<Complex64>) -> Result<Self> {
        let s: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !s.is_finite() || s == 0.0 {
            return Err(Error::InvalidState(s));
        }
        let k = 1.0 / s.sqrt();
        GridWavefunction::new(sites, particles, spacing, amps.into_iter().map(|a| a * k).collect())
    }

    /// One particle sitting on site `j`.
    pub fn localized(sites: usize, j: usize, spacing: f64) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); sites];
        if j >= sites {
            return Err(Error::Parameter(format!("site {j} outside 0..{sites}")));
        }
        amps[j] = Complex64::new(1.0, 0.0);
        GridWavefunction::new(sites, 1, spacing, amps)
    }

    /// One particle spread evenly over the grid.
    pub fn uniform(sites: usize, spacing: f64) -> Result<Self> {
        GridWavefunction::normalized(sites, 1, spacing, vec![Complex64::new(1.0, 0.0); sites])
    }

    /// Real Gaussian packet of standard deviation `width` sites around
    /// `center`, periodic.
    pub fn gaussian_packet(sites: usize, center: f64, width: f64, spacing: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Parameter(format!("packet width must be positive, got {width}")));
        }
        let n = sites as f64;
        let amps = (0..sites)
            .map(|y| {
                let d = (y as f64 - center).rem_euclid(n);
                let d = d.min(n - d);
                Complex64::new((-d * d / (4.0 * width * width)).exp(), 0.0)
            })
            .collect();
        GridWavefunction::normalized(sites, 1, spacing, amps)
    }

    /// `(|j,k> - |k,j>)/√2`.
    pub fn antisymmetric_pair(sites: usize, j: usize, k: usize, spacing: f64) -> Result<Self> {
        if j == k || j >= sites || k >= sites {
            return Err(Error::Parameter(format!(
                "need distinct sites below {sites}, got {j} and {k}"
            )));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); sites * sites];
        amps[j * sites + k] = Complex64::new(h, 0.0);
        amps[k * sites + j] = Complex64::new(-h, 0.0);
        GridWavefunction::new(sites, 2, spacing, amps)
    }

    /// `ψ1 ⊗ ψ2` of two single-particle states on the same grid.
    pub fn product(first: &GridWavefunction, second: &GridWavefunction) -> Result<Self> {
        if first.particles != 1 || second.particles != 1 {
            return Err(Error::Arity {
                expected: 1,
                got: first.particles.max(second.particles),
            });
        }
        if first.sites != second.sites {
            return Err(Error::Parameter("factors live on different grids".into()));
        }
        let amps = first
            .amps
            .iter()
            .flat_map(|x| second.amps.iter().map(move |y| x * y))
            .collect();
        GridWavefunction::normalized(first.sites, 2, first.spacing, amps)
    }

    /// Amplitudes with real and imaginary parts uniform in [-0.5, 0.5), normalized.
    pub fn random<R: Rng>(rng: &mut R, sites: usize, particles: usize, spacing: f64) -> Result<Self> {
        let amps = (0..sites.pow(particles as u32))
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        GridWavefunction::normalized(sites, particles, spacing, amps)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn squared_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn coordinate(&self, index: usize, particle: usize) -> usize {
        match (self.particles, particle) {
            (1, _) => index,
            (_, 0) => index / self.sites,
            _ => index % self.sites,
        }
    }

    /// Probability of finding `particle` at each site.
    pub fn position_density(&self, particle: usize) -> Vec<f64> {
        let mut rho = vec![0.0; self.sites];
        for (i, a) in self.amps.iter().enumerate() {
            rho[self.coordinate(i, particle)] += a.norm_sqr();
        }
        rho
    }

    fn check(&self, kernel: &HitKernel, particle: usize) -> Result<()> {
        if kernel.sites != self.sites {
            return Err(Error::Parameter(format!(
                "kernel has {} sites, wavefunction {}",
                kernel.sites, self.sites
            )));
        }
        if particle >= self.particles {
            return Err(Error::Parameter(format!(
                "particle {particle} out of range for {} particle(s)",
                self.particles
            )));
        }
        let s = self.squared_norm();
        if (s - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(s));
        }
        Ok(())
    }
}

/// Discretized periodic Gaussian localization operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitKernel {
    sites: usize,
    sigma: f64,
    spacing: f64,
    /// `G[x][y]` at `x * N + y`.
    weights: Vec<f64>,
}

impl HitKernel {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Weight of a hit centered at `center`, evaluated at `site`.
    pub fn weight(&self, center: usize, site: usize) -> f64 {
        self.weights[center * self.sites + site]
    }

    /// Largest deviation of `Σ_x G[x][y]²` from 1 over all columns.
    pub fn completeness_error(&self) -> f64 {
        (0..self.sites)
            .map(|y| {
                let s: f64 = (0..self.sites).map(|x| self.weight(x, y).powi(2)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Gaussian weights `exp(-d²·spacing²/(4σ²))` with periodic distance `d`
/// (in sites), columns rescaled to unit Euclidean norm.
pub fn make_hit_kernel(sites: usize, sigma: f64, spacing: f64) -> Result<HitKernel> {
    if sites < 2 {
        return Err(Error::Parameter(format!("kernel needs at least 2 sites, got {sites}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::Parameter(format!("spacing must be positive, got {spacing}")));
    }
    let mut weights = vec![0.0; sites * sites];
    for x in 0..sites {
        for y in 0..sites {
            let d = x.abs_diff(y);
            let d = d.min(sites - d) as f64;
            weights[x * sites + y] = (-(d * d) * spacing * spacing / (4.0 * sigma * sigma)).exp();
        }
    }
    for y in 0..sites {
        let norm = (0..sites).map(|x| weights[x * sites + y].powi(2)).sum::<f64>().sqrt();
        for x in 0..sites {
            weights[x * sites + y] /= norm;
        }
    }
    Ok(HitKernel {
        sites,
        sigma,
        spacing,
        weights,
    })
}

/// `P(x) = ‖G_x ψ‖²` for hits on `particle`.
pub fn flash_distribution(psi: &GridWavefunction, kernel: &HitKernel, particle: usize) -> Result<Vec<f64>> {
    psi.check(kernel, particle)?;
    let rho = psi.position_density(particle);
    Ok((0..kernel.sites)
        .map(|x| {
            rho.iter()
                .enumerate()
                .map(|(y, r)| kernel.weight(x, y).powi(2) * r)
                .sum()
        })
        .collect())
}

/// `G_center ψ / ‖G_center ψ‖`, first nonzero amplitude made real-positive.
pub fn apply_hit(
    psi: &GridWavefunction,
    kernel: &HitKernel,
    particle: usize,
    center: usize,
) -> Result<GridWavefunction> {
    psi.check(kernel, particle)?;
    if center >= kernel.sites {
        return Err(Error::Parameter(format!("hit center {center} outside grid")));
    }
    let mut amps: Vec<Complex64> = psi
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| a * kernel.weight(center, psi.coordinate(i, particle)))
        .collect();
    let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if p <= 0.0 {
        return Err(Error::ImpossibleFlash(center));
    }
    let k = 1.0 / p.sqrt();
    let phase = amps
        .iter()
        .find(|a| a.norm() > PHASE_EPS)
        .map(|a| a.conj() / a.norm())
        .unwrap_or(Complex64::new(1.0, 0.0));
    for a in amps.iter_mut() {
        *a *= phase * k;
    }
    Ok(GridWavefunction { amps, ..psi.clone() })
}

/// Inverse-CDF pick: first index whose cumulative probability exceeds `u`.
/// Rounding shortfalls fall back to the last index with nonzero mass.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlashRecord {
    pub time: f64,
    pub site: usize,
    pub particle: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlashHistory {
    pub flashes: Vec<FlashRecord>,
    pub final_state: GridWavefunction,
    pub stream_label: String,
}

impl FlashHistory {
    /// One `time particle site` line per flash.
    pub fn records_text(&self) -> String {
        self.flashes
            .iter()
            .map(|f| format!("{} {} {}\n", f.time, f.particle, f.site))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProcessParams {
    /// Hits per particle per unit time.
    pub rate: f64,
    pub duration: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        ProcessParams {
            rate: DEFAULT_RATE,
            duration: DEFAULT_DURATION,
        }
    }
}

impl ProcessParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Parameter(format!("rate must be positive, got {}", self.rate)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Parameter(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// Runs hits until the next Poisson arrival passes `duration`.
///
/// Per hit the stream supplies: the waiting time (exponential with total
/// rate `rate × particles`, by inverse CDF), the particle index (only when
/// there are two particles) and the hit center (inverse CDF over
/// [`flash_distribution`]). The final arrival that overshoots consumes one
/// value.
pub fn run_flash_process(
    psi0: &GridWavefunction,
    kernel: &HitKernel,
    params: ProcessParams,
    stream: &mut LambdaStream,
) -> Result<FlashHistory> {
    params.validate()?;
    psi0.check(kernel, 0)?;
    let total_rate = params.rate * psi0.particles as f64;
    let mut psi = psi0.clone();
    let mut time = 0.0;
    let mut flashes = Vec::new();
    loop {
        let u = stream.next_real()?;
        time += -(1.0 - u).ln() / total_rate;
        if time > params.duration {
            break;
        }
        let particle = if psi.particles > 1 {
            let u = stream.next_real()?;
            ((u * psi.particles as f64) as usize).min(psi.particles - 1)
        } else {
            0
        };
        let probs = flash_distribution(&psi, kernel, particle)?;
        let site = sample_index(&probs, stream.next_real()?);
        psi = apply_hit(&psi, kernel, particle, site)?;
        flashes.push(FlashRecord { time, site, particle });
    }
    Ok(FlashHistory {
        flashes,
        final_state: psi,
        stream_label: stream.label().to_string(),
    })
}

/// Substream size for one run: room for ten standard deviations above the
/// mean hit count, rounded up to whole default blocks.
pub fn run_block_size(particles: usize, params: ProcessParams) -> u64 {
    let mu = params.rate * params.duration * particles as f64;
    let per_hit = if particles > 1 { 3.0 } else { 2.0 };
    let words = ((mu + 10.0 * mu.sqrt() + 10.0) * per_hit + 1.0).ceil() as u64;
    words.div_ceil(DEFAULT_BLOCK).max(1) * DEFAULT_BLOCK
}

/// Independent runs of [`run_flash_process`], run `r` on substream `r`.
pub fn run_ensemble(
    psi0: &GridWavefunction,
    kernel: &HitKernel,
    params: ProcessParams,
    runs: u64,
    stream: &LambdaStream,
    workers: Workers,
) -> Result<Vec<FlashHistory>> {
    params.validate()?;
    workers.run(|| {
        (0..runs)
            .into_par_iter()
            .map(|r| run_flash_process(psi0, kernel, params, &mut stream.split(r)?))
            .collect()
    })
}

/// Which particle is hit first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HitOrder {
    FirstParticleFirst,
    SecondParticleFirst,
}

fn require_pair(psi: &GridWavefunction) -> Result<()> {
    if psi.particles != 2 {
        return Err(Error::Arity {
            expected: 2,
            got: psi.particles,
        });
    }
    if psi.sites > MAX_EXACT_SITES {
        return Err(Error::Parameter(format!(
            "exact pair computation limited to {MAX_EXACT_SITES} sites, got {}",
            psi.sites
        )));
    }
    Ok(())
}

/// Exact `P(x1, x2)` (index `x1 * N + x2`) for one hit on each particle in
/// the given order.
pub fn pair_flash_distribution(psi: &GridWavefunction, kernel: &HitKernel, order: HitOrder) -> Result<Vec<f64>> {
    require_pair(psi)?;
    let n = psi.sites;
    let (first, second) = match order {
        HitOrder::FirstParticleFirst => (0, 1),
        HitOrder::SecondParticleFirst => (1, 0),
    };
    let mut joint = vec![0.0; n * n];
    let p_first = flash_distribution(psi, kernel, first)?;
    for (x, &p) in p_first.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let post = apply_hit(psi, kernel, first, x)?;
        for (y, q) in flash_distribution(&post, kernel, second)?.into_iter().enumerate() {
            let (x1, x2) = if first == 0 { (x, y) } else { (y, x) };
            joint[x1 * n + x2] = p * q;
        }
    }
    Ok(joint)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingReport {
    pub max_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the exact flash-pair distributions of the two hit orders.
pub fn ordering_invariance_exact(psi: &GridWavefunction, kernel: &HitKernel) -> Result<OrderingReport> {
    let forward = pair_flash_distribution(psi, kernel, HitOrder::FirstParticleFirst)?;
    let backward = pair_flash_distribution(psi, kernel, HitOrder::SecondParticleFirst)?;
    let max_diff = forward
        .iter()
        .zip(&backward)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(OrderingReport {
        max_diff,
        tolerance: EXACT_TOL,
        pass: max_diff <= EXACT_TOL,
    })
}

/// Flash pair `(x1, x2)` realized from `λ = [λ1, λ2]`: λ1 picks the center
/// of the first hit in `order`, λ2 the second, both by inverse CDF.
pub fn sample_flash_pair(
    psi: &GridWavefunction,
    kernel: &HitKernel,
    order: HitOrder,
    lambdas: [f64; 2],
) -> Result<(usize, usize)> {
    require_pair(psi)?;
    for l in lambdas {
        if !(0.0..1.0).contains(&l) {
            return Err(Error::LambdaDomain(l));
        }
    }
    let (first, second) = match order {
        HitOrder::FirstParticleFirst => (0, 1),
        HitOrder::SecondParticleFirst => (1, 0),
    };
    let x = sample_index(&flash_distribution(psi, kernel, first)?, lambdas[0]);
    let post = apply_hit(psi, kernel, first, x)?;
    let y = sample_index(&flash_distribution(&post, kernel, second)?, lambdas[1]);
    Ok(if first == 0 { (x, y) } else { (y, x) })
}

/// Share of runs (run `t` on substream `t`) whose realized flash pairs differ
/// between the two hit orders.
pub fn flash_pair_divergence(
    psi: &GridWavefunction,
    kernel: &HitKernel,
    runs: u64,
    stream: &LambdaStream,
    workers: Workers,
) -> Result<(u64, f64)> {
    if runs == 0 {
        return Err(Error::Parameter("runs must be at least 1".into()));
    }
    let flags: Vec<bool> = workers.run(|| {
        (0..runs)
            .into_par_iter()
            .map(|t| {
                let mut sub = stream.split(t)?;
                let lambdas = [sub.next_real()?, sub.next_real()?];
                let fwd = sample_flash_pair(psi, kernel, HitOrder::FirstParticleFirst, lambdas)?;
                let bwd = sample_flash_pair(psi, kernel, HitOrder::SecondParticleFirst, lambdas)?;
                Ok(fwd != bwd)
            })
            .collect::<Result<_>>()
    })?;
    let divergent = flags.iter().filter(|d| **d).count() as u64;
    Ok((divergent, divergent as f64 / runs as f64))
}
