use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chronobell::num_complex::Complex64;
use chronobell::{BlochSetting, Chronology, Error, Party, Result, TwoQubitState};

#[derive(Debug, Parser)]
#[command(
    name = "chronobell",
    version,
    about = "Chronology-ordered Bell-test and flash-process experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact CHSH value, bounds and facet certificate for a state.
    Chsh(ChshArgs),
    /// Distribution covariance and realization divergence across chronologies.
    Covariance(CovarianceArgs),
    /// Exhaustive search over covariant strategy quadruples plus locality verdicts.
    Nogo(NogoArgs),
    /// Flash-process ensemble statistics and hit-order invariance.
    Flash(FlashArgs),
    /// Write a lambda file.
    GenLambda(GenLambdaArgs),
}

#[derive(Debug, Args)]
pub struct StateArg {
    /// singlet, phi-plus, phi-minus, psi-plus, 00, 01, 10, 11, or four
    /// comma-separated amplitudes `re` or `re:im` (normalized on input).
    #[arg(long, default_value = "singlet", allow_hyphen_values = true)]
    pub state: String,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct LambdaArg {
    /// Read lambda words from this file.
    #[arg(long)]
    pub lambda_file: Option<PathBuf>,
    /// Draw lambda words from the generator with this seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Also write the report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[command(flatten)]
    pub state: StateArg,
    /// a,a2,b,b2: degrees from +z towards +x, or x:y:z direction triples.
    #[arg(long, allow_hyphen_values = true)]
    pub angles: String,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct CovarianceArgs {
    #[command(flatten)]
    pub state: StateArg,
    /// Alice's settings then Bob's, equally many of each.
    #[arg(long, allow_hyphen_values = true)]
    pub angles: String,
    /// Chronology used for the estimated table.
    #[arg(long, value_enum, default_value = "ab")]
    pub chronology: ChronologyArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[command(flatten)]
    pub lambda: LambdaArg,
    /// Generator capacity in words when using --seed (unbounded if absent).
    #[arg(long)]
    pub count: Option<u64>,
    /// Tolerance for the exact distribution comparison.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write per-pair CSV rows here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChronologyArg {
    Ab,
    Ba,
}

impl From<ChronologyArg> for Chronology {
    fn from(c: ChronologyArg) -> Self {
        match c {
            ChronologyArg::Ab => Chronology::AB,
            ChronologyArg::Ba => Chronology::BA,
        }
    }
}

#[derive(Debug, Args)]
pub struct NogoArgs {
    /// `quantum` (from --state/--angles), `uniform`, or `vertex:K` with K in 0..16.
    #[arg(long, default_value = "quantum")]
    pub target: String,
    #[command(flatten)]
    pub state: StateArg,
    /// a0,a1,b0,b1 for the quantum target.
    #[arg(long, allow_hyphen_values = true, default_value = "0,90,45,-45")]
    pub angles: String,
    /// Lambda alphabet size searched, at most 5.
    #[arg(long, default_value_t = 4)]
    pub alphabet: usize,
    /// Distance below which a searched behavior counts as reproducing the target.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct FlashArgs {
    #[arg(long, default_value_t = chronobell::flash::DEFAULT_SITES)]
    pub sites: usize,
    #[arg(long, default_value_t = chronobell::flash::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = chronobell::flash::DEFAULT_SPACING)]
    pub spacing: f64,
    /// Hits per particle per unit time.
    #[arg(long, default_value_t = chronobell::flash::DEFAULT_RATE)]
    pub rate: f64,
    #[arg(long, default_value_t = chronobell::flash::DEFAULT_DURATION)]
    pub duration: f64,
    /// 1: Gaussian packet; 2: antisymmetric pair.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub particles: u8,
    /// Number of independent runs.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[command(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub count: Option<u64>,
    /// Write `run time particle site` records here.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub output: OutputArg,
}

#[derive(Debug, Args)]
pub struct GenLambdaArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parameter(format!("'{s}' is not a number")))
}

/// Comma-separated settings; each item is degrees in the x-z plane or an
/// `x:y:z` direction.
pub fn parse_settings(spec: &str) -> Result<Vec<[f64; 3]>> {
    let items: Vec<&str> = spec.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(Error::Parameter(format!("empty item in setting list '{spec}'")));
    }
    items
        .iter()
        .map(|item| {
            if item.contains(':') {
                let parts = item.split(':').map(parse_f64).collect::<Result<Vec<_>>>()?;
                <[f64; 3]>::try_from(parts)
                    .map_err(|_| Error::Parameter(format!("direction '{item}' needs three components")))
            } else {
                let t = parse_f64(item)?;
                if !t.is_finite() {
                    return Err(Error::Parameter(format!("angle '{item}' is not finite")));
                }
                let r = t.to_radians();
                Ok([r.sin(), 0.0, r.cos()])
            }
        })
        .collect()
}

pub fn setting(party: Party, v: [f64; 3]) -> Result<BlochSetting> {
    BlochSetting::from_direction(party, v)
}

/// Splits a list into Alice's first half and Bob's second half.
pub fn split_settings(spec: &str) -> Result<(Vec<BlochSetting>, Vec<BlochSetting>)> {
    let dirs = parse_settings(spec)?;
    if dirs.len() % 2 != 0 {
        return Err(Error::Parameter(format!(
            "need equally many settings per party, got {}",
            dirs.len()
        )));
    }
    let half = dirs.len() / 2;
    let a = dirs[..half]
        .iter()
        .map(|d| setting(Party::A, *d))
        .collect::<Result<_>>()?;
    let b = dirs[half..]
        .iter()
        .map(|d| setting(Party::B, *d))
        .collect::<Result<_>>()?;
    Ok((a, b))
}

/// Exactly four settings `a, a2, b, b2`.
pub fn four_settings(spec: &str) -> Result<[BlochSetting; 4]> {
    let (a, b) = split_settings(spec)?;
    if a.len() != 2 {
        return Err(Error::Parameter(format!("expected 4 settings, got {}", 2 * a.len())));
    }
    Ok([a[0], a[1], b[0], b[1]])
}

pub fn parse_state(spec: &str) -> Result<TwoQubitState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let real = |v: [f64; 4]| v.map(|x| Complex64::new(x, 0.0));
    let amps = match spec.trim().to_ascii_lowercase().as_str() {
        "singlet" | "psi-minus" => return Ok(chronobell::quantum::make_singlet()),
        "psi-plus" => real([0.0, h, h, 0.0]),
        "phi-plus" => real([h, 0.0, 0.0, h]),
        "phi-minus" => real([h, 0.0, 0.0, -h]),
        "00" => return Ok(TwoQubitState::basis(0)),
        "01" => return Ok(TwoQubitState::basis(1)),
        "10" => return Ok(TwoQubitState::basis(2)),
        "11" => return Ok(TwoQubitState::basis(3)),
        other => {
            let parts = other
                .split(',')
                .map(|item| {
                    let mut it = item.split(':');
                    let re = parse_f64(it.next().unwrap_or(""))?;
                    let im = it.next().map(parse_f64).transpose()?.unwrap_or(0.0);
                    if it.next().is_some() {
                        return Err(Error::Parameter(format!("amplitude '{item}' has too many parts")));
                    }
                    Ok(Complex64::new(re, im))
                })
                .collect::<Result<Vec<_>>>()?;
            <[Complex64; 4]>::try_from(parts)
                .map_err(|_| Error::Parameter(format!("state '{spec}' needs four amplitudes")))?
        }
    };
    TwoQubitState::normalized(amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_and_triple_forms() {
        let v = parse_settings("0, 90,0:1:0").unwrap();
        assert_eq!(v[0], [0.0, 0.0, 1.0]);
        assert!((v[1][0] - 1.0).abs() < 1e-15 && v[1][2].abs() < 1e-15);
        assert_eq!(v[2], [0.0, 1.0, 0.0]);
        assert!(parse_settings("0,,90").is_err());
        assert!(parse_settings("1:2").is_err());
        assert!(parse_settings("abc").is_err());
        assert!(split_settings("0,0:0:0").is_err());
        assert!(four_settings("0,90").is_err());
    }

    #[test]
    fn state_forms() {
        assert_eq!(parse_state("singlet").unwrap(), chronobell::quantum::make_singlet());
        let s = parse_state("1,0,0,1").unwrap();
        assert!((s.squared_norm() - 1.0).abs() < 1e-15);
        let c = parse_state("0,1:1,0,0").unwrap();
        assert!((c.amplitudes()[1].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(parse_state("0,0,0,0").is_err());
        assert!(parse_state("1,0").is_err());
    }
}
