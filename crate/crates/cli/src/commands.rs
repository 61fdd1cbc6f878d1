use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use chronobell::chronology::{distribution_covariance_check, estimate_table, realization_divergence};
use chronobell::flash::{
    flash_distribution, flash_pair_divergence, make_hit_kernel, ordering_invariance_exact, run_block_size,
    run_ensemble, GridWavefunction, ProcessParams, MAX_EXACT_SITES,
};
use chronobell::nogo::{
    chsh_facet_check, enumerate_deterministic_strategies, exhaustive_nogo_search, local_membership_lp,
    quantum_behavior, BehaviorVector, LOCAL_BOUND, TSIRELSON_BOUND,
};
use chronobell::quantum::{chsh_value, correlator, CorrelationTable};
use chronobell::report::{covariance_csv, to_canonical};
use chronobell::{Chronology, Error, LambdaFile, LambdaSource, Result, TwoQubitState, Workers};

use crate::args::{
    four_settings, parse_state, split_settings, ChshArgs, CovarianceArgs, FlashArgs, GenLambdaArgs, LambdaArg, NogoArgs,
};

/// Exit status for a completed command whose internal cross-checks disagree.
pub const EXIT_DISAGREEMENT: i32 = 4;

pub struct Outcome {
    pub report: String,
    pub status: i32,
}

fn emit(value: &Value, out: Option<&Path>, status: i32) -> Result<Outcome> {
    let report = to_canonical(value)?;
    if let Some(path) = out {
        fs::write(path, &report)?;
    }
    Ok(Outcome { report, status })
}

fn state_json(s: &TwoQubitState) -> Value {
    json!(s.amplitudes().iter().map(|a| [a.re, a.im]).collect::<Vec<_>>())
}

fn lambda_source(arg: &LambdaArg, count: Option<u64>) -> Result<LambdaSource> {
    match (&arg.lambda_file, arg.seed) {
        (Some(path), None) => Ok(LambdaSource::file(LambdaFile::read(path)?)),
        (None, Some(seed)) => Ok(LambdaSource::generator(seed, count.unwrap_or(u64::MAX))),
        _ => Err(Error::Parameter("give exactly one of --lambda-file and --seed".into())),
    }
}

pub fn chsh(args: &ChshArgs) -> Result<Outcome> {
    let state = parse_state(&args.state.state)?;
    let [a, a2, b, b2] = four_settings(&args.angles)?;
    let value = chsh_value(&state, &a, &a2, &b, &b2)?;
    let behavior = quantum_behavior(&state, &a, &a2, &b, &b2)?;
    let facet = chsh_facet_check(&behavior);
    let lp = local_membership_lp(&behavior)?;
    let report = json!({
        "command": "chsh",
        "state": state_json(&state),
        "settings": {
            "a": a.direction(), "a2": a2.direction(), "b": b.direction(), "b2": b2.direction(),
        },
        "correlators": {
            "a_b": correlator(&state, &a, &b)?,
            "a_b2": correlator(&state, &a, &b2)?,
            "a2_b": correlator(&state, &a2, &b)?,
            "a2_b2": correlator(&state, &a2, &b2)?,
        },
        "chsh": value,
        "abs_chsh": value.abs(),
        "max_abs_chsh": facet.max_facet_value,
        "facet_certificate": facet.facet,
        "local_bound": LOCAL_BOUND,
        "tsirelson_bound": TSIRELSON_BOUND,
        "violates_local_bound": !facet.local,
        "lp_local": lp.local,
    });
    let status = if lp.local == facet.local { 0 } else { EXIT_DISAGREEMENT };
    emit(&report, args.output.out.as_deref(), status)
}

pub fn covariance(args: &CovarianceArgs) -> Result<Outcome> {
    if args.trials == 0 {
        return Err(Error::Parameter("--trials must be at least 1".into()));
    }
    if args.tol.is_some_and(|t| t.is_nan() || t < 0.0) {
        return Err(Error::Parameter("--tol must be nonnegative".into()));
    }
    let state = parse_state(&args.state.state)?;
    let (a_settings, b_settings) = split_settings(&args.angles)?;
    let source = lambda_source(&args.lambda, args.count)?;
    let stream = source.stream();
    let workers = Workers(args.workers.max(1));
    let chronology: Chronology = args.chronology.into();

    let report = distribution_covariance_check(&state, &a_settings, &b_settings, args.tol)?.combine(
        realization_divergence(&state, &a_settings, &b_settings, args.trials, &stream, workers)?,
    );
    let estimated = estimate_table(
        &state,
        &a_settings,
        &b_settings,
        chronology,
        args.trials,
        &stream,
        workers,
    )?;
    let exact = CorrelationTable::exact(&state, &a_settings, &b_settings, chronology)?;
    let max_tv = estimated
        .table
        .cells()
        .iter()
        .zip(exact.cells())
        .map(|(e, x)| e.total_variation(x))
        .fold(0.0, f64::max);

    if let Some(path) = &args.csv {
        fs::write(path, covariance_csv(&report)?)?;
    }
    let pass = report.distribution.as_ref().is_some_and(|d| d.pass);
    let value = json!({
        "command": "covariance",
        "state": state_json(&state),
        "lambda_source": stream.label(),
        "chronology": chronology,
        "trials": args.trials,
        "report": report,
        "estimated": estimated,
        "estimated_max_total_variation": max_tv,
    });
    emit(
        &value,
        args.output.out.as_deref(),
        if pass { 0 } else { EXIT_DISAGREEMENT },
    )
}

fn nogo_target(args: &NogoArgs) -> Result<(Value, BehaviorVector)> {
    let spec = args.target.trim().to_ascii_lowercase();
    if spec == "quantum" {
        let state = parse_state(&args.state.state)?;
        let [a0, a1, b0, b1] = four_settings(&args.angles)?;
        let p = quantum_behavior(&state, &a0, &a1, &b0, &b1)?;
        return Ok((
            json!({ "kind": "quantum", "state": state_json(&state), "angles": args.angles }),
            p,
        ));
    }
    if spec == "uniform" {
        return Ok((json!({ "kind": "uniform" }), BehaviorVector::uniform()));
    }
    if let Some(k) = spec.strip_prefix("vertex:") {
        let k: usize = k
            .parse()
            .map_err(|_| Error::Parameter(format!("bad vertex index '{k}'")))?;
        let vertices = enumerate_deterministic_strategies();
        let p = *vertices
            .get(k)
            .ok_or_else(|| Error::Parameter(format!("vertex index {k} outside 0..16")))?;
        return Ok((json!({ "kind": "vertex", "index": k }), p));
    }
    Err(Error::Parameter(format!("unknown target '{}'", args.target)))
}

pub fn nogo(args: &NogoArgs) -> Result<Outcome> {
    if args.tol.is_nan() || args.tol < 0.0 {
        return Err(Error::Parameter("--tol must be nonnegative".into()));
    }
    let (target_desc, target) = nogo_target(args)?;
    let search = exhaustive_nogo_search(args.alphabet, &target, args.tol, Workers(args.workers.max(1)))?;
    let lp = local_membership_lp(&target)?;
    let facet = chsh_facet_check(&target);
    let agree = lp.local == facet.local;
    let value = json!({
        "command": "nogo",
        "target": target_desc,
        "behavior": target,
        "search": {
            "alphabet": search.alphabet,
            "tol": args.tol,
            "found": search.found,
            "best_distance": search.best_distance,
            "max_chsh": search.max_chsh,
            "searched": search.searched,
            "best": search.best,
        },
        "lp": lp,
        "facet": facet,
        "verdicts_agree": agree,
    });
    emit(
        &value,
        args.output.out.as_deref(),
        if agree { 0 } else { EXIT_DISAGREEMENT },
    )
}

pub fn flash(args: &FlashArgs) -> Result<Outcome> {
    let params = ProcessParams {
        rate: args.rate,
        duration: args.duration,
    };
    params.validate()?;
    if args.trials == 0 {
        return Err(Error::Parameter("--trials must be at least 1".into()));
    }
    let n = args.sites;
    let kernel = make_hit_kernel(n, args.sigma, args.spacing)?;
    let pair = GridWavefunction::antisymmetric_pair(n, n / 4, (3 * n / 4).max(n / 4 + 1), args.spacing)?;
    let psi0 = if args.particles == 1 {
        GridWavefunction::gaussian_packet(n, n as f64 / 2.0, n as f64 / 8.0, args.spacing)?
    } else {
        pair.clone()
    };
    let source = lambda_source(&args.lambda, args.count)?.with_block_size(run_block_size(psi0.particles(), params))?;
    let stream = source.stream();
    let workers = Workers(args.workers.max(1));

    let histories = run_ensemble(&psi0, &kernel, params, args.trials, &stream, workers)?;

    let counts: Vec<f64> = histories.iter().map(|h| h.flashes.len() as f64).collect();
    let runs = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / runs;
    let variance = if counts.len() > 1 {
        counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs - 1.0)
    } else {
        0.0
    };

    let mut histogram = vec![0u64; n];
    for h in &histories {
        if let Some(f) = h.flashes.first() {
            histogram[f.site] += 1;
        }
    }
    let samples: u64 = histogram.iter().sum();
    let mut exact = vec![0.0; n];
    for p in 0..psi0.particles() {
        for (e, v) in exact.iter_mut().zip(flash_distribution(&psi0, &kernel, p)?) {
            *e += v / psi0.particles() as f64;
        }
    }
    let tv = if samples == 0 {
        Value::Null
    } else {
        json!(
            0.5 * histogram
                .iter()
                .zip(&exact)
                .map(|(c, e)| (*c as f64 / samples as f64 - e).abs())
                .sum::<f64>()
        )
    };

    let ordering = if n <= MAX_EXACT_SITES {
        json!(ordering_invariance_exact(&pair, &kernel)?)
    } else {
        Value::Null
    };
    let divergence = if n <= MAX_EXACT_SITES {
        let (divergent, fraction) = flash_pair_divergence(&pair, &kernel, args.trials, &stream, workers)?;
        json!({ "runs": args.trials, "divergent": divergent, "fraction": fraction })
    } else {
        Value::Null
    };

    if let Some(path) = &args.history {
        let mut text = String::from("# run time particle site\n");
        for (r, h) in histories.iter().enumerate() {
            for line in h.records_text().lines() {
                text.push_str(&format!("{r} {line}\n"));
            }
        }
        fs::write(path, text)?;
    }

    let value = json!({
        "command": "flash",
        "params": {
            "sites": n, "sigma": args.sigma, "spacing": args.spacing, "rate": args.rate,
            "duration": args.duration, "particles": args.particles, "trials": args.trials,
        },
        "lambda_source": stream.label(),
        "hits": {
            "total": counts.iter().sum::<f64>() as u64,
            "mean": mean,
            "variance": variance,
            "expected_mean": args.rate * args.duration * psi0.particles() as f64,
        },
        "first_flash": {
            "samples": samples,
            "histogram": histogram,
            "exact": exact,
            "total_variation": tv,
        },
        "ordering_invariance": ordering,
        "pair_divergence": divergence,
    });
    emit(&value, args.output.out.as_deref(), 0)
}

pub fn gen_lambda(args: &GenLambdaArgs) -> Result<Outcome> {
    let file = LambdaFile::generate(args.seed, args.count)?;
    file.write(&args.out)?;
    let value = json!({
        "command": "gen-lambda",
        "seed": args.seed,
        "count": args.count,
        "bytes": file.to_bytes().len(),
        "path": args.out.display().to_string(),
    });
    emit(&value, None, 0)
}
