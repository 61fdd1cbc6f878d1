//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use chronobell::flash::{make_hit_kernel, ordering_invariance_exact, DEFAULT_SIGMA, DEFAULT_SITES, DEFAULT_SPACING};
use chronobell::nogo::{
    check_covariance_constraints, chsh_facet_check, enumerate_deterministic_strategies, local_membership_lp,
    quantum_behavior, reduce_to_local, BehaviorVector, LocalModel, StrategyQuadruple,
};
use chronobell::num_complex::Complex64;
use chronobell::quantum::joint_distribution;
use chronobell::{BlochSetting, Chronology, GridWavefunction, Outcome, Party, TwoQubitState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chronobell"))
}

fn run(args: &[&str]) -> (Output, Duration) {
    let t = Instant::now();
    let out = bin().args(args).output().expect("binary runs");
    (out, t.elapsed())
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

fn gen_lambda(dir: &Path, seed: u64, count: u64) -> PathBuf {
    let path = dir.join(format!("lambda-{seed}-{count}.bin"));
    let (out, _) = run(&[
        "gen-lambda",
        "--seed",
        &seed.to_string(),
        "--count",
        &count.to_string(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "gen-lambda failed");
    path
}

fn random_state(rng: &mut ChaCha8Rng) -> TwoQubitState {
    let amps = [(); 4].map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    TwoQubitState::normalized(amps).unwrap()
}

fn random_setting(rng: &mut ChaCha8Rng, party: Party) -> BlochSetting {
    BlochSetting::from_direction(party, [(); 3].map(|_| rng.gen_range(-1.0..1.0))).unwrap()
}

fn tsirelson() -> Verdict {
    let (out, t) = run(&["chsh", "--angles", "0,90,45,135"]);
    let v = report(&out);
    let m = v["max_abs_chsh"].as_f64().unwrap_or(f64::NAN);
    let target = 2.0 * std::f64::consts::SQRT_2;
    let ok = out.status.success() && (m - target).abs() <= 1e-9 && t < Duration::from_secs(1);
    verdict(
        ok,
        format!(
            "max|CHSH| = {m:.15} (fixed form {:.3e}), |Δ| = {:.1e} ≤ 1e-9, {t:.2?} < 1s",
            v["chsh"].as_f64().unwrap_or(f64::NAN),
            (m - target).abs()
        ),
    )
}

fn local_bound() -> Verdict {
    let det = enumerate_deterministic_strategies()
        .iter()
        .flat_map(|v| [(0, 0), (0, 1), (1, 0), (1, 1)].map(|m| v.chsh(m).abs()))
        .fold(0.0, f64::max);
    let mut ok = det == 2.0;
    let mut notes = vec![format!("vertices {det}")];
    for l in 1..=4 {
        let (out, t) = run(&["nogo", "--alphabet", &l.to_string(), "--tol", "1e-6"]);
        let m = report(&out)["search"]["max_chsh"].as_f64().unwrap_or(f64::NAN);
        ok &= out.status.success() && m == 2.0;
        if l == 4 {
            ok &= t < Duration::from_secs(30);
        }
        notes.push(format!("L={l}: {m} ({t:.2?})"));
    }
    verdict(ok, notes.join(", "))
}

fn no_go() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for l in 1..=4 {
        let (out, _) = run(&["nogo", "--alphabet", &l.to_string(), "--tol", "1e-6"]);
        let s = &report(&out)["search"];
        ok &= out.status.success() && s["found"] == false;
        notes.push(format!(
            "L={l} best {:.4}",
            s["best_distance"].as_f64().unwrap_or(f64::NAN)
        ));
    }

    let mut checked = 0u64;
    let mut worst = 0.0f64;
    let mut check = |q: &StrategyQuadruple| {
        let local = match reduce_to_local(q) {
            Ok(m) => m.behavior(),
            Err(_) => return false,
        };
        checked += 1;
        worst = worst
            .max(local.max_abs_diff(&q.behavior(Chronology::AB)))
            .max(local.max_abs_diff(&q.behavior(Chronology::BA)));
        true
    };
    // every quadruple at L = 1
    let bits = |v: u32, n: usize, off: usize| {
        (0..n)
            .map(|k| Outcome::from_index(((v >> (off + k)) & 1) as usize))
            .collect::<Vec<_>>()
    };
    let mut constrained = 0;
    for v in 0u32..1 << 12 {
        let q =
            StrategyQuadruple::new(1, bits(v, 2, 0), bits(v, 4, 2), bits(v, 2, 6), bits(v, 4, 8), vec![1.0]).unwrap();
        if check_covariance_constraints(&q).holds {
            constrained += 1;
            ok &= check(&q);
        }
    }
    ok &= constrained == 16;
    // every constrained quadruple at L = 2..4, under random weights
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for l in 2..=4usize {
        for v in 0u32..1 << (4 * l) {
            let weights = LocalModel::random(&mut rng, l).weights().to_vec();
            let m = LocalModel::new(l, bits(v, 2 * l, 0), bits(v, 2 * l, 2 * l), weights).unwrap();
            ok &= check(&StrategyQuadruple::from_local(&m));
        }
    }
    ok &= worst == 0.0;
    notes.push(format!("{checked} constrained quadruples reduced, max diff {worst:e}"));
    verdict(ok, notes.join(", "))
}

fn distribution_covariance() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let psi = random_state(&mut rng);
        let a = random_setting(&mut rng, Party::A);
        let b = random_setting(&mut rng, Party::B);
        let ab = joint_distribution(&psi, &a, &b, Chronology::AB).unwrap();
        let ba = joint_distribution(&psi, &a, &b, Chronology::BA).unwrap();
        worst = worst.max(ab.max_abs_diff(&ba));
    }
    let kernel = make_hit_kernel(DEFAULT_SITES, DEFAULT_SIGMA, DEFAULT_SPACING).unwrap();
    let mut flash_worst = 0.0f64;
    for _ in 0..50 {
        let psi = GridWavefunction::random(&mut rng, DEFAULT_SITES, 2, DEFAULT_SPACING).unwrap();
        flash_worst = flash_worst.max(ordering_invariance_exact(&psi, &kernel).unwrap().max_diff);
    }
    let t = t.elapsed();
    verdict(
        worst <= 1e-12 && flash_worst <= 1e-12 && t < Duration::from_secs(10),
        format!("qubit max diff {worst:.1e}, flash max diff {flash_worst:.1e} (≤ 1e-12), {t:.2?} < 10s"),
    )
}

/// Area of the λ² square where the chronologies realize different pairs,
/// for the singlet with both settings along z: α = + iff λ1 < 1/2 under AB,
/// forcing β = −, and symmetrically under BA.
fn singlet_same_axis_divergence() -> f64 {
    let cut = 0.5;
    let mut area = 0.0;
    for (lo, hi) in [(0.0, cut), (cut, 1.0)] {
        let first_plus = lo < cut;
        let ab = (first_plus, !first_plus);
        let ba = (!first_plus, first_plus);
        if ab != ba {
            area += hi - lo;
        }
    }
    area
}

fn realization_non_covariance(dir: &Path) -> Verdict {
    let trials = 10_000u64;
    let l = gen_lambda(dir, 31, 64 * trials);
    let (out, t) = run(&[
        "covariance",
        "--angles",
        "0,0",
        "--trials",
        &trials.to_string(),
        "--lambda-file",
        l.to_str().unwrap(),
    ]);
    let f = report(&out)["report"]["realization"]["fraction"]
        .as_f64()
        .unwrap_or(f64::NAN);
    let p = singlet_same_axis_divergence();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    verdict(
        out.status.success() && (f - p).abs() <= 3.0 * sigma && t < Duration::from_secs(5),
        format!("divergent fraction {f} vs exact {p} ± 3·{sigma:.2e}, {t:.2?} < 5s"),
    )
}

fn pr_box() -> BehaviorVector {
    let mut p = [0.0; 16];
    for a in 0..2 {
        for b in 0..2 {
            for alpha in Outcome::BOTH {
                for beta in Outcome::BOTH {
                    if alpha.index() ^ beta.index() == a & b {
                        p[BehaviorVector::index(a, b, alpha, beta)] = 0.5;
                    }
                }
            }
        }
    }
    BehaviorVector(p)
}

fn oracle_agreement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let vertices = enumerate_deterministic_strategies();
    let (mut disagree, mut nonlocal) = (0, 0);
    for i in 0..1000 {
        let p = if i % 2 == 0 {
            let raw: Vec<f64> = (0..16).map(|_| rng.gen::<f64>().powi(3)).collect();
            let total: f64 = raw.iter().sum();
            let mut m = [0.0; 16];
            for (w, v) in raw.iter().zip(&vertices) {
                for k in 0..16 {
                    m[k] += w / total * v.0[k];
                }
            }
            BehaviorVector(m).mix(&pr_box(), rng.gen_range(0.0..0.6))
        } else {
            let psi = random_state(&mut rng);
            let s: Vec<BlochSetting> = [Party::A, Party::A, Party::B, Party::B]
                .into_iter()
                .map(|party| random_setting(&mut rng, party))
                .collect();
            quantum_behavior(&psi, &s[0], &s[1], &s[2], &s[3]).unwrap()
        };
        let lp = local_membership_lp(&p).unwrap().local;
        disagree += usize::from(lp != chsh_facet_check(&p).local);
        nonlocal += usize::from(!lp);
    }
    verdict(
        disagree == 0,
        format!("{disagree} disagreements over 1000 behaviors ({nonlocal} nonlocal)"),
    )
}

fn simulation_faithfulness(dir: &Path) -> Verdict {
    let trials = 10_000u64;
    let bound = 4.0 / (trials as f64).sqrt();
    let l = gen_lambda(dir, 71, 64 * 4 * trials);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut states = vec!["singlet".to_string()];
    for _ in 0..2 {
        let psi = random_state(&mut rng);
        states.push(
            psi.amplitudes()
                .iter()
                .map(|a| format!("{}:{}", a.re, a.im))
                .collect::<Vec<_>>()
                .join(","),
        );
    }
    let mut ok = true;
    let mut worst = 0.0f64;
    for s in &states {
        for chron in ["ab", "ba"] {
            let (out, _) = run(&[
                "covariance",
                "--state",
                s,
                "--angles",
                "0,90,45,-45",
                "--chronology",
                chron,
                "--trials",
                &trials.to_string(),
                "--lambda-file",
                l.to_str().unwrap(),
                "--workers",
                "4",
            ]);
            let tv = report(&out)["estimated_max_total_variation"]
                .as_f64()
                .unwrap_or(f64::NAN);
            ok &= out.status.success() && tv < bound;
            worst = worst.max(tv);
        }
    }
    verdict(
        ok,
        format!("worst TV {worst:.4} < {bound} over 3 states × 2 chronologies × 4 pairs"),
    )
}

fn flash_statistics() -> Verdict {
    let runs = 100_000u64;
    let mut ok = true;
    let mut notes = Vec::new();
    for particles in ["1", "2"] {
        let (out, _) = run(&[
            "flash",
            "--seed",
            "8",
            "--trials",
            &runs.to_string(),
            "--particles",
            particles,
            "--workers",
            "4",
        ]);
        let v = report(&out);
        let tv = v["first_flash"]["total_variation"].as_f64().unwrap_or(f64::NAN);
        let mean = v["hits"]["mean"].as_f64().unwrap_or(f64::NAN);
        let expected = v["hits"]["expected_mean"].as_f64().unwrap_or(f64::NAN);
        let sigma = (expected / runs as f64).sqrt();
        ok &= out.status.success() && tv < 0.02 && (mean - expected).abs() <= 3.0 * sigma;
        notes.push(format!(
            "N={particles}: TV {tv:.4} < 0.02, mean {mean:.4} vs {expected} ± 3·{sigma:.4}"
        ));
    }
    verdict(ok, notes.join("; "))
}

fn replay_determinism(dir: &Path) -> Verdict {
    let l = gen_lambda(dir, 91, 64 * 4 * 500);
    let l = l.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["chsh", "--angles", "0,90,45,135"],
        vec![
            "covariance",
            "--angles",
            "0,90,45,-45",
            "--trials",
            "500",
            "--lambda-file",
            l,
        ],
        vec![
            "covariance",
            "--angles",
            "0,90,45,-45",
            "--trials",
            "500",
            "--lambda-file",
            l,
            "--chronology",
            "ba",
        ],
        vec!["nogo", "--alphabet", "3"],
        vec!["nogo", "--target", "uniform", "--alphabet", "4"],
        vec!["flash", "--trials", "500", "--lambda-file", l],
        vec!["flash", "--trials", "500", "--particles", "2", "--lambda-file", l],
    ];
    let parallel = |c: &[&str]| c[0] != "chsh";
    let mut mismatches = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for (k, workers) in ["1", "1", "4"].iter().enumerate() {
            if k == 2 && !parallel(case) {
                continue;
            }
            let out_path = dir.join(format!("r{i}-{k}.json"));
            let side_path = dir.join(format!("s{i}-{k}.txt"));
            let mut args: Vec<&str> = case.clone();
            let out_s = out_path.to_str().unwrap().to_string();
            let side_s = side_path.to_str().unwrap().to_string();
            args.extend(["--out", &out_s]);
            if parallel(case) {
                args.extend(["--workers", workers]);
            }
            match case[0] {
                "flash" => args.extend(["--history", &side_s]),
                "covariance" => args.extend(["--csv", &side_s]),
                _ => {}
            }
            let (out, _) = run(&args);
            if !out.status.success() {
                mismatches.push(format!("case {i} exited {:?}", out.status.code()));
            }
            let side = std::fs::read(&side_path).unwrap_or_default();
            outputs.push((out.stdout, std::fs::read(&out_path).unwrap_or_default(), side));
        }
        if outputs.iter().any(|o| *o != outputs[0]) || outputs[0].0 != outputs[0].1 {
            mismatches.push(format!("case {i} ({})", case.join(" ")));
        }
    }
    verdict(
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!(
                "{} commands byte-identical across reruns and worker counts",
                cases.len()
            )
        } else {
            mismatches.join("; ")
        },
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("tsirelson reproduction", Box::new(tsirelson)),
        ("local bound", Box::new(local_bound)),
        ("no-go illustration", Box::new(no_go)),
        ("distribution covariance", Box::new(distribution_covariance)),
        (
            "realization non-covariance",
            Box::new(|| realization_non_covariance(dir.path())),
        ),
        ("oracle agreement", Box::new(oracle_agreement)),
        (
            "simulation faithfulness",
            Box::new(|| simulation_faithfulness(dir.path())),
        ),
        ("flash statistics", Box::new(flash_statistics)),
        ("replay determinism", Box::new(|| replay_determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {}. {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
