//! Finite-alphabet form of the covariance no-go.
//!
//! A [`StrategyQuadruple`] assigns outcomes for both chronologies:
//! `F_AB(a,λ)` and `S_AB(a,b,λ)` when Alice is first, `F_BA(b,λ)` and
//! `S_BA(b,a,λ)` when Bob is first. Requiring the realized outcomes to agree
//! across chronologies (`F_AB(a,λ) = S_BA(b,a,λ)`, `S_AB(a,b,λ) = F_BA(b,λ)`)
//! makes every second-party table ignore the first party's setting, so the
//! quadruple is a [`LocalModel`]. Local models live in the convex hull of the
//! 16 deterministic strategies of the 2-2-2 scenario, where every CHSH
//! expression is bounded by 2.
//!
//! Locality of a [`BehaviorVector`] is decided two independent ways: a phase
//! one simplex over the vertex weights, and the eight CHSH facets.

mod search;
pub mod simplex;

use rand::Rng;
use serde::Serialize;

use crate::chronology::Chronology;
use crate::error::{Error, Result};
use crate::quantum::{joint_distribution, BlochSetting, Outcome, TwoQubitState};

pub use search::{exhaustive_nogo_search, SearchResult, MAX_SEARCH_ALPHABET};

/// Settings and outcomes per party in the 2-2-2 scenario.
pub const SETTINGS: usize = 2;
pub const LOCAL_BOUND: f64 = 2.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Slack allowed on validation and locality verdicts.
pub const VERDICT_TOL: f64 = 1e-9;

/// `P(α,β|a,b)` for `a, b ∈ {0,1}`, stored at `8a + 4b + 2·idx(α) + idx(β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BehaviorVector(pub [f64; 16]);

impl BehaviorVector {
    pub fn index(a: usize, b: usize, alpha: Outcome, beta: Outcome) -> usize {
        8 * a + 4 * b + 2 * alpha.index() + beta.index()
    }

    pub fn get(&self, a: usize, b: usize, alpha: Outcome, beta: Outcome) -> f64 {
        self.0[Self::index(a, b, alpha, beta)]
    }

    /// Every entry 1/4.
    pub fn uniform() -> Self {
        BehaviorVector([0.25; 16])
    }

    /// Normalization, positivity and no-signaling within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(v) = self.0.iter().find(|v| !v.is_finite() || **v < -tol) {
            return Err(Error::InvalidBehavior(format!("entry {v} is negative or not finite")));
        }
        for a in 0..SETTINGS {
            for b in 0..SETTINGS {
                let s: f64 = self.0[8 * a + 4 * b..8 * a + 4 * b + 4].iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::InvalidBehavior(format!("block (a={a}, b={b}) sums to {s}")));
                }
            }
        }
        let dev = self.signaling_deviation();
        if dev > tol {
            return Err(Error::InvalidBehavior(format!("signaling deviation {dev}")));
        }
        Ok(())
    }

    pub fn marginal_a(&self, a: usize, b: usize, alpha: Outcome) -> f64 {
        Outcome::BOTH.iter().map(|&beta| self.get(a, b, alpha, beta)).sum()
    }

    pub fn marginal_b(&self, a: usize, b: usize, beta: Outcome) -> f64 {
        Outcome::BOTH.iter().map(|&alpha| self.get(a, b, alpha, beta)).sum()
    }

    pub fn signaling_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for o in Outcome::BOTH {
            for x in 0..SETTINGS {
                worst = worst.max((self.marginal_a(x, 0, o) - self.marginal_a(x, 1, o)).abs());
                worst = worst.max((self.marginal_b(0, x, o) - self.marginal_b(1, x, o)).abs());
            }
        }
        worst
    }

    /// `E(a,b) = Σ αβ P(α,β|a,b)`.
    pub fn correlator(&self, a: usize, b: usize) -> f64 {
        let k = 8 * a + 4 * b;
        self.0[k] - self.0[k + 1] - self.0[k + 2] + self.0[k + 3]
    }

    /// `Σ E(a,b) - 2E(minus_at)`: the CHSH expression with its minus sign on
    /// the given setting pair. `(1,1)` is the usual
    /// `E(a,b) + E(a,b2) + E(a2,b) - E(a2,b2)` form.
    pub fn chsh(&self, minus_at: (usize, usize)) -> f64 {
        let mut s = 0.0;
        for a in 0..SETTINGS {
            for b in 0..SETTINGS {
                let e = self.correlator(a, b);
                s += if (a, b) == minus_at { -e } else { e };
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &BehaviorVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// `t·self + (1-t)·other`.
    pub fn mix(&self, other: &BehaviorVector, t: f64) -> BehaviorVector {
        let mut out = [0.0; 16];
        for (k, o) in out.iter_mut().enumerate() {
            *o = t * self.0[k] + (1.0 - t) * other.0[k];
        }
        BehaviorVector(out)
    }
}

fn check_weights(weights: &[f64], alphabet: usize) -> Result<()> {
    if alphabet == 0 {
        return Err(Error::Parameter("alphabet size must be positive".into()));
    }
    if weights.len() != alphabet {
        return Err(Error::Parameter(format!(
            "{} weights for an alphabet of {alphabet}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Parameter("weights must be nonnegative".into()));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Parameter(format!("weights sum to {s}")));
    }
    Ok(())
}

fn check_len(name: &str, table: &[Outcome], want: usize) -> Result<()> {
    if table.len() == want {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} has {} entries, expected {want}",
            table.len()
        )))
    }
}

fn uniform_weights(alphabet: usize) -> Vec<f64> {
    vec![1.0 / alphabet as f64; alphabet]
}

/// Local hidden-variable model: each party's outcome depends on its own
/// setting and λ only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalModel {
    alphabet: usize,
    /// `f[a*L + λ]`
    f: Vec<Outcome>,
    /// `g[b*L + λ]`
    g: Vec<Outcome>,
    weights: Vec<f64>,
}

impl LocalModel {
    pub fn new(alphabet: usize, f: Vec<Outcome>, g: Vec<Outcome>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights, alphabet)?;
        check_len("f", &f, SETTINGS * alphabet)?;
        check_len("g", &g, SETTINGS * alphabet)?;
        Ok(LocalModel {
            alphabet,
            f,
            g,
            weights,
        })
    }

    pub fn uniform(alphabet: usize, f: Vec<Outcome>, g: Vec<Outcome>) -> Result<Self> {
        LocalModel::new(alphabet, f, g, uniform_weights(alphabet.max(1)))
    }

    /// Deterministic model from two 2-bit tables: bit `a` of `f_bits` set
    /// means `f(a) = -`.
    pub fn deterministic(f_bits: usize, g_bits: usize) -> Self {
        let bit = |bits: usize, k: usize| Outcome::from_index((bits >> k) & 1);
        LocalModel {
            alphabet: 1,
            f: vec![bit(f_bits, 0), bit(f_bits, 1)],
            g: vec![bit(g_bits, 0), bit(g_bits, 1)],
            weights: vec![1.0],
        }
    }

    pub fn random<R: Rng>(rng: &mut R, alphabet: usize) -> Self {
        let mut table = || {
            (0..SETTINGS * alphabet)
                .map(|_| Outcome::from_sign(rng.gen()))
                .collect()
        };
        let (f, g) = (table(), table());
        let raw: Vec<f64> = (0..alphabet).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / s).collect();
        let rest: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - rest;
        LocalModel {
            alphabet,
            f,
            g,
            weights,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn f(&self, a: usize, lambda: usize) -> Outcome {
        self.f[a * self.alphabet + lambda]
    }

    pub fn g(&self, b: usize, lambda: usize) -> Outcome {
        self.g[b * self.alphabet + lambda]
    }

    /// `P(α,β|a,b) = Σ_λ w(λ)·[f(a,λ)=α][g(b,λ)=β]`.
    pub fn behavior(&self) -> BehaviorVector {
        let mut p = [0.0; 16];
        for a in 0..SETTINGS {
            for b in 0..SETTINGS {
                for (l, w) in self.weights.iter().enumerate() {
                    p[BehaviorVector::index(a, b, self.f(a, l), self.g(b, l))] += w;
                }
            }
        }
        BehaviorVector(p)
    }
}

/// Outcome tables for both chronologies over a finite λ alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyQuadruple {
    alphabet: usize,
    /// `F_AB[a*L + λ]`
    f_ab: Vec<Outcome>,
    /// `S_AB[(2a + b)*L + λ]`
    s_ab: Vec<Outcome>,
    /// `F_BA[b*L + λ]`
    f_ba: Vec<Outcome>,
    /// `S_BA[(2b + a)*L + λ]`
    s_ba: Vec<Outcome>,
    weights: Vec<f64>,
}

impl StrategyQuadruple {
    pub fn new(
        alphabet: usize,
        f_ab: Vec<Outcome>,
        s_ab: Vec<Outcome>,
        f_ba: Vec<Outcome>,
        s_ba: Vec<Outcome>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        check_weights(&weights, alphabet)?;
        check_len("F_AB", &f_ab, SETTINGS * alphabet)?;
        check_len("S_AB", &s_ab, SETTINGS * SETTINGS * alphabet)?;
        check_len("F_BA", &f_ba, SETTINGS * alphabet)?;
        check_len("S_BA", &s_ba, SETTINGS * SETTINGS * alphabet)?;
        Ok(StrategyQuadruple {
            alphabet,
            f_ab,
            s_ab,
            f_ba,
            s_ba,
            weights,
        })
    }

    /// `F_AB = f`, `S_BA(b,a,λ) = f(a,λ)`, `F_BA = g`, `S_AB(a,b,λ) = g(b,λ)`.
    pub fn from_local(model: &LocalModel) -> Self {
        let l = model.alphabet;
        let mut s_ab = Vec::with_capacity(4 * l);
        let mut s_ba = Vec::with_capacity(4 * l);
        for _first in 0..SETTINGS {
            for second in 0..SETTINGS {
                for lambda in 0..l {
                    s_ab.push(model.g(second, lambda));
                    s_ba.push(model.f(second, lambda));
                }
            }
        }
        StrategyQuadruple {
            alphabet: l,
            f_ab: model.f.clone(),
            s_ab,
            f_ba: model.g.clone(),
            s_ba,
            weights: model.weights.clone(),
        }
    }

    /// Independent uniformly random tables with random weights.
    pub fn random<R: Rng>(rng: &mut R, alphabet: usize) -> Self {
        let mut table = |n: usize| (0..n).map(|_| Outcome::from_sign(rng.gen())).collect::<Vec<_>>();
        let (f_ab, s_ab, f_ba, s_ba) = (
            table(2 * alphabet),
            table(4 * alphabet),
            table(2 * alphabet),
            table(4 * alphabet),
        );
        let weights = LocalModel::random(rng, alphabet).weights;
        StrategyQuadruple {
            alphabet,
            f_ab,
            s_ab,
            f_ba,
            s_ba,
            weights,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn f_ab(&self, a: usize, lambda: usize) -> Outcome {
        self.f_ab[a * self.alphabet + lambda]
    }

    pub fn s_ab(&self, a: usize, b: usize, lambda: usize) -> Outcome {
        self.s_ab[(2 * a + b) * self.alphabet + lambda]
    }

    pub fn f_ba(&self, b: usize, lambda: usize) -> Outcome {
        self.f_ba[b * self.alphabet + lambda]
    }

    pub fn s_ba(&self, b: usize, a: usize, lambda: usize) -> Outcome {
        self.s_ba[(2 * b + a) * self.alphabet + lambda]
    }

    pub fn set_s_ab(&mut self, a: usize, b: usize, lambda: usize, o: Outcome) {
        self.s_ab[(2 * a + b) * self.alphabet + lambda] = o;
    }

    pub fn set_s_ba(&mut self, b: usize, a: usize, lambda: usize, o: Outcome) {
        self.s_ba[(2 * b + a) * self.alphabet + lambda] = o;
    }

    /// Realized `(α, β)` for one λ under a chronology.
    pub fn outcomes(&self, chronology: Chronology, a: usize, b: usize, lambda: usize) -> (Outcome, Outcome) {
        match chronology {
            Chronology::AB => (self.f_ab(a, lambda), self.s_ab(a, b, lambda)),
            Chronology::BA => (self.s_ba(b, a, lambda), self.f_ba(b, lambda)),
        }
    }

    pub fn behavior(&self, chronology: Chronology) -> BehaviorVector {
        let mut p = [0.0; 16];
        for a in 0..SETTINGS {
            for b in 0..SETTINGS {
                for (l, w) in self.weights.iter().enumerate() {
                    let (alpha, beta) = self.outcomes(chronology, a, b, l);
                    p[BehaviorVector::index(a, b, alpha, beta)] += w;
                }
            }
        }
        BehaviorVector(p)
    }
}

/// Which covariance equation a triple violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Constraint {
    /// `F_AB(a,λ) = S_BA(b,a,λ)`
    AliceAgrees,
    /// `S_AB(a,b,λ) = F_BA(b,λ)`
    BobAgrees,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub a: usize,
    pub b: usize,
    pub lambda: usize,
    pub constraint: Constraint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub holds: bool,
    pub violations: Vec<Violation>,
}

/// Checks both covariance equations for every `(a, b, λ)`.
pub fn check_covariance_constraints(q: &StrategyQuadruple) -> ConstraintReport {
    let mut violations = Vec::new();
    for a in 0..SETTINGS {
        for b in 0..SETTINGS {
            for lambda in 0..q.alphabet {
                if q.f_ab(a, lambda) != q.s_ba(b, a, lambda) {
                    violations.push(Violation {
                        a,
                        b,
                        lambda,
                        constraint: Constraint::AliceAgrees,
                    });
                }
                if q.s_ab(a, b, lambda) != q.f_ba(b, lambda) {
                    violations.push(Violation {
                        a,
                        b,
                        lambda,
                        constraint: Constraint::BobAgrees,
                    });
                }
            }
        }
    }
    ConstraintReport {
        holds: violations.is_empty(),
        violations,
    }
}

/// Reads off the local model hidden in a covariant quadruple:
/// `f = F_AB`, `g = F_BA`.
pub fn reduce_to_local(q: &StrategyQuadruple) -> Result<LocalModel> {
    if !check_covariance_constraints(q).holds {
        return Err(Error::NotReducible);
    }
    Ok(LocalModel {
        alphabet: q.alphabet,
        f: q.f_ab.clone(),
        g: q.f_ba.clone(),
        weights: q.weights.clone(),
    })
}

/// The 16 entries of the quantum behavior for settings `(a0, a1)` and
/// `(b0, b1)`.
pub fn quantum_behavior(
    state: &TwoQubitState,
    a0: &BlochSetting,
    a1: &BlochSetting,
    b0: &BlochSetting,
    b1: &BlochSetting,
) -> Result<BehaviorVector> {
    let a_settings = [a0, a1];
    let b_settings = [b0, b1];
    let mut p = [0.0; 16];
    for (a, sa) in a_settings.iter().enumerate() {
        for (b, sb) in b_settings.iter().enumerate() {
            let d = joint_distribution(state, sa, sb, Chronology::AB)?;
            for alpha in Outcome::BOTH {
                for beta in Outcome::BOTH {
                    p[BehaviorVector::index(a, b, alpha, beta)] = d.get(alpha, beta);
                }
            }
        }
    }
    Ok(BehaviorVector(p))
}

/// Vertices of the local polytope, vertex `4*f_bits + g_bits` being
/// [`LocalModel::deterministic`]`(f_bits, g_bits)`.
pub fn enumerate_deterministic_strategies() -> Vec<BehaviorVector> {
    (0..4)
        .flat_map(|f| (0..4).map(move |g| LocalModel::deterministic(f, g).behavior()))
        .collect()
}

/// A CHSH inequality `sign · chsh(minus_at) ≤ 2` and its value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FacetCertificate {
    pub minus_at: (usize, usize),
    pub sign: i8,
    pub value: f64,
}

/// The largest of the eight CHSH facet values.
pub fn max_chsh_facet(p: &BehaviorVector) -> FacetCertificate {
    let mut best = FacetCertificate {
        minus_at: (0, 0),
        sign: 1,
        value: f64::NEG_INFINITY,
    };
    for a in 0..SETTINGS {
        for b in 0..SETTINGS {
            let s = p.chsh((a, b));
            for sign in [1i8, -1] {
                let v = sign as f64 * s;
                if v > best.value {
                    best = FacetCertificate {
                        minus_at: (a, b),
                        sign,
                        value: v,
                    };
                }
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FacetCheck {
    pub local: bool,
    pub max_facet_value: f64,
    pub facet: FacetCertificate,
}

/// Locality via the CHSH facets: for no-signaling 2-2-2 behaviors these
/// eight inequalities are the only nontrivial facets of the local polytope.
pub fn chsh_facet_check(p: &BehaviorVector) -> FacetCheck {
    let facet = max_chsh_facet(p);
    FacetCheck {
        local: facet.value <= LOCAL_BOUND + VERDICT_TOL,
        max_facet_value: facet.value,
        facet,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub local: bool,
    /// Vertex weights reproducing the behavior, when local.
    pub weights: Option<Vec<f64>>,
    /// Max entrywise error of the reconstruction, when local.
    pub reconstruction_error: Option<f64>,
    /// Phase-one optimum, when not local.
    pub infeasibility: Option<f64>,
    /// A violated CHSH facet, when not local.
    pub certificate: Option<FacetCertificate>,
}

/// Decides `p ∈ conv(vertices)` with a dense phase-one simplex over 16
/// vertex weights and 17 equality rows.
pub fn local_membership_lp(p: &BehaviorVector) -> Result<Membership> {
    p.validate(VERDICT_TOL)?;
    let vertices = enumerate_deterministic_strategies();
    let mut rows: Vec<Vec<f64>> = (0..16).map(|k| vertices.iter().map(|v| v.0[k]).collect()).collect();
    rows.push(vec![1.0; vertices.len()]);
    let mut rhs = p.0.to_vec();
    rhs.push(1.0);

    match simplex::phase_one(&rows, &rhs, VERDICT_TOL) {
        simplex::Feasibility::Feasible(q) => {
            let mut rebuilt = [0.0; 16];
            for (w, v) in q.iter().zip(&vertices) {
                for k in 0..16 {
                    rebuilt[k] += w * v.0[k];
                }
            }
            let err = BehaviorVector(rebuilt).max_abs_diff(p);
            Ok(Membership {
                local: true,
                weights: Some(q),
                reconstruction_error: Some(err),
                infeasibility: None,
                certificate: None,
            })
        }
        simplex::Feasibility::Infeasible { residual } => {
            let facet = max_chsh_facet(p);
            Ok(Membership {
                local: false,
                weights: None,
                reconstruction_error: None,
                infeasibility: Some(residual),
                certificate: (facet.value > LOCAL_BOUND).then_some(facet),
            })
        }
    }
}
