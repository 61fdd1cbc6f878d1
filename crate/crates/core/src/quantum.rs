//! Exact two-qubit quantum mechanics: pure states, projective spin
//! measurements along Bloch directions, sequential collapse, joint outcome
//! distributions and the CHSH combination.
//!
//! Conventions:
//!
//! * Basis order is `|00>, |01>, |10>, |11>` with Alice's qubit first; `|0>`
//!   is spin-up along `z` and corresponds to outcome `+`.
//! * The spin projector for outcome `±` along unit vector `n` is
//!   `(I ± n·σ) / 2` with the standard Pauli matrices.
//! * CHSH is `E(a,b) + E(a,b2) + E(a2,b) - E(a2,b2)` with `E = Σ αβ P(α,β)`.
//!   For the singlet this is `-2√2` at `a=z, a2=x, b=(z+x)/√2, b2=(z-x)/√2`.

use num_complex::Complex64;
use serde::Serialize;

use crate::chronology::Chronology;
use crate::error::{Error, Result};

/// Tolerance for norms and sums on exact-arithmetic paths.
pub const EXACT_TOL: f64 = 1e-12;

/// Amplitudes at or below this modulus are skipped when fixing global phase.
const PHASE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Party {
    A,
    B,
}

/// A measurement result, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// `0` for `+`, `1` for `-`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Outcome {
        if i == 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn from_sign(positive: bool) -> Outcome {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

/// A spin measurement direction on the Bloch sphere owned by one party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochSetting {
    direction: [f64; 3],
    party: Party,
}

impl BlochSetting {
    /// Accepts `direction` only if it is already a unit vector (within 1e-12).
    pub fn new(party: Party, direction: [f64; 3]) -> Result<Self> {
        check_finite(&direction)?;
        let n = norm3(&direction);
        if (n - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidSetting(format!(
                "direction {direction:?} has norm {n}, expected 1"
            )));
        }
        Ok(BlochSetting { direction, party })
    }

    /// Scales a nonzero vector to unit length. The zero vector is rejected.
    pub fn from_direction(party: Party, v: [f64; 3]) -> Result<Self> {
        check_finite(&v)?;
        let n = norm3(&v);
        if n == 0.0 {
            return Err(Error::InvalidSetting("zero direction vector".into()));
        }
        Ok(BlochSetting {
            direction: [v[0] / n, v[1] / n, v[2] / n],
            party,
        })
    }

    /// Direction in the x-z plane at `degrees` from `+z` towards `+x`.
    pub fn from_angle_deg(party: Party, degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::InvalidSetting(format!("angle {degrees} is not finite")));
        }
        let t = degrees.to_radians();
        Ok(BlochSetting {
            direction: [t.sin(), 0.0, t.cos()],
            party,
        })
    }

    pub fn z(party: Party) -> Self {
        BlochSetting {
            direction: [0.0, 0.0, 1.0],
            party,
        }
    }

    pub fn x(party: Party) -> Self {
        BlochSetting {
            direction: [1.0, 0.0, 0.0],
            party,
        }
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn party(&self) -> Party {
        self.party
    }

    /// Same direction, owned by the other party.
    pub fn for_party(&self, party: Party) -> Self {
        BlochSetting {
            direction: self.direction,
            party,
        }
    }

    /// The 2×2 projector `(I ± n·σ)/2`, row major.
    pub fn projector(&self, outcome: Outcome) -> [[Complex64; 2]; 2] {
        let [nx, ny, nz] = self.direction;
        let s = outcome.value() as f64;
        let half = 0.5;
        [
            [
                Complex64::new(half * (1.0 + s * nz), 0.0),
                Complex64::new(half * s * nx, -half * s * ny),
            ],
            [
                Complex64::new(half * s * nx, half * s * ny),
                Complex64::new(half * (1.0 - s * nz), 0.0),
            ],
        ]
    }
}

fn check_finite(v: &[f64; 3]) -> Result<()> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidSetting(format!("non-finite component in {v:?}")))
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Pure state of two qubits, amplitudes ordered `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

impl TwoQubitState {
    /// Accepts amplitudes whose squared norm is 1 within 1e-12.
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let s = squared_norm(&amps);
        if !s.is_finite() || (s - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(s));
        }
        Ok(TwoQubitState { amps })
    }

    /// Rescales to unit norm; rejects the zero vector.
    pub fn normalized(amps: [Complex64; 4]) -> Result<Self> {
        let s = squared_norm(&amps);
        if !s.is_finite() || s == 0.0 {
            return Err(Error::InvalidState(s));
        }
        let k = 1.0 / s.sqrt();
        Ok(TwoQubitState {
            amps: amps.map(|a| a * k),
        })
    }

    /// Computational basis state `|i>`, `i` in `0..4`.
    pub fn basis(i: usize) -> Self {
        let mut amps = [Complex64::new(0.0, 0.0); 4];
        amps[i] = Complex64::new(1.0, 0.0);
        TwoQubitState { amps }
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amps
    }

    pub fn squared_norm(&self) -> f64 {
        squared_norm(&self.amps)
    }

    fn validate(&self) -> Result<()> {
        let s = self.squared_norm();
        if (s - 1.0).abs() > EXACT_TOL {
            Err(Error::InvalidState(s))
        } else {
            Ok(())
        }
    }

    /// `(P ⊗ I)ψ` for party A, `(I ⊗ P)ψ` for party B. Not renormalized.
    fn apply_local(&self, party: Party, op: &[[Complex64; 2]; 2]) -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                out[2 * i + j] = match party {
                    Party::A => op[i][0] * self.amps[j] + op[i][1] * self.amps[2 + j],
                    Party::B => op[j][0] * self.amps[2 * i] + op[j][1] * self.amps[2 * i + 1],
                };
            }
        }
        out
    }

    /// Multiplies by a global phase so the first nonzero amplitude is real
    /// and positive.
    fn with_fixed_phase(mut amps: [Complex64; 4]) -> [Complex64; 4] {
        if let Some(lead) = amps.iter().find(|a| a.norm() > PHASE_EPS) {
            let phase = lead.conj() / lead.norm();
            for a in amps.iter_mut() {
                *a *= phase;
            }
        }
        amps
    }
}

fn squared_norm(amps: &[Complex64; 4]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// `(|01> - |10>)/√2`.
pub fn make_singlet() -> TwoQubitState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    TwoQubitState {
        amps: [
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    }
}

/// Probability that the setting's owner observes `outcome`.
pub fn born_marginal(state: &TwoQubitState, setting: &BlochSetting, outcome: Outcome) -> Result<f64> {
    state.validate()?;
    let projected = state.apply_local(setting.party(), &setting.projector(outcome));
    // <ψ|Π|ψ> = ‖Πψ‖² for an orthogonal projector.
    Ok(squared_norm(&projected).clamp(0.0, 1.0))
}

/// Post-measurement state for `outcome` on the setting's owner.
pub fn collapse(state: &TwoQubitState, setting: &BlochSetting, outcome: Outcome) -> Result<TwoQubitState> {
    state.validate()?;
    let projected = state.apply_local(setting.party(), &setting.projector(outcome));
    let p = squared_norm(&projected);
    if p <= 0.0 {
        return Err(Error::ImpossibleOutcome);
    }
    let k = 1.0 / p.sqrt();
    Ok(TwoQubitState {
        amps: TwoQubitState::with_fixed_phase(projected.map(|a| a * k)),
    })
}

/// Outcome probabilities `P(α,β)` for a measurement pair, ordered
/// `(++, +-, -+, --)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    probs: [f64; 4],
    a: BlochSetting,
    b: BlochSetting,
}

impl JointDistribution {
    pub fn new(probs: [f64; 4], a: BlochSetting, b: BlochSetting) -> Self {
        JointDistribution { probs, a, b }
    }

    pub fn get(&self, alpha: Outcome, beta: Outcome) -> f64 {
        self.probs[2 * alpha.index() + beta.index()]
    }

    pub fn probs(&self) -> &[f64; 4] {
        &self.probs
    }

    pub fn settings(&self) -> (BlochSetting, BlochSetting) {
        (self.a, self.b)
    }

    /// `E = Σ αβ P(α,β)`.
    pub fn correlator(&self) -> f64 {
        self.probs[0] - self.probs[1] - self.probs[2] + self.probs[3]
    }

    pub fn marginal_a(&self, alpha: Outcome) -> f64 {
        let i = 2 * alpha.index();
        self.probs[i] + self.probs[i + 1]
    }

    pub fn marginal_b(&self, beta: Outcome) -> f64 {
        let j = beta.index();
        self.probs[j] + self.probs[2 + j]
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Total variation distance, half the L1 distance.
    pub fn total_variation(&self, other: &JointDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
    }
}

fn check_parties(a: &BlochSetting, b: &BlochSetting) -> Result<()> {
    if a.party() != Party::A || b.party() != Party::B {
        return Err(Error::InvalidSetting(format!(
            "expected an A setting and a B setting, got {:?} and {:?}",
            a.party(),
            b.party()
        )));
    }
    Ok(())
}

/// Joint distribution computed by measuring the chronologically first party,
/// collapsing, then measuring the second.
pub fn joint_distribution(
    state: &TwoQubitState,
    a: &BlochSetting,
    b: &BlochSetting,
    ordering: Chronology,
) -> Result<JointDistribution> {
    check_parties(a, b)?;
    state.validate()?;
    let (first, second) = match ordering {
        Chronology::AB => (a, b),
        Chronology::BA => (b, a),
    };
    let mut probs = [0.0; 4];
    for o1 in Outcome::BOTH {
        let p1 = born_marginal(state, first, o1)?;
        if p1 <= 0.0 {
            continue;
        }
        let post = collapse(state, first, o1)?;
        for o2 in Outcome::BOTH {
            let p2 = born_marginal(&post, second, o2)?;
            let (alpha, beta) = match ordering {
                Chronology::AB => (o1, o2),
                Chronology::BA => (o2, o1),
            };
            probs[2 * alpha.index() + beta.index()] = p1 * p2;
        }
    }
    Ok(JointDistribution { probs, a: *a, b: *b })
}

/// `E(a,b)` computed with chronology AB.
pub fn correlator(state: &TwoQubitState, a: &BlochSetting, b: &BlochSetting) -> Result<f64> {
    Ok(joint_distribution(state, a, b, Chronology::AB)?.correlator())
}

/// `E(a,b) + E(a,b2) + E(a2,b) - E(a2,b2)`.
pub fn chsh_value(
    state: &TwoQubitState,
    a: &BlochSetting,
    a2: &BlochSetting,
    b: &BlochSetting,
    b2: &BlochSetting,
) -> Result<f64> {
    Ok(correlator(state, a, b)? + correlator(state, a, b2)? + correlator(state, a2, b)? - correlator(state, a2, b2)?)
}

/// Joint distributions for every pair of an A-setting list and a B-setting
/// list, stored row major (`a` index outer).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationTable {
    a_settings: Vec<BlochSetting>,
    b_settings: Vec<BlochSetting>,
    cells: Vec<JointDistribution>,
}

impl CorrelationTable {
    pub fn new(
        a_settings: Vec<BlochSetting>,
        b_settings: Vec<BlochSetting>,
        cells: Vec<JointDistribution>,
    ) -> Result<Self> {
        if cells.len() != a_settings.len() * b_settings.len() {
            return Err(Error::Parameter(format!(
                "{} cells for a {}x{} table",
                cells.len(),
                a_settings.len(),
                b_settings.len()
            )));
        }
        Ok(CorrelationTable {
            a_settings,
            b_settings,
            cells,
        })
    }

    /// Exact table under the given chronology.
    pub fn exact(
        state: &TwoQubitState,
        a_settings: &[BlochSetting],
        b_settings: &[BlochSetting],
        ordering: Chronology,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(a_settings.len() * b_settings.len());
        for a in a_settings {
            for b in b_settings {
                cells.push(joint_distribution(state, a, b, ordering)?);
            }
        }
        CorrelationTable::new(a_settings.to_vec(), b_settings.to_vec(), cells)
    }

    pub fn a_settings(&self) -> &[BlochSetting] {
        &self.a_settings
    }

    pub fn b_settings(&self) -> &[BlochSetting] {
        &self.b_settings
    }

    pub fn cell(&self, i: usize, j: usize) -> &JointDistribution {
        &self.cells[i * self.b_settings.len() + j]
    }

    pub fn cells(&self) -> &[JointDistribution] {
        &self.cells
    }

    /// Largest change of either party's marginal when only the other
    /// party's setting changes. Zero for a no-signaling table.
    pub fn signaling_deviation(&self) -> f64 {
        let (na, nb) = (self.a_settings.len(), self.b_settings.len());
        let mut worst: f64 = 0.0;
        for o in Outcome::BOTH {
            for i in 0..na {
                let base = self.cell(i, 0).marginal_a(o);
                for j in 1..nb {
                    worst = worst.max((self.cell(i, j).marginal_a(o) - base).abs());
                }
            }
            for j in 0..nb {
                let base = self.cell(0, j).marginal_b(o);
                for i in 1..na {
                    worst = worst.max((self.cell(i, j).marginal_b(o) - base).abs());
                }
            }
        }
        worst
    }
}
