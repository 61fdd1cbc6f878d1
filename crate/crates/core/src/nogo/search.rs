use rayon::prelude::*;
use serde::Serialize;

use super::{BehaviorVector, LocalModel, StrategyQuadruple, SETTINGS, VERDICT_TOL};
use crate::error::{Error, Result};
use crate::quantum::Outcome;
use crate::Workers;

pub const MAX_SEARCH_ALPHABET: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub alphabet: usize,
    pub found: bool,
    pub best: StrategyQuadruple,
    pub best_distance: f64,
    /// Largest CHSH facet value over every behavior visited.
    pub max_chsh: f64,
    pub searched: u64,
}

/// Per-setting λ masks: bit λ of `masks[x]` set means outcome `-`.
fn masks(bits: u32, alphabet: usize) -> [u32; SETTINGS] {
    let low = (1u32 << alphabet) - 1;
    [bits & low, (bits >> alphabet) & low]
}

struct Candidate {
    distance: f64,
    index: u64,
    /// `max |Σ E·L|` over CHSH sign placements, an integer.
    chsh_numerator: i64,
}

/// Visits every covariant quadruple over a uniform λ alphabet of size
/// `alphabet`. Covariance leaves exactly two free tables (`F_AB`, `F_BA`),
/// so this is `2^(2L) · 2^(2L)` behaviors. Distances are max-entrywise.
pub fn exhaustive_nogo_search(
    alphabet: usize,
    target: &BehaviorVector,
    tol: f64,
    workers: Workers,
) -> Result<SearchResult> {
    if !(1..=MAX_SEARCH_ALPHABET).contains(&alphabet) {
        return Err(Error::SearchSpace(alphabet));
    }
    target.validate(VERDICT_TOL)?;
    let tables = 1u32 << (SETTINGS * alphabet);
    let l = alphabet as f64;
    let l_int = alphabet as i64;

    let visit = |f_bits: u32| -> Candidate {
        let fa = masks(f_bits, alphabet);
        let mut best = Candidate {
            distance: f64::INFINITY,
            index: 0,
            chsh_numerator: 0,
        };
        let mut chsh_max = 0i64;
        for g_bits in 0..tables {
            let gb = masks(g_bits, alphabet);
            let mut distance: f64 = 0.0;
            let mut corr = [[0i64; 2]; 2];
            for a in 0..SETTINGS {
                for b in 0..SETTINGS {
                    let both = (fa[a] & gb[b]).count_ones() as i64;
                    let minus_a = fa[a].count_ones() as i64;
                    let minus_b = gb[b].count_ones() as i64;
                    let counts = [l_int - minus_a - minus_b + both, minus_b - both, minus_a - both, both];
                    let k = 8 * a + 4 * b;
                    for (c, t) in counts.iter().zip(&target.0[k..k + 4]) {
                        distance = distance.max((*c as f64 / l - t).abs());
                    }
                    corr[a][b] = l_int - 2 * (fa[a] ^ gb[b]).count_ones() as i64;
                }
            }
            let total: i64 = corr.iter().flatten().sum();
            for a in 0..SETTINGS {
                for b in 0..SETTINGS {
                    chsh_max = chsh_max.max((total - 2 * corr[a][b]).abs());
                }
            }
            if distance < best.distance {
                best.distance = distance;
                best.index = ((f_bits as u64) << 32) | g_bits as u64;
            }
        }
        best.chsh_numerator = chsh_max;
        best
    };

    let reduce = |x: Candidate, y: Candidate| -> Candidate {
        let chsh_numerator = x.chsh_numerator.max(y.chsh_numerator);
        let keep_x = x.distance < y.distance || (x.distance == y.distance && x.index <= y.index);
        let mut c = if keep_x { x } else { y };
        c.chsh_numerator = chsh_numerator;
        c
    };

    let best = workers.run(|| {
        (0..tables).into_par_iter().map(visit).reduce(
            || Candidate {
                distance: f64::INFINITY,
                index: u64::MAX,
                chsh_numerator: 0,
            },
            reduce,
        )
    });

    let f_bits = (best.index >> 32) as u32;
    let g_bits = (best.index & 0xffff_ffff) as u32;
    let table = |bits: u32| -> Vec<Outcome> {
        (0..SETTINGS * alphabet)
            .map(|k| Outcome::from_index(((bits >> k) & 1) as usize))
            .collect()
    };
    let model = LocalModel::uniform(alphabet, table(f_bits), table(g_bits))?;

    Ok(SearchResult {
        alphabet,
        found: best.distance <= tol,
        best: StrategyQuadruple::from_local(&model),
        best_distance: best.distance,
        max_chsh: best.chsh_numerator as f64 / l,
        searched: tables as u64 * tables as u64,
    })
}
