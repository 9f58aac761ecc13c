//! Empirical meta-probability of frequency convergence, and the search for
//! an `N₀` past which it exceeds `1 − δ`.

use rayon::prelude::*;

use super::ProbError;
use crate::phenomenon::RandomPhenomenon;
use crate::rational::Rational;
use crate::seeding;

pub const DEFAULT_N0_START: u64 = 16;
pub const DEFAULT_N0_CAP: u64 = 1 << 20;

/// Fraction of `repetitions` independent length-`n` runs of `phenomenon`
/// whose relative frequency of `label` lies within `epsilon` of `p_label`.
///
/// The comparison `|n(j)/N − p| ≤ ε` is evaluated exactly, with `ε` taken
/// at the exact value of its `f64` representation. Repetition `r` draws from
/// the seed `derive_seed(seed, r)`.
pub fn meta_probability(
    phenomenon: &RandomPhenomenon,
    label: &str,
    p_label: &Rational,
    epsilon: f64,
    n: u64,
    repetitions: u64,
    seed: u64,
) -> Result<f64, ProbError> {
    let j = phenomenon
        .universe()
        .index_of(label)
        .ok_or_else(|| ProbError::UnknownLabel(label.to_string()))?;
    if epsilon.is_nan() || epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(ProbError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if n == 0 || repetitions == 0 {
        return Err(ProbError::InvalidParameter("N and M must be at least 1".into()));
    }
    let eps = Rational::from_f64(epsilon).expect("finite");
    let n_r = Rational::from_counts(n, 1);
    let tolerance = &eps * &n_r;
    let centre = p_label * &n_r;
    let hits = (0..repetitions)
        .into_par_iter()
        .filter(|&r| {
            let count = phenomenon
                .sampler(seeding::derive_seed(seed, r))
                .take(n as usize)
                .filter(|&e| e == j)
                .count() as u64;
            (&Rational::from_counts(count, 1) - &centre).abs() <= tolerance
        })
        .count();
    Ok(hits as f64 / repetitions as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub start: u64,
    pub cap: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { start: DEFAULT_N0_START, cap: DEFAULT_N0_CAP }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct N0Search {
    pub n0: u64,
    pub estimate: f64,
    /// Every tested `(N, estimate)`, in order.
    pub history: Vec<(u64, f64)>,
}

/// Doubling search for the first tested `N` whose meta-probability estimate
/// reaches `1 − delta`. Each tested `N` uses the child seed
/// `derive_seed(seed, N)`.
#[allow(clippy::too_many_arguments)]
pub fn find_n0(
    phenomenon: &RandomPhenomenon,
    label: &str,
    p_label: &Rational,
    epsilon: f64,
    delta: f64,
    repetitions: u64,
    seed: u64,
    options: SearchOptions,
) -> Result<N0Search, ProbError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ProbError::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    if options.start == 0 || options.start > options.cap {
        return Err(ProbError::InvalidParameter("search needs 1 <= start <= cap".into()));
    }
    let mut history = Vec::new();
    let mut n = options.start;
    while n <= options.cap {
        let est = meta_probability(phenomenon, label, p_label, epsilon, n, repetitions, seeding::derive_seed(seed, n))?;
        history.push((n, est));
        if est >= 1.0 - delta {
            return Ok(N0Search { n0: n, estimate: est, history });
        }
        n = match n.checked_mul(2) {
            Some(next) => next,
            None => break,
        };
    }
    Err(ProbError::NotReached { cap: options.cap, history })
}
