//! Statistical structures: the compositions `{n(j)}` of a length-`N` sequence
//! over `q` labels.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        // stays integral: acc * (n - k + i) is divisible by i at every step
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    acc
}

/// Number `ν` of distinct statistical structures for `n` trials over `q`
/// labels: the compositions of `n` into `q` non-negative parts,
/// `C(n + q - 1, q - 1)`. With `q = 0` only the empty sequence qualifies.
pub fn count_statistical_structures(n: u64, q: u64) -> BigUint {
    if q == 0 {
        return if n == 0 { BigUint::one() } else { BigUint::zero() };
    }
    binomial(n + q - 1, q - 1)
}

/// Lexicographic rank `ω` of `counts` among all compositions of their sum
/// into `counts.len()` parts.
pub fn structure_index(counts: &[u64]) -> BigUint {
    let mut rest: u64 = counts.iter().sum();
    let mut rank = BigUint::zero();
    for (i, &c) in counts.iter().enumerate() {
        let parts_after = (counts.len() - i - 1) as u64;
        if parts_after == 0 {
            break;
        }
        // compositions whose i-th part is below c: sum over v < c of
        // C(rest - v + parts_after - 1, parts_after - 1), telescoped
        rank += binomial(rest + parts_after, parts_after) - binomial(rest - c + parts_after, parts_after);
        rest -= c;
    }
    rank
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceStatistics {
    pub n: u64,
    pub counts: Vec<u64>,
    pub structure_index: BigUint,
}

impl SequenceStatistics {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        SequenceStatistics { n: counts.iter().sum(), structure_index: structure_index(&counts), counts }
    }

    /// `ν` for this sequence length and label count.
    pub fn universe_size(&self) -> BigUint {
        count_statistical_structures(self.n, self.counts.len() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerate(n: u64, q: usize) -> Vec<Vec<u64>> {
        if q == 1 {
            return vec![vec![n]];
        }
        let mut out = Vec::new();
        for first in 0..=n {
            for mut rest in enumerate(n - first, q - 1) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_statistical_structures(2, 2), BigUint::from(3u32));
        assert_eq!(count_statistical_structures(5, 3), BigUint::from(21u32));
        for q in 1..5 {
            assert_eq!(count_statistical_structures(0, q), BigUint::one());
        }
        assert_eq!(count_statistical_structures(100, 3), BigUint::from(5151u32));
    }

    #[test]
    fn ranks_are_a_bijection_onto_0_nu() {
        for n in 0..=6 {
            for q in 1..=4 {
                let all = enumerate(n, q);
                for (expected, c) in all.iter().enumerate() {
                    assert_eq!(structure_index(c), BigUint::from(expected), "{c:?}");
                }
                let s = SequenceStatistics::from_counts(all[0].clone());
                assert_eq!(s.universe_size(), BigUint::from(all.len()));
            }
        }
    }
}
