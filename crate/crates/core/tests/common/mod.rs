//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: u64) -> Vec<f64> {
    let mut t = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0f64;
    t.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        t.push(acc);
    }
    t
}

/// `P(|X/n − p| ≤ eps)` for `X ~ Bin(n, p)`, with the bound compared exactly
/// (`eps` at the exact value of its double) and the mass summed in log space.
pub fn binomial_within(n: u64, p_num: u64, p_den: u64, eps: f64) -> f64 {
    let lf = ln_factorials(n);
    let p = p_num as f64 / p_den as f64;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let eps = BigRational::from_float(eps).unwrap();
    let big = |v: u64| BigRational::from_integer(BigInt::from(v));
    let center = big(n) * BigRational::new(BigInt::from(p_num), BigInt::from(p_den));
    let radius = &eps * big(n);
    let mut total = 0.0;
    for k in 0..=n {
        let d = big(k) - &center;
        let d = if d < BigRational::from_integer(0.into()) { -d } else { d };
        if d <= radius {
            let mut lpmf = lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
            if k > 0 {
                lpmf += k as f64 * lp;
            }
            if k < n {
                lpmf += (n - k) as f64 * lq;
            }
            total += lpmf.exp();
        }
    }
    total
}

/// Every count vector of length `q` summing to `n`.
pub fn compositions(n: u64, q: usize) -> Vec<Vec<u64>> {
    fn go(n: u64, q: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if q == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            go(n - first, q - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if q == 0 {
        if n == 0 {
            out.push(vec![]);
        }
        return out;
    }
    go(n, q, &mut Vec::new(), &mut out);
    out
}

/// Smallest family of subsets of `0..size` containing `U`, `∅` and the
/// generators, closed under union and intersection (and complement when
/// asked), by repeating passes until nothing changes. Subsets are bitmasks.
pub fn brute_closure(size: usize, gens: &[u32], complement: bool) -> std::collections::BTreeSet<u32> {
    let full = if size == 32 { u32::MAX } else { (1u32 << size) - 1 };
    let mut fam: std::collections::BTreeSet<u32> = gens.iter().copied().collect();
    fam.insert(0);
    fam.insert(full);
    loop {
        let cur: Vec<u32> = fam.iter().copied().collect();
        let before = fam.len();
        for &a in &cur {
            if complement {
                fam.insert(full & !a);
            }
            for &b in &cur {
                fam.insert(a | b);
                fam.insert(a & b);
            }
        }
        if fam.len() == before {
            return fam;
        }
    }
}

/// Upper `alpha` quantile of chi-square with 2 degrees of freedom, where
/// the survival function is `exp(−x/2)`.
pub fn chi2_df2_critical(alpha: f64) -> f64 {
    -2.0 * alpha.ln()
}

/// Two-sample chi-square homogeneity statistic over matching categories.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let n = (na + nb) as f64;
    let mut stat = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        for (obs, tot) in [(x, na), (y, nb)] {
            let exp = col * tot as f64 / n;
            stat += (obs as f64 - exp).powi(2) / exp;
        }
    }
    stat
}

#[test]
fn oracle_sanity() {
    // P(|X/2 - 1/2| <= 1/4) for a fair pair of flips: only X = 1 qualifies
    assert!((binomial_within(2, 1, 2, 0.25) - 0.5).abs() < 1e-12);
    assert!((binomial_within(10, 1, 2, 1.0) - 1.0).abs() < 1e-12);
    assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    assert_eq!(compositions(5, 3).len(), 21);
    assert_eq!(brute_closure(3, &[0b001], false).len(), 3);
    assert_eq!(brute_closure(3, &[0b001], true).len(), 4);
    assert!((chi2_df2_critical(0.001) - 13.815510557964274).abs() < 1e-9);
}

/// A random feasible unique-edge spec with sides in `2..=max_side` and
/// between one and five labels, every label used at least once.
pub fn fuzz_spec(rng: &mut impl rand::Rng, max_side: u32, seed: u64) -> fpl_core::painting::PaintingSpec {
    let w = rng.gen_range(2..=max_side);
    let h = rng.gen_range(2..=max_side);
    let cells = w * h;
    let q = rng.gen_range(1..=5.min(cells - 1));
    let mut counts = vec![1u32; q as usize];
    for _ in 0..cells - q {
        counts[rng.gen_range(0..q as usize)] += 1;
    }
    fpl_core::painting::PaintingSpec::new(w, h, &counts, seed)
}
