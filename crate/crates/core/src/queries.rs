//! Walsh–Hadamard counting queries, block arithmetic, and reconstruction.
//!
//! Query `q_j` (1-based) is `(1 + H_{j,i}) / 2` where `H` is the Sylvester
//! Hadamard matrix, `H_{j,i} = (-1)^popcount((j-1) & (i-1))`. Row 1 is the
//! all-ones query. Queries are grouped into `n / t` consecutive blocks of
//! width `t`.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::dataset::{Elem, Multiset};
use crate::error::{Error, Result};

/// A set of domain indices in `1..=n`.
pub type Subset = BTreeSet<u32>;

/// `+1` or `-1` entry of the Sylvester Hadamard matrix, 1-based.
pub fn hadamard(j: u32, i: u32) -> i8 {
    if ((j - 1) & (i - 1)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountingQueryFamily {
    n: u32,
    t: u32,
}

impl CountingQueryFamily {
    pub fn new(n: u32, t: u32) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParams(format!("n must be a power of two, got {n}")));
        }
        if t == 0 || n % t != 0 {
            return Err(Error::InvalidParams(format!("block width {t} does not divide n = {n}")));
        }
        Ok(Self { n, t })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    /// Number of blocks, `n / t`.
    pub fn blocks(&self) -> u32 {
        self.n / self.t
    }

    /// `q_j(i) ∈ {0, 1}`.
    pub fn query(&self, j: u32, i: u32) -> bool {
        hadamard(j, i) == 1
    }

    /// Support of `q_j`.
    pub fn support(&self, j: u32) -> Vec<u32> {
        (1..=self.n).filter(|&i| self.query(j, i)).collect()
    }

    /// Query indices of block `b` (1-based).
    pub fn block_queries(&self, b: u32) -> RangeInclusive<u32> {
        (b - 1) * self.t + 1..=b * self.t
    }

    fn check_query(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(Error::InvalidParams(format!("query index {j} outside 1..={}", self.n)));
        }
        Ok(())
    }

    /// `q_j(D) = Σ_{x ∈ D} q_j(x)` with multiplicity. Rejects ⋆.
    pub fn eval_query(&self, j: u32, d: &Multiset<Elem>) -> Result<u64> {
        if d.star_count() > 0 {
            return Err(Error::StarPresent);
        }
        self.eval_ignoring_star(j, d)
    }

    /// `q_j(T ∖ {⋆})` with multiplicity.
    pub fn eval_ignoring_star(&self, j: u32, d: &Multiset<Elem>) -> Result<u64> {
        self.check_query(j)?;
        d.check_domain(self.n)?;
        Ok(d.items().filter(|&(i, _)| self.query(j, i)).map(|(_, c)| c).sum())
    }

    /// Exact answers to block `b`'s queries on `T ∖ {⋆}`.
    pub fn answer_block(&self, b: u32, d: &Multiset<Elem>) -> Result<Vec<f64>> {
        if b == 0 || b > self.blocks() {
            return Err(Error::InvalidParams(format!("block {b} outside 1..={}", self.blocks())));
        }
        self.block_queries(b)
            .map(|j| self.eval_ignoring_star(j, d).map(|v| v as f64))
            .collect()
    }

    /// Exact answers to all `n` queries on `T ∖ {⋆}`.
    pub fn answer_all(&self, d: &Multiset<Elem>) -> Result<Vec<f64>> {
        (1..=self.n).map(|j| self.eval_ignoring_star(j, d).map(|v| v as f64)).collect()
    }
}

/// Answers to one block of `t` queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchAnswer {
    pub block_index: u32,
    pub values: Vec<f64>,
}

/// `[⌈(star − k)/(3k)⌉, ⌊(star + k)/(3k)⌋] ∩ [1, blocks]`. Empty ranges come
/// back with `start > end`.
pub fn valid_index_range(star: u64, k: u64, blocks: u32) -> RangeInclusive<u32> {
    assert!(k >= 1, "k must be positive");
    let (star, k) = (star as i128, k as i128);
    let lo = (star - k).div_euclid(3 * k) + i128::from((star - k).rem_euclid(3 * k) != 0);
    let hi = (star + k).div_euclid(3 * k);
    let lo = lo.max(1);
    let hi = hi.min(blocks as i128);
    if lo > hi {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    lo as u32..=hi as u32
}

/// `x` rounded to the nearest integer and clamped to `[1, blocks]`.
pub fn clamp_index(x: f64, blocks: u32) -> u32 {
    x.round().clamp(1.0, blocks as f64) as u32
}

/// In-place unnormalized fast Walsh–Hadamard transform.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// Decodes a subset from approximate answers to all `n` queries.
///
/// Answers become ±1 Fourier coefficients `ĉ_j = 2a_j − a_1`, the inverse
/// transform gives a real indicator estimate, and each coordinate is rounded
/// at 1/2 (ties to 0).
pub fn reconstruct(answers: &[f64], n: u32) -> Result<Subset> {
    Ok(indicator_estimate(answers, n)?
        .into_iter()
        .enumerate()
        .filter(|&(_, x)| x > 0.5)
        .map(|(i, _)| i as u32 + 1)
        .collect())
}

/// The real-valued estimate that [`reconstruct`] rounds.
pub fn indicator_estimate(answers: &[f64], n: u32) -> Result<Vec<f64>> {
    if answers.len() != n as usize {
        return Err(Error::LengthMismatch {
            expected: n as usize,
            actual: answers.len(),
        });
    }
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParams(format!("n must be a power of two, got {n}")));
    }
    let a1 = answers[0];
    let mut c: Vec<f64> = answers
        .iter()
        .enumerate()
        .map(|(j, &a)| if j == 0 { a1 } else { 2.0 * a - a1 })
        .collect();
    fwht(&mut c);
    c.iter_mut().for_each(|x| *x /= n as f64);
    Ok(c)
}

/// Exhaustive least-squares decoder for `n ≤ 16`; ties go to the
/// lexicographically smallest indicator `(x_1, …, x_n)`.
pub fn brute_force_reconstruct(answers: &[f64], n: u32) -> Result<Subset> {
    if n > 16 {
        return Err(Error::TooLarge(n as usize));
    }
    if answers.len() != n as usize {
        return Err(Error::LengthMismatch {
            expected: n as usize,
            actual: answers.len(),
        });
    }
    let family = CountingQueryFamily::new(n, 1)?;
    // bit (i-1) of a row mask is q_j(i)
    let rows: Vec<u32> = (1..=n)
        .map(|j| family.support(j).iter().fold(0u32, |m, &i| m | 1 << (i - 1)))
        .collect();
    let lex_key = |mask: u32| mask.reverse_bits() >> (32 - n);
    let mut best: Option<(f64, u32, u32)> = None;
    for mask in 0u32..(1u32 << n) {
        let loss: f64 = rows
            .iter()
            .zip(answers)
            .map(|(&row, &a)| (a - (row & mask).count_ones() as f64).powi(2))
            .sum();
        let key = lex_key(mask);
        let better = match best {
            None => true,
            Some((l, k, _)) => loss < l || (loss == l && key < k),
        };
        if better {
            best = Some((loss, key, mask));
        }
    }
    let mask = best.map(|b| b.2).unwrap_or(0);
    Ok((1..=n).filter(|&i| mask & (1 << (i - 1)) != 0).collect())
}

/// `|A △ B|`.
pub fn symmetric_difference(a: &Subset, b: &Subset) -> usize {
    a.symmetric_difference(b).count()
}
