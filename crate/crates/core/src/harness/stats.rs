//! Wilcoxon rank-sum (Mann–Whitney U) test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Both groups need at least this many samples before the normal approximation is used.
pub const NORMAL_APPROX_MIN: usize = 8;

/// Largest pooled sample size for which the exact null distribution is computed.
const EXACT_MAX_TOTAL: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Mann–Whitney U for the first group.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `pooled`, plus the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided rank-sum test of `a` against `b`.
///
/// Ties get midranks. When either group is smaller than [`NORMAL_APPROX_MIN`] the
/// p-value comes from the exact permutation distribution of the rank sum;
/// otherwise from the tie-corrected normal approximation with continuity correction.
pub fn rank_sum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("rank-sum test needs two non-empty groups"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("rank-sum test got NaN"));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    let exact = (na < NORMAL_APPROX_MIN || nb < NORMAL_APPROX_MIN) && na + nb <= EXACT_MAX_TOTAL;
    let p_value = if exact { exact_p(&ranks, na) } else { normal_p(u, na, nb, &ties) };
    Ok(RankSum { u, p_value, exact })
}

/// Exact two-sided p-value: the share of all `C(n, na)` ways of drawing group A from the
/// pooled ranks whose rank sum lies at least as far from its mean as the observed one.
///
/// Midranks are doubled so every rank sum is an integer; the count of subsets per
/// (size, sum) is built up one pooled element at a time.
fn exact_p(ranks: &[f64], na: usize) -> f64 {
    let n = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0f64; max_sum + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let observed: usize = doubled[..na].iter().sum();
    // mean of the doubled rank sum is na * (n + 1)
    let mean = (na * (n + 1)) as i64;
    let dev = (observed as i64 - mean).abs();
    let total: f64 = ways[na].iter().sum();
    let extreme: f64 =
        ways[na].iter().enumerate().filter(|(s, _)| (*s as i64 - mean).abs() >= dev).map(|(_, w)| w).sum();
    (extreme / total).min(1.0)
}

fn normal_p(u: f64, na: usize, nb: usize, ties: &[usize]) -> f64 {
    let (na_f, nb_f) = (na as f64, nb as f64);
    let n = na_f + nb_f;
    let mean = na_f * nb_f / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = na_f * nb_f / 12.0 * ((n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    (libm::erfc(z / std::f64::consts::SQRT_2)).min(1.0)
}
