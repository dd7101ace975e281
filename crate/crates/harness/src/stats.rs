//! Sample statistics for comparing optimizers: mean/std, the two-sided
//! Wilcoxon rank-sum test, win/lose/tie counts and average ranks.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Largest combined sample size for which the exact null distribution is
/// enumerated.
pub const EXACT_MAX_TOTAL: usize = 12;

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); 0 for fewer than two
/// values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// 1-based ranks of `xs` with ties sharing their average rank, plus the
/// sizes of all tie groups.
pub fn average_ranks(xs: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        let shared = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = shared;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann–Whitney `U` of the first sample: its rank sum minus `n(n+1)/2`.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided Wilcoxon rank-sum (Mann–Whitney) test.
///
/// Exact when the samples have no ties and `|a| + |b| ≤ 12`; otherwise the
/// normal approximation with tie and continuity corrections. Both samples
/// need at least three values and must be free of NaN.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::Stats(format!(
            "rank-sum test needs at least 3 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Stats("rank-sum test got NaN".into()));
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let u = rank_sum - (n * (n + 1)) as f64 / 2.0;

    if ties.len() == 1 && ties[0] == n + m {
        return Ok(RankSumTest { statistic: u, p_value: 1.0, exact: false });
    }
    if ties.is_empty() && n + m <= EXACT_MAX_TOTAL {
        // without ties the rank sum is an integer
        let p = exact_p_value(n, m, rank_sum.round() as usize);
        return Ok(RankSumTest { statistic: u, p_value: p, exact: true });
    }
    Ok(RankSumTest { statistic: u, p_value: normal_p_value(n, m, u, &ties), exact: false })
}

/// `counts[s]` = number of size-`k` subsets of `{1..total}` whose sum is `s`.
fn subset_sum_counts(total: usize, k: usize) -> Vec<u64> {
    let max_sum = total * (total + 1) / 2;
    // table[j][s]: subsets of size j drawn from the values seen so far
    let mut table = vec![vec![0u64; max_sum + 1]; k + 1];
    table[0][0] = 1;
    for value in 1..=total {
        for j in (1..=k.min(value)).rev() {
            for s in (value..=max_sum).rev() {
                table[j][s] += table[j - 1][s - value];
            }
        }
    }
    table.swap_remove(k)
}

fn exact_p_value(n: usize, m: usize, rank_sum: usize) -> f64 {
    let counts = subset_sum_counts(n + m, n);
    let total: u64 = counts.iter().sum();
    let lower: u64 = counts[..=rank_sum].iter().sum();
    let upper: u64 = counts[rank_sum..].iter().sum();
    (2.0 * lower.min(upper) as f64 / total as f64).min(1.0)
}

fn normal_p_value(n: usize, m: usize, u: f64, ties: &[usize]) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_term);
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - nf * mf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * normal.sf(z)).min(1.0)
}

/// Pairwise verdicts of A against B over a set of functions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ComparisonCell {
    pub win: usize,
    pub lose: usize,
    pub tie: usize,
    pub alpha: f64,
}

impl ComparisonCell {
    pub fn total(&self) -> usize {
        self.win + self.lose + self.tie
    }

    pub fn mirrored(&self) -> Self {
        Self { win: self.lose, lose: self.win, ..*self }
    }
}

/// Verdict for one function: `Some(true)` if A wins, `Some(false)` if B
/// wins, `None` for a tie.
pub fn verdict(a: &[f64], b: &[f64], alpha: f64) -> Result<Option<bool>> {
    let test = wilcoxon_rank_sum(a, b)?;
    if test.p_value >= alpha {
        return Ok(None);
    }
    let (ma, mb) = (mean(a), mean(b));
    // a significant shift with identical means has no side to credit
    Ok(if ma < mb {
        Some(true)
    } else if mb < ma {
        Some(false)
    } else {
        None
    })
}

/// Counts per-function wins, losses and ties of A against B
/// (minimization). Both maps must cover the same functions.
pub fn win_lose_tie(
    a: &BTreeMap<String, Vec<f64>>,
    b: &BTreeMap<String, Vec<f64>>,
    alpha: f64,
) -> Result<ComparisonCell> {
    if !a.keys().eq(b.keys()) {
        let only_a: Vec<_> = a.keys().filter(|k| !b.contains_key(*k)).collect();
        let only_b: Vec<_> = b.keys().filter(|k| !a.contains_key(*k)).collect();
        return Err(Error::Stats(format!(
            "function lists differ (only in A: {only_a:?}, only in B: {only_b:?})"
        )));
    }
    let mut cell = ComparisonCell { win: 0, lose: 0, tie: 0, alpha };
    for (name, xs) in a {
        match verdict(xs, &b[name], alpha).map_err(|e| Error::Stats(format!("{name}: {e}")))? {
            Some(true) => cell.win += 1,
            Some(false) => cell.lose += 1,
            None => cell.tie += 1,
        }
    }
    Ok(cell)
}

/// Average placement of every algorithm over the functions of `table`
/// (function → algorithm → mean gap). Rank 1 is the lowest gap; equal
/// gaps share the average rank.
pub fn average_rank(table: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<BTreeMap<String, f64>> {
    let Some(first) = table.values().next() else {
        return Err(Error::Stats("no functions to rank".into()));
    };
    if first.len() < 2 {
        return Err(Error::Stats("ranking needs at least two algorithms".into()));
    }
    let mut totals: BTreeMap<String, f64> = first.keys().map(|k| (k.clone(), 0.0)).collect();
    for (name, row) in table {
        if !row.keys().eq(first.keys()) {
            return Err(Error::Stats(format!("function {name} does not cover the same algorithms")));
        }
        let gaps: Vec<f64> = row.values().copied().collect();
        let (ranks, _) = average_ranks(&gaps);
        for (total, r) in totals.values_mut().zip(ranks) {
            *total += r;
        }
    }
    let f = table.len() as f64;
    Ok(totals.into_iter().map(|(k, v)| (k, v / f)).collect())
}
