//! Hypergeometric probabilities, the two-sided Fisher exact test and the
//! support-only lower bound on its p-value.
//!
//! All arithmetic is in log space through log-gamma, so margins in the
//! millions stay representable. [`ExactTest`] memoizes p-values per
//! `(sup_total, sup_pos)` and lower bounds per `sup_total` for fixed margins.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

/// Relative tolerance when deciding whether a table is at most as probable as
/// the observed one.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Row totals and the upper-left cell of a 2×2 table.
///
/// `sup_pos` is the number of positive trajectories among the `sup_total`
/// that support a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContingencyCounts {
    pub sup_pos: usize,
    pub sup_total: usize,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl ContingencyCounts {
    pub fn new(sup_pos: usize, sup_total: usize, n_pos: usize, n_neg: usize) -> Self {
        ContingencyCounts {
            sup_pos,
            sup_total,
            n_pos,
            n_neg,
        }
    }

    pub fn is_valid(&self) -> bool {
        let (lo, hi) = support_range(self.sup_total, self.n_pos, self.n_neg);
        self.sup_total <= self.n_pos + self.n_neg && lo <= self.sup_pos && self.sup_pos <= hi
    }
}

/// Attainable values of the upper-left cell, `[max(0, a - n_neg), min(n_pos, a)]`.
pub fn support_range(sup_total: usize, n_pos: usize, n_neg: usize) -> (usize, usize) {
    (sup_total.saturating_sub(n_neg), n_pos.min(sup_total))
}

/// `ln(k!)`, exactly zero for `k < 2`.
pub fn ln_factorial(k: usize) -> f64 {
    if k < 2 {
        0.0
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

fn ln_choose_with(lnfact: impl Fn(usize) -> f64, n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        0.0
    } else {
        lnfact(n) - lnfact(k) - lnfact(n - k)
    }
}

fn log_pmf_with(
    lnfact: &impl Fn(usize) -> f64,
    x: usize,
    a: usize,
    n_pos: usize,
    n_neg: usize,
) -> f64 {
    ln_choose_with(lnfact, n_pos, x) + ln_choose_with(lnfact, n_neg, a - x)
        - ln_choose_with(lnfact, n_pos + n_neg, a)
}

/// `ln P(X = x)` for `X ~ Hypergeometric(n_pos + n_neg, n_pos, a)`.
///
/// Panics when `x` lies outside the support.
pub fn hypergeom_log_pmf(x: usize, a: usize, n_pos: usize, n_neg: usize) -> f64 {
    let c = ContingencyCounts::new(x, a, n_pos, n_neg);
    assert!(
        c.is_valid(),
        "table outside the hypergeometric support: {c:?}"
    );
    log_pmf_with(&ln_factorial, x, a, n_pos, n_neg)
}

/// Two-sided p-values for every attainable `x` at total support `a`,
/// indexed by `x - lo`.
fn p_value_row(lnfact: &impl Fn(usize) -> f64, a: usize, n_pos: usize, n_neg: usize) -> Box<[f64]> {
    let (lo, hi) = support_range(a, n_pos, n_neg);
    let logp: Vec<f64> = (lo..=hi)
        .map(|x| log_pmf_with(lnfact, x, a, n_pos, n_neg))
        .collect();

    let mut order: Vec<usize> = (0..logp.len()).collect();
    order.sort_by(|&i, &j| logp[i].total_cmp(&logp[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| logp[i]).collect();
    // least probable tables first
    let prefix: Vec<f64> = sorted
        .iter()
        .scan(0.0, |acc, &lp| {
            *acc += lp.exp();
            Some(*acc)
        })
        .collect();

    logp.iter()
        .map(|&lp| {
            let limit = lp + TIE_TOLERANCE * lp.abs();
            let upto = sorted.partition_point(|&v| v <= limit);
            clamp_probability(prefix[upto - 1])
        })
        .collect()
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Sum of the probabilities of all tables no more probable than the observed
/// one.
pub fn fisher_two_sided_p(c: ContingencyCounts) -> f64 {
    assert!(
        c.is_valid(),
        "table outside the hypergeometric support: {c:?}"
    );
    let (lo, _) = support_range(c.sup_total, c.n_pos, c.n_neg);
    p_value_row(&ln_factorial, c.sup_total, c.n_pos, c.n_neg)[c.sup_pos - lo]
}

fn log_lower_bound_with(
    lnfact: &impl Fn(usize) -> f64,
    a: usize,
    n_pos: usize,
    n_neg: usize,
) -> f64 {
    let l = |sup: usize, x: usize| log_pmf_with(lnfact, x, sup, n_pos, n_neg);
    let upper = if a <= n_pos { l(a, a) } else { l(n_pos, n_pos) };
    let lower = if a <= n_neg { l(a, 0) } else { l(n_neg, 0) };
    upper.min(lower)
}

/// Smallest p-value any labeling with these margins could give a window of
/// total support `a`. Depends only on `a`, never on `sup_pos`.
pub fn p_lower_bound(a: usize, n_pos: usize, n_neg: usize) -> f64 {
    assert!(
        a <= n_pos + n_neg,
        "support {a} exceeds n = {}",
        n_pos + n_neg
    );
    clamp_probability(log_lower_bound_with(&ln_factorial, a, n_pos, n_neg).exp())
}

/// Memoized exact tests for fixed margins. Safe to share between threads.
#[derive(Debug)]
pub struct ExactTest {
    n_pos: usize,
    n_neg: usize,
    lnfact: Vec<f64>,
    rows: Vec<OnceLock<Box<[f64]>>>,
    bounds: Vec<f64>,
}

impl ExactTest {
    pub fn new(n_pos: usize, n_neg: usize) -> Self {
        let n = n_pos + n_neg;
        let lnfact: Vec<f64> = (0..=n).map(ln_factorial).collect();
        let f = |k: usize| lnfact[k];
        let bounds = (0..=n)
            .map(|a| clamp_probability(log_lower_bound_with(&f, a, n_pos, n_neg).exp()))
            .collect();
        ExactTest {
            n_pos,
            n_neg,
            rows: (0..=n).map(|_| OnceLock::new()).collect(),
            lnfact,
            bounds,
        }
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Two-sided p-value of the table with `sup_pos` positives among `sup_total`.
    pub fn p_value(&self, sup_total: usize, sup_pos: usize) -> f64 {
        let row = self.rows[sup_total].get_or_init(|| {
            let f = |k: usize| self.lnfact[k];
            p_value_row(&f, sup_total, self.n_pos, self.n_neg)
        });
        let lo = sup_total.saturating_sub(self.n_neg);
        row[sup_pos - lo]
    }

    pub fn lower_bound(&self, sup_total: usize) -> f64 {
        self.bounds[sup_total]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn choose(n: u64, k: u64) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn pmf_values() {
        let lp = hypergeom_log_pmf(5, 5, 5, 5);
        assert!((lp - (1.0f64 / 252.0).ln()).abs() < 1e-12);
        assert_eq!(hypergeom_log_pmf(0, 0, 7, 3), 0.0);
    }

    #[test]
    #[should_panic(expected = "outside the hypergeometric support")]
    fn pmf_out_of_range() {
        hypergeom_log_pmf(3, 2, 5, 5);
    }

    #[test]
    fn pmf_normalizes() {
        for &(n_pos, n_neg) in &[(1, 1), (3, 9), (20, 20), (7, 41), (150, 170)] {
            for a in 0..=n_pos + n_neg {
                let (lo, hi) = support_range(a, n_pos, n_neg);
                let total: f64 = (lo..=hi)
                    .map(|x| hypergeom_log_pmf(x, a, n_pos, n_neg).exp())
                    .sum();
                assert!((total - 1.0).abs() < 1e-12, "{n_pos} {n_neg} {a}: {total}");
            }
        }
    }

    #[test]
    fn symmetric_extremes() {
        let p = fisher_two_sided_p(ContingencyCounts::new(5, 5, 5, 5));
        assert!((p - 2.0 / 252.0).abs() < 1e-14, "{p}");
        assert_eq!(fisher_two_sided_p(ContingencyCounts::new(0, 0, 5, 5)), 1.0);
    }

    #[test]
    fn label_swap_symmetry() {
        for (n_pos, n_neg) in [(4, 9), (12, 12), (3, 30)] {
            for a in 0..=n_pos + n_neg {
                let (lo, hi) = support_range(a, n_pos, n_neg);
                for x in lo..=hi {
                    let p = fisher_two_sided_p(ContingencyCounts::new(x, a, n_pos, n_neg));
                    let q = fisher_two_sided_p(ContingencyCounts::new(a - x, a, n_neg, n_pos));
                    assert!((p - q).abs() <= 1e-12 * p, "{p} vs {q}");
                }
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        assert!((p_lower_bound(5, 5, 5) - 1.0 / 252.0).abs() < 1e-15);
        assert_eq!(p_lower_bound(0, 5, 5), 1.0);
        let lb = p_lower_bound(5, 2, 8);
        assert!((lb - 1.0 / 45.0).abs() < 1e-15, "{lb}");
        // the other branch, l(5, 0) = C(8,5)/C(10,5), is larger
        assert!(choose(8, 5) / choose(10, 5) > lb);
    }

    #[test]
    fn lower_bound_sound_and_monotone() {
        for n in 2..=40 {
            for n_pos in 1..n {
                let n_neg = n - n_pos;
                let mut prev = f64::INFINITY;
                for a in 0..=n {
                    let lb = p_lower_bound(a, n_pos, n_neg);
                    if a <= n_pos.max(n_neg) {
                        assert!(lb <= prev, "not nonincreasing at a = {a}");
                    } else {
                        assert_eq!(lb, prev);
                    }
                    prev = lb;
                    let (lo, hi) = support_range(a, n_pos, n_neg);
                    for x in lo..=hi {
                        assert!(
                            fisher_two_sided_p(ContingencyCounts::new(x, a, n_pos, n_neg)) >= lb
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn memo_matches_free_functions() {
        let t = ExactTest::new(13, 21);
        for a in 0..=34 {
            assert_eq!(t.lower_bound(a), p_lower_bound(a, 13, 21));
            let (lo, hi) = support_range(a, 13, 21);
            for x in lo..=hi {
                assert_eq!(
                    t.p_value(a, x),
                    fisher_two_sided_p(ContingencyCounts::new(x, a, 13, 21))
                );
            }
        }
    }

    #[test]
    fn large_margins_are_finite() {
        let n_pos = 400_000;
        let n_neg = 600_000;
        let p = fisher_two_sided_p(ContingencyCounts::new(80, 100, n_pos, n_neg));
        assert!(p > 0.0 && p < 1e-10, "{p}");
        let lb = p_lower_bound(100, n_pos, n_neg);
        assert!(lb > 0.0 && lb <= p);
    }
}
