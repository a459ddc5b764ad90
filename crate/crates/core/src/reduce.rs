//! Deterministic pairwise summation.
//!
//! Every norm and quadrature in the crate goes through these helpers so that
//! the result depends only on the data, never on how work was scheduled.

const LEAF: usize = 64;

pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= LEAF {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_map<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= LEAF {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            return s;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    pairwise_sum(x) / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&x), 499500.0);
        assert_eq!(pairwise_map(1000, &|i| i as f64), 499500.0);
    }

    #[test]
    fn more_accurate_than_naive_for_many_small_terms() {
        let n = 1 << 20;
        let x = vec![0.1; n];
        let exact = 0.1 * n as f64;
        let err = (pairwise_sum(&x) - exact).abs();
        assert!(err < 1e-9, "{err}");
    }
}
