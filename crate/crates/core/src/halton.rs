//! Halton low-discrepancy sequence for reproducible validation samples.

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Point `i` of the `dim`-dimensional Halton sequence in `[0,1)^dim`.
/// The first `skip` points are discarded by the caller through `i`.
pub fn halton(i: u64, dim: usize) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (k, o) in out.iter_mut().enumerate().take(dim) {
        *o = radical_inverse(i + 1, PRIMES[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_in_base_two_and_three() {
        assert_eq!(halton(0, 2)[..2], [0.5, 1.0 / 3.0]);
        assert_eq!(halton(1, 2)[..2], [0.25, 2.0 / 3.0]);
    }

    #[test]
    fn points_fill_unit_cube() {
        let n = 4096;
        let mean: f64 = (0..n).map(|i| halton(i, 3)[2]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 1e-3);
    }
}
