//! Deterministic reductions.
//!
//! Sums use a fixed pairwise tree over the input order, so the result depends
//! only on the values, never on how many threads produced them.

const LEAF: usize = 8;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Maximum with NaN propagation.
pub fn max(xs: &[f64]) -> f64 {
    xs.iter().fold(f64::NEG_INFINITY, |m, &x| {
        if x.is_nan() || m.is_nan() {
            f64::NAN
        } else {
            m.max(x)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(max(&[1.0, 3.0, 2.0]), 3.0);
        assert!(max(&[1.0, f64::NAN]).is_nan());
    }
}
