//! Conditional data-parallelism. With the `parallel` feature (default) the
//! maps below fan out over the rayon global pool; without it they run
//! sequentially. Only order-preserving indexed maps are exposed, and all
//! reductions happen sequentially over the collected results, so floating
//! point summation order — and therefore every reported number — is
//! byte-identical with the feature on or off.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Sequential left-to-right sum; pairs with [`map_indexed`] for
/// deterministic parallel reductions.
pub fn sum_seq(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| acc + v)
}

/// Neumaier-compensated sequential sum. Entropy and norm accumulations run
/// through this so that near-cancelling identities (scale invariance, zero
/// at constant fields) survive thousands-of-term sums at the 1e-13 level.
pub fn sum_compensated(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() {
            (s - t) + v
        } else {
            (v - t) + s
        };
        s = t;
    }
    s + c
}
