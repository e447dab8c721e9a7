//! Small statistical helpers: means, block jackknife, trapezoid rule.

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Delete-one-block jackknife standard error of `estimator` over `items`,
/// using `blocks` contiguous blocks (clamped to the item count).
pub fn block_jackknife<T, F>(items: &[T], blocks: usize, estimator: F) -> f64
where
    T: Clone,
    F: Fn(&[T]) -> f64,
{
    let n = items.len();
    let b = blocks.min(n);
    if b < 2 {
        return 0.0;
    }
    let bounds: Vec<usize> = (0..=b).map(|i| i * n / b).collect();
    let mut leave_out = Vec::with_capacity(b);
    let mut buf: Vec<T> = Vec::with_capacity(n);
    for i in 0..b {
        buf.clear();
        buf.extend_from_slice(&items[..bounds[i]]);
        buf.extend_from_slice(&items[bounds[i + 1]..]);
        leave_out.push(estimator(&buf));
    }
    let mean = leave_out.iter().sum::<f64>() / b as f64;
    let var = leave_out.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    ((b as f64 - 1.0) / b as f64 * var).sqrt()
}

/// Trapezoid rule on a (possibly non-uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Independent seed for sub-stream `(a, b)` of `seed` (splitmix64 mixing).
pub fn stream_seed(seed: u64, a: u64, b: u64) -> u64 {
    fn mix(mut x: u64) -> u64 {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^ (x >> 31)
    }
    mix(mix(mix(seed) ^ a) ^ b.rotate_left(32))
}

/// Median of a non-empty slice (NaN-free).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
