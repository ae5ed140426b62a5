//! Order statistics over finite and infinite values.

/// Sample quantile with linear interpolation between order statistics
/// (the "type 7" rule); NaN for empty input. NaN entries are dropped,
/// `+inf` sorts last.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    if lo == hi || v[lo] == v[hi] {
        return v[lo];
    }
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Mean of the finite entries and the number of entries skipped.
pub fn finite_mean(values: &[f64]) -> (f64, usize) {
    let ok: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let skipped = values.len() - ok.len();
    if ok.is_empty() {
        return (f64::INFINITY, skipped);
    }
    (ok.iter().sum::<f64>() / ok.len() as f64, skipped)
}

/// Unbiased sample standard deviation.
pub fn sample_sd(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}
