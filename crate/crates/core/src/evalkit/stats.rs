/// Mean and sample standard deviation (`n − 1`); the deviation of fewer
/// than two values is zero.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn std_err(std: f64, n: usize) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        std / (n as f64).sqrt()
    }
}
