//! Small statistics helpers for experiments and tests.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean.
pub fn stderr(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard deviation of a Binomial(n, p) count.
pub fn binomial_sd(n: usize, p: f64) -> f64 {
    (n as f64 * p * (1.0 - p)).sqrt()
}

/// Pearson goodness-of-fit p-value of `observed` against `expected`.
pub fn chi_square_p_value(observed: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    assert!(observed.len() >= 2, "need at least two cells");
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// Least-squares slope of `ys` on `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    sxy / sxx
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    regression_slope(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-12);
        assert!((stderr(&xs) - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_extremes() {
        let e = [25.0; 4];
        assert!(chi_square_p_value(&[25.0, 25.0, 25.0, 25.0], &e) > 0.999);
        assert!(chi_square_p_value(&[100.0, 0.0, 0.0, 0.0], &e) < 1e-6);
        // 3 degrees of freedom, statistic 7.815 sits at the 5% point.
        let p = chi_square_p_value(&[25.0 + 7.815f64.sqrt() * 5.0 / 2f64.sqrt(), 25.0 - 7.815f64.sqrt() * 5.0 / 2f64.sqrt(), 25.0, 25.0], &e);
        assert!((p - 0.05).abs() < 1e-3, "{p}");
    }

    #[test]
    fn slopes() {
        let xs: Vec<f64> = (1..=6).map(|i| 2f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.75)).collect();
        assert!((log_log_slope(&xs, &ys) - 0.75).abs() < 1e-12);
        assert_eq!(regression_slope(&[1.0, 1.0], &[2.0, 3.0]), 0.0);
    }
}
