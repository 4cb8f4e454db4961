//! Self-contained statistics: Pearson correlation, univariate OLS F-test
//! with p-value via the regularized incomplete beta, and mean absolute error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence tolerance for the incomplete-beta continued fraction.
const BETA_EPS: f64 = 1e-12;
const BETA_MAX_ITER: usize = 300;

/// ln Gamma(z) for z > 0 (Lanczos approximation).
pub fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut sum = 1.000000000190015;
    for (i, c) in COEFFS.iter().enumerate() {
        sum += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * sum / z).ln()
}

/// Regularized incomplete beta I_x(a, b) by continued fraction, with the
/// symmetry switch at x > (a+1)/(a+b+2).
pub fn regularized_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - regularized_inc_beta(1.0 - x, b, a);
    }
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta).exp();
    front * beta_continued_fraction(x, a, b) / a
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let tiny = 1e-30;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=BETA_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_EPS {
            break;
        }
    }
    h
}

/// CDF of the F distribution with (d1, d2) degrees of freedom.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    regularized_inc_beta(d1 * f / (d1 * f + d2), 0.5 * d1, 0.5 * d2)
}

/// Upper-tail probability P(F > f), computed in the survival form to avoid
/// cancellation near 1.
pub fn f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    regularized_inc_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1)
}

/// Pearson product-moment correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "pearson_r: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Domain("pearson_r needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedStatistic("x has zero variance".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedStatistic("y has zero variance".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Result of a univariate OLS regression with F-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub f: f64,
    pub df: (u64, u64),
    /// Upper-tail probability of the F statistic.
    pub p: f64,
    /// Set when |r| = 1 within floating tolerance; `f` is infinite and p = 0.
    pub perfect_fit: bool,
}

/// Univariate OLS fit of y on x with F-test for slope significance.
///
/// F = r^2 (n-2) / (1 - r^2) with df (1, n-2).
pub fn f_test_univariate(x: &[f64], y: &[f64]) -> Result<RegressionReport> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "f_test_univariate: length mismatch {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Domain(
            "f_test_univariate needs at least 3 points".into(),
        ));
    }
    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mean_x) * (a - mean_x);
        sxy += (a - mean_x) * (b - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedStatistic(
            "f_test_univariate: x is constant".into(),
        ));
    }
    let r = pearson_r(x, y)?;
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let df = (1u64, (n - 2) as u64);

    if 1.0 - r * r < 1e-12 {
        return Ok(RegressionReport {
            slope,
            intercept,
            r,
            f: f64::INFINITY,
            df,
            p: 0.0,
            perfect_fit: true,
        });
    }

    let f = r * r * (nf - 2.0) / (1.0 - r * r);
    let p = f_survival(f, df.0 as f64, df.1 as f64);
    Ok(RegressionReport {
        slope,
        intercept,
        r,
        f,
        df,
        p,
        perfect_fit: false,
    })
}

/// Mean absolute error between predictions and ground truth.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Domain(format!(
            "mae: length mismatch {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Domain("mae over empty vectors".into()));
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / pred.len() as f64)
}
