//! Paired two-tailed Student's t-test over per-fold accuracies.
//!
//! t = mean(d) / (sd(d) / sqrt(k)) on the paired differences d_i = a_i - b_i,
//! and the two-tailed p-value comes from the t distribution with k - 1
//! degrees of freedom via the regularized incomplete beta function,
//! p = I_{v/(v+t^2)}(v/2, 1/2), evaluated by continued fraction to well below
//! 1e-8 absolute error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Significance level used for the `significant` flag.
pub const ALPHA: f64 = 0.05;

/// Outcome of a paired t-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub df: usize,
    /// p < 0.05.
    pub significant: bool,
    /// Zero variance of the differences; t is 0 or infinite by convention.
    pub degenerate: bool,
}

/// Paired two-tailed t-test between two fold-accuracy vectors sharing the
/// same fold assignment.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::Evaluation(format!(
            "paired t-test needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len();
    if k < 2 {
        return Err(Error::Evaluation(
            "paired t-test needs at least 2 folds".to_string(),
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / k as f64;
    let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
    let df = k - 1;

    if ss == 0.0 {
        // Constant differences: no sampling variance to test against.
        return Ok(if mean == 0.0 {
            TTestResult {
                t: 0.0,
                p: 1.0,
                df,
                significant: false,
                degenerate: true,
            }
        } else {
            TTestResult {
                t: if mean > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                p: 0.0,
                df,
                significant: true,
                degenerate: true,
            }
        });
    }

    let sd = (ss / df as f64).sqrt();
    let t = mean / (sd / (k as f64).sqrt());
    let p = student_t_two_tailed_p(t, df);
    Ok(TTestResult {
        t,
        p,
        df,
        significant: p < ALPHA,
        degenerate: false,
    })
}

/// Two-tailed p-value of the t distribution with `df` degrees of freedom.
pub fn student_t_two_tailed_p(t: f64, df: usize) -> f64 {
    let v = df as f64;
    let x = v / (v + t * t);
    regularized_incomplete_beta(x, v / 2.0, 0.5)
}

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation (converges to near machine precision for the arguments the
/// t-test produces).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz continued fraction for the incomplete beta.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_IT: usize = 300;
    const EPS: f64 = 1e-15;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_IT {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_samples() {
        let a = [0.6, 0.7, 0.8, 0.65, 0.75];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(!r.significant);
        assert!(r.degenerate);
    }

    #[test]
    fn constant_nonzero_difference_is_degenerate_significant() {
        let a = [0.7, 0.8, 0.9, 0.75, 0.85];
        let b: Vec<f64> = a.iter().map(|x| x - 0.1).collect();
        let r = paired_ttest(&a, &b).unwrap();
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert_eq!(r.p, 0.0);
        assert!(r.significant && r.degenerate);
    }

    #[test]
    fn hand_checked_d_vector() {
        // d = (0.02, 0.05, -0.01, 0.03, 0.04): mean 0.026, sample sd
        // 0.023021728866..., t = 2.525343242..., p = 0.064985910342...
        let b = [0.5; 5];
        let a = [0.52, 0.55, 0.49, 0.53, 0.54];
        let r = paired_ttest(&a, &b).unwrap();
        assert!((r.t - 2.5253432421288866).abs() < 1e-10, "t = {}", r.t);
        assert!((r.p - 0.06498591034212065).abs() < 1e-10, "p = {}", r.p);
        assert!(!r.significant);
        assert!(!r.degenerate);
    }

    #[test]
    fn antisymmetry() {
        let a = [0.9, 0.85, 0.8, 0.95, 0.7];
        let b = [0.6, 0.72, 0.66, 0.81, 0.77];
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!((ab.p - ba.p).abs() < 1e-12);
    }

    #[test]
    fn length_checks() {
        assert!(paired_ttest(&[0.5], &[0.5]).is_err());
        assert!(paired_ttest(&[0.1, 0.2], &[0.1]).is_err());
    }

    #[test]
    fn beta_is_a_distribution_function() {
        // Monotone in x, 0 at 0, 1 at 1.
        let (a, b) = (2.0, 0.5);
        assert_eq!(regularized_incomplete_beta(0.0, a, b), 0.0);
        assert_eq!(regularized_incomplete_beta(1.0, a, b), 1.0);
        let mut last = 0.0;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let v = regularized_incomplete_beta(x, a, b);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn symmetric_argument_identity() {
        // I_x(a,b) = 1 - I_{1-x}(b,a)
        for (x, a, b) in [(0.3, 2.0, 0.5), (0.7, 1.5, 3.0), (0.5, 2.5, 2.5)] {
            let lhs = regularized_incomplete_beta(x, a, b);
            let rhs = 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
