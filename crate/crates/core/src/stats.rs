//! Special functions and the elementary tests used by the simulators:
//! regularized incomplete beta and gamma functions, Student t and
//! chi-square tails, pooled two-sample t-tests, simple-regression slope
//! tests and the Simes / Fisher global-null combinations.

use crate::error::{FdrError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

/// `ln Γ(x)` for `x > 0` (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_split(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with `y = 1 - x` supplied by the caller, so that values of `x`
/// close to 1 do not lose precision.
pub fn beta_reg_split(a: f64, b: f64, x: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_reg_split(b, a, y, x);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    ln_front.exp() * beta_cf(a, b, x) / a
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..CF_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * CF_EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// `P(X > x)` for `X ~ chi^2_df`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

/// `P(|T| >= |t|)` for `T ~ t_df`.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let t2 = t * t;
    let denom = df + t2;
    beta_reg_split(df / 2.0, 0.5, df / denom, t2 / denom)
}

/// `P(T <= t)` for `T ~ t_df`.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-sided p-value of a simple-regression slope t-test computed from the
/// squared sample correlation `r2` and the sample size `n` (df = `n - 2`).
pub fn slope_t_pvalue_from_r2(r2: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    let r2 = r2.clamp(0.0, 1.0);
    beta_reg_split(df / 2.0, 0.5, 1.0 - r2, r2)
}

/// Two-sided pooled-variance two-sample t-test of `values[is_case]` against
/// `values[!is_case]`. A column without within-group variance gets p = 1.
pub fn two_sample_t_test(values: &[f64], is_case: &[bool]) -> f64 {
    debug_assert_eq!(values.len(), is_case.len());
    let (mut s1, mut s0, mut n1, mut n0) = (0.0, 0.0, 0usize, 0usize);
    for (&v, &c) in values.iter().zip(is_case) {
        if c {
            s1 += v;
            n1 += 1;
        } else {
            s0 += v;
            n0 += 1;
        }
    }
    if n1 < 1 || n0 < 1 || n1 + n0 < 3 {
        return 1.0;
    }
    let m1 = s1 / n1 as f64;
    let m0 = s0 / n0 as f64;
    let mut ss = 0.0;
    for (&v, &c) in values.iter().zip(is_case) {
        let d = if c { v - m1 } else { v - m0 };
        ss += d * d;
    }
    let df = (n1 + n0 - 2) as f64;
    let var = ss / df;
    if var <= 0.0 || !var.is_finite() {
        return 1.0;
    }
    let se = (var * (1.0 / n1 as f64 + 1.0 / n0 as f64)).sqrt();
    student_t_two_sided((m1 - m0) / se, df)
}

/// Simes combination `min_k n p_(k) / k`.
pub fn simes(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(FdrError::invalid("Simes combination of an empty set"));
    }
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let best = sorted
        .iter()
        .enumerate()
        .map(|(k, &pk)| n * pk / (k + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(best.min(1.0))
}

/// Fisher combination: survival of `chi^2_{2n}` at `-2 sum ln p`.
pub fn fisher(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(FdrError::invalid("Fisher combination of an empty set"));
    }
    if p.len() == 1 {
        return Ok(p[0]);
    }
    if p.iter().any(|&x| x <= 0.0) {
        return Err(FdrError::invalid(
            "Fisher combination is undefined for a p-value of exactly 0",
        ));
    }
    let stat: f64 = -2.0 * p.iter().map(|x| x.ln()).sum::<f64>();
    Ok(chi2_sf(stat, 2.0 * p.len() as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_integers() {
        let mut ln_fact = 0.0f64;
        for n in 1..60u32 {
            // ln Γ(n) = ln (n-1)!
            assert!((ln_gamma(n as f64) - ln_fact).abs() < 1e-12 * ln_fact.max(1.0));
            ln_fact += (n as f64).ln();
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn beta_reg_edges() {
        assert_eq!(beta_reg(2.0, 3.0, 0.0), 0.0);
        assert_eq!(beta_reg(2.0, 3.0, 1.0), 1.0);
        assert!((beta_reg(1.0, 1.0, 0.3) - 0.3).abs() < 1e-15);
        // I_x(a, 1) = x^a
        assert!(rel(beta_reg(3.5, 1.0, 0.4), 0.4f64.powf(3.5)) < 1e-13);
    }

    #[test]
    fn t_tail_df1_is_cauchy() {
        for &t in &[0.1f64, 1.0, 3.0, 40.0] {
            let expected = 1.0 - 2.0 * t.atan() / std::f64::consts::PI;
            assert!(rel(student_t_two_sided(t, 1.0), expected) < 1e-12);
        }
    }

    #[test]
    fn simes_examples() {
        assert!((simes(&[0.04, 0.01, 0.09]).unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(simes(&[0.37]).unwrap(), 0.37);
        assert!(simes(&[]).is_err());
    }

    #[test]
    fn fisher_examples() {
        let x: f64 = -2.0 * (0.1f64.ln() + 0.2f64.ln());
        let expected = (-x / 2.0).exp() * (1.0 + x / 2.0);
        let got = fisher(&[0.1, 0.2]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.0983).abs() < 1e-4);
        assert_eq!(fisher(&[0.42]).unwrap(), 0.42);
        assert!(fisher(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn degenerate_t_test_is_one() {
        let values = [1.0; 6];
        let groups = [true, true, true, false, false, false];
        assert_eq!(two_sample_t_test(&values, &groups), 1.0);
    }

    #[test]
    fn t_test_matches_hand_computation() {
        // cases 1,2,3 (mean 2), controls 4,5,6 (mean 5); pooled var 1; se = sqrt(2/3)
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let groups = [true, true, true, false, false, false];
        let t = -3.0 / (2.0f64 / 3.0).sqrt();
        let expected = student_t_two_sided(t, 4.0);
        assert!((two_sample_t_test(&values, &groups) - expected).abs() < 1e-15);
        // df = 4 closed form: two-sided tail = 1 - t (6 + t^2) / (t^2 + 4)^{3/2}
        let closed = 1.0 - t.abs() * (6.0 + t * t) / (t * t + 4.0).powf(1.5);
        assert!(rel(expected, closed) < 1e-12);
    }

    #[test]
    fn slope_test_matches_t_route() {
        let n = 50;
        let r: f64 = 0.3;
        let t = r * ((n as f64 - 2.0) / (1.0 - r * r)).sqrt();
        let a = slope_t_pvalue_from_r2(r * r, n);
        let b = student_t_two_sided(t, n as f64 - 2.0);
        assert!(rel(a, b) < 1e-12);
    }
}
