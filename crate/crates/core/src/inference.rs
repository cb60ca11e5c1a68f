//! Simple linear regression and Welch's two-sample t-test.

use crate::math::{abs, mean, sqrt, student_t_two_sided_p, variance};
use crate::{Error, Result};

/// Ordinary least squares fit of `y = b0 + b1 x + e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OlsFit {
    /// `[intercept, slope]`.
    pub coefficients: [f64; 2],
    /// Classical (homoskedastic) standard errors.
    pub standard_errors: [f64; 2],
    pub t_values: [f64; 2],
    /// Two-sided, t distribution with `n - 2` degrees of freedom.
    pub p_values: [f64; 2],
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slope(&self) -> f64 {
        self.coefficients[1]
    }
}

pub fn ols_fit(y: &[f64], x: &[f64]) -> Result<OlsFit> {
    if y.len() != x.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: x.len() });
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::TooFewObservations { needed: 3, got: n });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::SingularDesign);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let sst: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let nf = n as f64;
    let df = nf - 2.0;
    let s2 = ssr / df;
    let se_slope = sqrt(s2 / sxx);
    let se_intercept = sqrt(s2 * (1.0 / nf + mx * mx / sxx));
    let t_values = [intercept / se_intercept, slope / se_slope];
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(OlsFit {
        coefficients: [intercept, slope],
        standard_errors: [se_intercept, se_slope],
        t_values,
        p_values: [student_t_two_sided_p(t_values[0], df), student_t_two_sided_p(t_values[1], df)],
        r_squared,
        adj_r_squared: 1.0 - (1.0 - r_squared) * (nf - 1.0) / df,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    /// Two-sided.
    pub p: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub df: f64,
}

/// Welch's unequal-variance t-test of `mean(a) = mean(b)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: s.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (qa, qb) = (variance(a) / na, variance(b) / nb);
    if qa == 0.0 && qb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = (mean(a) - mean(b)) / sqrt(qa + qb);
    let df = (qa + qb) * (qa + qb) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    Ok(WelchTest { t, p: student_t_two_sided_p(t, df), df })
}

/// Conventional significance stars: `***` p < 0.001, `**` p < 0.01, `*` p < 0.05.
pub fn stars(p: f64) -> &'static str {
    match abs(p) {
        p if p < 0.001 => "***",
        p if p < 0.01 => "**",
        p if p < 0.05 => "*",
        _ => "",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn exact_line_is_recovered() {
        let x = [0.0, 1.0, 2.5, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = ols_fit(&y, &x).unwrap();
        assert!((fit.intercept() - 1.0).abs() < 1e-12);
        assert!((fit.slope() - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ols_matches_textbook_example() {
        // reference values from statsmodels OLS
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.1, 1.9, 3.2, 3.9, 5.3, 5.8];
        let fit = ols_fit(&y, &x).unwrap();
        assert!((fit.slope() - 0.982_857_142_857_142_9).abs() < 1e-12);
        assert!((fit.intercept() - 0.093_333_333_333_330_6).abs() < 1e-11);
        assert!((fit.r_squared - 0.988_990_416_759_527_6).abs() < 1e-12);
        assert!((fit.standard_errors[1] - 0.051_850_124_147_871_2).abs() < 1e-12);
    }

    #[test]
    fn ols_errors() {
        assert_eq!(ols_fit(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), Err(Error::SingularDesign));
        assert_eq!(ols_fit(&[1.0, 2.0], &[1.0, 2.0, 3.0]), Err(Error::LengthMismatch { left: 2, right: 3 }));
        assert!(ols_fit(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn residuals_orthogonal_to_regressor() {
        let x = [0.3, 1.7, 2.2, 3.9, 4.1, 6.6, 7.0];
        let y = [1.0, 0.2, 3.3, 2.8, 5.1, 4.4, 7.9];
        let fit = ols_fit(&y, &x).unwrap();
        let resid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - fit.intercept() - fit.slope() * a).collect();
        assert!(resid.iter().sum::<f64>().abs() < 1e-9);
        assert!(resid.iter().zip(&x).map(|(e, a)| e * a).sum::<f64>().abs() < 1e-9);
        assert!(fit.adj_r_squared <= fit.r_squared);
    }

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.5];
        let w = welch_t_test(&a, &a).unwrap();
        assert_eq!(w.t, 0.0);
        assert_eq!(w.p, 1.0);
    }

    #[test]
    fn welch_matches_reference() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4];
        let b = [27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4];
        let w = welch_t_test(&a, &b).unwrap();
        assert!((w.t - -2.455_356_398_286_006).abs() < 1e-12);
        assert!((w.df - 24.988_529_290_231_416).abs() < 1e-9);
        assert!((w.p - 0.021_378_001_462_866_985).abs() < 1e-10);
        assert_eq!(welch_t_test(&b, &a).unwrap().t, -w.t);
    }

    #[test]
    fn welch_zero_variance_rejected() {
        assert_eq!(welch_t_test(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::ZeroVariance));
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0005), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.03), "*");
        assert_eq!(stars(0.2), "");
    }
}
