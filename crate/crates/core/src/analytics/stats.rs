//! Slope, correlation and Welch's test on plain series.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::AnalyticsError;

/// p-values below this print as `"<1e-300"`.
pub const P_DISPLAY_FLOOR: f64 = 1e-300;

fn check_pairs(x: &[f64], y: &[f64]) -> Result<(), AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::DegenerateInput(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::DegenerateInput(format!("need at least 2 pairs, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalyticsError::DegenerateInput("non-finite value".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of `y = kx`: `Σxy / Σx²`.
pub fn fit_slope_origin(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    check_pairs(x, y)?;
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    if sxx == 0.0 {
        return Err(AnalyticsError::DegenerateInput("all x are zero".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(sxy / sxx)
}

/// Sample Pearson correlation, two-pass.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    check_pairs(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t: f64,
    pub dof: f64,
    pub p: f64,
}

impl WelchResult {
    pub fn p_display(&self) -> String {
        if self.p < P_DISPLAY_FLOOR {
            format!("<{P_DISPLAY_FLOOR:e}")
        } else {
            format!("{:e}", self.p)
        }
    }
}

/// Sample size, mean and unbiased variance of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: f64,
    pub mean: f64,
    pub var: f64,
}

impl Moments {
    pub fn of(v: &[f64]) -> Self {
        let m = mean(v);
        let ss: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
        Moments { n: v.len() as f64, mean: m, var: ss / (v.len() as f64 - 1.0) }
    }
}

/// Two-sided `P(|T| > |t|)` for Student's t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(dof / 2.0, 0.5, dof / (dof + t * t))
}

pub fn welch_from_moments(a: Moments, b: Moments) -> Result<WelchResult, AnalyticsError> {
    if a.n < 2.0 || b.n < 2.0 {
        return Err(AnalyticsError::DegenerateVariance("each sample needs at least 2 values".into()));
    }
    let (sa, sb) = (a.var / a.n, b.var / b.n);
    let se2 = sa + sb;
    if se2 <= 0.0 || !se2.is_finite() {
        return Err(AnalyticsError::DegenerateVariance("both samples are constant".into()));
    }
    let t = (a.mean - b.mean) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (a.n - 1.0) + sb * sb / (b.n - 1.0));
    Ok(WelchResult { t, dof, p: student_t_two_sided(t, dof) })
}

/// Welch's unequal-variance t-test. One constant sample is allowed as long
/// as the other varies.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchResult, AnalyticsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(AnalyticsError::DegenerateVariance("each sample needs at least 2 values".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(AnalyticsError::DegenerateInput("non-finite value".into()));
    }
    welch_from_moments(Moments::of(a), Moments::of(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_examples() {
        assert_eq!(fit_slope_origin(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.0);
        assert!((fit_slope_origin(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap() - 6.0 / 14.0).abs() < 1e-15);
        assert!(fit_slope_origin(&[0.0, 0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(AnalyticsError::ConstantSeries));
    }

    #[test]
    fn welch_examples() {
        let a = [1.0, 2.0, 3.0, 5.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));

        let r = welch_t_test(&[0.0; 4], &[10.0, 10.0, 10.0, 10.0001]).unwrap();
        assert!(r.p < 1e-6, "{r:?}");
        assert!((r.dof - 3.0).abs() < 1e-9);

        assert!(matches!(welch_t_test(&[1.0; 3], &[2.0; 3]), Err(AnalyticsError::DegenerateVariance(_))));
    }

    #[test]
    fn two_sided_t_reference_values() {
        // t = 2.0, 10 dof: 0.07338803477074...
        assert!((student_t_two_sided(2.0, 10.0) - 0.073_388_034_770_740_7).abs() < 1e-12);
        // One dof is the Cauchy law: p = 1 − 2·atan(t)/π.
        let t: f64 = 3.0;
        assert!((student_t_two_sided(t, 1.0) - (1.0 - 2.0 * t.atan() / std::f64::consts::PI)).abs() < 1e-14);
    }

    #[test]
    fn p_display_floor() {
        let r = WelchResult { t: 1e3, dof: 1e3, p: 0.0 };
        assert_eq!(r.p_display(), "<1e-300");
    }
}
