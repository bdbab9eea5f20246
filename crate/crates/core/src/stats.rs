//! Sample statistics and log-log slope fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::Statistics(format!("need ≥ 2 samples (got {})", xs.len())));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (NaN with two points).
    pub slope_se: f64,
    /// Half-width of the 95% interval on the slope.
    pub ci95: f64,
}

/// Ordinary least squares `y = a + b x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = xs.len() as f64 - 2.0;
    let (slope_se, ci95) = if dof >= 1.0 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (rss / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
        (se, t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    LinearFit { slope, intercept, slope_se, ci95 }
}

/// Slope of `log y` against `log x`; requires at least four positive points.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() < 4 {
        return Err(Error::Statistics(format!("slope fits need ≥ 4 points (got {})", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Statistics("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(ols(&lx, &ly))
}

/// One-sided paired test that `a` exceeds `b` on average at 95%:
/// `mean(a - b) > 1.645 · SE(a - b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub mean_diff: f64,
    pub stderr: f64,
    pub z: f64,
    pub significant: bool,
}

pub const Z95_ONE_SIDED: f64 = 1.645;

pub fn paired_greater(a: &[f64], b: &[f64]) -> Result<PairedTest> {
    if a.len() != b.len() {
        return Err(Error::Statistics("paired samples differ in length".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (m, se) = mean_stderr(&d)?;
    let z = if se > 0.0 { m / se } else if m > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(PairedTest { mean_diff: m, stderr: se, z, significant: z > Z95_ONE_SIDED })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn closed_form_sample_statistics() {
        let (m, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        let (_, se) = mean_stderr(&[0.7; 5]).unwrap();
        assert_eq!(se, 0.0);
        assert!(mean_stderr(&[]).is_err());
        assert!(mean_stderr(&[1.0]).is_err());
    }

    #[test]
    fn clt_bound_on_normal_draws() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (m, _) = mean_stderr(&xs).unwrap();
        assert!(m.abs() < 3.3 / (1000f64).sqrt());
    }

    #[test]
    fn exact_power_law_slope() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let f = loglog_slope(&xs, &ys).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!(f.ci95 < 1e-10);
        assert!(loglog_slope(&xs[..3], &ys[..3]).is_err());
    }
}
