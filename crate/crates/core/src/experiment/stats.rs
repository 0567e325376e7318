//! Interval estimates and the log-log power fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::report::{ser_f64, ser_f64_pair, ser_f64_vec};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at critical value `z`.
/// Clamped so that `0 <= lo <= successes / trials <= hi <= 1`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let rad = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = ((center - rad) / denom).clamp(0.0, 1.0).min(p);
    let hi = ((center + rad) / denom).clamp(0.0, 1.0).max(p);
    (lo, hi)
}

/// Sample mean with a Student-t 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub count: u64,
    #[serde(serialize_with = "ser_f64")]
    pub mean: f64,
    #[serde(serialize_with = "ser_f64")]
    pub std_err: f64,
    #[serde(serialize_with = "ser_f64_pair")]
    pub ci: [f64; 2],
}

impl MeanEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Result<Self> {
        let xs: Vec<f64> = samples.into_iter().collect();
        if xs.is_empty() {
            return Err(Error::BadExperiment("mean of zero samples".into()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() == 1 {
            return Ok(MeanEstimate {
                count: 1,
                mean,
                std_err: 0.0,
                ci: [mean, mean],
            });
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std_err = (var / n).sqrt();
        let t = StudentsT::new(0.0, 1.0, n - 1.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        Ok(MeanEstimate {
            count: xs.len() as u64,
            mean,
            std_err,
            ci: [mean - t * std_err, mean + t * std_err],
        })
    }
}

/// Least-squares fit of `ln(y) = intercept + slope * ln(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    #[serde(serialize_with = "ser_f64")]
    pub slope: f64,
    #[serde(serialize_with = "ser_f64")]
    pub intercept: f64,
    /// `ln(y_i) - (intercept + slope * ln(x_i))`.
    #[serde(serialize_with = "ser_f64_vec")]
    pub residuals: Vec<f64>,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerFit> {
    if xs.len() != ys.len() {
        return Err(Error::BadExperiment("fit needs equally many x and y values".into()));
    }
    if xs.len() < 3 {
        return Err(Error::BadExperiment(format!(
            "fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::BadExperiment("fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::BadExperiment("fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = lx.iter().zip(&ly).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(PowerFit {
        slope,
        intercept,
        residuals,
    })
}
