use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};

/// Least-squares line `log y = slope · log x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<PowerFit> {
    if samples.len() < 3 {
        return Err(MageError::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    if let Some(index) = samples.iter().position(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(MageError::NonpositiveSample { index });
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MageError::InvalidParameter("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_exponent(&[(1.0, 1.0), (2.0, 2.0), (4.0, 4.0)]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-14 && (f.r_squared - 1.0).abs() < 1e-14);
        let f = fit_exponent(&[(1.0, 1.0), (4.0, 2.0), (16.0, 4.0)]).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-14 && (f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn noisy_three_points() {
        // Frozen from the closed-form OLS normal equations on
        // (ln 1, 0), (ln 2, ln 2), (ln 3, ln 2.9).
        let f = fit_exponent(&[(1.0, 1.0), (2.0, 2.0), (3.0, 2.9)]).unwrap();
        assert!(f.slope > 0.7 && f.slope < 1.1);
        assert!(f.r_squared < 1.0);
        assert!((f.slope - 0.972_464_4).abs() < 1e-6, "{}", f.slope);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_exponent(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(MageError::InsufficientSamples { .. })
        ));
        assert!(matches!(
            fit_exponent(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(MageError::NonpositiveSample { index: 1 })
        ));
    }
}
