//! High-SNR slope estimation: a least-squares fit of rate (bits) against
//! `log₂ P`, whose slope estimates the (secrecy) degree of freedom.

use serde::Serialize;
use thiserror::Error;

/// Default grid in dB.
pub const DEFAULT_SNR_GRID_DB: [f64; 3] = [60.0, 80.0, 100.0];
pub const MIN_GRID_POINTS: usize = 3;
pub const MIN_GRID_SPAN_DB: f64 = 20.0;
pub const MIN_GRID_DB: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid SNR grid: {0}")]
pub struct GridError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdofEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square fit residual in bits.
    pub residual: f64,
}

/// Linear power for an SNR in dB (noise power is 1).
#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn validate_grid(grid_db: &[f64]) -> Result<(), GridError> {
    if grid_db.len() < MIN_GRID_POINTS {
        return Err(GridError(format!("{} points given, at least {MIN_GRID_POINTS} required", grid_db.len())));
    }
    if grid_db.iter().any(|g| !g.is_finite()) {
        return Err(GridError("grid contains a non-finite value".into()));
    }
    if let Some(g) = grid_db.iter().find(|&&g| g < MIN_GRID_DB) {
        return Err(GridError(format!("{g} dB is below the {MIN_GRID_DB} dB floor")));
    }
    let lo = grid_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < MIN_GRID_SPAN_DB {
        return Err(GridError(format!("grid spans {} dB, at least {MIN_GRID_SPAN_DB} dB required", hi - lo)));
    }
    Ok(())
}

/// Ordinary least squares of `rates` on `log₂ P` for the grid points.
pub fn fit_slope(grid_db: &[f64], rates: &[f64]) -> Result<SdofEstimate, GridError> {
    validate_grid(grid_db)?;
    if rates.len() != grid_db.len() {
        return Err(GridError(format!("{} rates for {} grid points", rates.len(), grid_db.len())));
    }
    let x: Vec<f64> = grid_db.iter().map(|&db| db_to_power(db).log2()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = rates.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(rates).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(rates)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    Ok(SdofEstimate { slope, intercept, residual: (sse / n).sqrt() })
}

/// Evaluates `rates_at(P)` on the grid and fits one slope per output
/// component. The evaluator returns one rate per message.
pub fn estimate_sdof<E, F>(grid_db: &[f64], mut rates_at: F) -> Result<Vec<SdofEstimate>, E>
where
    E: From<GridError>,
    F: FnMut(f64) -> Result<Vec<f64>, E>,
{
    validate_grid(grid_db)?;
    let samples = grid_db.iter().map(|&db| rates_at(db_to_power(db))).collect::<Result<Vec<_>, E>>()?;
    let width = samples[0].len();
    (0..width)
        .map(|c| {
            let column: Vec<f64> = samples.iter().map(|s| s[c]).collect();
            Ok(fit_slope(grid_db, &column)?)
        })
        .collect()
}

/// Single-output convenience wrapper.
pub fn estimate_slope(grid_db: &[f64], rate_at: impl Fn(f64) -> f64) -> Result<SdofEstimate, GridError> {
    let mut est = estimate_sdof::<GridError, _>(grid_db, |p| Ok(vec![rate_at(p)]))?;
    Ok(est.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stream_has_unit_slope() {
        let e = estimate_slope(&DEFAULT_SNR_GRID_DB, |p| (1.0 + p).log2()).unwrap();
        assert!((e.slope - 1.0).abs() < 1e-3, "{e:?}");
        assert!(e.residual < 1e-3);
    }

    #[test]
    fn constant_has_zero_slope() {
        let e = estimate_slope(&DEFAULT_SNR_GRID_DB, |_| 4.25).unwrap();
        assert!(e.slope.abs() < 1e-15);
        assert!((e.intercept - 4.25).abs() < 1e-12);
    }

    #[test]
    fn exact_line_is_recovered() {
        let e = estimate_slope(&[40.0, 50.0, 70.0, 90.0], |p| 0.5 * p.log2() + 3.0).unwrap();
        assert!((e.slope - 0.5).abs() < 1e-12 && (e.intercept - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(validate_grid(&[60.0, 80.0]).is_err());
        assert!(validate_grid(&[60.0, 65.0, 70.0]).is_err());
        assert!(validate_grid(&[30.0, 60.0, 90.0]).is_err());
        assert!(validate_grid(&[60.0, f64::NAN, 90.0]).is_err());
        assert!(validate_grid(&[40.0, 50.0, 60.0]).is_ok());
    }
}
