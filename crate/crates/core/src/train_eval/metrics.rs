use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("prediction and actual lengths differ: {0} vs {1}")]
    Length(usize, usize),
    #[error("metric of an empty series")]
    Empty,
    #[error("actual value at index {0} is zero")]
    ZeroActual(usize),
}

fn check(pred: &[f64], actual: &[f64]) -> Result<(), MetricError> {
    if pred.len() != actual.len() {
        return Err(MetricError::Length(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Median of `|pred - actual|`; an even count averages the two middle values.
pub fn median_abs_error(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let mut errs: Vec<f64> = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).collect();
    errs.sort_by(f64::total_cmp);
    let n = errs.len();
    Ok(if n % 2 == 1 {
        errs[n / 2]
    } else {
        0.5 * (errs[n / 2 - 1] + errs[n / 2])
    })
}

/// Mean of `|pred - actual| / |actual|`.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    check(pred, actual)?;
    let mut total = 0.0;
    for (i, (p, a)) in pred.iter().zip(actual).enumerate() {
        if *a == 0.0 {
            return Err(MetricError::ZeroActual(i));
        }
        total += (p - a).abs() / a.abs();
    }
    Ok(total / pred.len() as f64)
}
