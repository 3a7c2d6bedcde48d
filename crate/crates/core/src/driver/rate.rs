//! Least-squares slopes in log-log scale.

use crate::{Error, Result};

pub const DEFAULT_WINDOW: f64 = 0.5;
const MIN_POINTS: usize = 4;

/// Slope of `log q` against `log n` over the last `window` fraction of the points.
pub fn fit_rate(n_elements: &[f64], values: &[f64], window: f64) -> Result<f64> {
    if n_elements.len() != values.len() {
        return Err(Error::Dimension { what: "rate data", expected: n_elements.len(), got: values.len() });
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Config(format!("rate window must lie in (0, 1], got {window}")));
    }
    let take = ((window * values.len() as f64).ceil() as usize).min(values.len());
    if take < MIN_POINTS {
        return Err(Error::InsufficientRecords { needed: MIN_POINTS, have: take });
    }
    let start = values.len() - take;
    let mut xs = Vec::with_capacity(take);
    let mut ys = Vec::with_capacity(take);
    for (n, q) in n_elements[start..].iter().zip(&values[start..]) {
        if !(*n > 0.0 && *q > 0.0) {
            return Err(Error::Data(format!("cannot take the logarithm of ({n}, {q})")));
        }
        xs.push(n.ln());
        ys.push(q.ln());
    }
    let mx = xs.iter().sum::<f64>() / take as f64;
    let my = ys.iter().sum::<f64>() / take as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("all points share the same element count".into()));
    }
    Ok(sxy / sxx)
}
