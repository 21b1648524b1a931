use crate::error::{Error, Result};

/// Binary entropy `-q ln q - (1-q) ln(1-q)` in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", q, "[0, 1]"));
    }
    Ok(xlnx(q) + xlnx(1.0 - q))
}

fn xlnx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// `ln((1-p)/p)`, accurate near `p = 1/2`. `None` at `p ∈ {0, 1}`.
pub(crate) fn log_odds_ratio(p: f64) -> Option<f64> {
    if p <= 0.0 || p >= 1.0 {
        return None;
    }
    Some(((1.0 - 2.0 * p) / p).ln_1p())
}
