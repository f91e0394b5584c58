use crate::channel::cmat::inner;
use crate::channel::PrecoderChannelMatrix;
use crate::error::{Error, Result};

/// Linear NMSE and its dB value. An exact reconstruction has `db == -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nmse {
    pub linear: f64,
    pub db: f64,
}

impl Nmse {
    pub fn from_linear(linear: f64) -> Self {
        Nmse {
            linear,
            db: to_db(linear),
        }
    }
}

pub fn to_db(linear: f64) -> f64 {
    if linear == 0.0 {
        f64::NEG_INFINITY
    } else {
        10.0 * linear.log10()
    }
}

/// Formats a dB value for tables; `-inf` for an exact match.
pub fn format_db(db: f64) -> String {
    if db == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{db:.4}")
    }
}

fn check_shapes(h: &PrecoderChannelMatrix, h_hat: &PrecoderChannelMatrix) -> Result<()> {
    if (h.n(), h.k()) != (h_hat.n(), h_hat.k()) {
        return Err(Error::dim("metric", &[h.n(), h.k()], &[h_hat.n(), h_hat.k()]));
    }
    Ok(())
}

/// `||H_hat - H||_F^2 / ||H||_F^2` for one sample.
pub fn sample_nmse(h: &PrecoderChannelMatrix, h_hat: &PrecoderChannelMatrix) -> Result<f64> {
    check_shapes(h, h_hat)?;
    let denom = h.matrix().frobenius_sq();
    if denom == 0.0 {
        return Err(Error::Contract("NMSE reference has zero norm".into()));
    }
    let num: f64 = h
        .matrix()
        .as_slice()
        .iter()
        .zip(h_hat.matrix().as_slice())
        .map(|(a, b)| (b - a).norm_sqr())
        .sum();
    Ok(num / denom)
}

/// Mean of `|h_hat_k^H h_k| / (|h_hat_k| |h_k|)` over the columns of one sample.
pub fn sample_cosine(h: &PrecoderChannelMatrix, h_hat: &PrecoderChannelMatrix) -> Result<f64> {
    check_shapes(h, h_hat)?;
    let mut total = 0.0;
    for k in 0..h.k() {
        let (a, b) = (h.column(k), h_hat.column(k));
        let d = (energy(&a) * energy(&b)).sqrt();
        if d == 0.0 {
            return Err(Error::Contract(format!("zero column {k} in cosine similarity")));
        }
        total += (inner(&b, &a).norm() / d).min(1.0);
    }
    Ok(total / h.k() as f64)
}

fn energy(v: &[crate::channel::C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn mean_over<F>(h: &[PrecoderChannelMatrix], h_hat: &[PrecoderChannelMatrix], f: F) -> Result<f64>
where
    F: Fn(&PrecoderChannelMatrix, &PrecoderChannelMatrix) -> Result<f64>,
{
    if h.len() != h_hat.len() || h.is_empty() {
        return Err(Error::Contract(format!(
            "metric needs equal, non-empty sample lists, got {} and {}",
            h.len(),
            h_hat.len()
        )));
    }
    let mut s = 0.0;
    for (a, b) in h.iter().zip(h_hat) {
        s += f(a, b)?;
    }
    Ok(s / h.len() as f64)
}

pub fn nmse(h: &[PrecoderChannelMatrix], h_hat: &[PrecoderChannelMatrix]) -> Result<Nmse> {
    mean_over(h, h_hat, sample_nmse).map(Nmse::from_linear)
}

pub fn cosine_similarity(h: &[PrecoderChannelMatrix], h_hat: &[PrecoderChannelMatrix]) -> Result<f64> {
    mean_over(h, h_hat, sample_cosine)
}
