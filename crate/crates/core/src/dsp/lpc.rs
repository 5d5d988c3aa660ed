//! Autocorrelation and linear prediction.

use super::fft::fft_in_place;
use crate::error::{Error, Result};

/// Direct `r[tau] = sum_n x[n] x[n + tau]` for `tau = 0..=max_lag`.
pub fn autocorrelation_direct(frame: &[f64], max_lag: usize) -> Vec<f64> {
    let max_lag = max_lag.min(frame.len().saturating_sub(1));
    (0..=max_lag)
        .map(|tau| frame[..frame.len() - tau].iter().zip(&frame[tau..]).map(|(a, b)| a * b).sum())
        .collect()
}

/// Autocorrelation up to `max_lag` (clamped to `len - 1`).
///
/// Small problems are summed directly; larger ones go through a
/// zero-padded FFT, which agrees with direct summation to rounding error.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    if frame.is_empty() {
        return Vec::new();
    }
    let max_lag = max_lag.min(frame.len() - 1);
    if frame.len() * (max_lag + 1) <= 16_384 {
        return autocorrelation_direct(frame, max_lag);
    }
    let nfft = (frame.len() + max_lag + 1).next_power_of_two();
    let mut re = vec![0.0; nfft];
    let mut im = vec![0.0; nfft];
    re[..frame.len()].copy_from_slice(frame);
    fft_in_place(&mut re, &mut im, false);
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        *r = *r * *r + *i * *i;
        *i = 0.0;
    }
    fft_in_place(&mut re, &mut im, true);
    re.truncate(max_lag + 1);
    re.iter_mut().for_each(|v| *v /= nfft as f64);
    re
}

/// Linear predictor of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    /// Predictor coefficients `a_1..a_p`: `x[n] ~ sum_i a_i x[n-i]`, so the
    /// inverse filter is `A(z) = 1 - sum_i a_i z^-i`.
    pub coeffs: Vec<f64>,
    /// Square root of the final prediction error power.
    pub gain: f64,
    /// Reflection coefficients from the recursion; all lie strictly inside
    /// `(-1, 1)`, which makes `1/A(z)` minimum phase.
    pub reflection: Vec<f64>,
}

impl Lpc {
    /// Coefficients of `A(z)` in ascending powers of `z^-1`, leading 1 included.
    pub fn inverse_filter(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().map(|a| -a)).collect()
    }
}

/// Levinson-Durbin solution of the normal equations for an autocorrelation
/// sequence `r[0..=order]`.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Lpc> {
    if order == 0 || r.len() <= order {
        return Err(Error::arg(format!(
            "order {order} needs {} autocorrelation lags, have {}",
            order + 1,
            r.len()
        )));
    }
    if !(r[0] > 0.0) {
        return Err(Error::DegenerateFrame("zero-energy frame".into()));
    }
    let mut a = vec![0.0; order + 1];
    let mut prev = vec![0.0; order + 1];
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = r[i] - (1..i).map(|j| a[j] * r[i - j]).sum::<f64>();
        let k = acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::DegenerateFrame(format!(
                "reflection coefficient {k} at step {i}"
            )));
        }
        prev.copy_from_slice(&a);
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] - k * prev[i - j];
        }
        err *= 1.0 - k * k;
        reflection.push(k);
        if !(err > 0.0) && i < order {
            return Err(Error::DegenerateFrame(format!(
                "prediction error vanished at step {i} of {order}"
            )));
        }
    }
    Ok(Lpc {
        coeffs: a[1..].to_vec(),
        gain: err.max(0.0).sqrt(),
        reflection,
    })
}

/// LPC analysis of an (already windowed) frame by the autocorrelation method.
pub fn lpc_coefficients(frame: &[f64], order: usize) -> Result<Lpc> {
    if order == 0 {
        return Err(Error::arg("LPC order must be at least 1"));
    }
    if frame.len() <= order {
        return Err(Error::arg(format!(
            "frame of {} samples too short for order {order}",
            frame.len()
        )));
    }
    levinson_durbin(&autocorrelation(frame, order), order)
}
