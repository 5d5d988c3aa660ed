//! Radix-2 FFT and spectral helpers.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// In-place iterative radix-2 decimation-in-time FFT.
///
/// `re.len()` must be a power of two. `inverse` computes the unscaled
/// inverse transform.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64], inverse: bool) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        for k in 0..half {
            // twiddles computed directly rather than by recurrence to keep
            // rounding error at machine precision for large transforms
            let (ws, wc) = (step * k as f64).sin_cos();
            let mut start = 0;
            while start < n {
                let a = start + k;
                let b = a + half;
                let tr = re[b] * wc - im[b] * ws;
                let ti = re[b] * ws + im[b] * wc;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                start += len;
            }
        }
        len <<= 1;
    }
}

fn check_nfft(frame_len: usize, nfft: usize) -> Result<()> {
    if !nfft.is_power_of_two() {
        return Err(Error::arg(format!("nfft {nfft} is not a power of two")));
    }
    if nfft < frame_len {
        return Err(Error::arg(format!("nfft {nfft} shorter than frame of {frame_len}")));
    }
    Ok(())
}

/// Magnitudes `|X[k]|` for `k = 0..=nfft/2` of the zero-padded frame.
pub fn fft_magnitude(frame: &[f64], nfft: usize) -> Result<Vec<f64>> {
    Ok(power_spectrum(frame, nfft)?.into_iter().map(f64::sqrt).collect())
}

/// Squared magnitudes `|X[k]|^2` for `k = 0..=nfft/2`.
pub fn power_spectrum(frame: &[f64], nfft: usize) -> Result<Vec<f64>> {
    check_nfft(frame.len(), nfft)?;
    let mut re = vec![0.0; nfft];
    let mut im = vec![0.0; nfft];
    re[..frame.len()].copy_from_slice(frame);
    fft_in_place(&mut re, &mut im, false);
    Ok((0..=nfft / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect())
}

/// Symmetric Hamming window of length `n`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}
