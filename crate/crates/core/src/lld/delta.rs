/// Half-width of the delta regression window.
pub const DELTA_WINDOW: usize = 2;

/// Regression deltas `d_t = sum_w w (x_{t+w} - x_{t-w}) / (2 sum_w w^2)`
/// with the boundary frames repeated at both edges.
pub fn delta_coefficients(track: &[f64]) -> Vec<f64> {
    let n = track.len() as isize;
    if n == 0 {
        return Vec::new();
    }
    let denom: f64 = 2.0 * (1..=DELTA_WINDOW).map(|w| (w * w) as f64).sum::<f64>();
    let at = |t: isize| track[t.clamp(0, n - 1) as usize];
    (0..n)
        .map(|t| {
            (1..=DELTA_WINDOW as isize)
                .map(|w| w as f64 * (at(t + w) - at(t - w)))
                .sum::<f64>()
                / denom
        })
        .collect()
}
