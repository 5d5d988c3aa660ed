//! Reference computations written independently of the library, and
//! checks comparing the two. Each check returns a short summary on
//! success and a description of the worst mismatch on failure.

use std::f64::consts::PI;

use emoset::dimred::fit_pca;
use emoset::dsp::fft_in_place;
use emoset::eval::{
    dl_classification_rate, dl_recall, rejection_curve, threshold_sweep, topk_accuracy, unweighted_average_recall,
    ConfusionStats,
};
use emoset::functionals::{functional, FunctionalId, GENERAL_FUNCTIONALS};
use emoset::matrix::Mat;
use emoset::seed::rng;
use emoset::svm::{primal_objective, solve_dual, Decision, Posterior, SolverParams};
use emoset::tsne::{kl_divergence, kl_gradient};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub type Check = Result<String, String>;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let data = (0..rows * cols).map(|_| normal.sample(&mut r)).collect();
    Mat::new(data, rows, cols).unwrap()
}

/// Direct O(n^2) DFT.
pub fn direct_dft(re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        for t in 0..n {
            let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
            let (s, c) = angle.sin_cos();
            out_re[k] += re[t] * c - im[t] * s;
            out_im[k] += re[t] * s + im[t] * c;
        }
    }
    (out_re, out_im)
}

pub fn check_fft() -> Check {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for bits in 1..=10 {
        let n = 1usize << bits;
        let re: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let im: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let (dre, dim) = direct_dft(&re, &im);
        let (mut fre, mut fim) = (re.clone(), im.clone());
        fft_in_place(&mut fre, &mut fim, false);
        let scale = dre.iter().zip(&dim).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
        let err = (0..n).map(|k| (fre[k] - dre[k]).hypot(fim[k] - dim[k])).fold(0.0, f64::max);
        worst = worst.max(err / scale);
    }
    if worst <= 1e-9 {
        Ok(format!("sizes 2..1024, max relative error {worst:.2e}"))
    } else {
        Err(format!("max relative error {worst:.2e} exceeds 1e-9"))
    }
}

/// k-th smallest value by counting, without sorting.
fn kth_smallest(x: &[f64], k: usize) -> f64 {
    for &v in x {
        let below = x.iter().filter(|&&u| u < v).count();
        let at_or_below = x.iter().filter(|&&u| u <= v).count();
        if below <= k && k < at_or_below {
            return v;
        }
    }
    unreachable!("rank {k} out of range")
}

fn brute_percentile(x: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (x.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let a = kth_smallest(x, lo);
    if frac == 0.0 {
        a
    } else {
        a + frac * (kth_smallest(x, lo + 1) - a)
    }
}

/// Textbook definitions of every functional.
pub fn brute_functional(x: &[f64], id: FunctionalId) -> f64 {
    use FunctionalId::*;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let pos = |target: f64| x.iter().position(|&v| v == target).unwrap() as f64 / (n - 1.0);
    let (st, sx, stt, stx) = x.iter().enumerate().fold((0.0, 0.0, 0.0, 0.0), |acc, (t, &v)| {
        let t = t as f64;
        (acc.0 + t, acc.1 + v, acc.2 + t * t, acc.3 + t * v)
    });
    let slope = (n * stx - st * sx) / (n * stt - st * st);
    let offset = (sx - slope * st) / n;
    match id {
        Mean => mean,
        StdDev => moment(2).sqrt(),
        Skewness => moment(3) / moment(2).powf(1.5),
        Kurtosis => moment(4) / moment(2).powi(2),
        Min => min,
        Max => max,
        Range => max - min,
        MaxPos => pos(max),
        MinPos => pos(min),
        Quartile1 => brute_percentile(x, 25.0),
        Median => brute_percentile(x, 50.0),
        Quartile3 => brute_percentile(x, 75.0),
        Iqr12 => brute_percentile(x, 50.0) - brute_percentile(x, 25.0),
        Iqr23 => brute_percentile(x, 75.0) - brute_percentile(x, 50.0),
        Iqr13 => brute_percentile(x, 75.0) - brute_percentile(x, 25.0),
        Percentile1 => brute_percentile(x, 1.0),
        Percentile99 => brute_percentile(x, 99.0),
        PctRange1To99 => brute_percentile(x, 99.0) - brute_percentile(x, 1.0),
        LinRegSlope => slope,
        LinRegOffset => offset,
        LinRegErrQ => {
            x.iter()
                .enumerate()
                .map(|(t, &v)| (v - offset - slope * t as f64).powi(2))
                .sum::<f64>()
                / n
        }
    }
}

pub fn check_functionals_on(track: &[f64]) -> Check {
    let mut worst = (0.0f64, "");
    for id in GENERAL_FUNCTIONALS {
        let got = functional(track, id).map_err(|e| e.to_string())?;
        let want = brute_functional(track, id);
        let err = (got - want).abs() / want.abs().max(1.0);
        if err > worst.0 {
            worst = (err, id.as_str());
        }
    }
    if worst.0 <= 1e-9 {
        Ok(format!("21 functionals on {} points, max error {:.2e}", track.len(), worst.0))
    } else {
        Err(format!("{} differs by {:.2e}", worst.1, worst.0))
    }
}

pub fn oracle_track(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 3.0).unwrap();
    (0..len).map(|t| 2.0 + 0.01 * t as f64 + normal.sample(&mut r)).collect()
}

pub fn check_functionals() -> Check {
    check_functionals_on(&oracle_track(500, 21))
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations. Returns
/// eigenvalues descending and the matching eigenvectors as columns of a
/// row-major `n x n` matrix.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[b * n + b].total_cmp(&m[a * n + a]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    (values, vectors)
}

/// Population covariance of the columns of `x`.
pub fn covariance(x: &Mat) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            cov[a * d + b] = (0..n).map(|i| (x.get(i, a) - mean[a]) * (x.get(i, b) - mean[b])).sum::<f64>() / n as f64;
        }
    }
    cov
}

fn compare_pca(x: &Mat, k: usize) -> Result<f64, String> {
    let d = x.cols();
    let fit = fit_pca(x, k).map_err(|e| e.to_string())?;
    let (values, vectors) = jacobi_eigen(&covariance(x), d);
    let mut worst: f64 = 0.0;
    for j in 0..k {
        worst = worst.max((fit.eigenvalues[j] - values[j]).abs() / values[0]);
        let got = fit.component(j);
        let want: Vec<f64> = (0..d).map(|i| vectors[i * d + j]).collect();
        let sign = if got.iter().zip(&want).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        let err = got.iter().zip(&want).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
        worst = worst.max(err);
    }
    Ok(worst)
}

pub fn check_pca() -> Check {
    // Tall data uses the covariance route, wide data the Gram route.
    let tall = compare_pca(&random_matrix(60, 12, 31), 8)?;
    let wide = compare_pca(&random_matrix(15, 40, 32), 10)?;
    let worst = tall.max(wide);
    if worst <= 1e-6 {
        Ok(format!("covariance and Gram routes, max eigenpair error {worst:.2e}"))
    } else {
        Err(format!("eigenpair error {worst:.2e} exceeds 1e-6 (tall {tall:.2e}, wide {wide:.2e})"))
    }
}

/// Exact optimum of the bias-augmented hinge-loss primal for a handful of
/// points: every split of the points into margin violators, margin
/// points and clear points is tried. For the split of the true optimum the
/// equality-constrained quadratic has the optimum as its unique solution,
/// so the best candidate by primal value is the optimum.
pub fn brute_force_svm(x: &Mat, y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.cols());
    let aug = |i: usize| -> Vec<f64> {
        let mut v = x.row(i).to_vec();
        v.push(1.0);
        v
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut state = vec![0u8; n];
    loop {
        let mut s = vec![0.0; d + 1];
        let mut margin_rows = Vec::new();
        for i in 0..n {
            match state[i] {
                0 => aug(i).iter().zip(s.iter_mut()).for_each(|(a, si)| *si += c * y[i] * a),
                1 => margin_rows.push(i),
                _ => {}
            }
        }
        let mut w = s.clone();
        if !margin_rows.is_empty() {
            let m = margin_rows.len();
            let a = DMatrix::from_fn(m, d + 1, |r, col| y[margin_rows[r]] * aug(margin_rows[r])[col]);
            // w = s + A^T lambda with A w = 1
            let rhs = DMatrix::from_fn(m, 1, |r, _| 1.0 - (0..=d).map(|col| a[(r, col)] * s[col]).sum::<f64>());
            let gram = &a * a.transpose();
            if let Ok(pinv) = gram.pseudo_inverse(1e-12) {
                let lambda = pinv * rhs;
                let shift = a.transpose() * lambda;
                w.iter_mut().enumerate().for_each(|(j, wj)| *wj += shift[(j, 0)]);
            }
        }
        let obj = primal_objective(x, y, c, &w[..d], w[d]);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, w));
        }
        let mut i = 0;
        while i < n {
            state[i] += 1;
            if state[i] < 3 {
                break;
            }
            state[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let (_, w) = best.unwrap();
    (w[..d].to_vec(), w[d])
}

pub fn svm_problem(n: usize, seed: u64) -> (Mat, Vec<f64>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        rows.push(vec![0.8 * label + normal.sample(&mut r), 0.3 * label + normal.sample(&mut r)]);
        y.push(label);
    }
    (Mat::from_rows(&rows).unwrap(), y)
}

pub fn check_svm() -> Check {
    let params = SolverParams {
        tolerance: 1e-8,
        max_epochs: 100_000,
    };
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (seed, n) in [(41, 8), (42, 8), (43, 7), (44, 6), (45, 8)] {
        let (x, y) = svm_problem(n, seed);
        for c in [0.1, 1.0, 10.0] {
            let (w, b) = brute_force_svm(&x, &y, c);
            let sol = solve_dual(&x, &y, c, seed, &params).map_err(|e| e.to_string())?;
            let err = sol
                .weights
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs())
                .fold((sol.bias - b).abs(), f64::max);
            worst = worst.max(err);
            cases += 1;
        }
    }
    if worst <= 1e-4 {
        Ok(format!("{cases} problems of 6-8 points, max weight error {worst:.2e}"))
    } else {
        Err(format!("solver weights differ from the exhaustive optimum by {worst:.2e}"))
    }
}

pub fn check_tsne_gradient() -> Check {
    let n = 10;
    let x = random_matrix(n, 5, 51);
    let p = emoset::tsne::perplexity_affinities(&x, 2.5).map_err(|e| e.to_string())?;
    let mut r = rng(52);
    let y: Vec<f64> = (0..2 * n).map(|_| r.random_range(-2.0..2.0)).collect();
    let grad = kl_gradient(&p, &y);
    let h = 1e-5;
    let mut num = vec![0.0; 2 * n];
    for k in 0..2 * n {
        let mut plus = y.clone();
        let mut minus = y.clone();
        plus[k] += h;
        minus[k] -= h;
        num[k] = (kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h);
    }
    let diff: f64 = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = num.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = diff / norm;
    if rel <= 1e-4 {
        Ok(format!("10 points, relative gradient error {rel:.2e}"))
    } else {
        Err(format!("relative gradient error {rel:.2e} exceeds 1e-4"))
    }
}

/// Hand recount of one (truth, decision) list: per-class hits and misses,
/// rejections, and the confusion table.
pub struct Recount {
    pub hits: Vec<usize>,
    pub misses: Vec<usize>,
    pub rejected: usize,
    pub table: Vec<Vec<usize>>,
}

pub fn recount(truth: &[usize], decisions: &[Decision], classes: usize) -> Recount {
    let mut r = Recount {
        hits: vec![0; classes],
        misses: vec![0; classes],
        rejected: 0,
        table: vec![vec![0; classes + 1]; classes],
    };
    for (&t, d) in truth.iter().zip(decisions) {
        let col = match *d {
            Decision::Class(p) => p,
            Decision::Reject => classes,
        };
        r.table[t][col] += 1;
    }
    for c in 0..classes {
        r.hits[c] = r.table[c][c];
        r.misses[c] = (0..classes).filter(|&p| p != c).map(|p| r.table[c][p]).sum();
        r.rejected += r.table[c][classes];
    }
    r
}

fn posteriors_of(probs: &[Vec<f64>], theta: f64) -> Vec<Posterior> {
    probs
        .iter()
        .map(|p| {
            let best = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
            Posterior {
                probs: p.clone(),
                decision: if p[best] >= theta { Decision::Class(best) } else { Decision::Reject },
            }
        })
        .collect()
}

fn metric_identities_once(n: usize, classes: usize, seed: u64) -> Result<(), String> {
    let (probs, truth) = super::synth::random_posteriors(n, classes, 0.6, seed);
    let sweep = threshold_sweep(0.0, 1.0, 0.05).map_err(|e| e.to_string())?;
    for &theta in &sweep {
        let post = posteriors_of(&probs, theta);
        let decisions: Vec<Decision> = post.iter().map(|p| p.decision).collect();
        let stats = ConfusionStats::from_decisions(&truth, &decisions, classes).map_err(|e| e.to_string())?;
        let hand = recount(&truth, &decisions, classes);
        if stats.tp != hand.hits || stats.fn_ != hand.misses || stats.rejected != hand.rejected || stats.matrix != hand.table {
            return Err(format!("confusion counts differ from the recount at theta {theta}"));
        }
        let covered: usize = hand.hits.iter().zip(&hand.misses).map(|(a, b)| a + b).sum::<usize>() + hand.rejected;
        if covered != n {
            return Err(format!("tp + fn + rejected = {covered}, expected {n}"));
        }
        let rate = dl_classification_rate(&stats).map_err(|e| e.to_string())?;
        if rate != hand.hits.iter().sum::<usize>() as f64 / n as f64 {
            return Err(format!("classification rate {rate} differs from the recount at theta {theta}"));
        }
        let mut recalls = Vec::new();
        for c in 0..classes {
            let denom = hand.hits[c] + hand.misses[c];
            let want = (denom > 0).then(|| hand.hits[c] as f64 / denom as f64);
            if dl_recall(&stats, c) != want {
                return Err(format!("recall of class {c} differs from the recount at theta {theta}"));
            }
            recalls.extend(want);
        }
        let uar = (!recalls.is_empty()).then(|| recalls.iter().sum::<f64>() / recalls.len() as f64);
        if unweighted_average_recall(&stats) != uar {
            return Err(format!("unweighted recall differs at theta {theta}"));
        }
        if theta == 0.0 {
            let top1 = topk_accuracy(&post, &truth, 1).map_err(|e| e.to_string())?;
            if top1 != rate {
                return Err(format!("top-1 {top1} differs from the classification rate {rate} at theta 0"));
            }
            let top2 = topk_accuracy(&post, &truth, 2).map_err(|e| e.to_string())?;
            let top3 = topk_accuracy(&post, &truth, 3).map_err(|e| e.to_string())?;
            if !(top1 <= top2 && top2 <= top3) {
                return Err(format!("top-k not ordered: {top1} {top2} {top3}"));
            }
        }
    }
    let post = posteriors_of(&probs, 0.0);
    let curve = rejection_curve(&post, &truth, &sweep).map_err(|e| e.to_string())?;
    if curve[0].rejection_rate != 0.0 {
        return Err("rejection at theta 0".into());
    }
    for w in curve.windows(2) {
        if w[1].rejection_rate < w[0].rejection_rate {
            return Err(format!("rejection rate falls between theta {} and {}", w[0].theta, w[1].theta));
        }
    }
    Ok(())
}

pub fn check_metric_identities() -> Check {
    let mut cases = 0;
    for seed in 0..40u64 {
        let classes = [3, 7, 8][seed as usize % 3];
        let n = 5 + (seed as usize * 37) % 300;
        metric_identities_once(n, classes, seed)?;
        cases += 1;
    }
    Ok(format!("{cases} synthetic prediction sets x 21 thresholds agree with the recount"))
}
