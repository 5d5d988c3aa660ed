mod common;

use common::oracles::random_matrix;
use emoset::matrix::{squared_distance, Mat};
use emoset::tsne::{conditional_row, embedding_affinities, perplexity_affinities, silhouette_score, tsne_embed, TsneConfig};

fn quick(perplexity: f64, seed: u64) -> TsneConfig {
    TsneConfig {
        perplexity,
        iterations: 600,
        seed,
        ..TsneConfig::default()
    }
}

#[test]
fn conditional_entropy_hits_log_perplexity() {
    let x = random_matrix(20, 5, 61);
    let perplexity = 5.0;
    for i in 0..20 {
        let dist: Vec<f64> = (0..20).map(|j| squared_distance(x.row(i), x.row(j))).collect();
        let p = conditional_row(&dist, i, perplexity);
        assert_eq!(p[i], 0.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let entropy: f64 = -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.ln()).sum::<f64>();
        assert!((entropy - perplexity.ln()).abs() < 1e-4, "row {i}: {entropy}");
    }
}

#[test]
fn joint_affinities_are_symmetric_and_normalized() {
    let x = random_matrix(30, 4, 62);
    let p = perplexity_affinities(&x, 6.0).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for i in 0..30 {
        assert_eq!(p[i * 30 + i], 0.0);
        for j in 0..30 {
            assert_eq!(p[i * 30 + j], p[j * 30 + i]);
        }
    }
}

#[test]
fn embedding_affinities_sum_to_one() {
    let y: Vec<f64> = random_matrix(25, 2, 63).data().to_vec();
    let q = embedding_affinities(&y);
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    for i in 0..25 {
        assert_eq!(q[i * 25 + i], 0.0);
        let row: f64 = (0..25).filter(|&j| j != i).map(|j| q[i * 25 + j]).sum();
        assert!(row > 0.0);
        assert!((0..25).filter(|&j| j != i).all(|j| q[i * 25 + j] > 0.0 && q[i * 25 + j] == q[j * 25 + i]));
    }
}

fn two_clusters(per: usize, seed: u64) -> (Mat, Vec<usize>) {
    let noise = random_matrix(2 * per, 10, seed);
    let rows: Vec<Vec<f64>> = (0..2 * per)
        .map(|i| {
            let mut r = noise.row(i).to_vec();
            if i >= per {
                r[0] += 20.0;
            }
            r
        })
        .collect();
    (Mat::from_rows(&rows).unwrap(), (0..2 * per).map(|i| usize::from(i >= per)).collect())
}

#[test]
fn separated_clusters_stay_separated_and_kl_settles() {
    let (x, labels) = two_clusters(50, 64);
    let emb = tsne_embed(&x, &TsneConfig { seed: 1, ..TsneConfig::default() }).unwrap();
    assert!(emb.points.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
    assert!(silhouette_score(&emb.points, &labels) > 0.5);
    assert!(emb.final_kl >= 0.0);
    let at_300 = emb.kl_trace.iter().find(|(it, _)| *it == 300).expect("KL recorded at 300").1;
    assert!(emb.final_kl <= at_300 + 1e-6, "{} > {}", emb.final_kl, at_300);
}

#[test]
fn duplicated_rows_embed_next_to_their_twin() {
    let base = random_matrix(40, 6, 65);
    let mut rows: Vec<Vec<f64>> = base.iter_rows().map(|r| r.to_vec()).collect();
    rows.extend(base.iter_rows().map(|r| r.to_vec()));
    let x = Mat::from_rows(&rows).unwrap();
    // 80 points: the default step overshoots at this size
    let cfg = TsneConfig {
        perplexity: 10.0,
        learning_rate: 50.0,
        seed: 2,
        ..TsneConfig::default()
    };
    let emb = tsne_embed(&x, &cfg).unwrap();
    let n = rows.len();
    let twin_hits = (0..n)
        .filter(|&i| {
            let twin = (i + 40) % n;
            let d = |j: usize| {
                let (a, b) = (emb.points[i], emb.points[j]);
                (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
            };
            (0..n).filter(|&j| j != i).min_by(|&a, &b| d(a).total_cmp(&d(b))) == Some(twin)
        })
        .count();
    assert!(twin_hits as f64 >= 0.9 * n as f64, "{twin_hits} of {n}");
}

#[test]
fn embedding_is_permutation_equivariant_and_deterministic() {
    let x = random_matrix(36, 5, 66);
    let perm: Vec<usize> = (0..36).map(|i| (i * 7 + 3) % 36).collect();
    let xp = x.select_rows(&perm);
    let a = tsne_embed(&x, &quick(8.0, 3)).unwrap();
    let b = tsne_embed(&xp, &quick(8.0, 3)).unwrap();
    for (k, &src) in perm.iter().enumerate() {
        assert_eq!(b.points[k], a.points[src]);
    }
    assert_eq!(a, tsne_embed(&x, &quick(8.0, 3)).unwrap());
}

#[test]
fn infeasible_perplexity_is_an_argument_error() {
    let x = random_matrix(10, 3, 67);
    assert!(tsne_embed(&x, &quick(5.0, 0)).is_err());
}
