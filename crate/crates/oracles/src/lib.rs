//! Brute-force reference computations used only by tests.
//!
//! Nothing here calls into the main library: every routine works on plain
//! slices with textbook formulas (double loops, cofactor expansion,
//! Gauss-Jordan elimination) so that agreement with the main path is
//! meaningful.

#![allow(clippy::needless_range_loop)]

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    Degenerate(String),
    Singular,
    NoTrials,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Degenerate(m) => write!(f, "degenerate: {m}"),
            OracleError::Singular => f.write_str("singular matrix"),
            OracleError::NoTrials => f.write_str("trials must be positive"),
        }
    }
}

impl std::error::Error for OracleError {}

/// A named random instance with its seed and comparison tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub seed: u64,
    pub tolerance: f64,
}

impl OracleCase {
    pub fn new(name: &str, seed: u64, tolerance: f64) -> Self {
        OracleCase {
            name: format!("{name}/seed={seed}"),
            seed,
            tolerance,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        seeded_rng(self.seed)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative difference scaled by `max(|a|, |b|, 1)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteAnova {
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub df_between: usize,
    pub df_within: usize,
    /// `None` when the within sum of squares is zero.
    pub f: Option<f64>,
}

/// One-way ANOVA from the definitions, group ids are arbitrary integers.
pub fn anova_bruteforce(values: &[f64], groups: &[usize]) -> BruteAnova {
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();

    let mut grand = 0.0;
    for v in values {
        grand += v;
    }
    grand /= values.len() as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for &g in &ids {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..values.len() {
            if groups[i] == g {
                sum += values[i];
                count += 1;
            }
        }
        let mean = sum / count as f64;
        for i in 0..values.len() {
            if groups[i] == g {
                ss_within += (values[i] - mean) * (values[i] - mean);
                ss_between += (mean - grand) * (mean - grand);
            }
        }
    }
    let mut ss_total = 0.0;
    for v in values {
        ss_total += (v - grand) * (v - grand);
    }
    let df_between = ids.len() - 1;
    let df_within = values.len() - ids.len();
    let f = (ss_within > 0.0)
        .then(|| (ss_between / df_between as f64) / (ss_within / df_within as f64));
    BruteAnova {
        ss_between,
        ss_within,
        ss_total,
        df_between,
        df_within,
        f,
    }
}

/// Determinant by cofactor expansion, orders 1 to 3.
pub fn det_cofactor(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        n => panic!("cofactor determinant supports order <= 3, got {n}"),
    }
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, OracleError> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        if aug[pivot][col].abs() < 1e-13 * scale {
            return Err(OracleError::Singular);
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = aug[r][col];
                if factor != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= factor * aug[col][c];
                    }
                }
            }
        }
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

/// Two-group discriminant direction `S⁻¹(μ₁ − μ₂)`, unit length.
pub fn lda_two_group_analytic(
    mean_a: &[f64],
    mean_b: &[f64],
    pooled_cov: &[Vec<f64>],
) -> Result<Vec<f64>, OracleError> {
    let diff: Vec<f64> = mean_a.iter().zip(mean_b).map(|(a, b)| a - b).collect();
    let norm_diff = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    let scale = mean_a
        .iter()
        .chain(mean_b)
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if norm_diff <= 1e-12 * scale {
        return Err(OracleError::Degenerate("equal group means".into()));
    }
    let inv = gauss_jordan_inverse(pooled_cov)?;
    let dir = mat_vec(&inv, &diff);
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(dir.into_iter().map(|d| d / norm).collect())
}

/// Absolute cosine similarity of two directions.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

/// Nearest group mean under the pooled covariance (divisor n − k), equal
/// priors, ties to the smallest group id. Returns the predicted group id.
pub fn mahalanobis_classify(
    train: &[Vec<f64>],
    labels: &[usize],
    x: &[f64],
) -> Result<usize, OracleError> {
    let p = x.len();
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut means = Vec::new();
    for &g in &ids {
        let mut m = vec![0.0; p];
        let mut count = 0.0;
        for (row, &l) in train.iter().zip(labels) {
            if l == g {
                for j in 0..p {
                    m[j] += row[j];
                }
                count += 1.0;
            }
        }
        for v in m.iter_mut() {
            *v /= count;
        }
        means.push(m);
    }
    let mut cov = vec![vec![0.0; p]; p];
    for (row, &l) in train.iter().zip(labels) {
        let m = &means[ids.iter().position(|&g| g == l).unwrap()];
        for a in 0..p {
            for b in 0..p {
                cov[a][b] += (row[a] - m[a]) * (row[b] - m[b]);
            }
        }
    }
    let df = (train.len() - ids.len()) as f64;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= df;
        }
    }
    let inv = gauss_jordan_inverse(&cov)?;
    let mut best = (ids[0], f64::INFINITY);
    for (&g, m) in ids.iter().zip(&means) {
        let d: Vec<f64> = x.iter().zip(m).map(|(a, b)| a - b).collect();
        let d2: f64 = d.iter().zip(mat_vec(&inv, &d)).map(|(a, b)| a * b).sum();
        if d2 < best.1 {
            best = (g, d2);
        }
    }
    Ok(best.0)
}

/// Leave-one-out predictions by refitting from scratch for every case.
pub fn loocv_bruteforce(values: &[Vec<f64>], labels: &[usize]) -> Result<Vec<usize>, OracleError> {
    (0..values.len())
        .map(|i| {
            let train: Vec<Vec<f64>> = values
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.clone())
                .collect();
            let lab: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &l)| l)
                .collect();
            mahalanobis_classify(&train, &lab, &values[i])
        })
        .collect()
}

/// Agreement percentage by hand count over response tokens; `None` when no
/// expert gave an opinion.
pub fn hand_count_agreement(responses: &[&str]) -> Option<f64> {
    let mut agree = 0u32;
    let mut opinion = 0u32;
    for r in responses {
        match *r {
            "completely_agree" | "agree" => {
                agree += 1;
                opinion += 1;
            }
            "disagree" | "not_agree_at_all" => opinion += 1,
            _ => {}
        }
    }
    (opinion > 0).then(|| 100.0 * agree as f64 / opinion as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shuffle {
    Random,
    /// Leaves labels in place; the baseline then equals the unshuffled rate.
    Identity,
}

/// Correct rates of `rate_fn` over `trials` label permutations.
pub fn permutation_baseline<L, F>(
    labels: &[L],
    trials: usize,
    seed: u64,
    shuffle: Shuffle,
    mut rate_fn: F,
) -> Result<Vec<f64>, OracleError>
where
    L: Clone,
    F: FnMut(&[L]) -> f64,
{
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let mut rng = seeded_rng(seed);
    let mut perm = labels.to_vec();
    Ok((0..trials)
        .map(|_| {
            perm.clone_from_slice(labels);
            if shuffle == Shuffle::Random {
                perm.shuffle(&mut rng);
            }
            rate_fn(&perm)
        })
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_anova() {
        let a = anova_bruteforce(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(a.f, Some(8.0));
        let c = anova_bruteforce(&[5.0; 4], &[0, 0, 1, 1]);
        assert_eq!((c.ss_between, c.ss_within, c.ss_total), (0.0, 0.0, 0.0));
        assert_eq!(c.f, None);
    }

    #[test]
    fn cofactor_and_inverse() {
        let a = vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ];
        let inv = gauss_jordan_inverse(&a).unwrap();
        for i in 0..3 {
            let col: Vec<f64> = (0..3).map(|k| inv[k][i]).collect();
            let e = mat_vec(&a, &col);
            for (j, v) in e.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!((det_cofactor(&a) - 21.29).abs() < 1e-9);
        assert_eq!(
            gauss_jordan_inverse(&[vec![1.0, 2.0], vec![2.0, 4.0]]),
            Err(OracleError::Singular)
        );
    }

    #[test]
    fn spherical_two_group_direction() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let d = lda_two_group_analytic(&[3.0, 0.0], &[-1.0, 0.0], &eye).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-15 && d[1].abs() < 1e-15);
        assert!(matches!(
            lda_two_group_analytic(&[1.0, 1.0], &[1.0, 1.0], &eye),
            Err(OracleError::Degenerate(_))
        ));
    }

    #[test]
    fn permutation_rules() {
        let labels = [0, 1, 2];
        assert_eq!(
            permutation_baseline(&labels, 0, 1, Shuffle::Random, |_| 0.0),
            Err(OracleError::NoTrials)
        );
        let ident = permutation_baseline(&labels, 1, 1, Shuffle::Identity, |l| {
            if l == labels {
                100.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert_eq!(ident, vec![100.0]);
        let a = permutation_baseline(&labels, 20, 9, Shuffle::Random, |l| l[0] as f64).unwrap();
        let b = permutation_baseline(&labels, 20, 9, Shuffle::Random, |l| l[0] as f64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hand_count() {
        assert_eq!(
            hand_count_agreement(&["agree", "dont_know", "disagree"]),
            Some(50.0)
        );
        assert_eq!(hand_count_agreement(&["dont_know"]), None);
    }
}
