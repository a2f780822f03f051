//! Principal component analysis on the correlation matrix, Kaiser retention
//! and scree data.

use serde::Serialize;

use crate::datamodel::{Dimension, EvaluationMatrix};
use crate::error::{Error, Result};
use crate::numkernel::{eigen_symmetric, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaInput {
    /// Standardized variables.
    #[default]
    Correlation,
    /// Centered, unscaled variables.
    Covariance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaOptions {
    pub input: PcaInput,
    /// Variable whose loading is made positive on component `j`; components
    /// past the end of the list use their largest-|loading| variable.
    pub sign_anchors: Vec<Dimension>,
}

impl Default for PcaOptions {
    fn default() -> Self {
        PcaOptions {
            input: PcaInput::Correlation,
            sign_anchors: vec![Dimension::NewUse, Dimension::Emulation],
        }
    }
}

/// Eigenvalues within this distance of 1 make the Kaiser cut unstable.
pub const KAISER_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaResult {
    pub input: PcaInput,
    pub eigenvalues: Vec<f64>,
    pub proportions: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// `loadings[variable][component]`, variables in [`Dimension::ALL`] order.
    pub loadings: Vec<Vec<f64>>,
    /// `scores[case][component]`.
    pub scores: Vec<Vec<f64>>,
    pub software_ids: Vec<String>,
    pub retained: usize,
    pub borderline: bool,
}

impl PcaResult {
    pub fn loading(&self, d: Dimension, component: usize) -> f64 {
        self.loadings[d.index()][component]
    }
}

struct Centered {
    columns: Vec<Vec<f64>>,
    sds: Vec<f64>,
}

fn center(matrix: &EvaluationMatrix) -> Result<Centered> {
    if matrix.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "PCA needs at least 2 rows, got {}",
            matrix.len()
        )));
    }
    let n = matrix.len() as f64;
    let mut columns = Vec::with_capacity(5);
    let mut sds = Vec::with_capacity(5);
    for d in Dimension::ALL {
        let col = matrix.column(d);
        let mean = col.iter().sum::<f64>() / n;
        let centered: Vec<f64> = col.iter().map(|x| x - mean).collect();
        let sd = (centered.iter().map(|x| x * x).sum::<f64>() / (n - 1.0)).sqrt();
        if sd == 0.0 {
            return Err(Error::DegenerateColumn(d));
        }
        columns.push(centered);
        sds.push(sd);
    }
    Ok(Centered { columns, sds })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pearson correlation matrix of the five dimensions.
pub fn correlation_matrix(matrix: &EvaluationMatrix) -> Result<SymMatrix> {
    let c = center(matrix)?;
    let n1 = matrix.len() as f64 - 1.0;
    Ok(SymMatrix::from_lower_fn(5, |i, j| {
        if i == j {
            1.0
        } else {
            (dot(&c.columns[i], &c.columns[j]) / n1 / (c.sds[i] * c.sds[j])).clamp(-1.0, 1.0)
        }
    }))
}

/// Sample covariance matrix (divisor n − 1) of the five dimensions.
pub fn covariance_matrix(matrix: &EvaluationMatrix) -> Result<SymMatrix> {
    let c = center(matrix)?;
    let n1 = matrix.len() as f64 - 1.0;
    Ok(SymMatrix::from_lower_fn(5, |i, j| {
        dot(&c.columns[i], &c.columns[j]) / n1
    }))
}

pub fn run_pca(matrix: &EvaluationMatrix) -> Result<PcaResult> {
    run_pca_with(matrix, &PcaOptions::default())
}

pub fn run_pca_with(matrix: &EvaluationMatrix, options: &PcaOptions) -> Result<PcaResult> {
    let c = center(matrix)?;
    let input_matrix = match options.input {
        PcaInput::Correlation => correlation_matrix(matrix)?,
        PcaInput::Covariance => covariance_matrix(matrix)?,
    };
    let eig = eigen_symmetric(&input_matrix)?;
    let p = eig.eigenvalues.len();
    // tiny negative eigenvalues from rounding are clamped for the sqrt
    let mut loadings: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| eig.vector_entry(i, j) * eig.eigenvalues[j].max(0.0).sqrt())
                .collect()
        })
        .collect();
    let mut vectors = eig.eigenvectors.clone();
    let flips = orientation_flips(&loadings, &options.sign_anchors);
    for (j, &flip) in flips.iter().enumerate() {
        if flip {
            for row in loadings.iter_mut() {
                row[j] = -row[j];
            }
            for v in vectors[j].iter_mut() {
                *v = -*v;
            }
        }
    }

    let total: f64 = eig.eigenvalues.iter().sum();
    let proportions: Vec<f64> = eig.eigenvalues.iter().map(|l| l / total).collect();
    let cumulative = proportions
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let scale: Vec<f64> = match options.input {
        PcaInput::Correlation => c.sds.clone(),
        PcaInput::Covariance => vec![1.0; p],
    };
    let scores = (0..matrix.len())
        .map(|case| {
            let z: Vec<f64> = (0..p).map(|i| c.columns[i][case] / scale[i]).collect();
            vectors.iter().map(|v| dot(v, &z)).collect()
        })
        .collect();

    Ok(PcaResult {
        input: options.input,
        retained: kaiser_retained(&eig.eigenvalues),
        borderline: kaiser_borderline(&eig.eigenvalues, KAISER_MARGIN),
        eigenvalues: eig.eigenvalues,
        proportions,
        cumulative,
        loadings,
        scores,
        software_ids: matrix
            .software_ids()
            .iter()
            .map(|s| s.to_string())
            .collect(),
    })
}

/// Which components must be negated so that each anchor variable (or, past
/// the anchors or when the anchor loading vanishes, the largest-|loading|
/// variable) loads positively.
pub fn orientation_flips(loadings: &[Vec<f64>], anchors: &[Dimension]) -> Vec<bool> {
    let p = loadings.first().map_or(0, Vec::len);
    (0..p)
        .map(|j| {
            let anchored = anchors
                .get(j)
                .map(|d| loadings[d.index()][j])
                .filter(|v| v.abs() > 1e-8);
            let pivot = anchored.unwrap_or_else(|| {
                loadings.iter().map(|row| row[j]).fold(0.0, |best: f64, v| {
                    if v.abs() > best.abs() {
                        v
                    } else {
                        best
                    }
                })
            });
            pivot < 0.0
        })
        .collect()
}

/// Guttman-Kaiser rule: number of eigenvalues strictly above 1.
pub fn kaiser_retained(eigenvalues: &[f64]) -> usize {
    eigenvalues.iter().filter(|&&l| l > 1.0).count()
}

pub fn kaiser_borderline(eigenvalues: &[f64], margin: f64) -> bool {
    eigenvalues.iter().any(|l| (l - 1.0).abs() < margin)
}

/// `(component number, eigenvalue)` pairs, numbered from 1, descending.
pub fn scree_series(eigenvalues: &[f64]) -> Vec<(usize, f64)> {
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{reference_dataset, InnovationType, MatrixRow};

    fn matrix_from(cols: impl Fn(usize) -> [f64; 5], n: usize) -> EvaluationMatrix {
        EvaluationMatrix::new(
            (0..n)
                .map(|i| MatrixRow {
                    software_id: format!("s{i}"),
                    qualitative_type: InnovationType::Package,
                    values: cols(i),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_and_negated_columns() {
        let m = matrix_from(
            |i| {
                let x = 10.0 + 7.0 * i as f64;
                [x, x, 100.0 - x, (i * i) as f64, (i % 3) as f64 * 5.0]
            },
            8,
        );
        let r = correlation_matrix(&m).unwrap();
        assert!((r.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((r.get(0, 2) + 1.0).abs() < 1e-12);
        assert_eq!(r.get(3, 3), 1.0);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let m = matrix_from(
            |i| [i as f64, 2.0 * i as f64, 50.0, i as f64, 1.0 + i as f64],
            4,
        );
        assert!(matches!(
            correlation_matrix(&m),
            Err(Error::DegenerateColumn(Dimension::Emulation))
        ));
    }

    #[test]
    fn kaiser_counts() {
        assert_eq!(kaiser_retained(&[2.0, 1.7, 0.6, 0.4, 0.3]), 2);
        assert_eq!(kaiser_retained(&[1.0; 5]), 0);
    }

    #[test]
    fn scree_is_descending_and_numbered() {
        assert_eq!(
            scree_series(&[0.5, 2.0, 1.0]),
            vec![(1, 2.0), (2, 1.0), (3, 0.5)]
        );
        let flat = scree_series(
            &crate::numkernel::eigen_symmetric(&SymMatrix::identity(5))
                .unwrap()
                .eigenvalues,
        );
        assert!(flat.iter().all(|&(_, l)| l == 1.0));
    }

    #[test]
    fn reference_spectrum() {
        let r = run_pca(&reference_dataset()).unwrap();
        assert_eq!(r.retained, 2);
        assert!((r.proportions[0] - 0.391).abs() < 0.01);
        assert!((r.proportions[1] - 0.339).abs() < 0.01);
        assert!(r.eigenvalues[2] < 1.0);
        assert!(r.loading(Dimension::NewUse, 0) > 0.0);
        assert!(r.loading(Dimension::Emulation, 1) > 0.0);
    }

    #[test]
    fn orientation_is_idempotent() {
        let r = run_pca(&reference_dataset()).unwrap();
        let anchors = PcaOptions::default().sign_anchors;
        assert!(orientation_flips(&r.loadings, &anchors).iter().all(|f| !f));
    }

    #[test]
    fn covariance_variant_differs() {
        let m = reference_dataset();
        let cov = run_pca_with(
            &m,
            &PcaOptions {
                input: PcaInput::Covariance,
                ..Default::default()
            },
        )
        .unwrap();
        let total: f64 = cov.eigenvalues.iter().sum();
        let trace = covariance_matrix(&m).unwrap().trace();
        assert!((total - trace).abs() < 1e-8 * trace);
        // the covariance spectrum does not give the published split
        assert!((cov.proportions[0] - 0.391).abs() > 0.01);
    }
}
