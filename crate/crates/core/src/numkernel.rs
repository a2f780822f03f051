//! Small dense numerical kernels: symmetric eigendecomposition, Cholesky-based
//! SPD inverse and log-determinant, and F-distribution tail probabilities.
//!
//! Everything here is sized for the statistics in this crate (orders up to a
//! few dozen) and favours robustness over speed.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Square symmetric matrix in dense row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

/// Serialized as a list of rows.
impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl SymMatrix {
    /// Builds from a full row-major array; rejects asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::InvalidInput(
                "matrix order must be at least 1".into(),
            ));
        }
        let mut data = Vec::with_capacity(order * order);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != order {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {order}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        for i in 0..order {
            for j in 0..i {
                if data[i * order + j] != data[j * order + i] {
                    return Err(Error::InvalidInput(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(SymMatrix { order, data })
    }

    /// Builds from a function evaluated on the lower triangle (`j <= i`) and
    /// mirrored, so the result is symmetric by construction.
    pub fn from_lower_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(order >= 1, "matrix order must be at least 1");
        let mut data = vec![0.0; order * order];
        for i in 0..order {
            for j in 0..=i {
                let v = f(i, j);
                data[i * order + j] = v;
                data[j * order + i] = v;
            }
        }
        SymMatrix { order, data }
    }

    pub fn identity(order: usize) -> Self {
        Self::from_lower_fn(order, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_lower_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.order..(i + 1) * self.order]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn scaled(&self, k: f64) -> Self {
        SymMatrix {
            order: self.order,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.order)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Quadratic form `xᵀ·A·x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the given indices, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_lower_fn(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.order)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    fn check_finite(&self) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / self.order,
                pos % self.order
            )));
        }
        Ok(())
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j]` is the unit eigenvector paired with `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// Component `i` of eigenvector `j`.
    pub fn vector_entry(&self, i: usize, j: usize) -> f64 {
        self.eigenvectors[j][i]
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigen_symmetric(a: &SymMatrix) -> Result<EigenDecomposition> {
    a.check_finite()?;
    let n = a.order;
    let mut m = a.data.clone();
    // v is stored column-wise: v[k * n + j] is row k of eigenvector j.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = JACOBI_REL_TOL * a.norm_frobenius();

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
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
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&m) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep Jacobi output order
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));

    let eigenvalues = order.iter().map(|&j| m[j * n + j]).collect();
    let eigenvectors = order
        .iter()
        .map(|&j| (0..n).map(|k| v[k * n + j]).collect())
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    order: usize,
    lower: Vec<f64>,
}

const PIVOT_REL_TOL: f64 = 1e-10;

impl Cholesky {
    pub fn new(a: &SymMatrix) -> Result<Self> {
        a.check_finite()?;
        let n = a.order;
        let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        let tol = PIVOT_REL_TOL * max_diag;
        let mut l = vec![0.0; n * n];
        let mut smallest = f64::INFINITY;
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            smallest = smallest.min(d);
            if d.is_nan() || d <= tol {
                return Err(Error::Singular { smallest_pivot: d });
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Cholesky { order: n, lower: l })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.order + j]
    }

    /// Solves `L·y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lower[i * n + k] * y[k];
            }
            y[i] /= self.lower[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ·x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lower[k * n + i] * x[k];
            }
            x[i] /= self.lower[i * n + i];
        }
        x
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    pub fn log_det(&self) -> f64 {
        (0..self.order)
            .map(|i| self.lower[i * self.order + i].ln())
            .sum::<f64>()
            * 2.0
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.order;
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.solve(&e)
            })
            .collect();
        // average the two triangles so the result is exactly symmetric
        SymMatrix::from_lower_fn(n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(Cholesky::new(a)?.inverse())
}

/// `ln|A|` for symmetric positive definite `A`.
pub fn log_det_spd(a: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::new(a)?.log_det())
}

/// Upper tail `P(F(d1, d2) > f)`.
pub fn f_survival(f: f64, d1: u32, d2: u32) -> Result<f64> {
    if d1 < 1 || d2 < 1 {
        return Err(Error::InvalidInput(format!(
            "F degrees of freedom must be at least 1 (got {d1}, {d2})"
        )));
    }
    f_survival_real(f, d1 as f64, d2 as f64)
}

/// [`f_survival`] with real-valued degrees of freedom.
pub fn f_survival_real(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) || !d1.is_finite() || !d2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "F degrees of freedom must be positive (got {d1}, {d2})"
        )));
    }
    if f.is_nan() || f < 0.0 {
        return Err(Error::InvalidInput(format!(
            "F statistic must be >= 0 (got {f})"
        )));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    let x = d2 / (d2 + d1 * f);
    Ok(regularized_incomplete_beta(x, d2 / 2.0, d1 / 2.0)?.clamp(0.0, 1.0))
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // The continued fraction converges fast for x < (a+1)/(a+b+2).
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(x, a, b)? / a)
    } else {
        Ok(1.0 - front * beta_continued_fraction(1.0 - x, b, a)? / b)
    }
}

const CF_MAX_ITER: usize = 200;
const CF_REL_TOL: f64 = 1e-12;
const CF_TINY: f64 = 1e-300;

// Modified Lentz evaluation.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_REL_TOL {
            return Ok(h);
        }
    }
    Err(Error::InvalidInput(format!(
        "incomplete beta continued fraction did not converge (x={x}, a={a}, b={b})"
    )))
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det3(m: &SymMatrix) -> f64 {
        let a = |i, j| m.get(i, j);
        a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
            - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
            + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
    }

    #[test]
    fn identity_spectrum() {
        let e = eigen_symmetric(&SymMatrix::identity(5)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 5]);
    }

    #[test]
    fn analytic_two_by_two() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = eigen_symmetric(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = &e.eigenvectors[0];
        let v1 = &e.eigenvectors[1];
        assert!((v0[0].abs() - s).abs() < 1e-12 && (v0[0] - v0[1]).abs() < 1e-12);
        assert!((v1[0].abs() - s).abs() < 1e-12 && (v1[0] + v1[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let a = SymMatrix::from_lower_fn(2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(matches!(eigen_symmetric(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_asymmetric_rows() {
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn inverse_of_diagonal() {
        let inv = spd_inverse(&SymMatrix::diagonal(&[2.0, 4.0])).unwrap();
        assert!((inv.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((inv.get(1, 1) - 0.25).abs() < 1e-15);
        assert_eq!(inv.get(0, 1), 0.0);
        assert_eq!(
            spd_inverse(&SymMatrix::identity(3)).unwrap(),
            SymMatrix::identity(3)
        );
    }

    #[test]
    fn singular_input_reports_pivot() {
        let a = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        match spd_inverse(&a) {
            Err(Error::Singular { smallest_pivot }) => assert!(smallest_pivot.abs() < 1e-12),
            other => panic!("expected singularity error, got {other:?}"),
        }
        let indefinite = SymMatrix::diagonal(&[1.0, -1.0]);
        assert!(matches!(
            log_det_spd(&indefinite),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn log_det_simple_cases() {
        assert_eq!(log_det_spd(&SymMatrix::identity(4)).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((log_det_spd(&SymMatrix::diagonal(&[e, e])).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn log_det_matches_cofactor_on_3x3() {
        // B·Bᵀ + I for a fixed B
        let b = [[0.3, -1.2, 0.5], [2.0, 0.1, -0.7], [0.4, 0.9, 1.5]];
        let a = SymMatrix::from_lower_fn(3, |i, j| {
            (0..3).map(|k| b[i][k] * b[j][k]).sum::<f64>() + if i == j { 1.0 } else { 0.0 }
        });
        let ld = log_det_spd(&a).unwrap();
        assert!((ld.exp() - det3(&a)).abs() < 1e-10 * det3(&a));
    }

    #[test]
    fn f_survival_edges() {
        assert_eq!(f_survival(0.0, 4, 20).unwrap(), 1.0);
        assert!(f_survival(1.0, 0, 20).is_err());
        assert!(f_survival(1.0, 3, 0).is_err());
        assert!(f_survival(-1.0, 3, 5).is_err());
    }

    #[test]
    fn f_survival_printed_significances() {
        let p = f_survival(3.451, 4, 20).unwrap();
        assert!((p - 0.027).abs() <= 0.001, "{p}");
        assert!(f_survival(8.510, 4, 20).unwrap() < 0.0005);
    }

    #[test]
    fn f_survival_closed_forms() {
        // d1 = 2: P(F > f) = (1 + 2f/d2)^(-d2/2)
        for &(f, d2) in &[(0.5, 3u32), (2.0, 7), (10.0, 1)] {
            let expected = (1.0 + 2.0 * f / d2 as f64).powf(-(d2 as f64) / 2.0);
            let got = f_survival(f, 2, d2).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "{f} {d2}: {got} vs {expected}"
            );
        }
        // F(1,1) is the square of a standard Cauchy: P = 1 - (2/π)·atan(√f)
        for &f in &[0.1, 1.0, 4.0, 50.0] {
            let expected = 1.0 - 2.0 / std::f64::consts::PI * f64::sqrt(f).atan();
            assert!((f_survival(f, 1, 1).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }
}
