//! Shared fixtures and the PASS/FAIL reporter for the acceptance suite.

#![allow(clippy::needless_range_loop)]

use innovation_typology::datamodel::{EvaluationMatrix, InnovationType, MatrixRow};
use innovation_typology::discriminant::Observations;
use innovation_typology::numkernel::SymMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random labelled observations: `k` groups of `per_group` cases in `p`
/// variables, group centres spread by `spread`.
pub fn random_observations(
    rng: &mut ChaCha8Rng,
    k: usize,
    per_group: usize,
    p: usize,
    spread: f64,
) -> Observations {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (gi, &g) in InnovationType::ALL.iter().take(k).enumerate() {
        let centre: Vec<f64> = (0..p).map(|_| rng.gen_range(-spread..spread)).collect();
        for c in 0..per_group {
            ids.push(format!("g{gi}c{c}"));
            labels.push(g);
            values.push(
                centre
                    .iter()
                    .map(|m| m + rng.gen_range(-1.0..1.0))
                    .collect(),
            );
        }
    }
    let names = (0..p).map(|i| format!("x{i}")).collect();
    Observations::new(ids, labels, values, names).unwrap()
}

/// Random matrix in percent units with `per_group` rows in each of the
/// first `k` types.
pub fn random_matrix(rng: &mut ChaCha8Rng, k: usize, per_group: usize) -> EvaluationMatrix {
    let mut rows = Vec::new();
    for (gi, &g) in InnovationType::ALL.iter().take(k).enumerate() {
        let centre: [f64; 5] = std::array::from_fn(|_| rng.gen_range(20.0..80.0));
        for c in 0..per_group {
            rows.push(MatrixRow {
                software_id: format!("g{gi}c{c}"),
                qualitative_type: g,
                values: std::array::from_fn(|d| {
                    (centre[d] + rng.gen_range(-15.0..15.0)).clamp(0.0, 100.0)
                }),
            });
        }
    }
    EvaluationMatrix::new(rows).unwrap()
}

/// Random symmetric positive definite matrix `AᵀA + εI`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..n + 2)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    a.iter().map(|r| r[i] * r[j]).sum::<f64>() + if i == j { 0.1 } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-10.0..10.0);
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    SymMatrix::from_rows(&rows).unwrap()
}

pub fn label_ids(labels: &[InnovationType]) -> Vec<usize> {
    labels.iter().map(|l| l.index()).collect()
}

/// Collects PASS/FAIL lines for one acceptance criterion.
pub struct Criterion {
    number: u32,
    lines: Vec<String>,
    failures: usize,
}

impl Criterion {
    pub fn new(number: u32) -> Self {
        Criterion {
            number,
            lines: Vec::new(),
            failures: 0,
        }
    }

    pub fn check(&mut self, item: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        let status = if ok { "PASS" } else { "FAIL" };
        self.lines.push(format!(
            "[criterion {}] {status} {item}: {detail}",
            self.number
        ));
    }

    pub fn approx(&mut self, item: &str, expected: f64, tol: f64, got: f64) {
        self.check(
            item,
            (got - expected).abs() <= tol + 1e-12,
            format!("expected {expected} ± {tol}, got {got:.6}"),
        );
    }

    /// Reported as GAP on a miss; does not fail the criterion.
    pub fn best_effort(&mut self, item: &str, expected: f64, tol: f64, got: f64) {
        let ok = (got - expected).abs() <= tol;
        let status = if ok { "PASS" } else { "GAP" };
        self.lines.push(format!(
            "[criterion {}] {status} {item} (best effort): expected {expected} ± {tol}, got {got:.6}",
            self.number
        ));
    }

    pub fn info(&mut self, text: String) {
        self.lines
            .push(format!("[criterion {}] INFO {text}", self.number));
    }

    pub fn finish(self) {
        for l in &self.lines {
            println!("{l}");
        }
        let verdict = if self.failures == 0 { "PASS" } else { "FAIL" };
        println!(
            "[criterion {}] {verdict} overall ({} failing check(s))",
            self.number, self.failures
        );
        assert_eq!(self.failures, 0, "criterion {} failed", self.number);
    }
}
