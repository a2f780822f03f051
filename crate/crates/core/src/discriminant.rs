//! Canonical linear discriminant analysis.
//!
//! Cases are assigned to the group whose mean is nearest in the Mahalanobis
//! metric of the pooled within-group covariance (divisor n − k), with
//! `−2·ln(prior)` added to each squared distance. Variables enter the model
//! either all at once, as a fixed subset, or through Wilks' lambda stepwise
//! selection. Validation is by resubstitution and by leave-one-out refits;
//! homogeneity of group covariances is tested with Box's M on the canonical
//! scores.

use serde::Serialize;

use crate::datamodel::{Dimension, EvaluationMatrix, InnovationType};
use crate::error::{Error, Result};
use crate::numkernel::{eigen_symmetric, f_survival, log_det_spd, Cholesky, SymMatrix};

/// Labelled observations with any number of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub ids: Vec<String>,
    pub labels: Vec<InnovationType>,
    pub values: Vec<Vec<f64>>,
    pub variable_names: Vec<String>,
}

impl Observations {
    pub fn new(
        ids: Vec<String>,
        labels: Vec<InnovationType>,
        values: Vec<Vec<f64>>,
        variable_names: Vec<String>,
    ) -> Result<Self> {
        let p = variable_names.len();
        if ids.len() != labels.len() || ids.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} ids, {} labels, {} value rows",
                ids.len(),
                labels.len(),
                values.len()
            )));
        }
        if p == 0 {
            return Err(Error::InvalidInput("no variables".into()));
        }
        if let Some(i) = values.iter().position(|v| v.len() != p) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} values, expected {p}",
                values[i].len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite value".into()));
        }
        Ok(Observations {
            ids,
            labels,
            values,
            variable_names,
        })
    }

    pub fn from_matrix(matrix: &EvaluationMatrix) -> Self {
        Observations {
            ids: matrix
                .software_ids()
                .iter()
                .map(|s| s.to_string())
                .collect(),
            labels: matrix.labels(),
            values: matrix.rows().iter().map(|r| r.values.to_vec()).collect(),
            variable_names: Dimension::ALL
                .iter()
                .map(|d| d.column_name().to_string())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn variable_count(&self) -> usize {
        self.variable_names.len()
    }

    fn without(&self, i: usize) -> Observations {
        fn skip<T: Clone>(v: &[T], i: usize) -> Vec<T> {
            v.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, x)| x.clone())
                .collect()
        }
        Observations {
            ids: skip(&self.ids, i),
            labels: skip(&self.labels, i),
            values: skip(&self.values, i),
            variable_names: self.variable_names.clone(),
        }
    }

    pub fn with_labels(&self, labels: Vec<InnovationType>) -> Observations {
        Observations {
            labels,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepwiseCriteria {
    pub f_enter: f64,
    pub f_remove: f64,
    /// Minimum within-group tolerance (1 − R² against variables already in).
    pub min_tolerance: f64,
}

impl Default for StepwiseCriteria {
    fn default() -> Self {
        StepwiseCriteria {
            f_enter: 3.84,
            f_remove: 2.71,
            min_tolerance: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableSelection {
    All,
    /// Variable indices into the observation vectors.
    Fixed(Vec<usize>),
    Stepwise(StepwiseCriteria),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Priors {
    #[default]
    Equal,
    /// Proportional to training group sizes.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminantOptions {
    pub selection: VariableSelection,
    pub priors: Priors,
}

impl Default for DiscriminantOptions {
    fn default() -> Self {
        DiscriminantOptions {
            selection: VariableSelection::Stepwise(StepwiseCriteria::default()),
            priors: Priors::Equal,
        }
    }
}

impl DiscriminantOptions {
    pub fn all_variables() -> Self {
        DiscriminantOptions {
            selection: VariableSelection::All,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Entered,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseStep {
    pub action: StepAction,
    pub variable: usize,
    pub variable_name: String,
    /// F-to-enter or F-to-remove of the variable at this step.
    pub f: f64,
    /// Wilks' lambda of the model after this step.
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMean {
    pub group: InnovationType,
    pub size: usize,
    /// Means of the selected variables.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalFunction {
    /// Eigenvalue of W⁻¹·B.
    pub eigenvalue: f64,
    pub share: f64,
    pub canonical_correlation: f64,
    /// Raw coefficients on the selected variables, scaled so the pooled
    /// within-group variance of the scores is 1.
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl CanonicalFunction {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscriminantModel {
    /// Selected variable indices into the observation vectors.
    pub variables: Vec<usize>,
    pub variable_names: Vec<String>,
    pub stepwise_trace: Vec<StepwiseStep>,
    pub group_means: Vec<GroupMean>,
    pub grand_mean: Vec<f64>,
    pub n: usize,
    pub pooled_within_cov: SymMatrix,
    pub within_matrix: SymMatrix,
    pub between_matrix: SymMatrix,
    pub canonical_functions: Vec<CanonicalFunction>,
    pub priors: Vec<(InnovationType, f64)>,
    pub wilks_lambda: f64,
    #[serde(skip)]
    pooled_inverse: SymMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub predicted: InnovationType,
    /// Squared Mahalanobis distance to each group mean, canonical group order.
    pub distances: Vec<(InnovationType, f64)>,
}

impl DiscriminantModel {
    pub fn groups(&self) -> Vec<InnovationType> {
        self.group_means.iter().map(|g| g.group).collect()
    }

    pub fn selected_dimensions(&self) -> Vec<Dimension> {
        self.variables
            .iter()
            .filter_map(|&i| Dimension::ALL.get(i).copied())
            .collect()
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        self.variables.iter().map(|&i| x[i]).collect()
    }

    /// Canonical scores of a full observation vector.
    pub fn canonical_scores(&self, x: &[f64]) -> Vec<f64> {
        let xs = self.project(x);
        self.canonical_functions
            .iter()
            .map(|f| f.score(&xs))
            .collect()
    }

    pub fn classify(&self, x: &[f64]) -> Classification {
        let xs = self.project(x);
        let distances: Vec<(InnovationType, f64)> = self
            .group_means
            .iter()
            .map(|g| {
                let diff: Vec<f64> = xs.iter().zip(&g.mean).map(|(a, b)| a - b).collect();
                (g.group, self.pooled_inverse.quad_form(&diff))
            })
            .collect();
        let mut best = 0;
        let mut best_score = f64::INFINITY;
        for (i, ((_, d2), (_, prior))) in distances.iter().zip(&self.priors).enumerate() {
            let score = d2 - 2.0 * prior.ln();
            if score < best_score {
                best = i;
                best_score = score;
            }
        }
        Classification {
            predicted: distances[best].0,
            distances,
        }
    }
}

pub fn classify(model: &DiscriminantModel, observation: &[f64]) -> Classification {
    model.classify(observation)
}

struct GroupedSums {
    groups: Vec<InnovationType>,
    members: Vec<Vec<usize>>,
    means: Vec<Vec<f64>>,
    grand: Vec<f64>,
    /// Within-group SSCP over all variables.
    within: SymMatrix,
    /// Total SSCP over all variables.
    total: SymMatrix,
}

fn grouped_sums(obs: &Observations) -> Result<GroupedSums> {
    let p = obs.variable_count();
    let n = obs.len();
    let mut groups = Vec::new();
    let mut members = Vec::new();
    for g in InnovationType::ALL {
        let idx: Vec<usize> = (0..n).filter(|&i| obs.labels[i] == g).collect();
        if !idx.is_empty() {
            groups.push(g);
            members.push(idx);
        }
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some((g, m)) = groups.iter().zip(&members).find(|(_, m)| m.len() < 2) {
        return Err(Error::DegenerateDesign(format!(
            "group {g} has {} member(s); at least 2 required",
            m.len()
        )));
    }
    let mean_of = |idx: &[usize]| -> Vec<f64> {
        (0..p)
            .map(|v| idx.iter().map(|&i| obs.values[i][v]).sum::<f64>() / idx.len() as f64)
            .collect()
    };
    let means: Vec<Vec<f64>> = members.iter().map(|m| mean_of(m)).collect();
    let all: Vec<usize> = (0..n).collect();
    let grand = mean_of(&all);

    let mut group_of = vec![0; n];
    for (gi, m) in members.iter().enumerate() {
        for &i in m {
            group_of[i] = gi;
        }
    }
    let within = SymMatrix::from_lower_fn(p, |a, b| {
        (0..n)
            .map(|i| {
                let mu = &means[group_of[i]];
                (obs.values[i][a] - mu[a]) * (obs.values[i][b] - mu[b])
            })
            .sum()
    });
    let total = SymMatrix::from_lower_fn(p, |a, b| {
        (0..n)
            .map(|i| (obs.values[i][a] - grand[a]) * (obs.values[i][b] - grand[b]))
            .sum()
    });
    Ok(GroupedSums {
        groups,
        members,
        means,
        grand,
        within,
        total,
    })
}

fn wilks_lambda(sums: &GroupedSums, vars: &[usize]) -> Result<f64> {
    if vars.is_empty() {
        return Ok(1.0);
    }
    let w = log_det_spd(&sums.within.submatrix(vars))?;
    let t = log_det_spd(&sums.total.submatrix(vars))?;
    Ok((w - t).exp())
}

/// Within-group tolerance of `candidate` given the variables in `vars`.
fn tolerance(sums: &GroupedSums, vars: &[usize], candidate: usize) -> Result<f64> {
    let wcc = sums.within.get(candidate, candidate);
    if vars.is_empty() {
        return Ok(if wcc > 0.0 { 1.0 } else { 0.0 });
    }
    let chol = Cholesky::new(&sums.within.submatrix(vars))?;
    let wsc: Vec<f64> = vars
        .iter()
        .map(|&v| sums.within.get(v, candidate))
        .collect();
    let y = chol.forward(&wsc);
    let explained: f64 = y.iter().map(|v| v * v).sum();
    Ok((wcc - explained) / wcc)
}

fn stepwise(
    obs: &Observations,
    sums: &GroupedSums,
    criteria: &StepwiseCriteria,
) -> Result<(Vec<usize>, Vec<StepwiseStep>)> {
    let p = obs.variable_count();
    let n = obs.len() as f64;
    let k = sums.groups.len() as f64;
    let mut selected: Vec<usize> = Vec::new();
    let mut trace = Vec::new();

    for _ in 0..(2 * p + 1) {
        let q = selected.len() as f64;
        let current = wilks_lambda(sums, &selected)?;
        let mut best: Option<(usize, f64, f64)> = None;
        for c in (0..p).filter(|c| !selected.contains(c)) {
            if tolerance(sums, &selected, c)? < criteria.min_tolerance {
                continue;
            }
            let mut with = selected.clone();
            with.push(c);
            let lam = match wilks_lambda(sums, &with) {
                Ok(l) => l,
                Err(Error::Singular { .. }) => continue,
                Err(e) => return Err(e),
            };
            let df = n - k - q;
            if df < 1.0 {
                continue;
            }
            let f = df / (k - 1.0) * (current / lam - 1.0);
            if best.is_none_or(|(_, bf, _)| f > bf) {
                best = Some((c, f, lam));
            }
        }
        let Some((var, f, lam)) = best.filter(|&(_, f, _)| f >= criteria.f_enter) else {
            break;
        };
        selected.push(var);
        trace.push(StepwiseStep {
            action: StepAction::Entered,
            variable: var,
            variable_name: obs.variable_names[var].clone(),
            f,
            lambda: lam,
        });

        // removal check on the enlarged model
        let q = selected.len() as f64;
        let full = wilks_lambda(sums, &selected)?;
        let mut worst: Option<(usize, f64, f64)> = None;
        for &r in &selected {
            let rest: Vec<usize> = selected.iter().copied().filter(|&v| v != r).collect();
            let lam_rest = wilks_lambda(sums, &rest)?;
            let f = (n - k - q + 1.0) / (k - 1.0) * (lam_rest / full - 1.0);
            if worst.is_none_or(|(_, wf, _)| f < wf) {
                worst = Some((r, f, lam_rest));
            }
        }
        if let Some((r, f, lam_rest)) = worst.filter(|&(_, f, _)| f < criteria.f_remove) {
            selected.retain(|&v| v != r);
            trace.push(StepwiseStep {
                action: StepAction::Removed,
                variable: r,
                variable_name: obs.variable_names[r].clone(),
                f,
                lambda: lam_rest,
            });
        }
    }
    if selected.is_empty() {
        return Err(Error::DegenerateDesign(format!(
            "no variable reaches F-to-enter {}",
            criteria.f_enter
        )));
    }
    Ok((selected, trace))
}

pub fn fit(matrix: &EvaluationMatrix, options: &DiscriminantOptions) -> Result<DiscriminantModel> {
    fit_observations(&Observations::from_matrix(matrix), options)
}

pub fn fit_observations(
    obs: &Observations,
    options: &DiscriminantOptions,
) -> Result<DiscriminantModel> {
    let sums = grouped_sums(obs)?;
    let p_all = obs.variable_count();
    let (variables, stepwise_trace) = match &options.selection {
        VariableSelection::All => ((0..p_all).collect(), Vec::new()),
        VariableSelection::Fixed(vars) => {
            if vars.is_empty() || vars.iter().any(|&v| v >= p_all) {
                return Err(Error::InvalidInput(format!(
                    "variable subset {vars:?} invalid for {p_all} variables"
                )));
            }
            (vars.clone(), Vec::new())
        }
        VariableSelection::Stepwise(criteria) => stepwise(obs, &sums, criteria)?,
    };

    let n = obs.len();
    let k = sums.groups.len();
    if n <= k {
        return Err(Error::DegenerateDesign(format!(
            "{n} cases cannot estimate a pooled covariance for {k} groups"
        )));
    }
    let within = sums.within.submatrix(&variables);
    let total = sums.total.submatrix(&variables);
    let p = variables.len();
    let between = SymMatrix::from_lower_fn(p, |a, b| total.get(a, b) - within.get(a, b));
    let pooled = within.scaled(1.0 / (n - k) as f64);
    let pooled_inverse = Cholesky::new(&pooled)?.inverse();

    let group_means: Vec<GroupMean> = sums
        .groups
        .iter()
        .zip(&sums.members)
        .zip(&sums.means)
        .map(|((&group, m), mean)| GroupMean {
            group,
            size: m.len(),
            mean: variables.iter().map(|&v| mean[v]).collect(),
        })
        .collect();
    let grand_mean: Vec<f64> = variables.iter().map(|&v| sums.grand[v]).collect();

    let canonical_functions = canonical_functions(&within, &between, &grand_mean, k, n - k)?;
    let wilks_lambda = (log_det_spd(&within)? - log_det_spd(&total)?).exp();

    let priors = match options.priors {
        Priors::Equal => group_means
            .iter()
            .map(|g| (g.group, 1.0 / k as f64))
            .collect(),
        Priors::Proportional => group_means
            .iter()
            .map(|g| (g.group, g.size as f64 / n as f64))
            .collect(),
    };

    Ok(DiscriminantModel {
        variable_names: variables
            .iter()
            .map(|&v| obs.variable_names[v].clone())
            .collect(),
        variables,
        stepwise_trace,
        group_means,
        grand_mean,
        n,
        pooled_within_cov: pooled,
        within_matrix: within,
        between_matrix: between,
        canonical_functions,
        priors,
        wilks_lambda,
        pooled_inverse,
    })
}

/// Solves `B·v = λ·W·v` through the Cholesky reduction
/// `L⁻¹·B·L⁻ᵀ` with `W = L·Lᵀ`.
fn canonical_functions(
    within: &SymMatrix,
    between: &SymMatrix,
    grand_mean: &[f64],
    groups: usize,
    df_within: usize,
) -> Result<Vec<CanonicalFunction>> {
    let p = within.order();
    let chol = Cholesky::new(within)?;
    // columns of L⁻¹·B, then rows of L⁻¹·(L⁻¹·B)ᵀ
    let lb: Vec<Vec<f64>> = (0..p)
        .map(|j| chol.forward(&(0..p).map(|i| between.get(i, j)).collect::<Vec<_>>()))
        .collect();
    let c_cols: Vec<Vec<f64>> = (0..p)
        .map(|i| chol.forward(&(0..p).map(|j| lb[j][i]).collect::<Vec<_>>()))
        .collect();
    let reduced = SymMatrix::from_lower_fn(p, |i, j| 0.5 * (c_cols[i][j] + c_cols[j][i]));
    let eig = eigen_symmetric(&reduced)?;

    let count = (groups - 1).min(p);
    let total: f64 = eig.eigenvalues.iter().take(count).map(|l| l.max(0.0)).sum();
    let scale = (df_within as f64).sqrt();
    let pooled_diag: Vec<f64> = (0..p)
        .map(|i| within.get(i, i) / df_within as f64)
        .collect();

    Ok((0..count)
        .map(|j| {
            let lambda = eig.eigenvalues[j].max(0.0);
            let mut coef: Vec<f64> = chol
                .backward(&eig.eigenvectors[j])
                .into_iter()
                .map(|c| c * scale)
                .collect();
            // orientation: largest standardized coefficient positive
            let pivot = coef
                .iter()
                .zip(&pooled_diag)
                .map(|(c, d)| c * d.sqrt())
                .fold(
                    0.0f64,
                    |best, v| if v.abs() > best.abs() { v } else { best },
                );
            if pivot < 0.0 {
                coef.iter_mut().for_each(|c| *c = -*c);
            }
            let constant = -coef.iter().zip(grand_mean).map(|(c, m)| c * m).sum::<f64>();
            CanonicalFunction {
                eigenvalue: lambda,
                share: if total > 0.0 { lambda / total } else { 0.0 },
                canonical_correlation: (lambda / (1.0 + lambda)).sqrt(),
                coefficients: coef,
                constant,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    Resubstitution,
    CrossValidated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub software_id: String,
    pub qualitative: InnovationType,
    pub predicted: InnovationType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionReport {
    pub mode: ValidationMode,
    pub groups: Vec<InnovationType>,
    /// `counts[qualitative][predicted]`, both in `groups` order.
    pub counts: Vec<Vec<u32>>,
    pub row_percentages: Vec<Vec<f64>>,
    pub correct_rate: f64,
    pub per_case: Vec<CaseResult>,
}

impl ConfusionReport {
    fn build(mode: ValidationMode, groups: Vec<InnovationType>, per_case: Vec<CaseResult>) -> Self {
        let k = groups.len();
        let pos = |t: InnovationType| groups.iter().position(|&g| g == t);
        let mut counts = vec![vec![0u32; k]; k];
        for c in &per_case {
            // predictions always come from `groups`
            if let (Some(r), Some(col)) = (pos(c.qualitative), pos(c.predicted)) {
                counts[r][col] += 1;
            }
        }
        let row_percentages = counts
            .iter()
            .map(|row| {
                let total: u32 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total > 0 {
                            100.0 * c as f64 / total as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let correct: u32 = (0..k).map(|i| counts[i][i]).sum();
        let all: u32 = counts.iter().flatten().sum();
        ConfusionReport {
            mode,
            groups,
            counts,
            row_percentages,
            correct_rate: if all > 0 {
                100.0 * correct as f64 / all as f64
            } else {
                0.0
            },
            per_case,
        }
    }

    pub fn mismatches(&self) -> Vec<&CaseResult> {
        self.per_case
            .iter()
            .filter(|c| c.qualitative != c.predicted)
            .collect()
    }

    pub fn row(&self, group: InnovationType) -> Option<&[u32]> {
        let i = self.groups.iter().position(|&g| g == group)?;
        Some(&self.counts[i])
    }
}

pub fn resubstitution(
    matrix: &EvaluationMatrix,
    options: &DiscriminantOptions,
) -> Result<ConfusionReport> {
    let obs = Observations::from_matrix(matrix);
    let model = fit_observations(&obs, options)?;
    Ok(resubstitute(&model, &obs))
}

/// Classifies every training case with an already fitted model.
pub fn resubstitute(model: &DiscriminantModel, obs: &Observations) -> ConfusionReport {
    let per_case = (0..obs.len())
        .map(|i| CaseResult {
            software_id: obs.ids[i].clone(),
            qualitative: obs.labels[i],
            predicted: model.classify(&obs.values[i]).predicted,
        })
        .collect();
    ConfusionReport::build(ValidationMode::Resubstitution, model.groups(), per_case)
}

pub fn leave_one_out(
    matrix: &EvaluationMatrix,
    options: &DiscriminantOptions,
) -> Result<ConfusionReport> {
    leave_one_out_observations(&Observations::from_matrix(matrix), options)
}

/// Leave-one-out validation. Variable selection runs once on the full data;
/// each held-out refit re-estimates means and pooled covariance on the
/// selected variables.
pub fn leave_one_out_observations(
    obs: &Observations,
    options: &DiscriminantOptions,
) -> Result<ConfusionReport> {
    let full = fit_observations(obs, options)?;
    for g in &full.group_means {
        if g.size < 3 {
            return Err(Error::DegenerateDesign(format!(
                "leave-one-out needs at least 3 cases per group; {} has {}",
                g.group, g.size
            )));
        }
    }
    let held_out_options = DiscriminantOptions {
        selection: VariableSelection::Fixed(full.variables.clone()),
        priors: options.priors,
    };
    let per_case = (0..obs.len())
        .map(|i| {
            let model =
                fit_observations(&obs.without(i), &held_out_options).map_err(|e| match e {
                    Error::Singular { .. } => Error::HeldOutSingular {
                        case: obs.ids[i].clone(),
                    },
                    other => other,
                })?;
            Ok(CaseResult {
                software_id: obs.ids[i].clone(),
                qualitative: obs.labels[i],
                predicted: model.classify(&obs.values[i]).predicted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfusionReport::build(
        ValidationMode::CrossValidated,
        full.groups(),
        per_case,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupLogDet {
    pub group: InnovationType,
    pub rank: usize,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxTest {
    pub m_statistic: f64,
    pub f_approx: f64,
    pub df1: u32,
    pub df2: f64,
    pub p: f64,
    /// Number of canonical score dimensions tested.
    pub dims_used: usize,
    pub group_log_dets: Vec<GroupLogDet>,
    pub pooled_log_det: f64,
    pub convention: String,
}

/// Relative determinant below which a group score covariance counts as singular.
pub const BOX_SINGULAR_REL_DET: f64 = 1e-10;

pub fn boxs_m(matrix: &EvaluationMatrix, options: &DiscriminantOptions) -> Result<BoxTest> {
    let obs = Observations::from_matrix(matrix);
    let model = fit_observations(&obs, options)?;
    box_test(&model, &obs)
}

/// Box's M on the canonical scores of `model`, using the largest leading
/// score dimension whose covariance is nonsingular in every group.
pub fn box_test(model: &DiscriminantModel, obs: &Observations) -> Result<BoxTest> {
    let scores: Vec<Vec<f64>> = obs
        .values
        .iter()
        .map(|x| model.canonical_scores(x))
        .collect();
    let groups = model.groups();
    let members: Vec<Vec<usize>> = groups
        .iter()
        .map(|&g| (0..obs.len()).filter(|&i| obs.labels[i] == g).collect())
        .collect();
    let n = obs.len();
    let k = groups.len();
    let max_dims = model.canonical_functions.len();

    for m in (1..=max_dims).rev() {
        let covs: Vec<SymMatrix> = members
            .iter()
            .map(|idx| {
                let mean: Vec<f64> = (0..m)
                    .map(|a| idx.iter().map(|&i| scores[i][a]).sum::<f64>() / idx.len() as f64)
                    .collect();
                SymMatrix::from_lower_fn(m, |a, b| {
                    idx.iter()
                        .map(|&i| (scores[i][a] - mean[a]) * (scores[i][b] - mean[b]))
                        .sum::<f64>()
                        / (idx.len() - 1) as f64
                })
            })
            .collect();
        let pooled = SymMatrix::from_lower_fn(m, |a, b| {
            covs.iter()
                .zip(&members)
                .map(|(c, idx)| (idx.len() - 1) as f64 * c.get(a, b))
                .sum::<f64>()
                / (n - k) as f64
        });
        let Ok(pooled_log_det) = log_det_spd(&pooled) else {
            continue;
        };
        let log_dets: Option<Vec<f64>> = covs
            .iter()
            .map(|c| {
                log_det_spd(c)
                    .ok()
                    .filter(|ld| ld - pooled_log_det > BOX_SINGULAR_REL_DET.ln())
            })
            .collect();
        let Some(log_dets) = log_dets else {
            continue;
        };

        let dof: Vec<f64> = members.iter().map(|idx| (idx.len() - 1) as f64).collect();
        let nk = (n - k) as f64;
        let mf = m as f64;
        let kf = k as f64;
        let m_statistic =
            nk * pooled_log_det - dof.iter().zip(&log_dets).map(|(d, ld)| d * ld).sum::<f64>();
        let c1 = (dof.iter().map(|d| 1.0 / d).sum::<f64>() - 1.0 / nk)
            * (2.0 * mf * mf + 3.0 * mf - 1.0)
            / (6.0 * (mf + 1.0) * (kf - 1.0));
        let c2 = (dof.iter().map(|d| 1.0 / (d * d)).sum::<f64>() - 1.0 / (nk * nk))
            * (mf - 1.0)
            * (mf + 2.0)
            / (6.0 * (kf - 1.0));
        let df1 = ((k - 1) * m * (m + 1) / 2) as u32;
        let df1f = df1 as f64;
        let gap = c2 - c1 * c1;
        if gap == 0.0 {
            return Err(Error::InvalidInput(
                "Box's F approximation undefined (c2 = c1²)".into(),
            ));
        }
        let (f_approx, df2) = if gap > 0.0 {
            let df2 = (df1f + 2.0) / gap;
            let b = df1f / (1.0 - c1 - df1f / df2);
            (m_statistic / b, df2)
        } else {
            let df2 = (df1f + 2.0) / -gap;
            let b = df2 / (1.0 - c1 + 2.0 / df2);
            (df2 * m_statistic / (df1f * (b - m_statistic)), df2)
        };
        let df2_int = df2.round().max(1.0) as u32;
        let p = f_survival(f_approx.max(0.0), df1, df2_int)?;
        return Ok(BoxTest {
            m_statistic,
            f_approx,
            df1,
            df2,
            p,
            dims_used: m,
            group_log_dets: groups
                .iter()
                .zip(&log_dets)
                .map(|(&group, &log_det)| GroupLogDet {
                    group,
                    rank: m,
                    log_det,
                })
                .collect(),
            pooled_log_det,
            convention: format!(
                "Box's M on the first {m} of {max_dims} canonical discriminant scores \
                 (largest dimension with nonsingular covariance in every group), \
                 variables: {}",
                model.variable_names.join(", ")
            ),
        });
    }
    Err(Error::UntestableHomogeneity)
}
