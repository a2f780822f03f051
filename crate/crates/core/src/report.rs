//! End-to-end pipeline and its tabular report.

use serde::Serialize;

use crate::datamodel::{Dimension, EvaluationMatrix, InnovationType};
use crate::discriminant::{
    box_test, fit_observations, leave_one_out_observations, resubstitute, BoxTest, ConfusionReport,
    DiscriminantModel, DiscriminantOptions, Observations, VariableSelection,
};
use crate::error::{Error, Result};
use crate::pca::{run_pca_with, scree_series, PcaOptions, PcaResult};
use crate::render::{fixed, render_tables, sig, to_json, Format, Table};
use crate::typology::{compare_classifications, group_profiles, Comparison, TypologyModel};
use crate::univariate::{anova_table, descriptive_stats, AnovaRow, Descriptive, WilksRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOptions {
    pub discriminant: DiscriminantOptions,
    pub pca: PcaOptions,
    pub provenance: String,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            discriminant: DiscriminantOptions::default(),
            pca: PcaOptions::default(),
            provenance: "input".to_string(),
        }
    }
}

/// A report section that is either computed or skipped with a reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Present { value: T },
    Skipped { reason: String },
}

impl<T> Section<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Section::Present { value } => Some(value),
            Section::Skipped { .. } => None,
        }
    }
}

fn present<T>(value: T) -> Section<T> {
    Section::Present { value }
}

fn skipped<T>(reason: impl Into<String>) -> Section<T> {
    Section::Skipped {
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub provenance: String,
    pub n: usize,
    pub descriptives: Vec<Descriptive>,
    pub anova_table: Vec<AnovaRow>,
    pub wilks_table: Vec<WilksRow>,
    pub pca: PcaResult,
    pub scree: Vec<(usize, f64)>,
    pub discriminant: DiscriminantModel,
    pub box_test: Section<BoxTest>,
    pub resubstitution: ConfusionReport,
    pub cross_validated: Section<ConfusionReport>,
    pub comparison: Comparison,
    /// Profiles of the groups assigned by resubstitution.
    pub typology: Section<TypologyModel>,
    pub convention_notes: Vec<String>,
}

pub fn run_pipeline(
    matrix: &EvaluationMatrix,
    options: &PipelineOptions,
) -> Result<PipelineReport> {
    if matrix.is_empty() {
        return Err(Error::NoRows.in_stage("ingest"));
    }
    let descriptives = descriptive_stats(matrix).map_err(|e| e.in_stage("descriptives"))?;
    let anova = anova_table(matrix).map_err(|e| e.in_stage("anova"))?;
    let wilks_table = anova.iter().map(WilksRow::from).collect();
    let pca = run_pca_with(matrix, &options.pca).map_err(|e| e.in_stage("pca"))?;
    let scree = scree_series(&pca.eigenvalues);

    let obs = Observations::from_matrix(matrix);
    let model =
        fit_observations(&obs, &options.discriminant).map_err(|e| e.in_stage("discriminant"))?;
    let box_section = match box_test(&model, &obs) {
        Ok(b) => present(b),
        Err(e @ (Error::UntestableHomogeneity | Error::Singular { .. })) => skipped(e.to_string()),
        Err(e) => return Err(e.in_stage("box")),
    };
    let resub = resubstitute(&model, &obs);
    let cross_validated = match leave_one_out_observations(&obs, &options.discriminant) {
        Ok(r) => present(r),
        Err(e @ (Error::DegenerateDesign(_) | Error::HeldOutSingular { .. })) => {
            skipped(e.to_string())
        }
        Err(e) => return Err(e.in_stage("leave-one-out")),
    };

    let predicted: Vec<InnovationType> = resub.per_case.iter().map(|c| c.predicted).collect();
    let ids: Vec<String> = resub
        .per_case
        .iter()
        .map(|c| c.software_id.clone())
        .collect();
    let comparison = compare_classifications(&ids, &matrix.labels(), &predicted)
        .map_err(|e| e.in_stage("comparison"))?;
    let typology = match group_profiles(matrix, &predicted, &options.provenance) {
        Ok(t) => present(t),
        Err(e @ Error::DegenerateDesign(_)) => skipped(e.to_string()),
        Err(e) => return Err(e.in_stage("typology")),
    };

    let convention_notes = convention_notes(options, &model, &box_section);
    Ok(PipelineReport {
        provenance: options.provenance.clone(),
        n: matrix.len(),
        descriptives,
        anova_table: anova,
        wilks_table,
        pca,
        scree,
        discriminant: model,
        box_test: box_section,
        resubstitution: resub,
        cross_validated,
        comparison,
        typology,
        convention_notes,
    })
}

fn convention_notes(
    options: &PipelineOptions,
    model: &DiscriminantModel,
    box_section: &Section<BoxTest>,
) -> Vec<String> {
    let mut notes = vec![
        "Agreement rate = (completely agree + agree) / experts giving an opinion; \
         \"don't know\" is excluded from numerator and denominator."
            .to_string(),
        format!(
            "PCA input: {:?} matrix; components retained by eigenvalue > 1; \
             signs oriented so that {} loads positively on the leading components.",
            options.pca.input,
            options
                .pca
                .sign_anchors
                .iter()
                .map(|d| d.label())
                .collect::<Vec<_>>()
                .join(", then ")
        ),
        "Descriptive `sd` uses divisor n − 1; `sd_population` (divisor n) is the \
         convention of the published footer."
            .to_string(),
    ];
    let selection = match &options.discriminant.selection {
        VariableSelection::All => "all variables".to_string(),
        VariableSelection::Fixed(v) => format!("fixed variables {v:?}"),
        VariableSelection::Stepwise(c) => format!(
            "stepwise Wilks' lambda (F-to-enter {}, F-to-remove {}, tolerance {})",
            c.f_enter, c.f_remove, c.min_tolerance
        ),
    };
    notes.push(format!(
        "Discriminant variables by {selection}: {}. Pooled covariance divisor n − k, \
         {:?} priors, ties to canonical type order. Leave-one-out refits keep this \
         variable set.",
        model.variable_names.join(", "),
        options.discriminant.priors
    ));
    notes.push(match box_section {
        Section::Present { value } => value.convention.clone(),
        Section::Skipped { reason } => format!("Box's M skipped: {reason}"),
    });
    notes.push(
        "Bands: [0,20) very low, [20,40) low, [40,60) average, [60,80) high, \
         [80,100] very high, applied to group means of the resubstitution groups."
            .to_string(),
    );
    notes
}

pub fn descriptives_table(rows: &[Descriptive]) -> Table {
    let mut t = Table::new(
        "Descriptive statistics",
        &["variable", "n", "mean", "sd", "sd_population", "min", "max"],
    );
    for d in rows {
        t.push(vec![
            d.dimension.label().to_string(),
            d.n.to_string(),
            fixed(d.mean, 2),
            fixed(d.sd, 2),
            fixed(d.sd_population, 2),
            fixed(d.min, 1),
            fixed(d.max, 1),
        ]);
    }
    t
}

pub fn anova_report_table(rows: &[AnovaRow]) -> Table {
    let mut t = Table::new(
        "ANOVA of categories",
        &[
            "variable",
            "source",
            "sum_of_squares",
            "df",
            "mean_square",
            "F",
            "sig",
        ],
    );
    for r in rows {
        let a = &r.anova;
        t.push(vec![
            r.dimension.label().to_string(),
            "Between groups".into(),
            fixed(a.ss_between, 3),
            a.df_between.to_string(),
            fixed(a.ms_between, 3),
            fixed(a.f, 3),
            sig(a.p),
        ]);
        t.push(vec![
            String::new(),
            "Within groups".into(),
            fixed(a.ss_within, 3),
            a.df_within.to_string(),
            fixed(a.ms_within, 3),
            String::new(),
            String::new(),
        ]);
        t.push(vec![
            String::new(),
            "Total".into(),
            fixed(a.ss_total, 3),
            (a.df_between + a.df_within).to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    t
}

pub fn wilks_report_table(rows: &[WilksRow]) -> Table {
    let mut t = Table::new(
        "Tests of equality of group means",
        &["variable", "wilks_lambda", "F", "df1", "df2", "sig"],
    );
    for w in rows {
        t.push(vec![
            w.dimension.label().to_string(),
            fixed(w.lambda, 3),
            fixed(w.f, 3),
            w.df1.to_string(),
            w.df2.to_string(),
            sig(w.p),
        ]);
    }
    t
}

pub fn pca_variance_table(pca: &PcaResult) -> Table {
    let mut t = Table::new(
        "Total variance explained",
        &["component", "eigenvalue", "proportion", "cumulative"],
    );
    for (j, l) in pca.eigenvalues.iter().enumerate() {
        t.push(vec![
            (j + 1).to_string(),
            fixed(*l, 3),
            fixed(pca.proportions[j], 3),
            fixed(pca.cumulative[j], 3),
        ]);
    }
    t
}

/// Loadings of the retained components (at least one), variables sorted by
/// their first-component loading as in a component matrix printout.
pub fn loadings_table(pca: &PcaResult) -> Table {
    let shown = pca.retained.max(1);
    let mut header = vec!["variable".to_string()];
    header.extend((1..=shown).map(|j| format!("component_{j}")));
    let mut t = Table {
        title: "Component matrix".into(),
        header,
        rows: Vec::new(),
    };
    let mut dims = Dimension::ALL.to_vec();
    dims.sort_by(|a, b| pca.loading(*b, 0).total_cmp(&pca.loading(*a, 0)));
    for d in dims {
        let mut row = vec![d.label().to_string()];
        row.extend((0..shown).map(|j| fixed(pca.loading(d, j), 3)));
        t.push(row);
    }
    t
}

pub fn scree_table(scree: &[(usize, f64)]) -> Table {
    let mut t = Table::new("Scree", &["component", "eigenvalue"]);
    for (c, l) in scree {
        t.push(vec![c.to_string(), fixed(*l, 4)]);
    }
    t
}

/// Case coordinates on the first two components.
pub fn scores_table(pca: &PcaResult, matrix: &EvaluationMatrix) -> Table {
    let shown = pca.eigenvalues.len().min(2);
    let mut header = vec!["software".to_string(), "qualitative_type".to_string()];
    header.extend((1..=shown).map(|j| format!("component_{j}")));
    let mut t = Table {
        title: "Component scores".into(),
        header,
        rows: Vec::new(),
    };
    for (row, scores) in matrix.rows().iter().zip(&pca.scores) {
        let mut r = vec![
            row.software_id.clone(),
            row.qualitative_type.token().to_string(),
        ];
        r.extend(scores.iter().take(shown).map(|s| fixed(*s, 4)));
        t.push(r);
    }
    t
}

pub fn stepwise_table(model: &DiscriminantModel) -> Table {
    let mut t = Table::new(
        "Variables entered/removed",
        &["step", "action", "variable", "F", "wilks_lambda"],
    );
    for (i, s) in model.stepwise_trace.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            format!("{:?}", s.action).to_lowercase(),
            s.variable_name.clone(),
            fixed(s.f, 3),
            fixed(s.lambda, 3),
        ]);
    }
    t
}

pub fn canonical_table(model: &DiscriminantModel) -> Table {
    let mut t = Table::new(
        "Canonical discriminant functions",
        &[
            "function",
            "eigenvalue",
            "percent_variance",
            "canonical_correlation",
        ],
    );
    for (i, f) in model.canonical_functions.iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            fixed(f.eigenvalue, 3),
            fixed(100.0 * f.share, 1),
            fixed(f.canonical_correlation, 3),
        ]);
    }
    t
}

pub fn box_table(section: &Section<BoxTest>) -> Table {
    let mut t = Table::new("Box test", &["statistic", "value"]);
    match section {
        Section::Present { value: b } => {
            t.push(vec!["Box's M".into(), fixed(b.m_statistic, 3)]);
            t.push(vec!["F approx.".into(), fixed(b.f_approx, 3)]);
            t.push(vec!["df1".into(), b.df1.to_string()]);
            t.push(vec!["df2".into(), fixed(b.df2, 3)]);
            t.push(vec!["sig".into(), sig(b.p)]);
            t.push(vec!["dims_used".into(), b.dims_used.to_string()]);
        }
        Section::Skipped { reason } => t.push(vec!["skipped".into(), reason.clone()]),
    }
    t
}

/// Counts block then percentage block for each validation mode.
pub fn classification_table(blocks: &[(&str, &ConfusionReport)]) -> Table {
    let groups: Vec<InnovationType> = blocks
        .first()
        .map(|(_, r)| r.groups.clone())
        .unwrap_or_default();
    let mut header = vec!["block".to_string(), "measure".into(), "qualitative".into()];
    header.extend(groups.iter().map(|g| g.label().to_string()));
    header.push("Total".into());
    let mut t = Table {
        title: "Classification results".into(),
        header,
        rows: Vec::new(),
    };
    for (name, report) in blocks {
        for (i, g) in report.groups.iter().enumerate() {
            let mut row = vec![name.to_string(), "count".into(), g.label().to_string()];
            row.extend(report.counts[i].iter().map(u32::to_string));
            row.push(report.counts[i].iter().sum::<u32>().to_string());
            t.push(row);
        }
        for (i, g) in report.groups.iter().enumerate() {
            let mut row = vec![name.to_string(), "%".into(), g.label().to_string()];
            row.extend(report.row_percentages[i].iter().map(|p| fixed(*p, 1)));
            let total: f64 = report.row_percentages[i].iter().sum();
            row.push(fixed(total, 1));
            t.push(row);
        }
        t.push(vec![
            name.to_string(),
            "correct %".into(),
            String::new(),
            fixed(report.correct_rate, 1),
        ]);
    }
    t
}

pub fn comparison_table(cmp: &Comparison) -> Table {
    let mut t = Table::new(
        "Qualitative and statistical classification",
        &["software", "qualitative", "calculated"],
    );
    for r in &cmp.rows {
        t.push(vec![
            r.software_id.clone(),
            r.qualitative.label().to_string(),
            r.calculated.label().to_string(),
        ]);
    }
    t
}

fn dimension_header(first: &str) -> Vec<String> {
    let mut h = vec![first.to_string()];
    h.extend(Dimension::ALL.iter().map(|d| d.label().to_string()));
    h
}

pub fn group_means_table(model: &TypologyModel) -> Table {
    let mut t = Table {
        title: "Group characteristics".into(),
        header: dimension_header("group"),
        rows: Vec::new(),
    };
    for p in &model.profiles {
        let mut row = vec![p.innovation_type.label().to_string()];
        row.extend(p.means.iter().map(|m| fixed(*m, 2)));
        t.push(row);
    }
    t
}

pub fn bands_table(model: &TypologyModel) -> Table {
    let mut t = Table {
        title: "Types of functional innovation".into(),
        header: dimension_header("type"),
        rows: Vec::new(),
    };
    for p in &model.profiles {
        let mut row = vec![p.innovation_type.label().to_string()];
        row.extend(p.bands.iter().map(|b| b.label().to_string()));
        t.push(row);
    }
    t
}

fn notes_table(notes: &[String]) -> Table {
    let mut t = Table::new("Conventions", &["note"]);
    for n in notes {
        t.push(vec![n.clone()]);
    }
    t
}

fn skipped_table(title: &str, reason: &str) -> Table {
    let mut t = Table::new(title, &["status", "reason"]);
    t.push(vec!["skipped".into(), reason.into()]);
    t
}

impl PipelineReport {
    pub fn tables(&self, matrix: &EvaluationMatrix) -> Vec<Table> {
        let mut tables = vec![
            descriptives_table(&self.descriptives),
            anova_report_table(&self.anova_table),
            wilks_report_table(&self.wilks_table),
            pca_variance_table(&self.pca),
            loadings_table(&self.pca),
            scree_table(&self.scree),
            scores_table(&self.pca, matrix),
        ];
        if !self.discriminant.stepwise_trace.is_empty() {
            tables.push(stepwise_table(&self.discriminant));
        }
        tables.push(canonical_table(&self.discriminant));
        tables.push(box_table(&self.box_test));
        let mut blocks = vec![("original", &self.resubstitution)];
        match &self.cross_validated {
            Section::Present { value } => blocks.push(("cross-validated", value)),
            Section::Skipped { reason } => {
                tables.push(skipped_table("Cross-validated classification", reason))
            }
        }
        tables.push(classification_table(&blocks));
        tables.push(comparison_table(&self.comparison));
        match &self.typology {
            Section::Present { value } => {
                tables.push(group_means_table(value));
                tables.push(bands_table(value));
            }
            Section::Skipped { reason } => tables.push(skipped_table("Typology", reason)),
        }
        tables.push(notes_table(&self.convention_notes));
        tables
    }

    pub fn render(&self, matrix: &EvaluationMatrix, format: Format) -> Result<String> {
        match format {
            Format::Json => to_json(self),
            _ => render_tables(&self.tables(matrix), format),
        }
    }
}
