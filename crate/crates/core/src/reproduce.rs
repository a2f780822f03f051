//! Self-check of the pipeline on the bundled dataset against the published
//! tables.

use serde::Serialize;

use crate::datamodel::{reference_dataset, Dimension, EvaluationMatrix, InnovationType};
use crate::render::{fixed, render_tables, to_json, Format, Table};
use crate::report::{run_pipeline, PipelineOptions, PipelineReport, Section};
use crate::typology::Band;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Requirement {
    Mandatory,
    /// A miss is reported as a documented gap and does not fail the run.
    BestEffort,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expected {
    Approx { value: f64, tolerance: f64 },
    Relative { value: f64, tolerance: f64 },
    Below { bound: f64 },
    Exact { value: String },
}

impl Expected {
    fn describe(&self) -> String {
        match self {
            Expected::Approx { value, tolerance } => format!("{value} ± {tolerance}"),
            Expected::Relative { value, tolerance } => {
                format!("{value} ± {}%", fixed(100.0 * tolerance, 2))
            }
            Expected::Below { bound } => format!("< {bound}"),
            Expected::Exact { value } => value.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub table: String,
    pub item: String,
    pub expected: Expected,
    pub computed: String,
    pub requirement: Requirement,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub mandatory_failures: usize,
    pub best_effort_gaps: usize,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn table(&self) -> Table {
        let mut t = Table::new(
            "Reproduction checks",
            &[
                "status",
                "table",
                "item",
                "expected",
                "computed",
                "requirement",
            ],
        );
        for c in &self.checks {
            let status = match (c.passed, c.requirement) {
                (true, _) => "PASS",
                (false, Requirement::Mandatory) => "FAIL",
                (false, Requirement::BestEffort) => "GAP",
            };
            t.push(vec![
                status.into(),
                c.table.clone(),
                c.item.clone(),
                c.expected.describe(),
                c.computed.clone(),
                format!("{:?}", c.requirement).to_lowercase(),
            ]);
        }
        t
    }

    pub fn render(&self, format: Format) -> crate::Result<String> {
        match format {
            Format::Json => to_json(self),
            _ => {
                let mut summary = Table::new(
                    "Verdict",
                    &["result", "mandatory_failures", "best_effort_gaps"],
                );
                summary.push(vec![
                    if self.passed { "PASS" } else { "FAIL" }.into(),
                    self.mandatory_failures.to_string(),
                    self.best_effort_gaps.to_string(),
                ]);
                let mut notes = Table::new("Notes", &["note"]);
                for n in &self.notes {
                    notes.push(vec![n.clone()]);
                }
                render_tables(&[summary, self.table(), notes], format)
            }
        }
    }
}

struct Checks {
    list: Vec<Check>,
}

impl Checks {
    fn push(
        &mut self,
        table: &str,
        item: String,
        expected: Expected,
        computed: f64,
        req: Requirement,
    ) {
        let passed = computed.is_finite()
            && match &expected {
                Expected::Approx { value, tolerance } => {
                    (computed - value).abs() <= *tolerance + 1e-12
                }
                Expected::Relative { value, tolerance } => {
                    (computed - value).abs() <= tolerance * value.abs()
                }
                Expected::Below { bound } => computed < *bound,
                Expected::Exact { value } => value.parse::<f64>().is_ok_and(|v| v == computed),
            };
        self.list.push(Check {
            table: table.into(),
            item,
            expected,
            computed: format!("{computed:.6}"),
            requirement: req,
            passed,
        });
    }

    fn approx(&mut self, table: &str, item: String, value: f64, tol: f64, computed: f64) {
        self.push(
            table,
            item,
            Expected::Approx {
                value,
                tolerance: tol,
            },
            computed,
            Requirement::Mandatory,
        );
    }

    fn text(&mut self, table: &str, item: String, expected: &str, computed: &str) {
        self.list.push(Check {
            table: table.into(),
            item,
            expected: Expected::Exact {
                value: expected.into(),
            },
            computed: computed.into(),
            requirement: Requirement::Mandatory,
            passed: expected == computed,
        });
    }

    fn fail(&mut self, table: &str, item: &str, computed: String) {
        self.list.push(Check {
            table: table.into(),
            item: item.into(),
            expected: Expected::Exact {
                value: "present".into(),
            },
            computed,
            requirement: Requirement::Mandatory,
            passed: false,
        });
    }
}

/// Published ANOVA: (ss_between, ss_within, ss_total, F, p); p = 0 stands
/// for a printed .000.
const ANOVA: [(f64, f64, f64, f64, f64); 5] = [
    (3164.170, 4584.469, 7748.640, 3.451, 0.027),
    (5168.638, 3036.874, 8205.511, 8.510, 0.0),
    (15549.727, 7260.716, 22810.443, 10.708, 0.0),
    (2275.034, 3640.026, 5915.060, 3.125, 0.038),
    (15571.418, 3303.005, 18874.423, 23.572, 0.0),
];

#[allow(clippy::approx_constant)]
const WILKS: [f64; 5] = [0.592, 0.370, 0.318, 0.615, 0.175];

const PCA_PROPORTIONS: [f64; 2] = [0.391, 0.339];

/// Printed component-matrix entries; `None` marks a suppressed cell.
const LOADINGS: [(Dimension, [Option<f64>; 2]); 5] = [
    (Dimension::NewUse, [Some(0.930), None]),
    (Dimension::AdaptationPiece, [Some(0.841), Some(0.418)]),
    (Dimension::Emulation, [Some(0.251), Some(0.814)]),
    (Dimension::FreeAlternative, [Some(-0.476), Some(0.668)]),
    (Dimension::Package, [Some(0.310), Some(-0.641)]),
];

/// Box test: M, F, df2, p.
const BOX: (f64, f64, f64, f64) = (61.774, 1.681, 1104.425, 0.021);

/// Classification counts, rows and columns in canonical type order.
const ORIGINAL_COUNTS: [[u32; 5]; 5] = [
    [5, 0, 0, 0, 0],
    [1, 4, 0, 0, 0],
    [0, 0, 4, 1, 0],
    [0, 0, 0, 5, 0],
    [0, 1, 0, 0, 4],
];

const CROSS_VALIDATED_COUNTS: [[u32; 5]; 5] = [
    [5, 0, 0, 0, 0],
    [1, 4, 0, 0, 0],
    [1, 1, 1, 1, 1],
    [0, 0, 0, 5, 0],
    [0, 1, 1, 0, 3],
];

/// Software whose calculated type differs from the qualitative one.
const MISCLASSIFIED: [(&str, InnovationType); 3] = [
    ("MinGW", InnovationType::Package),
    ("Ncurses", InnovationType::NewUseOriented),
    ("Pidgin", InnovationType::FreeAlternative),
];

/// Group means, canonical type order, dimension order.
const GROUP_MEANS: [[f64; 5]; 5] = [
    [56.89, 74.65, 17.46, 41.06, 26.27],
    [74.04, 37.71, 8.61, 68.61, 20.82],
    [92.18, 70.49, 60.22, 61.44, 28.95],
    [73.43, 42.10, 23.62, 62.06, 84.49],
    [79.55, 54.29, 87.12, 55.15, 13.53],
];

const BANDS: [[Band; 5]; 5] = {
    use Band::*;
    [
        [Average, High, VeryLow, Average, Low],
        [High, Low, VeryLow, High, Low],
        [VeryHigh, High, High, High, Low],
        [High, Average, Low, High, VeryHigh],
        [High, Average, VeryHigh, Average, VeryLow],
    ]
};

const FOOTER_MEANS: [f64; 5] = [74.0, 56.0, 35.0, 57.0, 38.0];
const FOOTER_SDS: [f64; 5] = [17.6, 18.1, 30.2, 15.4, 27.5];
const FOOTER_MAX: [f64; 5] = [98.1, 81.3, 92.9, 89.3, 93.5];
const FOOTER_MIN: [f64; 5] = [28.0, 27.6, 2.4, 25.0, 5.9];

pub fn reproduce() -> Verdict {
    reproduce_matrix(&reference_dataset())
}

/// Runs the default pipeline on `matrix` and compares it with the published
/// values for the bundled dataset.
pub fn reproduce_matrix(matrix: &EvaluationMatrix) -> Verdict {
    let mut checks = Checks { list: Vec::new() };
    let mut notes = Vec::new();
    let options = PipelineOptions {
        provenance: "bundled reference dataset".into(),
        ..Default::default()
    };
    match run_pipeline(matrix, &options) {
        Ok(report) => {
            check_report(&report, &mut checks);
            notes.extend(report.convention_notes.iter().cloned());
        }
        Err(e) => checks.fail("pipeline", "run", e.to_string()),
    }
    notes.push(
        "The footer standard deviations are compared with the population (divisor n) \
         values, the convention that matches the printed figures."
            .into(),
    );
    let mandatory_failures = checks
        .list
        .iter()
        .filter(|c| !c.passed && c.requirement == Requirement::Mandatory)
        .count();
    let best_effort_gaps = checks
        .list
        .iter()
        .filter(|c| !c.passed && c.requirement == Requirement::BestEffort)
        .count();
    if best_effort_gaps > 0 {
        notes.push(format!(
            "{best_effort_gaps} best-effort check(s) missed; the Box statistic depends on \
             an undocumented convention and is reported with its gap rather than tuned."
        ));
    }
    Verdict {
        passed: mandatory_failures == 0,
        mandatory_failures,
        best_effort_gaps,
        checks: checks.list,
        notes,
    }
}

fn check_report(r: &PipelineReport, c: &mut Checks) {
    const ANOVA_TABLE: &str = "ANOVA";
    for (row, &(ssb, ssw, sst, f, p)) in r.anova_table.iter().zip(&ANOVA) {
        let d = row.dimension.label();
        let a = &row.anova;
        for (name, want, got) in [
            ("ss_between", ssb, a.ss_between),
            ("ss_within", ssw, a.ss_within),
            ("ss_total", sst, a.ss_total),
        ] {
            c.push(
                ANOVA_TABLE,
                format!("{d} {name}"),
                Expected::Relative {
                    value: want,
                    tolerance: 0.005,
                },
                got,
                Requirement::Mandatory,
            );
        }
        c.approx(ANOVA_TABLE, format!("{d} F"), f, 0.02, a.f);
        if p == 0.0 {
            c.push(
                ANOVA_TABLE,
                format!("{d} sig"),
                Expected::Below { bound: 0.0005 },
                a.p,
                Requirement::Mandatory,
            );
        } else {
            c.approx(ANOVA_TABLE, format!("{d} sig"), p, 0.005, a.p);
        }
    }

    for (w, want) in r.wilks_table.iter().zip(WILKS) {
        c.approx(
            "Wilks",
            format!("{} lambda", w.dimension.label()),
            want,
            0.005,
            w.lambda,
        );
    }

    let pca = &r.pca;
    c.push(
        "PCA",
        "components with eigenvalue > 1".into(),
        Expected::Exact { value: "2".into() },
        pca.retained as f64,
        Requirement::Mandatory,
    );
    for (j, want) in PCA_PROPORTIONS.iter().enumerate() {
        c.approx(
            "PCA",
            format!("proportion {}", j + 1),
            *want,
            0.01,
            pca.proportions[j],
        );
    }
    for (d, entries) in LOADINGS {
        for (j, e) in entries.iter().enumerate() {
            if let Some(want) = e {
                c.approx(
                    "Component matrix",
                    format!("{} component {}", d.label(), j + 1),
                    *want,
                    0.02,
                    pca.loading(d, j),
                );
            }
        }
    }

    match &r.box_test {
        Section::Present { value: b } => {
            for (item, want, got) in [
                ("dims_used", 3.0, b.dims_used as f64),
                ("df1", 24.0, b.df1 as f64),
            ] {
                c.push(
                    "Box test",
                    item.into(),
                    Expected::Exact {
                        value: format!("{want}"),
                    },
                    got,
                    Requirement::Mandatory,
                );
            }
            for (item, want, tol, got) in [
                ("M", BOX.0, 2.0, b.m_statistic),
                ("F", BOX.1, 0.1, b.f_approx),
                ("df2", BOX.2, 5.0, b.df2),
                ("sig", BOX.3, 0.01, b.p),
            ] {
                c.push(
                    "Box test",
                    item.into(),
                    Expected::Approx {
                        value: want,
                        tolerance: tol,
                    },
                    got,
                    Requirement::BestEffort,
                );
            }
        }
        Section::Skipped { reason } => c.fail("Box test", "section", reason.clone()),
    }

    let mut confusion = |label: &str,
                         report: &crate::discriminant::ConfusionReport,
                         expected: &[[u32; 5]; 5],
                         rate: f64| {
        c.approx(
            "Classification",
            format!("{label} correct %"),
            rate,
            1e-9,
            report.correct_rate,
        );
        for (i, g) in InnovationType::ALL.iter().enumerate() {
            let got = report
                .row(*g)
                .map(|r| format!("{r:?}"))
                .unwrap_or_else(|| "missing".into());
            c.text(
                "Classification",
                format!("{label} {} row", g.label()),
                &format!("{:?}", expected[i]),
                &got,
            );
        }
    };
    confusion("original", &r.resubstitution, &ORIGINAL_COUNTS, 88.0);
    match &r.cross_validated {
        Section::Present { value } => {
            confusion("cross-validated", value, &CROSS_VALIDATED_COUNTS, 72.0)
        }
        Section::Skipped { reason } => c.fail("Classification", "cross-validated", reason.clone()),
    }

    let mismatches: Vec<String> = r
        .comparison
        .mismatches
        .iter()
        .map(|m| format!("{}→{}", m.software_id, m.calculated.token()))
        .collect();
    let expected: Vec<String> = MISCLASSIFIED
        .iter()
        .map(|(id, t)| format!("{id}→{}", t.token()))
        .collect();
    c.text(
        "Comparison",
        "mismatches".into(),
        &expected.join(", "),
        &mismatches.join(", "),
    );

    match &r.typology {
        Section::Present { value } => {
            for (t, (means, bands)) in InnovationType::ALL
                .iter()
                .zip(GROUP_MEANS.iter().zip(&BANDS))
            {
                let p = value.profile(*t);
                for d in Dimension::ALL {
                    c.approx(
                        "Group characteristics",
                        format!("{} {}", t.label(), d.label()),
                        means[d.index()],
                        0.1,
                        p.mean(d),
                    );
                    c.text(
                        "Typology bands",
                        format!("{} {}", t.label(), d.label()),
                        bands[d.index()].label(),
                        p.band(d).label(),
                    );
                }
            }
        }
        Section::Skipped { reason } => c.fail("Typology", "section", reason.clone()),
    }

    for (i, desc) in r.descriptives.iter().enumerate() {
        let d = desc.dimension.label();
        c.approx(
            "Descriptives",
            format!("{d} mean"),
            FOOTER_MEANS[i],
            0.5,
            desc.mean,
        );
        c.approx(
            "Descriptives",
            format!("{d} sd (population)"),
            FOOTER_SDS[i],
            0.1,
            desc.sd_population,
        );
        c.approx(
            "Descriptives",
            format!("{d} max"),
            FOOTER_MAX[i],
            0.0,
            desc.max,
        );
        c.approx(
            "Descriptives",
            format!("{d} min"),
            FOOTER_MIN[i],
            0.0,
            desc.min,
        );
    }
}
