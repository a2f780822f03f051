//! Command-line front end. The `typology` binary is a thin wrapper over [`run`].

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::aggregation::aggregate;
use crate::datamodel::{
    load_matrix, load_ratings, load_types, reference_dataset, write_matrix, EvaluationMatrix,
};
use crate::discriminant::{
    box_test, fit_observations, leave_one_out_observations, resubstitute, DiscriminantOptions,
    Observations, Priors, VariableSelection,
};
use crate::pca::{run_pca_with, scree_series, PcaInput, PcaOptions};
use crate::render::{render_tables, to_json, Format, Table};
use crate::report::{
    anova_report_table, bands_table, box_table, canonical_table, classification_table,
    comparison_table, descriptives_table, group_means_table, loadings_table, pca_variance_table,
    run_pipeline, scores_table, scree_table, stepwise_table, wilks_report_table, PipelineOptions,
    Section,
};
use crate::reproduce::{reproduce, reproduce_matrix};
use crate::typology::{compare_classifications, group_profiles};
use crate::univariate::{anova_table, descriptive_stats, WilksRow};
use crate::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_REPRODUCTION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "typology",
    version,
    about = "Innovation typology analysis of expert ratings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Aggregated matrix CSV; the bundled reference dataset when omitted.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,

    /// Raw ratings CSV (expert_id,software,dimension,response).
    #[arg(long, global = true)]
    ratings: Option<PathBuf>,

    /// Qualitative types CSV (software,type), used by `aggregate`.
    #[arg(long, global = true)]
    types: Option<PathBuf>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Md)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Md,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Stepwise,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorsArg {
    Equal,
    Proportional,
}

#[derive(Clone, Copy, ValueEnum)]
enum PcaInputArg {
    Correlation,
    Covariance,
}

#[derive(clap::Args, Clone, Copy)]
struct LdaArgs {
    /// Variable selection for the discriminant model.
    #[arg(long, value_enum, default_value_t = SelectionArg::Stepwise)]
    selection: SelectionArg,

    #[arg(long, value_enum, default_value_t = PriorsArg::Equal)]
    priors: PriorsArg,
}

impl LdaArgs {
    fn options(self) -> DiscriminantOptions {
        let mut opts = match self.selection {
            SelectionArg::Stepwise => DiscriminantOptions::default(),
            SelectionArg::All => DiscriminantOptions::all_variables(),
        };
        opts.priors = match self.priors {
            PriorsArg::Equal => Priors::Equal,
            PriorsArg::Proportional => Priors::Proportional,
        };
        opts
    }
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate raw ratings into an agreement matrix (CSV).
    Aggregate,
    /// Descriptives, ANOVA and univariate Wilks' lambda.
    Anova,
    /// Principal components: variance, loadings, scree and scores.
    Pca {
        #[arg(long, value_enum, default_value_t = PcaInputArg::Correlation)]
        input: PcaInputArg,
    },
    /// Discriminant analysis, Box test and classification tables.
    Lda {
        #[command(flatten)]
        lda: LdaArgs,
    },
    /// Group characteristics and banded typology.
    Profile {
        #[command(flatten)]
        lda: LdaArgs,
    },
    /// Full pipeline report.
    Report {
        #[command(flatten)]
        lda: LdaArgs,
    },
    /// Check the pipeline against the published tables (bundled data unless --matrix).
    Reproduce,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Output goes to `stdout` unless `--out` names a file.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DATA
        }
    }
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn open(path: &PathBuf) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(Error::InvalidInput(format!("{}: {e}", path.display()))))
}

fn matrix(cli: &Cli) -> Result<(EvaluationMatrix, String), CliError> {
    match &cli.matrix {
        Some(path) => Ok((load_matrix(open(path)?)?, path.display().to_string())),
        None => Ok((reference_dataset(), "bundled reference dataset".to_string())),
    }
}

fn emit(cli: &Cli, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    let result = match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => stdout.write_all(text.as_bytes()),
    };
    result.map_err(|e| CliError::Data(Error::Io(e)))
}

fn tables_or_json<T: serde::Serialize>(
    format: Format,
    tables: &[Table],
    json: &T,
) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => to_json(json)?,
        _ => render_tables(tables, format)?,
    })
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let format: Format = cli.format.into();
    let text = match &cli.command {
        Command::Aggregate => {
            let (Some(ratings), Some(types)) = (&cli.ratings, &cli.types) else {
                return Err(CliError::Usage(
                    "aggregate needs --ratings and --types".into(),
                ));
            };
            let ratings = load_ratings(open(ratings)?)?;
            let types = load_types(open(types)?)?;
            let m = aggregate(&ratings, &types)?;
            match format {
                Format::Json => to_json(&m.rows())?,
                _ => {
                    let mut buf = Vec::new();
                    write_matrix(&m, &mut buf)?;
                    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))?
                }
            }
        }
        Command::Anova => {
            let (m, _) = matrix(cli)?;
            let desc = descriptive_stats(&m)?;
            let anova = anova_table(&m)?;
            let wilks: Vec<WilksRow> = anova.iter().map(WilksRow::from).collect();
            let tables = [
                descriptives_table(&desc),
                anova_report_table(&anova),
                wilks_report_table(&wilks),
            ];
            tables_or_json(
                format,
                &tables,
                &serde_json::json!({ "descriptives": desc, "anova": anova, "wilks": wilks }),
            )?
        }
        Command::Pca { input } => {
            let (m, _) = matrix(cli)?;
            let opts = PcaOptions {
                input: match input {
                    PcaInputArg::Correlation => PcaInput::Correlation,
                    PcaInputArg::Covariance => PcaInput::Covariance,
                },
                ..Default::default()
            };
            let pca = run_pca_with(&m, &opts)?;
            let scree = scree_series(&pca.eigenvalues);
            let tables = [
                pca_variance_table(&pca),
                loadings_table(&pca),
                scree_table(&scree),
                scores_table(&pca, &m),
            ];
            tables_or_json(
                format,
                &tables,
                &serde_json::json!({ "pca": pca, "scree": scree }),
            )?
        }
        Command::Lda { lda } => {
            let (m, _) = matrix(cli)?;
            let opts = lda.options();
            let obs = Observations::from_matrix(&m);
            let model = fit_observations(&obs, &opts)?;
            let boxed = match box_test(&model, &obs) {
                Ok(b) => Section::Present { value: b },
                Err(e @ Error::UntestableHomogeneity) => Section::Skipped {
                    reason: e.to_string(),
                },
                Err(e) => return Err(e.into()),
            };
            let resub = resubstitute(&model, &obs);
            let cv = leave_one_out_observations(&obs, &opts)?;
            let predicted: Vec<_> = resub.per_case.iter().map(|c| c.predicted).collect();
            let ids: Vec<String> = resub
                .per_case
                .iter()
                .map(|c| c.software_id.clone())
                .collect();
            let cmp = compare_classifications(&ids, &m.labels(), &predicted)?;
            let mut tables = Vec::new();
            if matches!(opts.selection, VariableSelection::Stepwise(_)) {
                tables.push(stepwise_table(&model));
            }
            tables.push(canonical_table(&model));
            tables.push(box_table(&boxed));
            tables.push(classification_table(&[
                ("original", &resub),
                ("cross-validated", &cv),
            ]));
            tables.push(comparison_table(&cmp));
            tables_or_json(
                format,
                &tables,
                &serde_json::json!({
                    "model": model,
                    "box_test": boxed,
                    "resubstitution": resub,
                    "cross_validated": cv,
                    "comparison": cmp,
                }),
            )?
        }
        Command::Profile { lda } => {
            let (m, provenance) = matrix(cli)?;
            let obs = Observations::from_matrix(&m);
            let model = fit_observations(&obs, &lda.options())?;
            let predicted: Vec<_> = resubstitute(&model, &obs)
                .per_case
                .iter()
                .map(|c| c.predicted)
                .collect();
            let typology = group_profiles(&m, &predicted, &provenance)?;
            match format {
                Format::Json => to_json(&typology.to_json())?,
                _ => render_tables(
                    &[group_means_table(&typology), bands_table(&typology)],
                    format,
                )?,
            }
        }
        Command::Report { lda } => {
            let (m, provenance) = matrix(cli)?;
            let opts = PipelineOptions {
                discriminant: lda.options(),
                provenance,
                ..Default::default()
            };
            run_pipeline(&m, &opts)?.render(&m, format)?
        }
        Command::Reproduce => {
            // an explicit matrix replaces the bundled transcription
            let verdict = match &cli.matrix {
                Some(_) => reproduce_matrix(&matrix(cli)?.0),
                None => reproduce(),
            };
            emit(cli, stdout, &verdict.render(format)?)?;
            return Ok(if verdict.passed {
                EXIT_OK
            } else {
                EXIT_REPRODUCTION
            });
        }
    };
    emit(cli, stdout, &text)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (u8, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("typology").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, err) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("reproduce") && err.is_empty());
    }

    #[test]
    fn usage_and_data_errors() {
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        let (code, _, err) = call(&["anova", "--matrix", "/no/such/file.csv"]);
        assert_eq!(code, EXIT_DATA);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn reproduce_passes_in_process() {
        let (code, out, _) = call(&["reproduce", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("# Verdict\nresult,"));
    }
}
