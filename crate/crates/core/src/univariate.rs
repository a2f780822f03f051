//! Per-variable descriptives, one-way ANOVA and univariate Wilks' lambda.

use std::collections::BTreeMap;
use std::fmt::Debug;

use serde::Serialize;

use crate::datamodel::{Dimension, EvaluationMatrix};
use crate::error::{Error, Result};
use crate::numkernel::f_survival;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Descriptive {
    pub dimension: Dimension,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor n − 1).
    pub sd: f64,
    /// Population standard deviation (divisor n).
    pub sd_population: f64,
    pub min: f64,
    pub max: f64,
}

pub fn descriptive_stats(matrix: &EvaluationMatrix) -> Result<Vec<Descriptive>> {
    if matrix.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "descriptives need at least 2 rows, got {}",
            matrix.len()
        )));
    }
    Ok(Dimension::ALL
        .into_iter()
        .map(|d| {
            let col = matrix.column(d);
            let n = col.len();
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - mean).powi(2)).sum();
            Descriptive {
                dimension: d,
                n,
                mean,
                sd: (ss / (n - 1) as f64).sqrt(),
                sd_population: (ss / n as f64).sqrt(),
                min: col.iter().copied().fold(f64::INFINITY, f64::min),
                max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneWayAnova {
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub df_between: u32,
    pub df_within: u32,
    pub ms_between: f64,
    pub ms_within: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub dimension: Dimension,
    #[serde(flatten)]
    pub anova: OneWayAnova,
}

/// One-way ANOVA of `values` partitioned by `groups`.
pub fn one_way_anova<G>(values: &[f64], groups: &[G]) -> Result<OneWayAnova>
where
    G: Ord + Copy + Debug,
{
    if values.len() != groups.len() {
        return Err(Error::InvalidInput(format!(
            "{} values but {} group labels",
            values.len(),
            groups.len()
        )));
    }
    let mut by_group: BTreeMap<G, Vec<f64>> = BTreeMap::new();
    for (&v, &g) in values.iter().zip(groups) {
        by_group.entry(g).or_default().push(v);
    }
    if by_group.len() < 2 {
        return Err(Error::DegenerateDesign(format!(
            "need at least 2 groups, got {}",
            by_group.len()
        )));
    }
    if let Some((g, members)) = by_group.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::DegenerateDesign(format!(
            "group {g:?} has {} member(s); at least 2 required",
            members.len()
        )));
    }

    let n = values.len();
    let k = by_group.len();
    let grand = values.iter().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for members in by_group.values() {
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        ss_between += members.len() as f64 * (mean - grand).powi(2);
        ss_within += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    }
    let ss_total: f64 = values.iter().map(|x| (x - grand).powi(2)).sum();

    let df_between = (k - 1) as u32;
    let df_within = (n - k) as u32;
    if ss_within == 0.0 {
        return Err(Error::UndefinedF(format!("{k} groups of {n} values")));
    }
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;
    let f = ms_between / ms_within;
    let p = f_survival(f, df_between, df_within)?;
    Ok(OneWayAnova {
        ss_between,
        ss_within,
        ss_total,
        df_between,
        df_within,
        ms_between,
        ms_within,
        f,
        p,
    })
}

/// ANOVA of every dimension against the qualitative types.
pub fn anova_table(matrix: &EvaluationMatrix) -> Result<Vec<AnovaRow>> {
    let labels = matrix.labels();
    Dimension::ALL
        .into_iter()
        .map(|d| {
            let anova = one_way_anova(&matrix.column(d), &labels).map_err(|e| match e {
                Error::UndefinedF(_) => Error::UndefinedF(d.to_string()),
                other => other,
            })?;
            Ok(AnovaRow {
                dimension: d,
                anova,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilksRow {
    pub dimension: Dimension,
    pub lambda: f64,
    pub f: f64,
    pub df1: u32,
    pub df2: u32,
    pub p: f64,
}

impl From<&AnovaRow> for WilksRow {
    fn from(row: &AnovaRow) -> Self {
        let a = &row.anova;
        WilksRow {
            dimension: row.dimension,
            lambda: a.ss_within / a.ss_total,
            f: a.f,
            df1: a.df_between,
            df2: a.df_within,
            p: a.p,
        }
    }
}

/// Univariate equality-of-means test per dimension.
pub fn wilks_table(matrix: &EvaluationMatrix) -> Result<Vec<WilksRow>> {
    Ok(anova_table(matrix)?.iter().map(WilksRow::from).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{reference_dataset, InnovationType, MatrixRow};

    #[test]
    fn two_group_toy() {
        let a = one_way_anova(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]).unwrap();
        assert!((a.ss_between - 4.0).abs() < 1e-12);
        assert!((a.ss_within - 1.0).abs() < 1e-12);
        assert!((a.ms_within - 0.5).abs() < 1e-12);
        assert!((a.f - 8.0).abs() < 1e-12);
        assert_eq!(a.p, f_survival(8.0, 1, 2).unwrap());
    }

    #[test]
    fn identical_group_means() {
        let a = one_way_anova(&[1.0, 3.0, 1.0, 3.0], &['a', 'a', 'b', 'b']).unwrap();
        assert_eq!(a.ss_between, 0.0);
        assert_eq!(a.f, 0.0);
        assert_eq!(a.p, 1.0);
    }

    #[test]
    fn degenerate_designs() {
        assert!(matches!(
            one_way_anova(&[1.0, 2.0, 3.0], &[0, 0, 1]),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(matches!(
            one_way_anova(&[1.0, 2.0], &[0, 0]),
            Err(Error::DegenerateDesign(_))
        ));
        assert!(matches!(
            one_way_anova(&[1.0, 1.0, 2.0, 2.0], &[0, 0, 1, 1]),
            Err(Error::UndefinedF(_))
        ));
    }

    #[test]
    fn descriptive_edges() {
        let rows = |vals: &[f64]| {
            let rows = vals
                .iter()
                .enumerate()
                .map(|(i, &v)| MatrixRow {
                    software_id: format!("s{i}"),
                    qualitative_type: InnovationType::Package,
                    values: [v, 5.0, v, v, v],
                })
                .collect();
            EvaluationMatrix::new(rows).unwrap()
        };
        let d = descriptive_stats(&rows(&[0.0, 100.0])).unwrap();
        assert_eq!(d[0].mean, 50.0);
        assert!((d[0].sd - (2.0f64 * 50.0 * 50.0).sqrt()).abs() < 1e-12);
        assert_eq!(d[1].sd, 0.0);
        assert!(descriptive_stats(&rows(&[1.0])).is_err());
    }

    #[test]
    fn emulation_extremes() {
        let d = descriptive_stats(&reference_dataset()).unwrap();
        let em = &d[Dimension::Emulation.index()];
        assert_eq!((em.max, em.min), (92.9, 2.4));
    }

    #[test]
    fn wilks_matches_anova() {
        let m = reference_dataset();
        let anova = anova_table(&m).unwrap();
        let wilks = wilks_table(&m).unwrap();
        for (a, w) in anova.iter().zip(&wilks) {
            assert_eq!(a.anova.f, w.f);
            let alt = 1.0 - a.anova.ss_between / a.anova.ss_total;
            assert!((w.lambda - alt).abs() < 1e-12);
        }
        assert!((wilks[0].lambda - 0.592).abs() < 0.005);
        assert!((wilks[1].lambda - 0.370).abs() < 0.005);
        assert!((wilks[1].f - 8.510).abs() < 0.02);
    }
}
