//! Group profiles, five-level banding and the qualitative-vs-statistical
//! comparison.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::datamodel::{Dimension, EvaluationMatrix, InnovationType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    VeryLow,
    Low,
    Average,
    High,
    VeryHigh,
}

impl Band {
    pub const ALL: [Band; 5] = [
        Band::VeryLow,
        Band::Low,
        Band::Average,
        Band::High,
        Band::VeryHigh,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Band::VeryLow => "Very low",
            Band::Low => "Low",
            Band::Average => "Average",
            Band::High => "High",
            Band::VeryHigh => "Very high",
        }
    }

    /// Half-open `[lo, hi)` range; the top band also includes 100.
    pub fn range(self) -> (f64, f64) {
        let lo = 20.0 * self as u8 as f64;
        (lo, lo + 20.0)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Band boundaries between adjacent levels.
pub const BAND_BOUNDARIES: [f64; 4] = [20.0, 40.0, 60.0, 80.0];

pub fn band_of(value: f64) -> Result<Band> {
    if !(0.0..=100.0).contains(&value) {
        return Err(Error::InvalidInput(format!(
            "band value {value} outside [0, 100]"
        )));
    }
    let idx = BAND_BOUNDARIES.iter().filter(|&&b| value >= b).count();
    Ok(Band::ALL[idx])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupProfile {
    pub innovation_type: InnovationType,
    pub size: usize,
    /// Indexed by [`Dimension::index`].
    pub means: [f64; 5],
    pub bands: [Band; 5],
}

impl GroupProfile {
    pub fn mean(&self, d: Dimension) -> f64 {
        self.means[d.index()]
    }

    pub fn band(&self, d: Dimension) -> Band {
        self.bands[d.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypologyModel {
    /// One profile per type, canonical order.
    pub profiles: Vec<GroupProfile>,
    pub provenance: String,
}

impl TypologyModel {
    pub fn profile(&self, t: InnovationType) -> &GroupProfile {
        &self.profiles[t.index()]
    }

    /// `type token → dimension column → {mean, band}`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Cell {
            mean: f64,
            band: Band,
        }
        let map: BTreeMap<&str, BTreeMap<&str, Cell>> = self
            .profiles
            .iter()
            .map(|p| {
                let dims = Dimension::ALL
                    .iter()
                    .map(|&d| {
                        (
                            d.column_name(),
                            Cell {
                                mean: p.mean(d),
                                band: p.band(d),
                            },
                        )
                    })
                    .collect();
                (p.innovation_type.token(), dims)
            })
            .collect();
        serde_json::to_value(map).unwrap_or(serde_json::Value::Null)
    }
}

/// Per-type means and bands, grouping rows by `labels` (one per matrix row).
pub fn group_profiles(
    matrix: &EvaluationMatrix,
    labels: &[InnovationType],
    provenance: &str,
) -> Result<TypologyModel> {
    if labels.len() != matrix.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} rows",
            labels.len(),
            matrix.len()
        )));
    }
    let profiles = InnovationType::ALL
        .into_iter()
        .map(|t| {
            let rows: Vec<&[f64; 5]> = matrix
                .rows()
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == t)
                .map(|(r, _)| &r.values)
                .collect();
            if rows.is_empty() {
                return Err(Error::DegenerateDesign(format!("no rows labelled {t}")));
            }
            let mut means = [0.0; 5];
            for (d, m) in means.iter_mut().enumerate() {
                *m = rows.iter().map(|v| v[d]).sum::<f64>() / rows.len() as f64;
            }
            let mut bands = [Band::VeryLow; 5];
            for (b, &m) in bands.iter_mut().zip(&means) {
                *b = band_of(m)?;
            }
            Ok(GroupProfile {
                innovation_type: t,
                size: rows.len(),
                means,
                bands,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TypologyModel {
        profiles,
        provenance: provenance.to_string(),
    })
}

/// Bands of a single row; an extension for new data, the typology itself
/// bands group means only.
pub fn row_bands(values: &[f64; 5]) -> Result<[Band; 5]> {
    let mut out = [Band::VeryLow; 5];
    for (b, &v) in out.iter_mut().zip(values) {
        *b = band_of(v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub software_id: String,
    pub qualitative: InnovationType,
    pub calculated: InnovationType,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub mismatches: Vec<ComparisonRow>,
    /// Percent.
    pub agreement_rate: f64,
}

pub fn compare_classifications(
    ids: &[String],
    qualitative: &[InnovationType],
    predicted: &[InnovationType],
) -> Result<Comparison> {
    if ids.len() != qualitative.len() || ids.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "{} ids, {} qualitative, {} predicted labels",
            ids.len(),
            qualitative.len(),
            predicted.len()
        )));
    }
    if ids.is_empty() {
        return Err(Error::NoRows);
    }
    let rows: Vec<ComparisonRow> = ids
        .iter()
        .zip(qualitative.iter().zip(predicted))
        .map(|(id, (&q, &p))| ComparisonRow {
            software_id: id.clone(),
            qualitative: q,
            calculated: p,
        })
        .collect();
    let mismatches: Vec<ComparisonRow> = rows
        .iter()
        .filter(|r| r.qualitative != r.calculated)
        .cloned()
        .collect();
    let agreement_rate = 100.0 * (rows.len() - mismatches.len()) as f64 / rows.len() as f64;
    Ok(Comparison {
        rows,
        mismatches,
        agreement_rate,
    })
}
