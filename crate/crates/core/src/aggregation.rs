//! Collapses raw Likert ratings into agreement percentages.
//!
//! A cell's rate is the share of "completely agree" and "agree" answers among
//! the experts who gave an opinion on that item; "don't know" answers are
//! left out of both numerator and denominator. A cell with no opinion at all
//! is missing, never zero.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::datamodel::{
    Dimension, EvaluationMatrix, InnovationType, LikertResponse, MatrixRow, RatingSet,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AgreementCount {
    pub agree_count: u32,
    pub respondent_count: u32,
}

impl AgreementCount {
    pub fn push(&mut self, response: LikertResponse) {
        match response {
            LikertResponse::CompletelyAgree | LikertResponse::Agree => {
                self.agree_count += 1;
                self.respondent_count += 1;
            }
            LikertResponse::Disagree | LikertResponse::NotAgreeAtAll => {
                self.respondent_count += 1;
            }
            LikertResponse::DontKnow => {}
        }
    }

    /// Percentage in `[0, 100]`, or `None` for a missing cell.
    pub fn rate(&self) -> Option<f64> {
        (self.respondent_count > 0)
            .then(|| 100.0 * self.agree_count as f64 / self.respondent_count as f64)
    }

    pub fn is_missing(&self) -> bool {
        self.respondent_count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementCell {
    pub software_id: String,
    pub dimension: Dimension,
    pub agree_count: u32,
    pub respondent_count: u32,
    pub rate: Option<f64>,
}

pub fn agreement_rate<I>(responses: I) -> AgreementCount
where
    I: IntoIterator<Item = LikertResponse>,
{
    let mut count = AgreementCount::default();
    for r in responses {
        count.push(r);
    }
    count
}

/// Every (software, dimension) cell present in the ratings, ordered by
/// software id then dimension.
pub fn agreement_cells(ratings: &RatingSet) -> Vec<AgreementCell> {
    let mut counts: BTreeMap<(&str, Dimension), AgreementCount> = BTreeMap::new();
    for r in ratings.records() {
        counts
            .entry((r.software_id.as_str(), r.dimension))
            .or_default()
            .push(r.response);
    }
    counts
        .into_iter()
        .map(|((sw, d), c)| AgreementCell {
            software_id: sw.to_string(),
            dimension: d,
            agree_count: c.agree_count,
            respondent_count: c.respondent_count,
            rate: c.rate(),
        })
        .collect()
}

/// Builds the agreement matrix, one row per software ordered by id.
pub fn aggregate(
    ratings: &RatingSet,
    qualitative_types: &BTreeMap<String, InnovationType>,
) -> Result<EvaluationMatrix> {
    let mut by_software: BTreeMap<&str, [AgreementCount; 5]> = BTreeMap::new();
    for r in ratings.records() {
        by_software.entry(r.software_id.as_str()).or_default()[r.dimension.index()]
            .push(r.response);
    }
    if by_software.is_empty() {
        return Err(Error::NoRows);
    }

    let mut rows = Vec::with_capacity(by_software.len());
    let mut missing = Vec::new();
    for (sw, counts) in &by_software {
        let ty = *qualitative_types
            .get(*sw)
            .ok_or_else(|| Error::MissingType(sw.to_string()))?;
        let mut values = [0.0; 5];
        for d in Dimension::ALL {
            match counts[d.index()].rate() {
                Some(rate) => values[d.index()] = rate,
                None => missing.push((sw.to_string(), d)),
            }
        }
        rows.push(MatrixRow {
            software_id: sw.to_string(),
            qualitative_type: ty,
            values,
        });
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    EvaluationMatrix::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::RatingRecord;
    use LikertResponse::*;

    #[test]
    fn counts_agree_and_completely_agree() {
        let c = agreement_rate([CompletelyAgree, Agree, Disagree, NotAgreeAtAll]);
        assert_eq!((c.agree_count, c.respondent_count), (2, 4));
        assert_eq!(c.rate(), Some(50.0));
    }

    #[test]
    fn dont_know_leaves_denominator() {
        let c = agreement_rate([Agree, DontKnow, DontKnow]);
        assert_eq!((c.agree_count, c.respondent_count), (1, 1));
        assert_eq!(c.rate(), Some(100.0));
    }

    #[test]
    fn empty_and_all_dont_know_are_missing() {
        assert!(agreement_rate([]).is_missing());
        assert_eq!(agreement_rate([DontKnow, DontKnow]).rate(), None);
    }

    fn record(e: &str, sw: &str, d: Dimension, r: LikertResponse) -> RatingRecord {
        RatingRecord {
            expert_id: e.into(),
            software_id: sw.into(),
            dimension: d,
            response: r,
        }
    }

    #[test]
    fn unanimous_agreement() {
        let mut recs = Vec::new();
        for e in 0..4 {
            for d in Dimension::ALL {
                recs.push(record(&format!("e{e}"), "Wine", d, CompletelyAgree));
            }
        }
        let types = BTreeMap::from([("Wine".to_string(), InnovationType::AdaptationPiece)]);
        let m = aggregate(&RatingSet::new(recs).unwrap(), &types).unwrap();
        assert_eq!(m.rows()[0].values, [100.0; 5]);
    }

    #[test]
    fn missing_type_is_named() {
        let recs = vec![record("e1", "Gimp", Dimension::NewUse, Agree)];
        let err = aggregate(&RatingSet::new(recs).unwrap(), &BTreeMap::new()).unwrap_err();
        match err {
            Error::MissingType(sw) => assert_eq!(sw, "Gimp"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_cells_are_listed() {
        let mut recs = vec![];
        for d in Dimension::ALL {
            let r = if d == Dimension::Emulation {
                DontKnow
            } else {
                Agree
            };
            recs.push(record("e1", "Gimp", d, r));
        }
        let types = BTreeMap::from([("Gimp".to_string(), InnovationType::FreeAlternative)]);
        match aggregate(&RatingSet::new(recs).unwrap(), &types).unwrap_err() {
            Error::MissingCells(cells) => {
                assert_eq!(cells, vec![("Gimp".to_string(), Dimension::Emulation)])
            }
            other => panic!("{other:?}"),
        }
    }
}
