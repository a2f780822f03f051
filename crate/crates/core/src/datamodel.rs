//! Domain vocabulary, CSV ingestion and the bundled reference matrix.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functional-innovation type. Declaration order is the canonical order used
/// for table layout and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationType {
    FreeAlternative,
    NewUseOriented,
    AdaptationPiece,
    Package,
    Emulator,
}

impl InnovationType {
    pub const ALL: [InnovationType; 5] = [
        InnovationType::FreeAlternative,
        InnovationType::NewUseOriented,
        InnovationType::AdaptationPiece,
        InnovationType::Package,
        InnovationType::Emulator,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn token(self) -> &'static str {
        match self {
            InnovationType::FreeAlternative => "free_alternative",
            InnovationType::NewUseOriented => "new_use_oriented",
            InnovationType::AdaptationPiece => "adaptation_piece",
            InnovationType::Package => "package",
            InnovationType::Emulator => "emulator",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InnovationType::FreeAlternative => "Free alternative",
            InnovationType::NewUseOriented => "New use oriented",
            InnovationType::AdaptationPiece => "Adaptation piece",
            InnovationType::Package => "Package",
            InnovationType::Emulator => "Emulator",
        }
    }
}

impl fmt::Display for InnovationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InnovationType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        InnovationType::ALL
            .into_iter()
            .find(|ty| ty.token() == t)
            .ok_or_else(|| format!("unknown innovation type {s:?}"))
    }
}

/// Evaluation variable, one questionnaire item per software.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    AdaptationPiece,
    FreeAlternative,
    Emulation,
    NewUse,
    Package,
}

impl Dimension {
    /// Column order of the matrix CSV.
    pub const ALL: [Dimension; 5] = [
        Dimension::AdaptationPiece,
        Dimension::FreeAlternative,
        Dimension::Emulation,
        Dimension::NewUse,
        Dimension::Package,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn column_name(self) -> &'static str {
        match self {
            Dimension::AdaptationPiece => "adaptation",
            Dimension::FreeAlternative => "alternative",
            Dimension::Emulation => "emulation",
            Dimension::NewUse => "new_use",
            Dimension::Package => "package",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Dimension::AdaptationPiece => "Adaptation piece",
            Dimension::FreeAlternative => "Free alternative",
            Dimension::Emulation => "Emulation",
            Dimension::NewUse => "New use",
            Dimension::Package => "Package",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column_name())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        Dimension::ALL
            .into_iter()
            .find(|d| d.column_name() == t)
            .ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

/// Five-option agreement scale; there is no neutral option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikertResponse {
    CompletelyAgree,
    Agree,
    Disagree,
    NotAgreeAtAll,
    DontKnow,
}

impl LikertResponse {
    pub const ALL: [LikertResponse; 5] = [
        LikertResponse::CompletelyAgree,
        LikertResponse::Agree,
        LikertResponse::Disagree,
        LikertResponse::NotAgreeAtAll,
        LikertResponse::DontKnow,
    ];

    pub fn token(self) -> &'static str {
        match self {
            LikertResponse::CompletelyAgree => "completely_agree",
            LikertResponse::Agree => "agree",
            LikertResponse::Disagree => "disagree",
            LikertResponse::NotAgreeAtAll => "not_agree_at_all",
            LikertResponse::DontKnow => "dont_know",
        }
    }
}

impl FromStr for LikertResponse {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        LikertResponse::ALL
            .into_iter()
            .find(|r| r.token() == t)
            .ok_or_else(|| format!("unknown response {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub expert_id: String,
    pub software_id: String,
    pub dimension: Dimension,
    pub response: LikertResponse,
}

/// Ratings with unique (expert, software, dimension) triples.
#[derive(Debug, Clone, Default)]
pub struct RatingSet {
    records: Vec<RatingRecord>,
}

impl RatingSet {
    pub fn new(records: Vec<RatingRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert((&r.expert_id, &r.software_id, r.dimension)) {
                return Err(Error::InvalidInput(format!(
                    "record {i} duplicates ({}, {}, {})",
                    r.expert_id, r.software_id, r.dimension
                )));
            }
        }
        Ok(RatingSet { records })
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub software_id: String,
    pub qualitative_type: InnovationType,
    /// Agreement percentages indexed by [`Dimension::index`].
    pub values: [f64; 5],
}

impl MatrixRow {
    pub fn value(&self, d: Dimension) -> f64 {
        self.values[d.index()]
    }
}

/// Software × dimension agreement-percentage matrix with a qualitative type per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMatrix {
    rows: Vec<MatrixRow>,
}

impl EvaluationMatrix {
    pub fn new(rows: Vec<MatrixRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        let mut ids = HashSet::new();
        for row in &rows {
            if !ids.insert(row.software_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate software id {:?}",
                    row.software_id
                )));
            }
            for d in Dimension::ALL {
                let v = row.value(d);
                if !(0.0..=100.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "{}/{}: value {v} outside [0, 100]",
                        row.software_id, d
                    )));
                }
            }
        }
        Ok(EvaluationMatrix { rows })
    }

    pub fn rows(&self) -> &[MatrixRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, d: Dimension) -> Vec<f64> {
        self.rows.iter().map(|r| r.value(d)).collect()
    }

    pub fn labels(&self) -> Vec<InnovationType> {
        self.rows.iter().map(|r| r.qualitative_type).collect()
    }

    pub fn software_ids(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.software_id.as_str()).collect()
    }

    /// Same values with each row's qualitative type replaced.
    pub fn with_labels(&self, labels: &[InnovationType]) -> Result<Self> {
        if labels.len() != self.rows.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                self.rows.len()
            )));
        }
        let rows = self
            .rows
            .iter()
            .zip(labels)
            .map(|(r, &t)| MatrixRow {
                qualitative_type: t,
                ..r.clone()
            })
            .collect();
        Ok(EvaluationMatrix { rows })
    }

    /// Same labels with values passed through `f(dimension, value)`; the
    /// result is re-validated.
    pub fn map_values(&self, mut f: impl FnMut(Dimension, f64) -> f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut values = r.values;
                for d in Dimension::ALL {
                    values[d.index()] = f(d, values[d.index()]);
                }
                MatrixRow {
                    values,
                    ..r.clone()
                }
            })
            .collect();
        EvaluationMatrix::new(rows)
    }
}

pub const RATINGS_HEADER: [&str; 4] = ["expert_id", "software", "dimension", "response"];
pub const MATRIX_HEADER: [&str; 7] = [
    "software",
    "type",
    "adaptation",
    "alternative",
    "emulation",
    "new_use",
    "package",
];

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?;
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Reads `expert_id,software,dimension,response` CSV.
pub fn load_ratings<R: Read>(source: R) -> Result<RatingSet> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &RATINGS_HEADER)?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i + 2))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", rec.len())));
        }
        let expert_id = rec[0].to_string();
        let software_id = rec[1].to_string();
        if expert_id.is_empty() || software_id.is_empty() {
            return Err(parse_err("empty expert or software id".into()));
        }
        let dimension: Dimension = rec[2].parse().map_err(parse_err)?;
        let response: LikertResponse = rec[3].parse().map_err(parse_err)?;
        if !seen.insert((expert_id.clone(), software_id.clone(), dimension)) {
            return Err(parse_err(format!(
                "duplicate rating ({expert_id}, {software_id}, {dimension})"
            )));
        }
        records.push(RatingRecord {
            expert_id,
            software_id,
            dimension,
            response,
        });
    }
    Ok(RatingSet { records })
}

/// Reads `software,type,adaptation,alternative,emulation,new_use,package` CSV.
pub fn load_matrix<R: Read>(source: R) -> Result<EvaluationMatrix> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &MATRIX_HEADER)?;
    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i + 2))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != MATRIX_HEADER.len() {
            return Err(parse_err(format!("expected 7 fields, found {}", rec.len())));
        }
        let software_id = rec[0].to_string();
        if software_id.is_empty() {
            return Err(parse_err("empty software id".into()));
        }
        if !ids.insert(software_id.clone()) {
            return Err(parse_err(format!("duplicate software id {software_id:?}")));
        }
        let qualitative_type: InnovationType = rec[1].parse().map_err(parse_err)?;
        let mut values = [0.0; 5];
        for d in Dimension::ALL {
            let raw = &rec[2 + d.index()];
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(format!("{}: not a number: {raw:?}", d)))?;
            if !(0.0..=100.0).contains(&v) {
                return Err(parse_err(format!("{}: value {v} outside [0, 100]", d)));
            }
            values[d.index()] = v;
        }
        rows.push(MatrixRow {
            software_id,
            qualitative_type,
            values,
        });
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    EvaluationMatrix::new(rows)
}

pub const TYPES_HEADER: [&str; 2] = ["software", "type"];

/// Reads `software,type` CSV, the qualitative type of each software.
pub fn load_types<R: Read>(source: R) -> Result<BTreeMap<String, InnovationType>> {
    let mut rdr = reader(source);
    check_header(&mut rdr, &TYPES_HEADER)?;
    let mut types = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, i + 2))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(i + 2);
        let parse_err = |message: String| Error::Parse { line, message };
        if rec.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, found {}", rec.len())));
        }
        let ty: InnovationType = rec[1].parse().map_err(parse_err)?;
        if types.insert(rec[0].to_string(), ty).is_some() {
            return Err(parse_err(format!("duplicate software id {:?}", &rec[0])));
        }
    }
    if types.is_empty() {
        return Err(Error::NoRows);
    }
    Ok(types)
}

/// Writes the matrix CSV. Values use the shortest round-trip decimal form
/// with at least one fractional digit.
pub fn write_matrix<W: Write>(matrix: &EvaluationMatrix, mut out: W) -> Result<()> {
    writeln!(out, "{}", MATRIX_HEADER.join(","))?;
    for row in matrix.rows() {
        write!(
            out,
            "{},{}",
            csv_field(&row.software_id),
            row.qualitative_type.token()
        )?;
        for v in row.values {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const REFERENCE_ROWS: [(&str, InnovationType, [f64; 5]); 25] = {
    use InnovationType::*;
    [
        ("7Zip", FreeAlternative, [38.6, 79.2, 17.4, 33.8, 24.7]),
        (
            "ALSADriver",
            AdaptationPiece,
            [78.7, 42.3, 30.2, 49.2, 39.7],
        ),
        ("BitTorrent", NewUseOriented, [86.8, 28.2, 8.6, 84.6, 13.1]),
        ("DOSBox", Emulator, [81.5, 69.0, 82.7, 48.8, 18.6]),
        ("FileZilla", FreeAlternative, [28.0, 70.4, 11.6, 25.0, 18.8]),
        ("Gimp", FreeAlternative, [75.0, 80.0, 11.5, 47.6, 25.8]),
        ("KNOPPIX", Package, [82.6, 36.4, 25.6, 89.3, 92.8]),
        ("LinuxNTFS", AdaptationPiece, [95.7, 81.3, 57.0, 59.2, 21.7]),
        ("MiKTeX", Package, [55.2, 27.6, 12.5, 55.2, 74.4]),
        ("MinGW", AdaptationPiece, [75.9, 60.0, 49.1, 53.1, 82.5]),
        ("Ncurses", Emulator, [78.4, 31.4, 12.1, 72.5, 22.4]),
        ("Nmap", NewUseOriented, [90.9, 43.3, 9.6, 74.5, 24.2]),
        (
            "PDFCreator",
            FreeAlternative,
            [61.8, 77.2, 21.2, 42.6, 33.3],
        ),
        (
            "PeerGuardian",
            NewUseOriented,
            [46.7, 38.9, 2.4, 40.9, 25.0],
        ),
        ("PHP", NewUseOriented, [67.4, 46.7, 10.3, 70.5, 19.4]),
        ("Pidgin", NewUseOriented, [68.6, 66.7, 24.4, 53.2, 32.8]),
        ("PortableApps", Package, [85.7, 47.2, 30.2, 77.5, 93.5]),
        ("Samba", AdaptationPiece, [98.1, 80.0, 62.0, 66.7, 26.9]),
        ("ScummVM", Emulator, [85.3, 51.4, 81.1, 63.2, 18.2]),
        ("Util-linux", Package, [87.0, 36.7, 10.0, 50.0, 87.8]),
        (
            "VirtualDub",
            FreeAlternative,
            [69.4, 74.4, 18.8, 44.1, 22.2],
        ),
        ("VisualBoyAdvance", Emulator, [80.0, 42.3, 91.8, 58.6, 11.4]),
        ("Wine", AdaptationPiece, [96.3, 78.4, 91.7, 70.7, 27.4]),
        ("XAMPP", Package, [54.3, 44.7, 14.3, 47.4, 76.1]),
        ("ZNES", Emulator, [71.4, 54.5, 92.9, 50.0, 5.9]),
    ]
};

/// The published 25-software agreement matrix (five software per type).
pub fn reference_dataset() -> EvaluationMatrix {
    let rows = REFERENCE_ROWS
        .iter()
        .map(|&(id, ty, values)| MatrixRow {
            software_id: id.to_string(),
            qualitative_type: ty,
            values,
        })
        .collect();
    EvaluationMatrix { rows }
}
