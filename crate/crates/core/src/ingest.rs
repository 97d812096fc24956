//! CSV ingestion: column drops, first-appearance recoding and the
//! per-column category cap.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{CategoricalDataset, MAX_CARDINALITY};
use crate::error::{Error, Result};

/// Source tokens per attribute; the token at position `c` encodes to code `c`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecodeMap {
    pub attributes: Vec<Vec<String>>,
}

impl RecodeMap {
    /// Source token of `code` at attribute `a`.
    pub fn token(&self, a: usize, code: u8) -> Option<&str> {
        self.attributes
            .get(a)?
            .get(code as usize)
            .map(String::as_str)
    }

    pub fn decode_row(&self, row: &[u8]) -> Option<Vec<&str>> {
        row.iter()
            .enumerate()
            .map(|(a, &c)| self.token(a, c))
            .collect()
    }

    /// Identity map `"0", "1", ...` for generated data.
    pub fn numeric(cardinalities: &[usize]) -> Self {
        RecodeMap {
            attributes: cardinalities
                .iter()
                .map(|&c| (0..c).map(|v| v.to_string()).collect())
                .collect(),
        }
    }

    pub fn check(&self, dataset: &CategoricalDataset) -> Result<()> {
        if self.attributes.len() != dataset.m() {
            return Err(Error::Malformed(format!(
                "recode map has {} attributes, dataset has {}",
                self.attributes.len(),
                dataset.m()
            )));
        }
        for (a, (tokens, &card)) in self
            .attributes
            .iter()
            .zip(dataset.cardinalities())
            .enumerate()
        {
            if tokens.len() != card {
                return Err(Error::Malformed(format!(
                    "attribute {a}: {} tokens for cardinality {card}",
                    tokens.len()
                )));
            }
            let mut seen = std::collections::HashSet::new();
            if let Some(dup) = tokens.iter().find(|t| !seen.insert(t.as_str())) {
                return Err(Error::Malformed(format!(
                    "attribute {a}: duplicate token '{dup}'"
                )));
            }
        }
        Ok(())
    }
}

/// When a column counts as having too many categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "limit", rename_all = "kebab-case")]
pub enum CardinalityCap {
    /// Drop when the distinct count is strictly greater than the limit.
    Above(usize),
    /// Drop when the distinct count is greater than or equal to the limit.
    AtOrAbove(usize),
}

impl CardinalityCap {
    /// Largest distinct count that is kept.
    pub fn max_kept(self) -> usize {
        match self {
            CardinalityCap::Above(l) => l,
            CardinalityCap::AtOrAbove(l) => l.saturating_sub(1),
        }
        .min(MAX_CARDINALITY)
    }
}

impl Default for CardinalityCap {
    fn default() -> Self {
        CardinalityCap::Above(MAX_CARDINALITY)
    }
}

/// A named preprocessing recipe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    /// 1-based source column indices to remove.
    pub drop_columns: Vec<usize>,
    pub cap: CardinalityCap,
    pub has_header: bool,
}

/// Built-in profiles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileName {
    UsCensus,
    Kdd99,
    Puf,
    Generic,
}

impl ProfileName {
    pub const ALL: [ProfileName; 4] = [
        ProfileName::UsCensus,
        ProfileName::Kdd99,
        ProfileName::Puf,
        ProfileName::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileName::UsCensus => "us-census",
            ProfileName::Kdd99 => "kdd99",
            ProfileName::Puf => "puf",
            ProfileName::Generic => "generic",
        }
    }

    pub fn profile(self) -> DatasetProfile {
        let (drop_columns, cap, has_header) = match self {
            // USCensus1990 ships with a header; its first column is a case id.
            ProfileName::UsCensus => (vec![1], CardinalityCap::default(), true),
            // kddcup.data has no header.
            ProfileName::Kdd99 => (
                vec![1, 5, 6, 13, 14, 32, 33],
                CardinalityCap::AtOrAbove(256),
                false,
            ),
            ProfileName::Puf => (vec![], CardinalityCap::default(), false),
            ProfileName::Generic => (vec![], CardinalityCap::default(), true),
        };
        DatasetProfile {
            name: self.as_str().to_string(),
            drop_columns,
            cap,
            has_header,
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown profile '{s}'")))
    }
}

impl DatasetProfile {
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for &c in &self.drop_columns {
            if c == 0 {
                return Err(Error::InvalidConfig(
                    "drop column indices are 1-based".into(),
                ));
            }
            if !seen.insert(c) {
                return Err(Error::InvalidConfig(format!(
                    "drop column {c} listed twice"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum DropReason {
    Profile,
    Cardinality { distinct: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedColumn {
    /// 1-based source column index.
    pub column: usize,
    pub name: String,
    #[serde(flatten)]
    pub reason: DropReason,
}

/// Which source columns were removed and why, plus where the kept ones went.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub source_columns: usize,
    pub rows: usize,
    pub dropped: Vec<DroppedColumn>,
    /// 1-based source column index of each kept attribute, in order.
    pub kept: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub delimiter: u8,
    /// Overrides the profile's header setting when set.
    pub has_header: Option<bool>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            delimiter: b',',
            has_header: None,
        }
    }
}

/// Result of ingesting one file.
#[derive(Clone, Debug)]
pub struct Ingested {
    pub dataset: CategoricalDataset,
    pub recode: RecodeMap,
    pub report: DropReport,
}

#[derive(Default)]
struct ColumnCoder {
    tokens: HashMap<String, u8>,
    order: Vec<String>,
    overflow: bool,
}

/// Reads delimiter-separated text from a file.
pub fn ingest_csv(path: &Path, profile: &DatasetProfile, opts: &IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), profile, opts)
}

/// Reads delimiter-separated text. Codes are assigned in order of first
/// appearance; columns whose distinct count breaks the profile's cap are
/// removed after the pass.
pub fn ingest_reader<R: Read>(
    reader: R,
    profile: &DatasetProfile,
    opts: &IngestOptions,
) -> Result<Ingested> {
    profile.validate()?;
    let has_header = opts.has_header.unwrap_or(profile.has_header);
    let max_kept = profile.cap.max_kept();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut width: Option<usize> = None;
    let mut names: Vec<String> = Vec::new();
    let mut line = 0u64;
    if has_header {
        if let Some(rec) = records.next() {
            let rec = rec?;
            line += 1;
            width = Some(rec.len());
            names = rec.iter().map(|s| s.trim().to_string()).collect();
        }
    }

    let mut keep: Vec<usize> = Vec::new(); // 0-based source columns surviving the profile
    let mut coders: Vec<ColumnCoder> = Vec::new();
    let mut cells: Vec<u8> = Vec::new();
    let mut rows = 0usize;
    for rec in records {
        let rec = rec?;
        line += 1;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::RaggedRow {
                row: line,
                expected: w,
                found: rec.len(),
            });
        }
        if keep.is_empty() && coders.is_empty() {
            keep = (0..w)
                .filter(|c| !profile.drop_columns.contains(&(c + 1)))
                .collect();
            coders = keep.iter().map(|_| ColumnCoder::default()).collect();
        }
        for (coder, &c) in coders.iter_mut().zip(&keep) {
            let tok = &rec[c];
            let code = match coder.tokens.get(tok) {
                Some(&code) => code,
                None if coder.order.len() < max_kept => {
                    let code = coder.order.len() as u8;
                    coder.tokens.insert(tok.to_string(), code);
                    coder.order.push(tok.to_string());
                    code
                }
                // Doomed column: its cells are never read, only its distinct count.
                None => {
                    coder.overflow = true;
                    coder.tokens.insert(tok.to_string(), 0);
                    0
                }
            };
            cells.push(code);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::NoRows);
    }
    let width = width.unwrap_or(0);
    if names.len() != width {
        names = (1..=width).map(|c| format!("col{c}")).collect();
    }

    let mut report = DropReport {
        source_columns: width,
        rows,
        ..DropReport::default()
    };
    let mut keep_mask = vec![false; width];
    for &c in &keep {
        keep_mask[c] = true;
    }
    for (c, name) in names.iter().enumerate() {
        if !keep_mask[c] && c < width {
            report.dropped.push(DroppedColumn {
                column: c + 1,
                name: name.clone(),
                reason: DropReason::Profile,
            });
        }
    }
    let mut final_cols = Vec::new();
    for (slot, (coder, &c)) in coders.iter().zip(&keep).enumerate() {
        if coder.overflow {
            report.dropped.push(DroppedColumn {
                column: c + 1,
                name: names[c].clone(),
                reason: DropReason::Cardinality {
                    distinct: coder.tokens.len(),
                },
            });
        } else {
            final_cols.push(slot);
            report.kept.push(c + 1);
        }
    }
    report.dropped.sort_by_key(|d| d.column);
    if final_cols.is_empty() {
        return Err(Error::NoUsableColumns);
    }

    let stride = keep.len();
    let codes: Vec<u8> = if final_cols.len() == stride {
        cells
    } else {
        cells
            .chunks_exact(stride)
            .flat_map(|r| final_cols.iter().map(move |&s| r[s]))
            .collect()
    };
    let cardinalities = final_cols.iter().map(|&s| coders[s].order.len()).collect();
    let attribute_names = final_cols.iter().map(|&s| names[keep[s]].clone()).collect();
    let recode = RecodeMap {
        attributes: final_cols
            .iter()
            .map(|&s| coders[s].order.clone())
            .collect(),
    };
    let dataset = CategoricalDataset::new(codes, cardinalities, attribute_names)?;
    Ok(Ingested {
        dataset,
        recode,
        report,
    })
}
