//! Tabular datasets with typed features, label encoding and stratified folds.
//!
//! Parsing text files is the caller's job: this module works on a
//! [`RawTable`] of string cells, which the `treerules` crate fills from CSV.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Header plus string cells, as read from a delimited text file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    /// Observed vocabulary; the position of a value is its integer code.
    /// Always empty for continuous features.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub categories: Vec<String>,
}

impl Feature {
    pub fn continuous(name: impl Into<String>) -> Self {
        Feature { name: name.into(), kind: FeatureKind::Continuous, categories: Vec::new() }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == FeatureKind::Categorical
    }

    pub fn code_of(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Schema {
    /// Feature columns in file order, label excluded.
    pub features: Vec<Feature>,
    pub label: String,
    /// Class index = position in this list.
    pub classes: Vec<String>,
}

impl Schema {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::NoFeatures);
        }
        if self.classes.is_empty() {
            return Err(Error::SchemaMismatch("no classes".to_string()));
        }
        if self.features.iter().any(|f| f.name == self.label) {
            return Err(Error::SchemaMismatch(alloc::format!(
                "label column `{}` also listed as a feature",
                self.label
            )));
        }
        let mut names = BTreeSet::new();
        for f in &self.features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(alloc::format!("duplicate column `{}`", f.name)));
            }
            if f.kind == FeatureKind::Continuous && !f.categories.is_empty() {
                return Err(Error::SchemaMismatch(alloc::format!(
                    "continuous column `{}` has categories",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Stable hash of feature names, kinds and class names. Category
    /// vocabularies are left out because loading may extend them.
    pub fn fingerprint(&self) -> u64 {
        fingerprint_of(&self.features, &self.classes)
    }
}

/// FNV-1a over the structural parts of a feature list and class list.
pub fn fingerprint_of(features: &[Feature], classes: &[String]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(PRIME);
    };
    for f in features {
        eat(f.name.as_bytes());
        eat(match f.kind {
            FeatureKind::Continuous => b"c",
            FeatureKind::Categorical => b"k",
        });
    }
    eat(b"|classes|");
    for c in classes {
        eat(c.as_bytes());
    }
    h
}

fn parse_decimal(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Infer column kinds from string cells.
///
/// A column is continuous iff every non-empty cell parses as a finite
/// decimal number. Category vocabularies and class names are sorted
/// lexicographically.
pub fn infer_schema(table: &RawTable, label: &str) -> Result<Schema> {
    let label_idx = table
        .header
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| Error::MissingLabelColumn(label.to_string()))?;
    if table.header.len() < 2 {
        return Err(Error::NoFeatures);
    }
    if table.rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    check_ragged(table)?;

    let mut features = Vec::with_capacity(table.header.len() - 1);
    for (j, name) in table.header.iter().enumerate() {
        if j == label_idx {
            continue;
        }
        let cells = table.rows.iter().map(|r| r[j].trim()).filter(|c| !c.is_empty());
        let numeric = cells.clone().all(|c| parse_decimal(c).is_some());
        if numeric {
            features.push(Feature::continuous(name.clone()));
        } else {
            let vocab: BTreeSet<&str> = cells.collect();
            features.push(Feature::categorical(name.clone(), vocab));
        }
    }
    let classes: BTreeSet<&str> = table.rows.iter().map(|r| r[label_idx].trim()).collect();
    let schema = Schema {
        features,
        label: label.to_string(),
        classes: classes.into_iter().map(String::from).collect(),
    };
    schema.validate()?;
    Ok(schema)
}

fn check_ragged(table: &RawTable) -> Result<()> {
    let expected = table.header.len();
    for (i, r) in table.rows.iter().enumerate() {
        if r.len() != expected {
            return Err(Error::RaggedRow { row: i + 1, found: r.len(), expected });
        }
    }
    Ok(())
}

/// Instances with `m` feature values each plus a class index.
///
/// Categorical values are stored as their integer code cast to `f64`.
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    schema: Schema,
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    /// Build from already-encoded values. `values` is row-major.
    pub fn new(schema: Schema, values: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        schema.validate()?;
        let m = schema.n_features();
        if values.len() != labels.len() * m {
            return Err(Error::SchemaMismatch(alloc::format!(
                "{} values for {} rows of {} features",
                values.len(),
                labels.len(),
                m
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= schema.n_classes()) {
            return Err(Error::UnknownLabel { row: i + 1, value: y.to_string() });
        }
        for (i, row) in values.chunks(m).enumerate() {
            for (j, f) in schema.features.iter().enumerate() {
                let v = row[j];
                let ok = match f.kind {
                    FeatureKind::Continuous => v.is_finite(),
                    FeatureKind::Categorical => {
                        v >= 0.0 && libm::trunc(v) == v && (v as usize) < f.categories.len()
                    }
                };
                if !ok {
                    return Err(Error::SchemaMismatch(alloc::format!(
                        "row {}, column `{}`: value {} outside domain",
                        i + 1,
                        f.name,
                        v
                    )));
                }
            }
        }
        Ok(Dataset { schema, values, labels })
    }

    /// Materialize a table under `schema`. Unseen categorical values extend
    /// the column vocabulary; unknown labels and unparsable numbers are
    /// errors, as is any empty cell.
    pub fn from_table(table: &RawTable, schema: &Schema) -> Result<Self> {
        schema.validate()?;
        let label_idx = table
            .header
            .iter()
            .position(|h| *h == schema.label)
            .ok_or_else(|| Error::MissingLabelColumn(schema.label.clone()))?;
        let mut col_of = Vec::with_capacity(schema.n_features());
        for f in &schema.features {
            let j = table.header.iter().position(|h| *h == f.name).ok_or_else(|| {
                Error::SchemaMismatch(alloc::format!("column `{}` missing from header", f.name))
            })?;
            col_of.push(j);
        }
        if table.header.len() != schema.n_features() + 1 {
            return Err(Error::SchemaMismatch(alloc::format!(
                "header has {} columns, schema expects {}",
                table.header.len(),
                schema.n_features() + 1
            )));
        }
        check_ragged(table)?;

        let mut schema = schema.clone();
        let m = schema.n_features();
        let mut values = Vec::with_capacity(table.rows.len() * m);
        let mut labels = Vec::with_capacity(table.rows.len());
        for (i, r) in table.rows.iter().enumerate() {
            let row_no = i + 1;
            for (f, &j) in schema.features.iter_mut().zip(&col_of) {
                let cell = r[j].trim();
                if cell.is_empty() {
                    return Err(Error::MissingValue { row: row_no, column: f.name.clone() });
                }
                let v = match f.kind {
                    FeatureKind::Continuous => parse_decimal(cell).ok_or_else(|| Error::NotNumeric {
                        row: row_no,
                        column: f.name.clone(),
                        value: cell.to_string(),
                    })?,
                    FeatureKind::Categorical => match f.code_of(cell) {
                        Some(c) => c as f64,
                        None => {
                            f.categories.push(cell.to_string());
                            (f.categories.len() - 1) as f64
                        }
                    },
                };
                values.push(v);
            }
            let y = r[label_idx].trim();
            let class = schema
                .classes
                .iter()
                .position(|c| c == y)
                .ok_or_else(|| Error::UnknownLabel { row: row_no, value: y.to_string() })?;
            labels.push(class);
        }
        Ok(Dataset { schema, values, labels })
    }

    /// Render back to string cells: features in schema order, label last.
    pub fn to_table(&self) -> RawTable {
        let mut header: Vec<String> = self.schema.features.iter().map(|f| f.name.clone()).collect();
        header.push(self.schema.label.clone());
        let rows = (0..self.n())
            .map(|i| {
                let mut cells: Vec<String> = self
                    .row(i)
                    .iter()
                    .zip(&self.schema.features)
                    .map(|(&v, f)| match f.kind {
                        FeatureKind::Continuous => alloc::format!("{}", v),
                        FeatureKind::Categorical => f.categories[v as usize].clone(),
                    })
                    .collect();
                cells.push(self.schema.classes[self.labels[i]].clone());
                cells
            })
            .collect();
        RawTable { header, rows }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.schema.n_features()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.m();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.m().max(1)).take(self.n())
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Most frequent class, ties to the lowest index.
    pub fn majority_class(&self) -> usize {
        argmax_lowest(&self.class_counts())
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let m = self.m();
        let mut values = Vec::with_capacity(indices.len() * m);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset { schema: self.schema.clone(), values, labels }
    }
}

/// Index of the largest count, lowest index on ties. Zero for empty input.
pub fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Assignment of every row to one of `k` folds, stratified by class.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Deterministic stratified k-fold split.
///
/// Rows of each class are shuffled with a seeded ChaCha stream, the classes
/// are concatenated, and folds are dealt round-robin over the concatenation.
/// Per-class fold sizes therefore differ by at most one.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidParameter(alloc::format!("k must be at least 2, got {k}")));
    }
    let counts = data.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count > 0 && count < k {
            return Err(Error::ClassTooSmall { class, count, k });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; data.n()];
    let mut dealt = 0usize;
    for class in 0..data.n_classes() {
        let mut members: Vec<usize> = (0..data.n()).filter(|&i| data.label(i) == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(FoldPlan { k, assignments, seed })
}
