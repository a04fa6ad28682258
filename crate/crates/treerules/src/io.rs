//! CSV datasets, schema sidecars and inline instances.

use std::fs;
use std::io::Read;
use std::path::Path;

use treerules_core::{Dataset, RawTable, Schema};

use crate::error::{Error, Result};

pub fn read_table(path: &Path) -> Result<RawTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table_from(file).map_err(|source| Error::Csv { path: path.to_path_buf(), source })
}

/// Header plus raw cells; ragged rows are kept so the caller can report
/// them with row numbers.
pub fn read_table_from<R: Read>(reader: R) -> Result<RawTable, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

/// Loads `path`, inferring the schema unless one is given.
pub fn load_dataset(path: &Path, label: &str, schema: Option<&Schema>) -> Result<Dataset> {
    let table = read_table(path)?;
    let inferred;
    let schema = match schema {
        Some(s) => s,
        None => {
            inferred = treerules_core::dataset::infer_schema(&table, label)?;
            &inferred
        }
    };
    Ok(Dataset::from_table(&table, schema)?)
}

pub fn write_table(path: &Path, table: &RawTable) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.header).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_table(path, &data.to_table())
}

pub fn load_schema(path: &Path) -> Result<Schema> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let schema: Schema = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
    schema.validate()?;
    Ok(schema)
}

pub fn save_schema(path: &Path, schema: &Schema) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(schema).expect("schema serializes") + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses `name=value,name=value` into a feature row. Every feature must
/// be given; categorical values must be in the vocabulary.
pub fn parse_instance(spec: &str, schema: &Schema) -> Result<Vec<f64>> {
    let mut row = vec![None; schema.n_features()];
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, value) =
            part.split_once('=').ok_or_else(|| Error::Usage(format!("instance entry `{part}` is not name=value")))?;
        let (name, value) = (name.trim(), value.trim());
        let j = schema
            .feature_index(name)
            .ok_or_else(|| Error::Usage(format!("instance names unknown feature `{name}`")))?;
        let f = &schema.features[j];
        let v = if f.is_categorical() {
            f.code_of(value)
                .ok_or_else(|| Error::Usage(format!("`{value}` is not a known category of `{name}`")))?
                as f64
        } else {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Usage(format!("`{value}` is not a number (feature `{name}`)")))?
        };
        row[j] = Some(v);
    }
    row.into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| Error::Usage(format!("instance is missing feature `{}`", schema.features[j].name))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use treerules_core::Feature;

    #[test]
    fn inline_instance() {
        let schema = Schema {
            features: vec![Feature::continuous("age"), Feature::categorical("job", ["a", "b"])],
            label: "y".into(),
            classes: vec!["0".into(), "1".into()],
        };
        assert_eq!(parse_instance("job=b, age=3.5", &schema).unwrap(), vec![3.5, 1.0]);
        assert!(parse_instance("age=3.5", &schema).is_err());
        assert!(parse_instance("age=x,job=a", &schema).is_err());
        assert!(parse_instance("age=1,job=c", &schema).is_err());
        assert!(parse_instance("height=1,age=1,job=a", &schema).is_err());
    }

    #[test]
    fn ragged_rows_survive_reading() {
        let t = read_table_from("a,b,y\n1,2,x\n3,x\n".as_bytes()).unwrap();
        assert_eq!(t.rows[1].len(), 2);
        let e = treerules_core::dataset::infer_schema(&t, "y").unwrap_err();
        assert!(matches!(e, treerules_core::Error::RaggedRow { row: 2, .. }));
    }
}
