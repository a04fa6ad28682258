//! Cached candidate rule sets, so `select` and `export-asp` can run
//! without re-extracting.

use std::path::Path;

use serde::{Deserialize, Serialize};
use treerules_core::CandidateRuleSet;

use crate::error::{Error, Result};
use crate::io::{read_text, write_text};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    format_version: u32,
    candidates: CandidateRuleSet,
}

pub fn to_json(crs: &CandidateRuleSet) -> String {
    serde_json::to_string_pretty(&CandidateFile { format_version: 1, candidates: crs.clone() })
        .expect("candidate set serializes")
        + "\n"
}

pub fn from_json(text: &str) -> Result<CandidateRuleSet, String> {
    let f: CandidateFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if f.format_version != 1 {
        return Err(format!("unsupported format_version {}", f.format_version));
    }
    f.candidates.check().map_err(|e| e.to_string())?;
    Ok(f.candidates)
}

pub fn save_candidates(path: &Path, crs: &CandidateRuleSet) -> Result<()> {
    write_text(path, &to_json(crs))
}

pub fn load_candidates(path: &Path) -> Result<CandidateRuleSet> {
    from_json(&read_text(path)?).map_err(|e| Error::format(path, e))
}
