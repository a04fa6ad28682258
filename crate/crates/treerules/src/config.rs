//! TOML run configuration.
//!
//! Unknown keys and type errors are collected across the whole file
//! before anything is rejected, so one run reports every bad key.
//! Relative paths are resolved against the configuration file's
//! directory.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use treerules_core::explain::ExplainConfig;
use treerules_core::selection::{
    Arithmetic, DominanceMode, DominanceScope, ObjectiveSpec, ObjectiveTerm, SelectionConfig, ValidityConfig,
};
use treerules_core::ExtractionMode;

use crate::error::{ConfigIssue, Error, Result};
use crate::train::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub label: String,
    /// JSON schema sidecar; inferred from the data when absent.
    pub schema: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { path: None, label: "class".into(), schema: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub mode: ExtractionMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub max_rules_per_class: usize,
    pub min_rules_per_class: usize,
    pub dominance: DominanceMode,
    pub dominance_scope: DominanceScope,
    pub max_total_conditions: Option<u32>,
    /// Preset name, ignored when `terms` is given.
    pub objective: String,
    pub terms: Option<Vec<ObjectiveTerm>>,
    pub arithmetic: Arithmetic,
    pub minimize_overlap: bool,
    pub time_limit_secs: Option<f64>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        let d = SelectionConfig::default();
        SelectionSection {
            max_rules_per_class: d.max_rules_per_class,
            min_rules_per_class: d.min_rules_per_class,
            dominance: d.dominance,
            dominance_scope: d.dominance_scope,
            max_total_conditions: d.max_total_conditions,
            objective: "accuracy-coverage".into(),
            terms: None,
            arithmetic: d.arithmetic,
            minimize_overlap: d.minimize_overlap,
            time_limit_secs: None,
        }
    }
}

/// Overrides applied to `[selection]` for local explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSection {
    pub objective: String,
    pub dominance: DominanceMode,
    /// Use the `[validity]` bounds; off by default.
    pub apply_validity: bool,
}

impl Default for LocalSection {
    fn default() -> Self {
        LocalSection { objective: "precision-coverage".into(), dominance: DominanceMode::Off, apply_validity: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOrder {
    /// Descending precision, ties by ascending rule id.
    #[default]
    Precision,
    RuleId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub rule_order: RuleOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub folds: usize,
    pub outdir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 0, folds: 5, outdir: PathBuf::from("runs"), threads: None }
    }
}

/// Without a `[validity]` table the standard bounds apply; a table, even
/// an empty one, lists exactly the bounds in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub extraction: ExtractionConfig,
    pub validity: ValidityConfig,
    pub selection: SelectionSection,
    pub local: LocalSection,
    pub evaluate: EvaluateSection,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            model: ModelConfig::default(),
            extraction: ExtractionConfig::default(),
            validity: ValidityConfig::standard(),
            selection: SelectionSection::default(),
            local: LocalSection::default(),
            evaluate: EvaluateSection::default(),
            run: RunSection::default(),
        }
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("data", &["path", "label", "schema"]),
    (
        "model",
        &["kind", "n_trees", "max_depth", "min_leaf", "feature_fraction", "bootstrap", "n_rounds", "learning_rate", "l2"],
    ),
    ("extraction", &["mode"]),
    (
        "validity",
        &["max_size", "max_error_rate", "min_precision", "min_recall", "min_support", "min_accuracy", "min_f1"],
    ),
    (
        "selection",
        &[
            "max_rules_per_class",
            "min_rules_per_class",
            "dominance",
            "dominance_scope",
            "max_total_conditions",
            "objective",
            "terms",
            "arithmetic",
            "minimize_overlap",
            "time_limit_secs",
        ],
    ),
    ("local", &["objective", "dominance", "apply_validity"]),
    ("evaluate", &["rule_order"]),
    ("run", &["seed", "folds", "outdir", "threads"]),
];

fn issue(key: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { key: key.into(), message: message.into() }
}

fn section<T: DeserializeOwned + Default>(
    table: &toml::Table,
    name: &str,
    issues: &mut Vec<ConfigIssue>,
) -> T {
    let Some(value) = table.get(name) else { return T::default() };
    let Some(inner) = value.as_table() else {
        issues.push(issue(name, "expected a table"));
        return T::default();
    };
    // Deserialize key by key so each type error names its key.
    let mut good = toml::Table::new();
    let known = KNOWN.iter().find(|(s, _)| *s == name).map_or(&[][..], |(_, k)| *k);
    for (k, v) in inner {
        if !known.contains(&k.as_str()) {
            continue;
        }
        let mut single = toml::Table::new();
        single.insert(k.clone(), v.clone());
        match T::deserialize(toml::Value::Table(single)) {
            Ok(_) => {
                good.insert(k.clone(), v.clone());
            }
            Err(e) => issues.push(issue(format!("{name}.{k}"), e.message().trim().to_string())),
        }
    }
    T::deserialize(toml::Value::Table(good)).unwrap_or_default()
}

impl RunConfig {
    /// Parses TOML text. `base` resolves relative paths.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::Config(vec![issue("<file>", e.message().trim())]))?;
        let mut issues = Vec::new();
        for (k, v) in &table {
            match KNOWN.iter().find(|(s, _)| s == k) {
                None => issues.push(issue(k.as_str(), "unknown section")),
                Some((_, keys)) => {
                    if let Some(t) = v.as_table() {
                        for key in t.keys().filter(|key| !keys.contains(&key.as_str())) {
                            issues.push(issue(format!("{k}.{key}"), "unknown key"));
                        }
                    }
                }
            }
        }
        let mut cfg = RunConfig {
            data: section(&table, "data", &mut issues),
            model: section(&table, "model", &mut issues),
            extraction: section(&table, "extraction", &mut issues),
            validity: if table.contains_key("validity") {
                section(&table, "validity", &mut issues)
            } else {
                ValidityConfig::standard()
            },
            selection: section(&table, "selection", &mut issues),
            local: section(&table, "local", &mut issues),
            evaluate: section(&table, "evaluate", &mut issues),
            run: section(&table, "run", &mut issues),
        };
        if let Some(base) = base {
            cfg.resolve_paths(base);
        }
        if !issues.is_empty() {
            if let Err(Error::Config(more)) = cfg.validate() {
                issues.extend(more);
            }
            return Err(Error::Config(issues));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path.parent())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.data.path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.data.schema.as_mut() {
            fix(p);
        }
        fix(&mut self.run.outdir);
    }

    /// Semantic checks; reports every violated key. Call after applying
    /// command-line overrides.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        for (key, path) in [("data.path", &self.data.path), ("data.schema", &self.data.schema)] {
            if let Some(p) = path {
                if !p.is_file() {
                    issues.push(issue(key, format!("file `{}` does not exist", p.display())));
                }
            }
        }
        if self.data.label.is_empty() {
            issues.push(issue("data.label", "must not be empty"));
        }
        let m = &self.model;
        if m.n_trees == 0 {
            issues.push(issue("model.n_trees", "must be at least 1"));
        }
        if m.max_depth == 0 {
            issues.push(issue("model.max_depth", "must be at least 1"));
        }
        if m.min_leaf == 0 {
            issues.push(issue("model.min_leaf", "must be at least 1"));
        }
        if !(m.feature_fraction > 0.0 && m.feature_fraction <= 1.0) {
            issues.push(issue("model.feature_fraction", "must be in (0, 1]"));
        }
        if m.n_rounds == 0 {
            issues.push(issue("model.n_rounds", "must be at least 1"));
        }
        if !(m.learning_rate > 0.0 && m.learning_rate.is_finite()) {
            issues.push(issue("model.learning_rate", "must be positive"));
        }
        if !(m.l2 >= 0.0 && m.l2.is_finite()) {
            issues.push(issue("model.l2", "must be non-negative"));
        }
        let s = &self.selection;
        if s.max_rules_per_class == 0 {
            issues.push(issue("selection.max_rules_per_class", "must be at least 1"));
        }
        if s.min_rules_per_class == 0 || s.min_rules_per_class > s.max_rules_per_class {
            issues.push(issue("selection.min_rules_per_class", "must be in 1..=max_rules_per_class"));
        }
        match &s.terms {
            Some(t) if t.is_empty() => issues.push(issue("selection.terms", "must not be empty")),
            Some(_) => {}
            None if ObjectiveSpec::preset(&s.objective).is_none() => issues.push(issue(
                "selection.objective",
                format!("unknown preset `{}`; expected one of {}", s.objective, ObjectiveSpec::PRESETS.join(", ")),
            )),
            None => {}
        }
        if ObjectiveSpec::preset(&self.local.objective).is_none() {
            issues.push(issue(
                "local.objective",
                format!("unknown preset `{}`; expected one of {}", self.local.objective, ObjectiveSpec::PRESETS.join(", ")),
            ));
        }
        if let Some(t) = s.time_limit_secs {
            if !(t > 0.0 && t.is_finite()) {
                issues.push(issue("selection.time_limit_secs", "must be positive"));
            }
        }
        if self.run.folds < 2 {
            issues.push(issue("run.folds", "must be at least 2"));
        }
        if self.run.threads == Some(0) {
            issues.push(issue("run.threads", "must be at least 1"));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    fn objective(&self) -> ObjectiveSpec {
        match &self.selection.terms {
            Some(terms) => ObjectiveSpec { terms: terms.clone() },
            None => ObjectiveSpec::preset(&self.selection.objective).unwrap_or_else(ObjectiveSpec::accuracy_coverage),
        }
    }

    pub fn selection_config(&self) -> SelectionConfig {
        let s = &self.selection;
        SelectionConfig {
            validity: self.validity,
            max_rules_per_class: s.max_rules_per_class,
            min_rules_per_class: s.min_rules_per_class,
            dominance: s.dominance,
            dominance_scope: s.dominance_scope,
            max_total_conditions: s.max_total_conditions,
            objective: self.objective(),
            arithmetic: s.arithmetic,
            minimize_overlap: s.minimize_overlap,
            classes: None,
        }
    }

    pub fn global_explain_config(&self) -> ExplainConfig {
        ExplainConfig { mode: self.extraction.mode, selection: self.selection_config() }
    }

    pub fn local_explain_config(&self) -> ExplainConfig {
        let mut selection = self.selection_config();
        selection.objective =
            ObjectiveSpec::preset(&self.local.objective).unwrap_or_else(ObjectiveSpec::precision_coverage);
        selection.dominance = self.local.dominance;
        if !self.local.apply_validity {
            selection.validity = ValidityConfig::none();
        }
        ExplainConfig { mode: ExtractionMode::LeafOnly, selection }
    }

    pub fn time_limit(&self) -> Option<Duration> {
        self.selection.time_limit_secs.map(Duration::from_secs_f64)
    }

    /// Canonical TOML text, used for hashing.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
