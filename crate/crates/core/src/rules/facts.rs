use alloc::string::String;
use core::fmt::Write;

use super::CandidateRuleSet;

/// Render `R` and `M` as answer-set facts: `class(k).` for every class,
/// then one line per rule.
pub fn emit_facts(crs: &CandidateRuleSet) -> String {
    emit_facts_for(crs, 0..crs.n_classes())
}

/// As [`emit_facts`], with `class/1` facts only for `classes`.
pub fn emit_facts_for(crs: &CandidateRuleSet, classes: impl IntoIterator<Item = usize>) -> String {
    let mut out = String::new();
    for k in classes {
        let _ = write!(out, "class({k}). ");
    }
    if out.ends_with(' ') {
        out.pop();
        out.push('\n');
    }
    for (r, m) in crs.iter() {
        let x = r.id;
        let _ = write!(out, "rule({x}).");
        for c in &r.body {
            let _ = write!(out, " condition({x},{c}).");
        }
        let _ = writeln!(
            out,
            " support({x},{}). size({x},{}). accuracy({x},{}). error_rate({x},{}). precision({x},{}). recall({x},{}). f1_score({x},{}). predict_class({x},{}).",
            m.support, m.size, m.accuracy, m.error_rate, m.precision, m.recall, m.f1, r.predicted_class
        );
    }
    out
}
