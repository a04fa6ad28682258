use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::objective::{Direction, Metric};
use super::{DominanceMode, DominanceScope, SelectionConfig};
use crate::rules::{emit_facts_for, CandidateRuleSet};

fn weight(metric: Metric) -> (&'static str, &'static str, &'static str) {
    // (weight term, tuple variable, condition list)
    match metric {
        Metric::Accuracy => ("A", "X", "selected(X), accuracy(X,A)"),
        Metric::Support => ("S", "X", "selected(X), support(X,S)"),
        Metric::Size => ("L", "X", "selected(X), size(X,L)"),
        Metric::Precision => ("P", "X", "selected(X), precision(X,P)"),
        Metric::Recall => ("R", "X", "selected(X), recall(X,R)"),
        Metric::AvgAccPerSize => ("Ai/(S*SR)", "I", "selected(I), size(I,S), accuracy(I,Ai), selected_rules(SR)"),
        Metric::AvgPrecPerSize => ("Pi/(S*SR)", "I", "selected(I), size(I,S), precision(I,Pi), selected_rules(SR)"),
        Metric::SupportPerSize => ("Sp/S", "I", "selected(I), size(I,S), support(I,Sp)"),
        Metric::RecallPerSize => ("R/S", "I", "selected(I), size(I,S), recall(I,R)"),
        Metric::Overlap => ("Cn", "X", "selected(X), selected(Y), rule_overlap(X,Y,Cn)"),
    }
}

/// Self-contained answer-set program equivalent to `solve(crs, cfg)`:
/// facts, generator, validity, dominance, collective limit and optimize
/// statements. The output is a pure function of the inputs.
pub fn emit_asp_program(crs: &CandidateRuleSet, cfg: &SelectionConfig) -> String {
    let classes: Vec<usize> = match &cfg.classes {
        Some(c) => {
            let mut c = c.clone();
            c.sort_unstable();
            c.dedup();
            c
        }
        None => (0..crs.n_classes()).collect(),
    };
    let mut out = emit_facts_for(crs, classes);
    out.push('\n');
    let _ = writeln!(
        out,
        "{} {{ selected(X) : predict_class(X,K), valid(X) }} {} :- class(K).",
        cfg.min_rules_per_class, cfg.max_rules_per_class
    );
    out.push_str("valid(X) :- rule(X), not invalid(X).\n");
    for (kind, bound) in cfg.validity.active() {
        let (pred, var) = kind.predicate();
        let rel = if kind.is_upper() { ">" } else { "<" };
        let _ = writeln!(out, "invalid(I) :- {pred}(I,{var}), {var} {rel} {bound}, rule(I).");
    }

    if cfg.dominance == DominanceMode::AccSupport {
        let same = match cfg.dominance_scope {
            DominanceScope::SameClass => " predict_class(X,K), predict_class(Y,K),",
            DominanceScope::AllValid => "",
        };
        out.push_str("\n:- dominated.\n");
        let _ = writeln!(
            out,
            "gt_acc_geq_cov(Y) :- selected(X), valid(Y),{same}\n    accuracy(X,Ax), accuracy(Y,Ay), support(X,Spx), support(Y,Spy),\n    Ax < Ay, Spx <= Spy."
        );
        let _ = writeln!(
            out,
            "geq_acc_gt_cov(Y) :- selected(X), valid(Y),{same}\n    accuracy(X,Ax), accuracy(Y,Ay), support(X,Spx), support(Y,Spy),\n    Ax <= Ay, Spx < Spy."
        );
        out.push_str("dominated :- valid(Y), gt_acc_geq_cov(Y).\n");
        out.push_str("dominated :- valid(Y), geq_acc_gt_cov(Y).\n");
    }

    if let Some(t) = cfg.max_total_conditions {
        let _ = writeln!(out, "\n:- #sum {{ S,X : size(X,S), selected(X) }} > {t}.");
    }

    let spec = cfg.effective_objective();
    out.push('\n');
    if spec.uses_rule_count() {
        out.push_str("selected_rules(SR) :- SR = #count { I : selected(I) }, SR != 0.\n");
    }
    if spec.has_overlap() {
        out.push_str("rule_overlap(X,Y,Cn) :- selected(X), selected(Y), X!=Y,\n    Cn = #count { Cx : Cx=Cy, condition(X,Cx), condition(Y,Cy) }.\n");
    }
    for t in &spec.terms {
        let (w, var, body) = weight(t.metric);
        let stmt = match t.direction {
            Direction::Max => "#maximize",
            Direction::Min => "#minimize",
        };
        let prio = if t.priority != 0 { alloc::format!("@{}", t.priority) } else { String::new() };
        let _ = writeln!(out, "{stmt} {{ {w}{prio},{var} : {body} }}.");
    }
    out.push_str("\n#show selected/1.\n");
    out
}
