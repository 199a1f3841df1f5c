//! Plain-text artifact rendering: CSV tables and pretty-printed JSON.
//!
//! Everything here is a pure function of its input values, so identical
//! runs produce byte-identical files — the determinism the acceptance
//! suite checks by rerunning whole invocations. Floats render through
//! Rust's shortest-roundtrip formatting, which is itself deterministic.

use pwgraph::reconstruct::{ReconstructionTrace, StopReason};

/// `index,eigenvalue` table of a spectrum, full precision.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut out = String::from("index,eigenvalue\n");
    for (j, value) in eigenvalues.iter().enumerate() {
        out.push_str(&format!("{j},{value}\n"));
    }
    out
}

/// `l,k,error,bound,gram_condition` table of a reconstruction trace.
///
/// The error column renders as an empty field when no ground truth was
/// measured — never as a placeholder number.
pub fn trace_csv(trace: &ReconstructionTrace) -> String {
    let mut out = String::from("l,k,error,bound,gram_condition\n");
    for entry in &trace.entries {
        let error = entry.error.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            entry.l, entry.k, error, entry.bound, entry.gram_condition
        ));
    }
    out
}

/// One row of the multi-trial table written by `--parallel-trials`.
pub struct TrialRow {
    pub seed: u64,
    pub gamma: f64,
    pub iterations: usize,
    pub stop_reason: &'static str,
    pub final_error: Option<f64>,
    pub bound_satisfied: Option<bool>,
}

/// `seed,gamma,iterations,stop_reason,final_error,bound_satisfied` table,
/// rows already in seed order. Unmeasured fields render empty.
pub fn trials_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from("seed,gamma,iterations,stop_reason,final_error,bound_satisfied\n");
    for row in rows {
        let final_error = row.final_error.map(|e| e.to_string()).unwrap_or_default();
        let bound = row
            .bound_satisfied
            .map(|b| b.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.seed, row.gamma, row.iterations, row.stop_reason, final_error, bound
        ));
    }
    out
}

/// Stable snake_case name of a stop reason, matching its JSON form.
pub fn stop_reason_name(reason: &StopReason) -> &'static str {
    match reason {
        StopReason::BudgetExhausted => "budget_exhausted",
        StopReason::IllConditioned => "ill_conditioned",
        StopReason::ErrorFloor => "error_floor",
    }
}

/// Pretty-printed JSON document with a trailing newline. Field order
/// follows the struct declaration, so the schema is stable across runs.
pub fn json_document<T: serde::Serialize>(value: &T) -> String {
    let mut text =
        serde_json::to_string_pretty(value).expect("artifact types serialize without error");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use pwgraph::reconstruct::TraceEntry;

    fn sample_trace(with_errors: bool) -> ReconstructionTrace {
        ReconstructionTrace {
            omega: 0.25,
            eps: 0.1,
            lambda: 2.0,
            gamma: 0.7,
            entries: vec![
                TraceEntry {
                    l: 0,
                    k: 1,
                    error: with_errors.then_some(0.125),
                    bound: 1.4,
                    gram_condition: 450.0,
                },
                TraceEntry {
                    l: 1,
                    k: 2,
                    error: with_errors.then_some(0.03125),
                    bound: 0.98,
                    gram_condition: 202500.0,
                },
            ],
            stop_reason: StopReason::BudgetExhausted,
        }
    }

    #[test]
    fn spectrum_table_has_fixed_header_and_one_row_per_eigenvalue() {
        let csv = spectrum_csv(&[0.0, 0.5, 2.0]);
        assert_eq!(csv, "index,eigenvalue\n0,0\n1,0.5\n2,2\n");
    }

    #[test]
    fn trace_table_renders_measured_errors() {
        let csv = trace_csv(&sample_trace(true));
        assert_eq!(
            csv,
            "l,k,error,bound,gram_condition\n\
             0,1,0.125,1.4,450\n\
             1,2,0.03125,0.98,202500\n"
        );
    }

    #[test]
    fn missing_ground_truth_leaves_the_error_field_empty() {
        let csv = trace_csv(&sample_trace(false));
        assert_eq!(
            csv,
            "l,k,error,bound,gram_condition\n\
             0,1,,1.4,450\n\
             1,2,,0.98,202500\n"
        );
    }

    #[test]
    fn trial_table_renders_optional_fields_empty() {
        let rows = [
            TrialRow {
                seed: 7,
                gamma: 0.7,
                iterations: 3,
                stop_reason: "ill_conditioned",
                final_error: Some(2.5e-5),
                bound_satisfied: Some(true),
            },
            TrialRow {
                seed: 8,
                gamma: 0.7,
                iterations: 2,
                stop_reason: "budget_exhausted",
                final_error: None,
                bound_satisfied: None,
            },
        ];
        let csv = trials_csv(&rows);
        assert_eq!(
            csv,
            "seed,gamma,iterations,stop_reason,final_error,bound_satisfied\n\
             7,0.7,3,ill_conditioned,0.000025,true\n\
             8,0.7,2,budget_exhausted,,\n"
        );
    }

    #[test]
    fn stop_reasons_match_their_serialized_names() {
        for (reason, name) in [
            (StopReason::BudgetExhausted, "budget_exhausted"),
            (StopReason::IllConditioned, "ill_conditioned"),
            (StopReason::ErrorFloor, "error_floor"),
        ] {
            assert_eq!(stop_reason_name(&reason), name);
            let json = serde_json::to_string(&reason).unwrap();
            assert_eq!(json, format!("\"{name}\""));
        }
    }

    #[test]
    fn json_documents_end_with_a_newline_and_are_reproducible() {
        let trace = sample_trace(true);
        let a = json_document(&trace);
        let b = json_document(&trace);
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
        assert!(a.starts_with("{\n  \"omega\": 0.25"));
    }
}
