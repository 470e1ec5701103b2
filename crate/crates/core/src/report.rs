//! Human-readable estimation tables: one column per fitted model, one row
//! per parameter, plus the fit-measure block.

use crate::estimate::EstimationResult;
use crate::model::{ModelName, UtilitySpec};

/// Footnote attached to every estimation table. The adjusted rho-square here
/// is computed against the equal-shares null; previously published estimates
/// for this survey print different values (0.271 for MNL1 at a final
/// log-likelihood of -1494.71) under an unstated null convention and are not
/// directly comparable.
pub const ADJ_RHO_NOTE: &str = "Note: adjusted rho-square = 1 - (LL - K)/LL0 with the \
equal-shares null LL0 = N*ln(1/2). Previously published estimates for this survey report \
0.271 for MNL1 (LL = -1494.71), which is inconsistent with this null (0.2056); the null \
used there is unstated.";

const PARAM_ROWS: [(&str, &str); 7] = [
    ("Constant (ASC)", "asc"),
    ("Cost", "beta_c"),
    ("Deprivation time", "beta_t"),
    ("Box-Cox parameter", "tau"),
    ("Exponential time", "beta_time"),
    ("Children-time", "delta_cht"),
    ("Std. dev., panel effect", "sigma_xi"),
];

fn cell(result: &EstimationResult, label: &str) -> String {
    let spec = UtilitySpec::for_model(result.spec_name);
    let labels = spec.param_labels();
    match labels.iter().position(|l| *l == label) {
        None => String::new(),
        Some(i) => {
            let est = result.estimates.pack(&spec)[i];
            match result.t_stats[i] {
                Some(t) => format!("{est:.4} ({t:.2})"),
                None => format!("{est:.4} (n/a)"),
            }
        }
    }
}

/// Renders results as an aligned text table with estimate (t-stat) cells,
/// observation counts, log-likelihoods, and adjusted rho-square.
pub fn format_table(results: &[EstimationResult]) -> String {
    let mut ordered: Vec<&EstimationResult> = results.iter().collect();
    ordered.sort_by_key(|r| {
        ModelName::ALL
            .iter()
            .position(|m| *m == r.spec_name)
            .unwrap_or(usize::MAX)
    });

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["Parameter".to_string()];
    header.extend(ordered.iter().map(|r| r.spec_name.to_string()));
    rows.push(header);
    for (title, label) in PARAM_ROWS {
        let mut row = vec![title.to_string()];
        row.extend(ordered.iter().map(|r| cell(r, label)));
        if row[1..].iter().any(|c| !c.is_empty()) {
            rows.push(row);
        }
    }
    let push_stat = |rows: &mut Vec<Vec<String>>, title: &str, f: &dyn Fn(&EstimationResult) -> String| {
        let mut row = vec![title.to_string()];
        row.extend(ordered.iter().map(|r| f(r)));
        rows.push(row);
    };
    push_stat(&mut rows, "Observations", &|r| r.n_obs.to_string());
    push_stat(&mut rows, "Respondents", &|r| r.n_respondents.to_string());
    push_stat(&mut rows, "Final log-likelihood", &|r| {
        format!("{:.2}", r.ll_final)
    });
    push_stat(&mut rows, "Null log-likelihood", &|r| {
        format!("{:.2}", r.ll_null)
    });
    push_stat(&mut rows, "Adjusted rho-square", &|r| {
        format!("{:.4}", r.adj_rho_sq)
    });
    push_stat(&mut rows, "Converged", &|r| r.converged.to_string());

    let n_cols = rows[0].len();
    let widths: Vec<usize> = (0..n_cols)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (n_cols - 1)));
            out.push('\n');
        }
    }
    out.push('\n');
    out.push_str(ADJ_RHO_NOTE);
    out.push('\n');
    out
}
