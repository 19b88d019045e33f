//! Fixed-width regression tables with significance stars, plus a CSV twin.

use super::FitResult;

/// One rendered column: a fit, or a placeholder note (e.g. empty subsample).
pub struct TableColumn {
    pub label: String,
    pub result: Option<FitResult>,
    pub note: Option<String>,
}

impl TableColumn {
    pub fn of(label: impl Into<String>, result: FitResult) -> Self {
        TableColumn { label: label.into(), result: Some(result), note: None }
    }

    pub fn empty(label: impl Into<String>, note: impl Into<String>) -> Self {
        TableColumn { label: label.into(), result: None, note: Some(note.into()) }
    }
}

/// Display names for the replication tables; unknown terms render as-is.
fn display_name(term: &str) -> String {
    match term {
        "log_income" => "Farm Return".to_string(),
        "days_above_t" => "High Heat Days".to_string(),
        "median_age" => "Median Census Age".to_string(),
        "unemployment_rate" => "Unemployment Rate".to_string(),
        "const" => "Constant".to_string(),
        other => other.to_string(),
    }
}

const LABEL_W: usize = 22;
const CELL_W: usize = 14;

fn fmt_cell(s: &str) -> String {
    format!("{s:>CELL_W$}")
}

fn row_terms(columns: &[TableColumn]) -> Vec<String> {
    let mut terms: Vec<String> = Vec::new();
    for c in columns {
        if let Some(r) = &c.result {
            for coef in &r.coefficients {
                if !terms.contains(&coef.name) {
                    terms.push(coef.name.clone());
                }
            }
        }
    }
    terms
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        ""
    }
}

fn fmt_r2(r: Option<f64>) -> String {
    match r {
        Some(v) => format!("{v:.3}"),
        None => ".".to_string(),
    }
}

/// Renders the fixed-width table: estimate rows with stars, standard errors
/// in parentheses beneath, and an Obs./fixed-effects/R² footer.
pub fn render_table(title: &str, columns: &[TableColumn]) -> String {
    let mut out = String::new();
    let width = LABEL_W + columns.len() * (CELL_W + 1);
    out.push_str(title);
    out.push('\n');
    out.push_str(&"-".repeat(width));
    out.push('\n');
    out.push_str(&format!("{:<LABEL_W$}", ""));
    for c in columns {
        out.push(' ');
        out.push_str(&fmt_cell(&c.label));
    }
    out.push('\n');
    out.push_str(&"-".repeat(width));
    out.push('\n');

    for term in row_terms(columns) {
        let mut est_line = format!("{:<LABEL_W$}", display_name(&term));
        let mut se_line = format!("{:<LABEL_W$}", "");
        for c in columns {
            let cell = c
                .result
                .as_ref()
                .and_then(|r| r.coefficient(&term))
                .map(|coef| {
                    (
                        format!("{:.3}{}", coef.estimate, coef.stars()),
                        format!("({:.3})", coef.se),
                    )
                })
                .unwrap_or_default();
            est_line.push(' ');
            est_line.push_str(&fmt_cell(&cell.0));
            se_line.push(' ');
            se_line.push_str(&fmt_cell(&cell.1));
        }
        out.push_str(&est_line);
        out.push('\n');
        out.push_str(&se_line);
        out.push('\n');
    }

    out.push_str(&"-".repeat(width));
    out.push('\n');
    let footer = |label: &str, f: &dyn Fn(&FitResult) -> String, missing: &dyn Fn(&TableColumn) -> String| {
        let mut line = format!("{label:<LABEL_W$}");
        for c in columns {
            line.push(' ');
            let cell = match &c.result {
                Some(r) => f(r),
                None => missing(c),
            };
            line.push_str(&fmt_cell(&cell));
        }
        line.push('\n');
        line
    };
    out.push_str(&footer(
        "Obs.",
        &|r| r.n_obs.to_string(),
        &|c| c.note.clone().unwrap_or_default(),
    ));
    out.push_str(&footer(
        "County Fixed Effects",
        &|r| yes_no(r.fixed_effects.county).to_string(),
        &|_| String::new(),
    ));
    out.push_str(&footer(
        "Year Fixed Effects",
        &|r| yes_no(r.fixed_effects.year).to_string(),
        &|_| String::new(),
    ));
    out.push_str(&footer("R2", &|r| fmt_r2(r.r_squared), &|_| String::new()));
    if columns.iter().any(|c| c.result.as_ref().is_some_and(|r| r.first_stage_f.is_some())) {
        out.push_str(&footer(
            "First-stage F",
            &|r| r.first_stage_f.map(|f| format!("{f:.1}")).unwrap_or_default(),
            &|_| String::new(),
        ));
    }
    out.push_str(&"-".repeat(width));
    out.push('\n');
    out.push_str("Standard errors in parentheses\n");
    out.push_str("* p<0.10, ** p<0.05, *** p<0.010\n");
    out
}

/// Machine-readable twin of [`render_table`], one row per (column, term).
pub fn table_csv(columns: &[TableColumn]) -> String {
    let mut out = String::from("column,term,estimate,se,t,p,stars,n_obs,r_squared\n");
    for c in columns {
        match &c.result {
            Some(r) => {
                for coef in &r.coefficients {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{}\n",
                        c.label,
                        coef.name,
                        coef.estimate,
                        coef.se,
                        coef.t,
                        coef.p,
                        coef.stars(),
                        r.n_obs,
                        r.r_squared.map(|v| v.to_string()).unwrap_or_else(|| ".".to_string()),
                    ));
                }
            }
            None => {
                out.push_str(&format!(
                    "{},,,,,,,0,{}\n",
                    c.label,
                    c.note.clone().unwrap_or_default()
                ));
            }
        }
    }
    out
}
