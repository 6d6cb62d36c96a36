use std::fmt::Write as _;

use serde::Serialize;

pub const CSV_HEADER: &str = "config_id,n,policy,analytic_value,mc_mean,mc_ci95,replicates,seed,ratio";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub config_id: String,
    pub n: usize,
    pub policy: String,
    pub analytic_value: Option<f64>,
    pub mc_mean: f64,
    pub mc_ci95: f64,
    pub replicates: usize,
    pub seed: u64,
    /// `mc_mean / analytic_value` when the analytic value is known and positive.
    pub ratio: Option<f64>,
}

impl ReportRow {
    fn key(&self) -> (usize, &str, &str) {
        (self.n, &self.config_id, &self.policy)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn new(mut rows: Vec<ReportRow>) -> Self {
        rows.sort_by(|a, b| a.key().cmp(&b.key()));
        ExperimentReport { rows }
    }

    pub fn row(&self, config_id: &str, policy: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.config_id == config_id && r.policy == policy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&r.config_id),
                r.n,
                csv_field(&r.policy),
                r.analytic_value.map(format_float).unwrap_or_default(),
                format_float(r.mc_mean),
                format_float(r.mc_ci95),
                r.replicates,
                r.seed,
                r.ratio.map(format_float).unwrap_or_default(),
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Ten significant digits, plain notation for moderate magnitudes.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.9999999999 -> 10.000000000)
    let digits = s.chars().filter(char::is_ascii_digit).count();
    let leading_zeros = if magnitude < 0 { (-magnitude) as usize } else { 0 };
    if digits > 10 + leading_zeros && decimals > 0 {
        let d = decimals - 1;
        return format!("{x:.d$}");
    }
    s
}
