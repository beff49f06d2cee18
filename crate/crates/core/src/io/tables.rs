use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Result;
use crate::inference::{ContrastTest, InferenceReport};
use crate::sim::{ContrastReport, MetricsReport};

/// Six significant digits, fixed notation for moderate magnitudes and
/// scientific otherwise.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p_value: f64,
    pub adjusted_p: f64,
    pub sel_freq: f64,
}

/// One row per coefficient, sorted by ascending p-value (NaN last, ties in
/// coefficient order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

pub const INTERCEPT_LABEL: &str = "(Intercept)";

pub fn result_table(report: &InferenceReport, labels: &[String]) -> ResultTable {
    let mut rows: Vec<ResultRow> = (0..report.beta_hat.len())
        .map(|k| ResultRow {
            label: if k == 0 {
                INTERCEPT_LABEL.to_string()
            } else {
                labels.get(k - 1).cloned().unwrap_or_else(|| format!("X{k}"))
            },
            estimate: report.beta_hat[k],
            se: report.se[k],
            t: report.beta_hat[k] / report.se[k],
            p_value: report.p_values[k],
            adjusted_p: report.bonferroni[k],
            sel_freq: report.selection_freq[k],
        })
        .collect();
    let key = |p: f64| if p.is_nan() { f64::INFINITY } else { p };
    rows.sort_by(|a, b| key(a.p_value).total_cmp(&key(b.p_value)));
    ResultTable { rows }
}

impl ResultTable {
    pub const HEADER: &'static str = "label,estimate,se,t,p_value,adjusted_p,sel_freq";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                quote(&r.label),
                format_sig6(r.estimate),
                format_sig6(r.se),
                format_sig6(r.t),
                format_sig6(r.p_value),
                format_sig6(r.adjusted_p),
                format_sig6(r.sel_freq)
            );
        }
        s
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-coordinate simulation metrics followed by a noise-average row.
/// Coordinates are 1-based; 0 is the intercept.
pub fn metrics_csv(r: &MetricsReport) -> String {
    let f = format_sig6;
    let mut s = String::from("coordinate,kind,truth,bias,se,sd,cov_prob,sel_freq,mse,rejection_rate,k\n");
    for c in &r.coordinates {
        let kind = if c.index == 0 {
            "intercept"
        } else if r.signals.contains(&c.index) {
            "signal"
        } else {
            "noise"
        };
        let _ = writeln!(
            s,
            "{},{kind},{},{},{},{},{},{},{},{},{}",
            c.index,
            f(c.truth),
            f(c.bias),
            f(c.mean_se),
            f(c.sd),
            f(c.coverage),
            f(c.sel_freq),
            f(c.mse),
            f(c.rejection_rate),
            c.k
        );
    }
    let nz = &r.noise;
    let _ = writeln!(
        s,
        "noise-average,noise,0,{},{},{},{},{},,{},{}",
        f(nz.bias),
        f(nz.mean_se),
        f(nz.sd),
        f(nz.coverage),
        f(nz.sel_freq),
        f(nz.rejection_rate),
        r.k_effective
    );
    s
}

/// Scenario-level figures as `key,value` rows.
pub fn summary_csv(r: &MetricsReport) -> String {
    let mut s = String::from("key,value\n");
    let _ = writeln!(s, "scenario,{}", quote(&r.scenario));
    let _ = writeln!(s, "alpha,{}", format_sig6(r.alpha));
    let _ = writeln!(s, "k_requested,{}", r.k_requested);
    let _ = writeln!(s, "k_effective,{}", r.k_effective);
    let _ = writeln!(s, "failures,{}", r.failures.len());
    let _ = writeln!(s, "mse_avg,{}", format_sig6(r.mse_avg));
    let _ = writeln!(s, "noise_rejection_rate,{}", format_sig6(r.noise.rejection_rate));
    let _ = writeln!(s, "noise_rejection_mc_se,{}", format_sig6(r.noise.rejection_mc_se));
    if let Some(a) = r.auc {
        let _ = writeln!(s, "auc,{}", format_sig6(a));
    }
    s
}

pub fn q_mse_csv(points: &[(f64, f64)]) -> String {
    let mut s = String::from("q,mse_avg\n");
    for &(q, m) in points {
        let _ = writeln!(s, "{},{}", format_sig6(q), format_sig6(m));
    }
    s
}

pub fn timing_csv(r: &MetricsReport) -> String {
    let mut s = String::from("replication,wall_seconds\n");
    for (k, t) in r.wall_seconds.iter().enumerate() {
        let _ = writeln!(s, "{k},{}", format_sig6(*t));
    }
    s
}

pub fn contrast_test_csv(t: &ContrastTest, labels: &[String]) -> String {
    let names: Vec<String> = t
        .subset
        .iter()
        .map(|&j| labels.get(j).cloned().unwrap_or_else(|| format!("X{}", j + 1)))
        .collect();
    let mut s = String::from("subset,df,statistic,p_value\n");
    let _ = writeln!(
        s,
        "{},{},{},{}",
        quote(&names.join(" ")),
        t.df,
        format_sig6(t.statistic),
        format_sig6(t.p_value)
    );
    s
}

pub fn contrast_report_csv(r: &ContrastReport) -> String {
    let mut s = String::from("label,df,rejection_rate,mc_se,mean_statistic,k\n");
    for c in &r.rates {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            quote(&c.label),
            c.df,
            format_sig6(c.rejection_rate),
            format_sig6(c.mc_se),
            format_sig6(c.mean_statistic),
            c.k
        );
    }
    s
}

/// Full-precision CSV of the stored response and design (header `y` then
/// the column labels).
pub fn write_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    header.extend(data.labels.iter().cloned());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![data.y[i].to_string()];
        rec.extend((0..data.p()).map(|j| data.x[(i, j)].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::coordinate_inference;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(-0.123456789), "-0.123457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(999999.7), "1e6");
        assert_eq!(format_sig6(1.5e-7), "1.5e-7");
        assert_eq!(format_sig6(0.000012345678), "0.0000123457");
        assert_eq!(format_sig6(f64::NAN), "NaN");
    }

    #[test]
    fn table_is_sorted_by_p_value() {
        let rep = coordinate_inference(&[0.1, 2.0, 0.0, -1.0], &[1.0, 0.25, 1.0, 0.25], 0.05).unwrap();
        let labels = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let t = result_table(&rep, &labels);
        let order: Vec<&str> = t.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(order, vec!["a", "c", INTERCEPT_LABEL, "b"]);
        assert!(t.rows.windows(2).all(|w| w[0].p_value <= w[1].p_value));
        let csv = t.to_csv();
        assert!(csv.starts_with("label,estimate,se,t,p_value,adjusted_p,sel_freq\na,2,0.5,4,"));
    }
}
