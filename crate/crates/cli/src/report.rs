//! Evaluation report: per-LF rows, dataset means, CSV/JSON/table output.

use std::fmt::Write as _;

use serde::{Serialize, Serializer};
use serde_json::json;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    /// Method label, e.g. `model`, `bicubic` or `oracle`.
    pub method: String,
    pub scale: usize,
    pub rows: Vec<MetricRow>,
    /// Mean PSNR over rows with finite PSNR; `inf` if there are none.
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    /// Rows left out of `mean_psnr` because their PSNR is infinite.
    pub inf_excluded: usize,
    pub parameters: Option<usize>,
    pub config: String,
    pub wall_ms: u128,
}

/// Finite values as numbers, infinities as the strings `inf` / `-inf`.
fn score<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&fmt_value(*v))
    }
}

#[derive(Serialize)]
struct RowOut<'a> {
    name: &'a str,
    #[serde(serialize_with = "score")]
    psnr: f64,
    #[serde(serialize_with = "score")]
    ssim: f64,
}

/// Shortest round-trip text for finite values, `inf` otherwise.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn parse_value(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

impl MetricsReport {
    pub fn new(method: impl Into<String>, scale: usize, rows: Vec<MetricRow>) -> Self {
        let finite: Vec<f64> = rows.iter().map(|r| r.psnr).filter(|p| p.is_finite()).collect();
        let inf_excluded = rows.len() - finite.len();
        let mean_psnr = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        let mean_ssim = if rows.is_empty() { f64::NAN } else { rows.iter().map(|r| r.ssim).sum::<f64>() / rows.len() as f64 };
        MetricsReport {
            method: method.into(),
            scale,
            rows,
            mean_psnr,
            mean_ssim,
            inf_excluded,
            parameters: None,
            config: String::new(),
            wall_ms: 0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,psnr,ssim\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.name, fmt_value(r.psnr), fmt_value(r.ssim));
        }
        let _ = writeln!(s, "mean,{},{}", fmt_value(self.mean_psnr), fmt_value(self.mean_ssim));
        s
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| RowOut { name: &r.name, psnr: r.psnr, ssim: r.ssim })
            .collect();
        let mean = RowOut { name: "mean", psnr: self.mean_psnr, ssim: self.mean_ssim };
        let value = json!({
            "method": self.method,
            "scale": self.scale,
            "rows": rows,
            "mean": mean,
            "inf_excluded": self.inf_excluded,
            "parameters": self.parameters,
            "config": self.config,
            "wall_ms": self.wall_ms as u64,
        });
        serde_json::to_string_pretty(&value).expect("report serializes") + "\n"
    }

    /// Human-readable table with `PSNR/SSIM` cells at 2/3 decimals.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
        let cell = |p: f64, s: f64| {
            let p = if p.is_finite() { format!("{p:.2}") } else { fmt_value(p) };
            format!("{p}/{s:.3}")
        };
        let mut t = String::new();
        let _ = writeln!(t, "{:<width$}  PSNR/SSIM (x{}, {})", "LF", self.scale, self.method);
        for r in &self.rows {
            let _ = writeln!(t, "{:<width$}  {}", r.name, cell(r.psnr, r.ssim));
        }
        let mark = if self.inf_excluded > 0 { " *" } else { "" };
        let _ = writeln!(t, "{:<width$}  {}{mark}", "mean", cell(self.mean_psnr, self.mean_ssim));
        if self.inf_excluded > 0 {
            let _ = writeln!(t, "* {} row(s) with infinite PSNR excluded from the PSNR mean", self.inf_excluded);
        }
        if let Some(n) = self.parameters {
            let _ = writeln!(t, "parameters: {n}");
        }
        let _ = writeln!(t, "wall time: {} ms", self.wall_ms);
        t
    }
}
