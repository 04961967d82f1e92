use std::fmt;

use crate::config::MdfnConfig;
use crate::model::param_specs;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamRow {
    pub name: String,
    pub shape: Vec<usize>,
    pub count: usize,
}

/// Layer-by-layer scalar parameter counts.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamReport {
    pub rows: Vec<ParamRow>,
    pub total: usize,
}

pub fn count_parameters(cfg: &MdfnConfig) -> ParamReport {
    let rows: Vec<ParamRow> = param_specs(cfg)
        .into_iter()
        .map(|s| ParamRow { count: s.count(), name: s.name, shape: s.shape })
        .collect();
    let total = rows.iter().map(|r| r.count).sum();
    ParamReport { rows, total }
}

impl ParamReport {
    /// Totals grouped by the name prefix before the last `.`-component,
    /// i.e. one entry per layer.
    pub fn by_layer(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for r in &self.rows {
            let layer = r.name.rsplit_once('.').map_or(r.name.as_str(), |p| p.0).to_string();
            match out.last_mut() {
                Some((name, n)) if *name == layer => *n += r.count,
                _ => out.push((layer, r.count)),
            }
        }
        out
    }
}

impl fmt::Display for ParamReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(5);
        writeln!(f, "{:<width$}  {:<16}  {:>9}", "param", "shape", "count")?;
        for r in &self.rows {
            let shape = format!("{:?}", r.shape);
            writeln!(f, "{:<width$}  {:<16}  {:>9}", r.name, shape, r.count)?;
        }
        write!(f, "{:<width$}  {:<16}  {:>9}", "total", "", self.total)
    }
}
