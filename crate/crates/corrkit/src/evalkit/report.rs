//! Named metric values with units and the pixel count they were computed on.

use crate::error::{Error, Result};
use std::fmt;

/// Unit attached to a metric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricUnit {
    Pixels,
    Percent,
    SceneUnits,
    Dimensionless,
}

impl fmt::Display for MetricUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MetricUnit::Pixels => "px",
            MetricUnit::Percent => "%",
            MetricUnit::SceneUnits => "scene",
            MetricUnit::Dimensionless => "",
        };
        f.write_str(s)
    }
}

/// One evaluated metric: name, value, unit, and the number of pixels or
/// correspondences that entered the computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    name: String,
    value: f64,
    unit: MetricUnit,
    count: usize,
}

impl MetricReport {
    pub fn new(name: impl Into<String>, value: f64, unit: MetricUnit, count: usize) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Evaluation(format!("metric value {value} is not finite")));
        }
        if count == 0 {
            return Err(Error::Evaluation("metric computed over zero samples".into()));
        }
        Ok(Self { name: name.into(), value, unit, count })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn unit(&self) -> MetricUnit {
        self.unit
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Aligned human-readable table, one metric per line.
pub fn format_table(reports: &[MetricReport]) -> String {
    let name_w = reports.iter().map(|r| r.name.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    out.push_str(&format!("{:<name_w$}  {:>14}  {:<6}  {:>10}\n", "metric", "value", "unit", "count"));
    for r in reports {
        out.push_str(&format!(
            "{:<name_w$}  {:>14.6}  {:<6}  {:>10}\n",
            r.name,
            r.value,
            r.unit.to_string(),
            r.count
        ));
    }
    out
}

/// Machine-readable `key=value` lines: `<name>=<value>` plus
/// `<name>.count=<n>`. Values print with enough digits to round-trip.
pub fn format_kv(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!("{}={}\n", r.name, r.value));
        out.push_str(&format!("{}.count={}\n", r.name, r.count));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_guards() {
        assert!(MetricReport::new("epe", f64::NAN, MetricUnit::Pixels, 5).is_err());
        assert!(MetricReport::new("epe", 1.0, MetricUnit::Pixels, 0).is_err());
        let r = MetricReport::new("epe", 0.5, MetricUnit::Pixels, 5).unwrap();
        assert_eq!(r.name(), "epe");
        assert_eq!(r.value(), 0.5);
        assert_eq!(r.count(), 5);
    }

    #[test]
    fn table_and_kv_render() {
        let rs = vec![
            MetricReport::new("epe", 0.25, MetricUnit::Pixels, 100).unwrap(),
            MetricReport::new("bad3", 12.5, MetricUnit::Percent, 100).unwrap(),
        ];
        let table = format_table(&rs);
        assert!(table.contains("epe"));
        assert!(table.contains("bad3"));
        assert!(table.lines().count() == 3);
        let kv = format_kv(&rs);
        assert!(kv.contains("epe=0.25\n"));
        assert!(kv.contains("bad3.count=100\n"));
    }
}
