//! Self-describing evaluation reports and their renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A named line for the chart rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub parameters: BTreeMap<String, Value>,
    /// Column names of the per-item table.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub aggregates: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub provenance: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<(String, String)>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".to_string(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.6}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl EvalReport {
    pub fn new(task: impl Into<String>) -> Self {
        EvalReport {
            task: task.into(),
            ..EvalReport::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn aggregate(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.aggregates
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn aggregate_f64(&self, key: &str) -> Option<f64> {
        self.aggregates.get(key).and_then(Value::as_f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Aligned columns for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task);
        for (k, v) in &self.parameters {
            let _ = writeln!(s, "  {k}: {}", cell(v));
        }
        if !self.columns.is_empty() {
            let table: Vec<Vec<String>> = std::iter::once(self.columns.clone())
                .chain(self.rows.iter().map(|r| r.iter().map(cell).collect()))
                .collect();
            let widths: Vec<usize> = (0..self.columns.len())
                .map(|j| table.iter().map(|r| r.get(j).map_or(0, |c| c.chars().count())).max().unwrap_or(0))
                .collect();
            s.push('\n');
            for row in &table {
                let line: Vec<String> = row
                    .iter()
                    .enumerate()
                    .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
                    .collect();
                let _ = writeln!(s, "{}", line.join("  ").trim_end());
            }
        }
        if !self.aggregates.is_empty() {
            s.push('\n');
            for (k, v) in &self.aggregates {
                let _ = writeln!(s, "{k}: {}", cell(v));
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.columns.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        for r in &self.rows {
            let line: Vec<String> = r
                .iter()
                .map(|v| match v {
                    Value::Null => String::new(),
                    Value::String(x) => csv_field(x),
                    other => other.to_string(),
                })
                .collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    /// Line chart of [`EvalReport::series`].
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        let pad = ((y1 - y0) * 0.1).max(1e-3);
        y0 -= pad;
        y1 += pad;
        let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            w / 2.0,
            xml_escape(&self.task)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#,
            h - m,
            w - m,
            h - m,
            h - m
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text><text x="{}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
                px(fx),
                h - m + 18.0,
                trim_num(fx),
                m - 6.0,
                py(fy) + 4.0,
                fy
            );
        }
        if let Some((xl, yl)) = &self.axes {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
                w / 2.0,
                h - 16.0,
                xml_escape(xl),
                h / 2.0,
                h / 2.0,
                xml_escape(yl)
            );
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = colors[i % colors.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                path.join(" ")
            );
            for p in &path {
                let (cx, cy) = p.split_once(',').unwrap();
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
            }
            let ly = m + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                w - m - 90.0,
                w - m - 70.0,
                w - m - 64.0,
                ly + 4.0,
                xml_escape(&series.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn trim_num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> EvalReport {
        let mut r = EvalReport::new("smoothness");
        r.param("method", "tsgns");
        r.columns = vec!["word".into(), "100%".into(), "60%".into()];
        r.rows = vec![vec![json!("mirage"), json!(0.942), json!(0.903)]];
        r.aggregate("spearman", 1.0);
        r.series = vec![Series {
            name: "tsgns".into(),
            points: vec![(100.0, 0.94), (60.0, 0.90)],
        }];
        r.axes = Some(("overlap (%)".into(), "mean cosine".into()));
        r
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(EvalReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn renderings() {
        let r = sample();
        assert_eq!(r.to_csv(), "word,100%,60%\nmirage,0.942,0.903\n");
        let text = r.to_text();
        assert!(text.contains("mirage  0.942000  0.903000"));
        let svg = r.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("polyline"));
    }
}
