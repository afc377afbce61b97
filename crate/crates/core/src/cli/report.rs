//! Quantile tables and a static SVG of experiment results.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::experiments::{quantile, AdjustmentMethod, ResultsTable};

pub const QUANTILES: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

#[derive(Clone, Debug, PartialEq)]
pub struct QuantileRow {
    /// `mse` or `stability`.
    pub kind: &'static str,
    pub method: AdjustmentMethod,
    /// Test set for `mse` rows.
    pub test_index: Option<usize>,
    pub q: [f64; 5],
}

fn quantiles(values: &[f64]) -> [f64; 5] {
    QUANTILES.map(|q| quantile(values, q))
}

pub fn quantile_table(table: &ResultsTable) -> Vec<QuantileRow> {
    let methods: Vec<AdjustmentMethod> =
        AdjustmentMethod::ALL.into_iter().filter(|m| table.records.iter().any(|r| r.method == *m)).collect();
    let max_test = table.records.iter().map(|r| r.test_index).max().unwrap_or(0);
    let mut rows = Vec::new();
    for &m in &methods {
        for k in 1..=max_test {
            let v = table.mse_of(m, k);
            if !v.is_empty() {
                rows.push(QuantileRow { kind: "mse", method: m, test_index: Some(k), q: quantiles(&v) });
            }
        }
    }
    for &m in &methods {
        rows.push(QuantileRow { kind: "stability", method: m, test_index: None, q: quantiles(&table.stability_of(m)) });
    }
    rows
}

pub fn write_quantiles(path: &Path, rows: &[QuantileRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "method", "test_index", "q10", "q25", "q50", "q75", "q90"])?;
    for r in rows {
        let mut rec = vec![
            r.kind.to_string(),
            r.method.to_string(),
            r.test_index.map(|k| k.to_string()).unwrap_or_default(),
        ];
        rec.extend(r.q.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

const PANEL_W: f64 = 240.0;
const PANEL_H: f64 = 200.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 30.0;
const GAP: f64 = 20.0;

struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn of<'a>(rows: impl Iterator<Item = &'a QuantileRow>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in rows {
            lo = lo.min(r.q[0]);
            hi = hi.max(r.q[4]);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Scale { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        let pad = 0.05 * (hi - lo);
        Scale { lo: lo - pad, hi: hi + pad }
    }

    fn y(&self, v: f64) -> f64 {
        MARGIN_T + PANEL_H * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }
}

fn panel(svg: &mut String, x0: f64, title: &str, boxes: &[(String, [f64; 5])], scale: &Scale) {
    let _ = writeln!(svg, r#"<g transform="translate({x0:.1},0)">"#);
    let _ = writeln!(svg, r##"<rect x="0" y="{MARGIN_T}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#999"/>"##);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{title}</text>"#, PANEL_W / 2.0, MARGIN_T - 10.0);
    for frac in [0.0, 0.5, 1.0] {
        let v = scale.lo + frac * (scale.hi - scale.lo);
        let y = scale.y(v);
        let _ = writeln!(svg, r##"<line x1="-4" y1="{y:.2}" x2="0" y2="{y:.2}" stroke="#333"/>"##);
        let _ = writeln!(svg, r#"<text x="-6" y="{:.2}" text-anchor="end" font-size="10">{v:.3}</text>"#, y + 3.0);
    }
    let slot = PANEL_W / boxes.len().max(1) as f64;
    let half = (slot * 0.3).min(12.0);
    for (i, (label, q)) in boxes.iter().enumerate() {
        let cx = slot * (i as f64 + 0.5);
        let [y10, y25, y50, y75, y90] = q.map(|v| scale.y(v));
        let _ = writeln!(svg, r##"<line x1="{cx:.2}" y1="{y90:.2}" x2="{cx:.2}" y2="{y10:.2}" stroke="#555"/>"##);
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{y75:.2}" width="{:.2}" height="{:.2}" fill="#cfe0f3" stroke="#245"/>"##,
            cx - half,
            2.0 * half,
            (y25 - y75).max(0.0)
        );
        let _ = writeln!(svg, r##"<line x1="{:.2}" y1="{y50:.2}" x2="{:.2}" y2="{y50:.2}" stroke="#c33" stroke-width="2"/>"##, cx - half, cx + half);
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.1}" text-anchor="middle" font-size="9">{label}</text>"#,
            MARGIN_T + PANEL_H + 14.0
        );
    }
    svg.push_str("</g>\n");
}

/// One panel of per-test-set MSE quantiles per method, sharing a y scale,
/// plus a panel of stability-error quantiles.
pub fn render_svg(rows: &[QuantileRow]) -> String {
    let methods: Vec<AdjustmentMethod> = AdjustmentMethod::ALL
        .into_iter()
        .filter(|m| rows.iter().any(|r| r.method == *m))
        .collect();
    let panels = methods.len() + 1;
    let width = MARGIN_L + panels as f64 * (PANEL_W + GAP + MARGIN_L);
    let height = MARGIN_T + PANEL_H + MARGIN_B;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let mse_scale = Scale::of(rows.iter().filter(|r| r.kind == "mse"));
    let mut x0 = MARGIN_L;
    for &m in &methods {
        let boxes: Vec<(String, [f64; 5])> = rows
            .iter()
            .filter(|r| r.kind == "mse" && r.method == m)
            .map(|r| (r.test_index.map(|k| k.to_string()).unwrap_or_default(), r.q))
            .collect();
        panel(&mut svg, x0, &format!("MSE: {m}"), &boxes, &mse_scale);
        x0 += PANEL_W + GAP + MARGIN_L;
    }
    let stab: Vec<&QuantileRow> = rows.iter().filter(|r| r.kind == "stability").collect();
    let boxes: Vec<(String, [f64; 5])> = stab.iter().map(|r| (short(r.method).to_string(), r.q)).collect();
    panel(&mut svg, x0, "stability error", &boxes, &Scale::of(stab.into_iter()));
    svg.push_str("</svg>\n");
    svg
}

fn short(m: AdjustmentMethod) -> &'static str {
    match m {
        AdjustmentMethod::CausalityAware => "CA",
        AdjustmentMethod::Baseline1 => "B1",
        AdjustmentMethod::Baseline2 => "B2",
        AdjustmentMethod::NoAdjustment => "NA",
    }
}
