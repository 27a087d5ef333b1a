use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use recurrence_lab::estimators::{fit_growth_rate, median};
use recurrence_lab::recurrence::GRID_CSV_HEADER;

use crate::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Series {
    eps: f64,
    /// (n, median ln R) pairs, n ascending.
    points: Vec<(f64, f64)>,
    slope: f64,
    intercept: f64,
}

/// Median ln R per (eps, n) over the uncensored cells of a grids CSV.
fn series_from_csv(text: &str) -> Result<Vec<Series>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == GRID_CSV_HEADER => {}
        Some(h) => {
            return Err(CliError::Runtime(format!("unexpected CSV header: {h}")));
        }
        None => return Err(CliError::Runtime("empty CSV".into())),
    }
    // eps bits as key so f64 can index the map.
    let mut cells: BTreeMap<u64, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CliError::Runtime(format!(
                "CSV line {}: expected 7 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let parse = |j: usize| -> Result<f64, CliError> {
            fields[j]
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Runtime(format!("CSV line {}: {e}", i + 2)))
        };
        let n = parse(1)?;
        let eps = parse(2)?;
        let r = parse(3)?;
        let censored_r = fields[5].trim() != "0" && !fields[5].trim().eq_ignore_ascii_case("false");
        if censored_r || r < 1.0 {
            continue;
        }
        cells
            .entry(eps.to_bits())
            .or_default()
            .entry(n as u64)
            .or_default()
            .push(r.ln());
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Runtime("CSV has no uncensored data rows".into()));
    }
    let mut out = Vec::new();
    for (bits, by_n) in cells {
        let mut points = Vec::new();
        for (&n, vals) in &by_n {
            points.push((n as f64, median(vals)?));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        let (slope, intercept) = if xs.len() >= 3 {
            let fit = fit_growth_rate(&xs, &ys)?;
            (fit.slope, fit.intercept)
        } else {
            (f64::NAN, f64::NAN)
        };
        out.push(Series {
            eps: f64::from_bits(bits),
            points,
            slope,
            intercept,
        });
    }
    Ok(out)
}

fn render_svg(series: &[Series]) -> String {
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x_min) / (x_max - x_min) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_min) / (y_max - y_min) * (HEIGHT - 2.0 * MARGIN);
    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
    ];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    // axes
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">n</text>"#,
        WIDTH / 2.0,
        HEIGHT - MARGIN / 3.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 {x} {y})">median ln R</text>"#,
        MARGIN / 3.0,
        HEIGHT / 2.0,
        x = MARGIN / 3.0,
        y = HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = palette[i % palette.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        if s.slope.is_finite() {
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-dasharray="4 3"/>"#,
                sx(x_min),
                sy(s.slope * x_min + s.intercept),
                sx(x_max),
                sy(s.slope * x_max + s.intercept)
            );
        }
        let label = if s.slope.is_finite() {
            format!("eps={} slope={:.9}", s.eps, s.slope)
        } else {
            format!("eps={} (too few levels to fit)", s.eps)
        };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="12" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN + 4.0 - 210.0,
            MARGIN + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render `csv` to an SVG at `out`. Errors (and writes nothing) if the CSV
/// has no usable rows.
pub fn render_csv(csv: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv.display())))?;
    let series = series_from_csv(&text)?;
    fs::write(out, render_svg(&series))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_header_only() {
        assert!(series_from_csv("").is_err());
        assert!(series_from_csv(&format!("{GRID_CSV_HEADER}\n")).is_err());
    }

    #[test]
    fn slope_matches_planted_line() {
        let mut csv = format!("{GRID_CSV_HEADER}\n");
        for n in 4..10u64 {
            let r = (0.7 * n as f64).exp();
            csv.push_str(&format!("0,{n},0.25,{r},1,0,0\n"));
        }
        let series = series_from_csv(&csv).unwrap();
        assert_eq!(series.len(), 1);
        assert!((series[0].slope - 0.7).abs() < 1e-9);
    }
}
