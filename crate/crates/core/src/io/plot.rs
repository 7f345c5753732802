//! Minimal SVG rendering of estimate series: one panel per geography and
//! indicator, medians as a line over the shaded 80% band. No dependencies;
//! the output is a plain string of static markup.

use std::fmt::Write as _;

use crate::accounts::Indicator;
use crate::error::{Error, Result};
use crate::geo::{GeoHierarchy, PeriodCalendar};
use crate::report::{EstimateTable, GeoScope};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Render one scope's series for one indicator across all periods present
/// in the table.
pub fn render_series(
    table: &EstimateTable,
    geo: &GeoHierarchy,
    cal: &PeriodCalendar,
    scope: GeoScope,
    indicator: Indicator,
) -> Result<String> {
    let mut rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.scope == scope && r.indicator == indicator)
        .collect();
    rows.sort_by_key(|r| r.period);
    if rows.is_empty() {
        return Err(Error::InputDomain(format!(
            "no rows for {} {}",
            scope_name(scope, geo),
            indicator.label()
        )));
    }

    // x: period midpoints in calendar years; y: zero to padded maximum
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| {
            let start = cal.period_start_year(r.period)?;
            Ok(start as f64 + (cal.period_length() as f64 - 1.0) / 2.0)
        })
        .collect::<Result<_>>()?;
    let y_max = rows
        .iter()
        .map(|r| r.upper)
        .fold(0.0_f64, f64::max)
        .max(1e-9)
        * 1.08;
    let x_min = xs.first().copied().unwrap() - 1.0;
    let x_max = xs.last().copied().unwrap() + 1.0;

    let px = |x: f64| {
        MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    };
    let py = |y: f64| HEIGHT - MARGIN_BOTTOM - y / y_max * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    )
    .expect("string write");
    writeln!(
        svg,
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    )
    .expect("string write");
    writeln!(
        svg,
        "  <text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" \
         font-weight=\"bold\">{}</text>",
        MARGIN_LEFT,
        xml_escape(&format!(
            "{} ({}), {}",
            indicator.label(),
            indicator.unit(),
            scope_name(scope, geo)
        ))
    )
    .expect("string write");

    // 80% band
    let mut band = String::from("  <polygon fill=\"#9ecae1\" opacity=\"0.55\" points=\"");
    for (x, r) in xs.iter().zip(&rows) {
        write!(band, "{:.2},{:.2} ", px(*x), py(r.upper)).expect("string write");
    }
    for (x, r) in xs.iter().zip(&rows).rev() {
        write!(band, "{:.2},{:.2} ", px(*x), py(r.lower)).expect("string write");
    }
    band.push_str("\"/>");
    writeln!(svg, "{band}").expect("string write");

    // median line and markers
    let mut line = String::from(
        "  <polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"",
    );
    for (x, r) in xs.iter().zip(&rows) {
        write!(line, "{:.2},{:.2} ", px(*x), py(r.median)).expect("string write");
    }
    line.push_str("\"/>");
    writeln!(svg, "{line}").expect("string write");
    for (x, r) in xs.iter().zip(&rows) {
        writeln!(
            svg,
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#08519c\"/>",
            px(*x),
            py(r.median)
        )
        .expect("string write");
    }

    // axes
    writeln!(
        svg,
        "  <line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n  \
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>",
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM
    )
    .expect("string write");
    for (x, r) in xs.iter().zip(&rows) {
        let year = cal.period_start_year(r.period)?;
        writeln!(
            svg,
            "  <line x1=\"{x0:.2}\" y1=\"{b}\" x2=\"{x0:.2}\" y2=\"{b2}\" stroke=\"black\"/>\n  \
             <text x=\"{x0:.2}\" y=\"{ty}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{year}</text>",
            x0 = px(*x),
            b = HEIGHT - MARGIN_BOTTOM,
            b2 = HEIGHT - MARGIN_BOTTOM + 5.0,
            ty = HEIGHT - MARGIN_BOTTOM + 18.0,
        )
        .expect("string write");
    }
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        writeln!(
            svg,
            "  <line x1=\"{x1}\" y1=\"{y:.2}\" x2=\"{x2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n  \
             <text x=\"{tx}\" y=\"{ty:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{label}</text>",
            x1 = MARGIN_LEFT - 5.0,
            x2 = MARGIN_LEFT,
            y = py(v),
            tx = MARGIN_LEFT - 8.0,
            ty = py(v) + 4.0,
            label = format_tick(v),
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn scope_name(scope: GeoScope, geo: &GeoHierarchy) -> String {
    match scope {
        GeoScope::World => "world".to_string(),
        GeoScope::SuperRegion(q) => format!("super region {}", geo.super_region_id(q)),
        GeoScope::Region(r) => format!("region {}", geo.region_id(r)),
        GeoScope::Country(c) => geo.country_name(c).to_string(),
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v >= 100.0 {
        format!("{v:.0}")
    } else if v >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
