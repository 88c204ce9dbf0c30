//! Tables and log-log plots for convergence studies.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::assembly::FieldKind;
use crate::study::{ConvergenceStudy, FieldConvergence};

/// Slack below the nominal order accepted by the rate check.
pub const RATE_SLACK: f64 = 0.25;

/// Conventions in effect for every run, recorded with the results.
#[derive(Clone, Debug, Serialize)]
pub struct RunConventions {
    pub initial_data: &'static str,
    pub load_quadrature: &'static str,
    pub time_step_rule: String,
    pub quadrature: &'static str,
    pub error_norms: &'static str,
    pub version: &'static str,
}

impl RunConventions {
    pub fn new(dt_factor: f64) -> Self {
        Self {
            initial_data: "L2 projection of the exact co-energy fields at t = 0",
            load_quadrature: "loads at both step endpoints, averaged",
            time_step_rule: format!("dt = t_f / round(t_f / ({dt_factor} h))"),
            quadrature: "exactness 2k for matrices, 2k + 4 for loads, projections and errors",
            error_norms: "max over time steps; H1 for the Kirchhoff velocity, L2 otherwise",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Whether a field takes part in the rate check. The multiplier of the
/// weakly symmetric scheme approximates zero and has no nominal order.
pub fn is_rate_checked(kind: FieldKind) -> bool {
    kind != FieldKind::Multiplier
}

/// Outcome of the rate check for one field.
#[derive(Clone, Debug, Serialize)]
pub struct RateCheck {
    pub field: FieldKind,
    pub slope: Option<f64>,
    pub threshold: f64,
    pub passed: bool,
}

/// Least-squares slope on the finest three levels must reach
/// `degree - RATE_SLACK` for every checked field.
pub fn rate_checks(study: &ConvergenceStudy) -> Vec<RateCheck> {
    let threshold = study.config.degree as f64 - RATE_SLACK;
    study
        .fields
        .iter()
        .filter(|f| is_rate_checked(f.field))
        .map(|f| RateCheck {
            field: f.field,
            slope: f.fine_slope,
            threshold,
            passed: f.fine_slope.is_some_and(|s| s >= threshold),
        })
        .collect()
}

/// Rows `field,h,error,rate` with `h` decreasing within each field; the
/// rate of the coarsest level is left empty.
pub fn convergence_csv(study: &ConvergenceStudy) -> String {
    let mut out = String::from("field,h,error,rate\n");
    for f in &study.fields {
        for (i, (h, e)) in f.levels.iter().enumerate() {
            let rate = match (i, &f.rates) {
                (0, _) | (_, None) => String::new(),
                (_, Some(r)) => format!("{:.6}", r.successive[i - 1]),
            };
            let _ = writeln!(out, "{},{h:.10e},{e:.10e},{rate}", f.field.label());
        }
    }
    out
}

pub fn convergence_json(study: &ConvergenceStudy) -> serde_json::Value {
    let fields: Vec<_> = study
        .fields
        .iter()
        .map(|f| {
            json!({
                "field": f.field.label(),
                "norm": f.norm,
                "rows": f.levels.iter().enumerate().map(|(i, (h, e))| json!({
                    "h": h,
                    "error": e,
                    "rate": if i == 0 { None } else { f.rates.as_ref().map(|r| r.successive[i - 1]) },
                })).collect::<Vec<_>>(),
                "fitted_slope": f.rates.as_ref().map(|r| r.fitted),
                "fine_slope": f.fine_slope,
            })
        })
        .collect();
    json!({
        "config": study.config,
        "conventions": RunConventions::new(study.config.dt_factor),
        "runs": study.runs,
        "fields": fields,
        "max_solve_residual": study.max_solve_residual(),
        "max_relative_power_residual": study.max_relative_power_residual(),
        "rate_checks": rate_checks(study),
    })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

struct LogAxis {
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl LogAxis {
    fn spanning(values: impl Iterator<Item = f64>, pixel_lo: f64, pixel_hi: f64) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| *v > 0.0 && v.is_finite()) {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        let (lo, mut hi) = (lo.floor(), hi.ceil());
        if hi <= lo {
            hi = lo + 1.0;
        }
        Self {
            lo,
            hi,
            pixel_lo,
            pixel_hi,
        }
    }

    fn pixel(&self, v: f64) -> f64 {
        let s = (v.log10() - self.lo) / (self.hi - self.lo);
        self.pixel_lo + s * (self.pixel_hi - self.pixel_lo)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        (self.lo as i32)..=(self.hi as i32)
    }
}

/// Self-contained SVG of error against `h` on log-log axes, with a dashed
/// reference line of slope `order` through the finest level.
pub fn convergence_svg(field: &FieldConvergence, order: usize, title: &str) -> String {
    let points: Vec<(f64, f64)> = field.levels.iter().copied().filter(|(h, e)| *h > 0.0 && *e > 0.0).collect();
    let reference: Vec<(f64, f64)> = match points.last() {
        Some(&(hf, ef)) => points.iter().map(|&(h, _)| (h, ef * (h / hf).powi(order as i32))).collect(),
        None => Vec::new(),
    };
    let x_axis = LogAxis::spanning(points.iter().map(|p| p.0), MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y_axis = LogAxis::spanning(
        points.iter().chain(&reference).map(|p| p.1),
        HEIGHT - MARGIN_BOTTOM,
        MARGIN_TOP,
    );
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for d in x_axis.decades() {
        let px = x_axis.pixel(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{y1:.1}" stroke="#dddddd"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"##,
            y0 + 18.0
        );
    }
    for d in y_axis.decades() {
        let py = y_axis.pixel(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{py:.1}" x2="{x1:.1}" y2="{py:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"##,
            x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">h</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">error ({})</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        field.norm
    );
    let polyline = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(h, e)| format!("{:.2},{:.2}", x_axis.pixel(h), y_axis.pixel(e)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !reference.is_empty() {
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#888888" stroke-dasharray="6,4"/>"##,
            polyline(&reference)
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        polyline(&points)
    );
    for &(h, e) in &points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            x_axis.pixel(h),
            y_axis.pixel(e)
        );
    }
    let legend_y = MARGIN_TOP + 20.0;
    let _ = writeln!(
        s,
        r##"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="#1f77b4" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"##,
        x0 + 12.0,
        x0 + 42.0,
        x0 + 48.0,
        legend_y + 4.0,
        escape(field.field.label())
    );
    let _ = writeln!(
        s,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888888" stroke-dasharray="6,4"/><text x="{:.1}" y="{:.1}">slope {order}</text>"##,
        x0 + 12.0,
        legend_y + 18.0,
        x0 + 42.0,
        legend_y + 18.0,
        x0 + 48.0,
        legend_y + 22.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::convergence_rates;

    fn synthetic(field: FieldKind, order: i32) -> FieldConvergence {
        let levels: Vec<(f64, f64)> = [0.25, 0.125, 0.0625].iter().map(|&h: &f64| (h, 3.0 * h.powi(order))).collect();
        FieldConvergence {
            field,
            norm: "L2",
            rates: convergence_rates(&levels).ok(),
            fine_slope: convergence_rates(&levels).ok().map(|r| r.fitted),
            levels,
        }
    }

    #[test]
    fn svg_is_well_formed_and_has_reference_line() {
        let svg = convergence_svg(&synthetic(FieldKind::Shear, 2), 2, "e_gamma <bjt>");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("&lt;bjt&gt;"));
        assert_eq!(svg, convergence_svg(&synthetic(FieldKind::Shear, 2), 2, "e_gamma <bjt>"));
    }

    #[test]
    fn log_axis_maps_decades_to_ends() {
        let axis = LogAxis::spanning([0.02, 0.5].into_iter(), 0.0, 100.0);
        assert_eq!((axis.lo, axis.hi), (-2.0, 0.0));
        assert!((axis.pixel(0.01) - 0.0).abs() < 1e-12);
        assert!((axis.pixel(1.0) - 100.0).abs() < 1e-12);
        assert!((axis.pixel(0.1) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn multiplier_is_not_rate_checked() {
        assert!(!is_rate_checked(FieldKind::Multiplier));
        assert!(is_rate_checked(FieldKind::Moment));
    }
}
