//! Plot payloads shared by the CLI export and the service stream, plus a
//! small SVG renderer.

use std::fmt::Write as _;

use agentctl_control::{Complex64, FrequencyResponseData, FrequencyResponseKind, RootLocusData, TimeResponseData};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<Option<f64>>>,
    /// `[re, im]` pairs; `null` marks a non-finite sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<Vec<Option<[f64; 2]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub x_label: String,
    pub y_label: String,
    pub x_scale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPayload {
    pub kind: String,
    pub title: String,
    pub series: Vec<Series>,
    pub axes: Axes,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn pair(z: Complex64) -> Option<[f64; 2]> {
    (z.re.is_finite() && z.im.is_finite()).then_some([z.re, z.im])
}

fn axes(x: &str, y: &str, scale: &str) -> Axes {
    Axes { x_label: x.into(), y_label: y.into(), x_scale: scale.into() }
}

impl PlotPayload {
    pub fn time(data: &TimeResponseData, title: &str) -> Self {
        let kind = serde_json::to_value(data.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        PlotPayload {
            kind,
            title: title.into(),
            series: vec![Series {
                label: "y".into(),
                x: data.t.clone(),
                y: Some(data.y.iter().map(|v| finite(*v)).collect()),
                complex: None,
            }],
            axes: axes("Time (s)", "Amplitude", "linear"),
        }
    }

    pub fn frequency(data: &FrequencyResponseData, title: &str) -> Self {
        match data.kind {
            FrequencyResponseKind::Bode => PlotPayload {
                kind: "bode".into(),
                title: title.into(),
                series: vec![
                    Series {
                        label: "magnitude_db".into(),
                        x: data.omega.clone(),
                        y: Some(data.magnitude_db().into_iter().map(finite).collect()),
                        complex: None,
                    },
                    Series {
                        label: "phase_deg".into(),
                        x: data.omega.clone(),
                        y: Some(data.phase_deg().into_iter().map(finite).collect()),
                        complex: None,
                    },
                ],
                axes: axes("Frequency (rad/s)", "Magnitude (dB) / Phase (deg)", "log"),
            },
            FrequencyResponseKind::Nyquist => PlotPayload {
                kind: "nyquist".into(),
                title: title.into(),
                series: vec![Series {
                    label: "G(jw)".into(),
                    x: data.omega.clone(),
                    y: None,
                    complex: Some(data.response.iter().map(|z| pair(*z)).collect()),
                }],
                axes: axes("Real", "Imaginary", "linear"),
            },
        }
    }

    pub fn root_locus(data: &RootLocusData, title: &str) -> Self {
        let order = data.branches.first().map_or(0, Vec::len);
        let series = (0..order)
            .map(|b| Series {
                label: format!("branch {b}"),
                x: data.gains.clone(),
                y: None,
                complex: Some(data.branches.iter().map(|poles| pair(poles[b])).collect()),
            })
            .collect();
        PlotPayload {
            kind: "root_locus".into(),
            title: title.into(),
            series,
            axes: axes("Real", "Imaginary", "linear"),
        }
    }

    pub fn pole_zero(poles: &[Complex64], zeros: &[Complex64], title: &str) -> Self {
        let s = |label: &str, v: &[Complex64]| Series {
            label: label.into(),
            x: (0..v.len()).map(|i| i as f64).collect(),
            y: None,
            complex: Some(v.iter().map(|z| pair(*z)).collect()),
        };
        PlotPayload {
            kind: "pzmap".into(),
            title: title.into(),
            series: vec![s("poles", poles), s("zeros", zeros)],
            axes: axes("Real", "Imaginary", "linear"),
        }
    }

    /// One-line stand-in for the payload in observation text.
    pub fn placeholder(&self) -> String {
        let object = match self.kind.as_str() {
            "step" | "impulse" | "forced" => "TimeResponseData",
            "bode" | "nyquist" => "FrequencyResponseData",
            "root_locus" => "RootLocusData",
            _ => "PoleZeroData",
        };
        format!("<{object}> {} plot ({})", self.kind, self.title)
    }
}

const W: f64 = 640.0;
const PANEL_H: f64 = 360.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Panel<'a> {
    series: Vec<&'a Series>,
    y_label: &'a str,
    complex: bool,
}

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64, f64, f64)> {
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for (x, y) in points {
        b = Some(match b {
            None => (x, x, y, y),
            Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
        });
    }
    b.map(|(x0, x1, y0, y1)| {
        let pad = |lo: f64, hi: f64| if hi - lo < 1e-12 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    })
}

fn panel_points(s: &Series, complex: bool, log_x: bool) -> Vec<Option<(f64, f64)>> {
    if complex {
        s.complex.iter().flatten().map(|p| p.map(|[re, im]| (re, im))).collect()
    } else {
        let ys = s.y.clone().unwrap_or_default();
        s.x.iter()
            .zip(ys)
            .map(|(x, y)| {
                let x = if log_x { (*x > 0.0).then(|| x.log10()) } else { Some(*x) };
                x.zip(y)
            })
            .collect()
    }
}

/// Standalone SVG document for a payload.
pub fn render_svg(p: &PlotPayload) -> String {
    let complex = p.series.iter().any(|s| s.complex.is_some());
    let log_x = p.axes.x_scale == "log" && !complex;
    let panels: Vec<Panel> = if p.kind == "bode" {
        p.series.iter().map(|s| Panel { series: vec![s], y_label: &s.label, complex: false }).collect()
    } else {
        vec![Panel { series: p.series.iter().collect(), y_label: &p.axes.y_label, complex }]
    };
    let h = PANEL_H * panels.len() as f64 + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{h}" viewBox="0 0 {W} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&p.title)
    );
    let mut color = 0;
    for (i, panel) in panels.iter().enumerate() {
        let top = 30.0 + PANEL_H * i as f64;
        let pts: Vec<Vec<Option<(f64, f64)>>> =
            panel.series.iter().map(|s| panel_points(s, panel.complex, log_x)).collect();
        let Some((x0, x1, y0, y1)) = bounds(pts.iter().flatten().flatten().copied()) else {
            continue;
        };
        let (left, right, bottom, ptop) = (MARGIN, W - 20.0, top + PANEL_H - 40.0, top + 10.0);
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - ptop);
        let _ = writeln!(
            out,
            r##"<rect x="{left}" y="{ptop}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            right - left,
            bottom - ptop
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let xl = if log_x { format!("1e{fx:.1}") } else { format!("{fx:.3}") };
            let _ =
                writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xl}</text>"#, sx(fx), bottom + 16.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.3}</text>"#,
                left - 4.0,
                sy(fy) + 4.0
            );
        }
        let x_label = if panel.complex { "Real" } else { p.axes.x_label.as_str() };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            bottom + 32.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            (ptop + bottom) / 2.0,
            (ptop + bottom) / 2.0,
            escape(panel.y_label)
        );
        for (s, series_pts) in panel.series.iter().zip(&pts) {
            let c = COLORS[color % COLORS.len()];
            color += 1;
            if p.kind == "pzmap" {
                for (x, y) in series_pts.iter().flatten() {
                    let (cx, cy) = (sx(*x), sy(*y));
                    if s.label == "zeros" {
                        let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="5" fill="none" stroke="{c}"/>"#);
                    } else {
                        let _ = writeln!(
                            out,
                            r#"<path d="M{:.1} {:.1}L{:.1} {:.1}M{:.1} {:.1}L{:.1} {:.1}" stroke="{c}"/>"#,
                            cx - 5.0,
                            cy - 5.0,
                            cx + 5.0,
                            cy + 5.0,
                            cx - 5.0,
                            cy + 5.0,
                            cx + 5.0,
                            cy - 5.0
                        );
                    }
                }
                continue;
            }
            // break the line at non-finite samples
            for run in series_pts.split(Option::is_none) {
                if run.len() < 2 {
                    continue;
                }
                let d: Vec<String> =
                    run.iter().flatten().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                    d.join(" ")
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
