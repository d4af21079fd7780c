//! Static SVG figures: similarity heatmaps, line charts and the cross-view
//! scatter. Output is a pure function of the inputs; a timestamp appears only
//! when one is passed in.

use std::fmt::Write;

use crate::metrics::SimilarityMatrix;
use crate::pruning::SparsitySweepResult;
use crate::triangle::{CrossViewStats, LmcCurve, SelfLmcPoint};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

// Viridis anchors at 0, 0.25, 0.5, 0.75, 1.
const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

#[derive(Clone, Debug, Default)]
pub struct FigureOptions {
    pub timestamp: Option<String>,
}

/// Hex colour for a value on `[0, 1]`; values outside are clamped.
pub fn colormap(v: f64) -> String {
    let t = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) } * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: f64, y: f64| (x + f * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    s
}

fn close(mut s: String, h: f64, opts: &FigureOptions) -> String {
    if let Some(ts) = &opts.timestamp {
        let _ = writeln!(s, r##"<text x="4" y="{:.1}" font-size="9" fill="#888">{}</text>"##, h - 4.0, escape(ts));
    }
    s.push_str("</svg>\n");
    s
}

/// Heatmap of a layer-by-layer similarity matrix, rows = model A.
pub fn heatmap(m: &SimilarityMatrix, opts: &FigureOptions) -> String {
    let (rows, cols) = m.dim();
    let cell = 28.0;
    let (left, top) = (90.0, 40.0);
    let (w, h) = (left + cols as f64 * cell + 80.0, top + rows as f64 * cell + 90.0);
    let mut s = open(w, h, &format!("{} similarity: {} vs {}", m.metric, m.model_a, m.model_b));
    for i in 0..rows {
        for j in 0..cols {
            let v = m.get(i, j);
            let (x, y) = (left + j as f64 * cell, top + i as f64 * cell);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{}"><title>{} / {}: {v:.4}</title></rect>"#,
                colormap(v),
                escape(&m.layers_a[i]),
                escape(&m.layers_b[j])
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 4.0,
            top + (i as f64 + 0.6) * cell,
            escape(&m.layers_a[i])
        );
    }
    for (j, name) in m.layers_b.iter().enumerate() {
        let (x, y) = (left + (j as f64 + 0.5) * cell, top + rows as f64 * cell + 10.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end" transform="rotate(-60 {x:.1} {y:.1})">{}</text>"#,
            escape(name)
        );
    }
    // Colour bar.
    let bx = left + cols as f64 * cell + 20.0;
    let bar_h = (rows as f64 * cell).max(60.0);
    for k in 0..20 {
        let v = 1.0 - k as f64 / 19.0;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.1}" y="{:.1}" width="12" height="{:.1}" fill="{}"/>"#,
            top + k as f64 * bar_h / 20.0,
            bar_h / 20.0 + 0.5,
            colormap(v)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">1</text>"#, bx + 16.0, top + 8.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">0</text>"#, bx + 16.0, top + bar_h);
    close(s, h, opts)
}

/// One named polyline; `None` leaves a gap.
#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, Option<f64>)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: &str, xs: &[f64], ys: impl IntoIterator<Item = Option<f64>>) -> Self {
        Series { name: name.into(), points: xs.iter().copied().zip(ys).collect(), dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x.1 - self.x.0).max(1e-12);
        self.left + (x - self.x.0) / span * self.width
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y.1 - self.y.0).max(1e-12);
        self.top + self.height - (y - self.y.0) / span * self.height
    }

    fn axes(&self, s: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(s, r#"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * k as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.2}</text>"#,
                self.px(fx),
                t + h + 14.0
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{fy:.2}</text>"#, l - 4.0, self.py(fy) + 4.0);
            let _ = writeln!(
                s,
                r##"<line x1="{l:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##,
                l + w,
                y = self.py(fy)
            );
        }
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, l + w / 2.0, t + h + 30.0, escape(x_label));
        let (yx, yy) = (l - 40.0, t + h / 2.0);
        let _ = writeln!(
            s,
            r#"<text x="{yx:.1}" y="{yy:.1}" text-anchor="middle" transform="rotate(-90 {yx:.1} {yy:.1})">{}</text>"#,
            escape(y_label)
        );
    }
}

fn data_range(values: impl Iterator<Item = f64>, floor: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = values.fold(floor, |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], opts: &FigureOptions) -> String {
    let (w, h) = (560.0, 360.0);
    let xs = data_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), (f64::INFINITY, f64::NEG_INFINITY));
    let ys = data_range(
        series.iter().flat_map(|s| s.points.iter().filter_map(|p| p.1)),
        (0.0, 1.0),
    );
    let frame = Frame { left: 60.0, top: 36.0, width: 340.0, height: 260.0, x: xs, y: ys };
    let mut s = open(w, h, title);
    frame.axes(&mut s, x_label, y_label);
    for (k, series) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let dash = if series.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(x, y) in &series.points {
            match y {
                Some(y) => {
                    segment.push(format!("{:.1},{:.1}", frame.px(x), frame.py(y)));
                    let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, frame.px(x), frame.py(y));
                }
                None => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);
        let ly = 50.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<line x1="412" y1="{ly:.1}" x2="432" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#);
        let _ = writeln!(s, r#"<text x="436" y="{:.1}">{}</text>"#, ly + 4.0, escape(&series.name));
    }
    close(s, h, opts)
}

pub fn lmc_chart(curve: &LmcCurve, title: &str, opts: &FigureOptions) -> String {
    let baseline: Vec<Option<f64>> =
        curve.alphas.iter().map(|&a| Some(curve.acc_a + a * (curve.acc_b - curve.acc_a))).collect();
    let series = [
        Series::new("accuracy", &curve.alphas, curve.accuracies.iter().map(|&a| Some(a))),
        Series::new("linear baseline", &curve.alphas, baseline).dashed(),
    ];
    line_chart(title, "alpha", "accuracy", &series, opts)
}

pub fn sweep_chart(sweep: &SparsitySweepResult, title: &str, opts: &FigureOptions) -> String {
    let l = &sweep.levels;
    let series = [
        Series::new("acc A", l, sweep.acc_a.iter().map(|&a| Some(a))),
        Series::new("acc B", l, sweep.acc_b.iter().map(|&a| Some(a))),
        Series::new("self CKA A", l, sweep.self_sim_a.iter().copied()).dashed(),
        Series::new("self CKA B", l, sweep.self_sim_b.iter().copied()).dashed(),
        Series::new("cross CKA", l, sweep.cross_sim.iter().copied()),
    ];
    line_chart(title, "sparsity", "score", &series, opts)
}

/// Self-LMC barrier and self-CKA against sparsity.
pub fn self_lmc_chart(points: &[SelfLmcPoint], self_cka: &[Option<f64>], title: &str, opts: &FigureOptions) -> String {
    let levels: Vec<f64> = points.iter().map(|p| p.sparsity).collect();
    let series = [
        Series::new("barrier", &levels, points.iter().map(|p| Some(p.barrier))),
        Series::new("self CKA", &levels, self_cka.iter().copied()).dashed(),
    ];
    line_chart(title, "sparsity", "value", &series, opts)
}

/// Left: static vs robustness scores with the least-squares line. Right: CKA vs
/// Procrustes static scores with the disagreement band around the diagonal.
pub fn crossview_chart(stats: &CrossViewStats, opts: &FigureOptions) -> String {
    let (w, h) = (820.0, 380.0);
    let mut s = open(w, h, &format!("Cross-view: r = {:.3}, {} of {} pairs disagree", stats.pearson_r, stats.disagreements.len(), stats.n_pairs));

    let xs: Vec<f64> = stats.pairs.iter().map(|p| p.static_score).collect();
    let ys: Vec<f64> = stats.pairs.iter().map(|p| p.robustness_score).collect();
    let left = Frame {
        left: 60.0,
        top: 40.0,
        width: 300.0,
        height: 280.0,
        x: data_range(xs.iter().copied(), (f64::INFINITY, f64::NEG_INFINITY)),
        y: data_range(ys.iter().copied(), (f64::INFINITY, f64::NEG_INFINITY)),
    };
    left.axes(&mut s, "static score (CKA)", "robustness under sparsity");
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx > 0.0 {
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
        let (x0, x1) = left.x;
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4,3"/>"##,
            left.px(x0),
            left.py(my + slope * (x0 - mx)),
            left.px(x1),
            left.py(my + slope * (x1 - mx))
        );
    }

    let right = Frame {
        left: 480.0,
        top: 40.0,
        width: 300.0,
        height: 280.0,
        x: (0.0, 1.0),
        y: (0.0, 1.0),
    };
    right.axes(&mut s, "CKA static score", "Procrustes static score");
    let t = stats.threshold;
    let band = [(0.0, t), (1.0 - t, 1.0), (1.0, 1.0), (1.0, 1.0 - t), (t, 0.0), (0.0, 0.0)]
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", right.px(x), right.py(y)))
        .collect::<Vec<_>>()
        .join(" ");
    let _ = writeln!(s, r##"<polygon points="{band}" fill="#2ca02c" fill-opacity="0.15"/>"##);
    let _ = writeln!(
        s,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888"/>"##,
        right.px(0.0),
        right.py(0.0),
        right.px(1.0),
        right.py(1.0)
    );

    for p in &stats.pairs {
        let flagged = stats.disagreements.contains(&p.pair_id);
        let color = if flagged { "#d62728" } else { "#1f77b4" };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"><title>{}</title></circle>"#,
            left.px(p.static_score),
            left.py(p.robustness_score),
            escape(&p.pair_id)
        );
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"><title>{}</title></circle>"#,
            right.px(p.static_score),
            right.py(p.static_procrustes),
            escape(&p.pair_id)
        );
    }
    close(s, h, opts)
}
