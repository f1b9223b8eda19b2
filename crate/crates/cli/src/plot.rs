//! SVG line chart of the time-normalized regret against the normalized bound.

use std::fmt::Write;

use convexmix::signals::TrajectoryRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
/// Upper cap on polyline vertices per curve.
const MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlotOptions {
    pub logx: bool,
}

/// Indices of the rows to draw: every row when few, else an even thinning
/// that always keeps the first and the last.
fn thin(len: usize) -> Vec<usize> {
    if len <= MAX_POINTS {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_POINTS)
        .map(|i| i * (len - 1) / (MAX_POINTS - 1))
        .collect();
    idx.dedup();
    idx
}

fn num(v: f64) -> String {
    format!("{v:.3}")
}

pub fn render_svg(rows: &[TrajectoryRow], opts: PlotOptions) -> String {
    let picks = thin(rows.len());
    let xs: Vec<f64> = picks
        .iter()
        .map(|&i| {
            let t = rows[i].t.max(1) as f64;
            if opts.logx {
                t.log10()
            } else {
                t
            }
        })
        .collect();
    let regret: Vec<f64> = picks.iter().map(|&i| rows[i].norm_regret).collect();
    let bound: Vec<f64> = picks.iter().map(|&i| rows[i].bound_norm).collect();

    let finite = regret.iter().chain(bound.iter()).copied().filter(|v| v.is_finite());
    let (mut y_lo, mut y_hi) = finite.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let (x_lo, mut x_hi) = (
        xs.first().copied().unwrap_or(0.0),
        xs.last().copied().unwrap_or(1.0),
    );
    if x_hi - x_lo < 1e-12 {
        x_hi = x_lo + 1.0;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let py = |y: f64| TOP + (y_hi - y.clamp(y_lo, y_hi)) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(pw),
        num(ph)
    );
    if y_lo < 0.0 && y_hi > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#999" stroke-dasharray="4 3"/>"##,
            num(LEFT + pw),
            y = num(py(0.0))
        );
    }

    for (i, frac) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
        let y = y_lo + frac * (y_hi - y_lo);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{:.4}</text>"#,
            num(LEFT - 6.0),
            num(py(y) + 4.0),
            y
        );
        let x = x_lo + frac * (x_hi - x_lo);
        let label = if opts.logx { 10f64.powf(x) } else { x };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle" font-family="sans-serif" id="xtick{i}">{:.0}</text>"#,
            num(px(x)),
            num(TOP + ph + 16.0),
            label
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif">n{}</text>"#,
        num(LEFT + pw / 2.0),
        num(HEIGHT - 18.0),
        if opts.logx { " (log scale)" } else { "" }
    );

    for (name, ys, color) in [("bound", &bound, "#c0392b"), ("regret", &regret, "#1f5fa8")] {
        let points: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(&x, &y)| format!("{},{}", num(px(x)), num(py(y))))
            .collect();
        if points.len() == 1 {
            let (x, y) = points[0].split_once(',').expect("x,y");
            let _ = writeln!(s, r#"<circle id="{name}" cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        } else {
            let _ = writeln!(
                s,
                r#"<polyline id="{name}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points.join(" ")
            );
        }
    }

    let legend = [
        ("#1f5fa8", "time-normalized regret R_n / n"),
        ("#c0392b", "normalized bound ln2 / (a n)"),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            num(WIDTH - RIGHT - 250.0),
            num(WIDTH - RIGHT - 230.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif">{label}</text>"#,
            num(WIDTH - RIGHT - 224.0),
            num(y + 4.0)
        );
    }
    s.push_str("</svg>\n");
    s
}
