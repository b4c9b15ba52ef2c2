//! Self-contained SVG scatter of two-objective final losses.

use std::fmt::Write;

use super::artifacts::format_float;
use super::config::Algorithm;
use super::run::RunRecord;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn colour(a: Algorithm) -> &'static str {
    match a {
        Algorithm::ParetoMtl => "#d62728",
        Algorithm::Mgda => "#1f77b4",
        Algorithm::Linear => "#2ca02c",
    }
}

fn upper_bound(values: impl Iterator<Item = f64>) -> f64 {
    let max = values.filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
    if max > 0.0 {
        max * 1.05
    } else {
        1.0
    }
}

fn lower_bound(values: impl Iterator<Item = f64>) -> f64 {
    values.filter(|v| v.is_finite()).fold(0.0_f64, f64::min)
}

/// Scatter of `loss_1` against `loss_2` for every run with finite losses,
/// one colour per algorithm. Each point carries a `<title>` naming its run.
pub(crate) fn front_svg(records: &[RunRecord]) -> String {
    let pts: Vec<(&RunRecord, f64, f64)> = records
        .iter()
        .filter(|r| !r.trajectory.status.is_failure())
        .filter_map(|r| match r.trajectory.final_losses[..] {
            [x, y] if x.is_finite() && y.is_finite() => Some((r, x, y)),
            _ => None,
        })
        .collect();
    let (x0, x1) = (
        lower_bound(pts.iter().map(|p| p.1)),
        upper_bound(pts.iter().map(|p| p.1)),
    );
    let (y0, y1) = (
        lower_bound(pts.iter().map(|p| p.2)),
        upper_bound(pts.iter().map(|p| p.2)),
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (bx, by) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{by} H{}" fill="none" stroke="black"/>"#,
        LEFT + plot_w
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{by}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#,
            by + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            by + 18.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{bx}" y2="{py:.2}" stroke="black"/>"#,
            bx - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            bx - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">loss 1</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">loss 2</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut present: Vec<Algorithm> = pts.iter().map(|p| p.0.algorithm).collect();
    present.sort();
    present.dedup();
    for (i, a) in present.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 20.0;
        let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="4" fill="{}"/>"#, colour(*a));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 10.0, y + 4.0, a.name());
    }
    for (r, x, y) in &pts {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.8"><title>{} run {} k_or_seed {}: ({}, {})</title></circle>"#,
            sx(*x),
            sy(*y),
            colour(r.algorithm),
            r.algorithm.name(),
            r.run_id,
            r.k_or_seed,
            format_float(*x),
            format_float(*y)
        );
    }
    s.push_str("</svg>\n");
    s
}
