//! Log-log SVG line plot of one sweep metric, error bars spanning
//! `mean * 10^(+-log_std)`.

use std::fmt::Write as _;

use crate::table::{Metric, SweepTable};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn log_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(f64::log10)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return None;
    }
    let pad = ((hi - lo) * 0.05).max(0.05);
    Some((lo - pad, hi + pad))
}

pub fn sweep_svg(table: &SweepTable, metric: Metric) -> String {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.metric == metric && r.error.is_none())
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let xr = log_range(rows.iter().map(|r| r.n0));
    let yr = log_range(rows.iter().flat_map(|r| {
        let f = 10f64.powf(r.log_std);
        [r.mean / f, r.mean * f]
    }));
    let (Some((x0, x1)), Some((y0, y1))) = (xr, yr) else {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">no data</text></svg>"#,
            W / 2.0,
            H / 2.0
        );
        return s;
    };
    let px = |n0: f64| LEFT + (n0.log10() - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| TOP + (y1 - v.max(1e-300).log10()) / (y1 - y0) * (H - TOP - BOTTOM);

    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{d}</text>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0,
            H - BOTTOM + 18.0
        );
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">1e{d}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">photons per ray (n0)</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        metric.name()
    );

    let mut algos: Vec<_> = rows.iter().map(|r| r.algorithm).collect();
    algos.dedup();
    algos.sort();
    algos.dedup();
    for (k, algo) in algos.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts: Vec<_> = rows.iter().filter(|r| r.algorithm == *algo).collect();
        pts.sort_by(|a, b| a.n0.total_cmp(&b.n0));
        let path: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.1},{:.1}", px(r.n0), py(r.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for r in &pts {
            let f = 10f64.powf(r.log_std);
            let (x, lo, hi) = (px(r.n0), py(r.mean / f), py(r.mean * f));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{lo:.1}" x2="{x:.1}" y2="{hi:.1}" stroke="{color}"/><circle cx="{x:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                py(r.mean)
            );
        }
        let ly = TOP + 20.0 + 20.0 * k as f64;
        let lx = W - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{algo}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Algorithm;
    use crate::table::SweepRow;

    #[test]
    fn empty_table_still_valid_svg() {
        let svg = sweep_svg(&SweepTable::default(), Metric::OneMinusR);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn one_series_per_algorithm() {
        let row = |algorithm, n0, mean| SweepRow {
            algorithm,
            n0,
            metric: Metric::OneMinusR,
            mean,
            log_std: 0.1,
            std_err: 0.0,
            n_samples: 2,
            error: None,
        };
        let t = SweepTable {
            rows: vec![
                row(Algorithm::Fbp, 32.0, 0.5),
                row(Algorithm::Fbp, 1000.0, 0.1),
                row(Algorithm::Mle, 32.0, 0.3),
            ],
            tv_weights: vec![],
        };
        let svg = sweep_svg(&t, Metric::OneMinusR);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
