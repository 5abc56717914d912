//! CSV and SVG output for boundary sweeps and samples.

use std::fmt::Write as _;

use crate::ops::BoundaryPoint;

/// `%.9g`-style formatting: nine significant digits, trailing zeros dropped.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.8e}");
    let (mant, exp) = s.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

pub const BOUNDARY_HEADER: &str = "theta,dir_x,dir_y,support,point_x,point_y";

pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut out = String::from(BOUNDARY_HEADER);
    out.push('\n');
    for b in points {
        let (px, py) = match b.point {
            Some([x, y]) => (sig9(x), sig9(y)),
            None => ("inf".into(), "inf".into()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{px},{py}",
            sig9(b.theta),
            sig9(b.direction[0]),
            sig9(b.direction[1]),
            sig9(b.support)
        );
    }
    out
}

pub fn points_csv(points: &[Vec<f64>], m: usize) -> String {
    let header: Vec<String> = (1..=m).map(|i| format!("y{i}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for p in points {
        let row: Vec<String> = p.iter().map(|v| sig9(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

/// Boundary polyline over sampled image points in a fixed 800×800 viewport.
/// Unbounded directions are listed in a separate group of arrows.
pub fn boundary_svg(points: &[BoundaryPoint], samples: &[Vec<f64>]) -> String {
    let finite: Vec<[f64; 2]> = points.iter().filter_map(|b| b.point).collect();
    let all = finite.iter().copied().chain(samples.iter().filter(|s| s.len() == 2).map(|s| [s[0], s[1]]));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in all {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let s = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: [f64; 2]| (MARGIN + (p[0] - lo[0]) * s, SIZE - MARGIN - (p[1] - lo[1]) * s);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="800" viewBox="0 0 800 800">"#
    );
    let _ = writeln!(out, r#"<rect width="800" height="800" fill="white"/>"#);
    let _ = writeln!(out, r##"<g fill="#4a6fa5" fill-opacity="0.5">"##);
    for p in samples.iter().filter(|p| p.len() == 2) {
        let (x, y) = map([p[0], p[1]]);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1"/>"#);
    }
    let _ = writeln!(out, "</g>");
    if !finite.is_empty() {
        let mut path: Vec<String> = finite
            .iter()
            .map(|p| {
                let (x, y) = map(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        if finite.len() == points.len() {
            path.push(path[0].clone());
        }
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="#c0392b" stroke-width="2" points="{}"/>"##,
            path.join(" ")
        );
    }
    let unbounded: Vec<&BoundaryPoint> = points.iter().filter(|b| b.point.is_none()).collect();
    if !unbounded.is_empty() {
        let _ = writeln!(out, r##"<g id="unbounded" stroke="#888" stroke-width="1">"##);
        let c = (SIZE / 2.0, SIZE / 2.0);
        for b in unbounded {
            let (dx, dy) = (b.direction[0], -b.direction[1]);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"><title>theta={}</title></line>"#,
                c.0,
                c.1,
                c.0 + 0.45 * SIZE * dx,
                c.1 + 0.45 * SIZE * dy,
                sig9(b.theta)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig9(29f64.sqrt()), "5.38516481");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-0.5), "-0.5");
        assert_eq!(sig9(1e-7), "1e-07");
        assert_eq!(sig9(123456789012.0), "1.23456789e+11");
        assert_eq!(sig9(f64::INFINITY), "inf");
        assert_eq!(sig9(-1e-300 * 0.0), "0");
    }
}
