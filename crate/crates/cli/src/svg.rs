//! Static SVG drawings of subdivisions and affine fans.

use std::fmt::Write;

use secop::geometry::{Configuration, Vector};
use secop::rational::{to_f64, Rational};
use secop::regularity::AffineFan;
use secop::subdivision::Subdivision;

const WIDTH: f64 = 480.0;

struct Frame {
    min_x: f64,
    min_y: f64,
    w: f64,
    h: f64,
}

impl Frame {
    /// Bounding box of the coordinates grown by 10% of its larger side.
    fn around(xs: impl IntoIterator<Item = (f64, f64)>) -> Frame {
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in xs {
            lo_x = lo_x.min(x);
            lo_y = lo_y.min(y);
            hi_x = hi_x.max(x);
            hi_y = hi_y.max(y);
        }
        if !lo_x.is_finite() {
            (lo_x, lo_y, hi_x, hi_y) = (0.0, 0.0, 0.0, 0.0);
        }
        let mut side = (hi_x - lo_x).max(hi_y - lo_y);
        if side == 0.0 {
            side = 1.0;
        }
        let m = 0.1 * side;
        let w = (hi_x - lo_x).max(side * 0.2) + 2.0 * m;
        let h = (hi_y - lo_y).max(side * 0.2) + 2.0 * m;
        let cx = (lo_x + hi_x) / 2.0;
        let cy = (lo_y + hi_y) / 2.0;
        Frame { min_x: cx - w / 2.0, min_y: cy - h / 2.0, w, h }
    }

    fn unit(&self) -> f64 {
        self.w.max(self.h) / 100.0
    }

    /// Document header; drawing happens in a y-up group.
    fn open(&self, out: &mut String) {
        let height = WIDTH * self.h / self.w;
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}">"#,
            num(WIDTH),
            num(height),
            num(self.min_x),
            num(-(self.min_y + self.h)),
            num(self.w),
            num(self.h)
        );
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#, num(self.min_x), num(-(self.min_y + self.h)), num(self.w), num(self.h));
        out.push_str("<g transform=\"scale(1,-1)\">\n");
    }

    fn close(out: &mut String) {
        out.push_str("</g>\n</svg>\n");
    }
}

/// Fixed-precision number with trailing zeros trimmed.
fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn xy(x: &Rational, y: &Rational) -> (f64, f64) {
    (to_f64(x), to_f64(y))
}

fn label(out: &mut String, x: f64, y: f64, u: f64, text: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="{}" font-family="sans-serif" transform="scale(1,-1)">{text}</text>"#,
        num(x + u),
        num(-(y + u)),
        num(4.0 * u)
    );
}

pub fn render_subdivision(config: &Configuration, d: &Subdivision) -> String {
    let frame = Frame::around(config.points().iter().map(|p| xy(&p.x, &p.y)));
    let u = frame.unit();
    let at = |l: usize| xy(&config.point(l).x, &config.point(l).y);
    let mut out = String::new();
    frame.open(&mut out);
    for c in d.cells() {
        let pts: Vec<String> = c.vertices().iter().map(|&l| at(l)).map(|(x, y)| format!("{},{}", num(x), num(y))).collect();
        let _ = writeln!(
            out,
            r##"<polygon class="cell" points="{}" fill="#dfe8f2" stroke="#2b4a6f" stroke-width="{}"/>"##,
            pts.join(" "),
            num(0.6 * u)
        );
    }
    for &(i, j) in d.walls() {
        let ((x1, y1), (x2, y2)) = (at(i), at(j));
        let _ = writeln!(
            out,
            r##"<line class="wall" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#b0302a" stroke-width="{}"/>"##,
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(0.9 * u)
        );
    }
    for l in config.labels() {
        let (x, y) = at(l);
        let (class, fill) = if d.unused().contains(&l) { ("unused", "white") } else { ("point", "#1d1d1d") };
        let _ = writeln!(
            out,
            r##"<circle class="{class}" cx="{}" cy="{}" r="{}" fill="{fill}" stroke="#1d1d1d" stroke-width="{}"/>"##,
            num(x),
            num(y),
            num(1.5 * u),
            num(0.4 * u)
        );
        label(&mut out, x, y, u, &l.to_string());
    }
    Frame::close(&mut out);
    out
}

pub fn render_fan(fan: &AffineFan) -> String {
    let verts: Vec<(f64, f64)> = fan.vertices.iter().map(|v| xy(&v.x, &v.y)).collect();
    let frame = Frame::around(verts.iter().copied());
    let u = frame.unit();
    // rays leave the frame; half the frame size is enough to read directions
    let reach = frame.w.max(frame.h);
    let mut out = String::new();
    frame.open(&mut out);
    for e in &fan.edges {
        let ((x1, y1), (x2, y2)) = (verts[e.cells.0], verts[e.cells.1]);
        let _ = writeln!(
            out,
            r##"<line class="edge" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#2b4a6f" stroke-width="{}"/>"##,
            num(x1),
            num(y1),
            num(x2),
            num(y2),
            num(0.8 * u)
        );
    }
    for r in &fan.rays {
        let (x, y) = verts[r.cell];
        let (dx, dy) = unit_direction(&r.direction);
        let _ = writeln!(
            out,
            r##"<line class="ray" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#6b8e23" stroke-width="{}"/>"##,
            num(x),
            num(y),
            num(x + reach * dx),
            num(y + reach * dy),
            num(0.6 * u)
        );
    }
    for (i, &(x, y)) in verts.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<circle class="vertex" cx="{}" cy="{}" r="{}" fill="#b0302a"/>"##,
            num(x),
            num(y),
            num(1.5 * u)
        );
        label(&mut out, x, y, u, &i.to_string());
    }
    Frame::close(&mut out);
    out
}

fn unit_direction(v: &Vector) -> (f64, f64) {
    let (x, y) = xy(&v.x, &v.y);
    let n = x.hypot(y);
    if n == 0.0 { (0.0, 0.0) } else { (x / n, y / n) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_trimmed() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(-0.00001), "0");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(1.0 / 3.0), "0.3333");
    }

    #[test]
    fn frame_has_margin() {
        let f = Frame::around([(0.0, 0.0), (10.0, 10.0)]);
        assert_eq!((f.min_x, f.min_y, f.w, f.h), (-1.0, -1.0, 12.0, 12.0));
        let single = Frame::around([(3.0, 4.0)]);
        assert!(single.w > 0.0 && single.h > 0.0);
    }
}
