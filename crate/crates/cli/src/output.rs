use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Fixed float format: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    std::fs::write(path, text + "\n")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>
<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>
<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>
<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{ylabel}</text>
"#,
        W / 2.0,
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD,
        W / 2.0,
        H - 12.0,
        H / 2.0,
        H / 2.0,
    );
    s
}

fn ticks(s: &mut String, f: &Frame) {
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (x, y) = (f.x0 + t * (f.x1 - f.x0), f.y0 + t * (f.y1 - f.y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.3}</text>"#,
            f.px(x),
            H - PAD + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.3}</text>"#,
            PAD - 4.0,
            f.py(y) + 4.0
        );
    }
}

fn vline(s: &mut String, f: &Frame, x: f64, color: &str, label: &str) {
    let _ = writeln!(
        s,
        r#"<line x1="{0:.1}" y1="{PAD}" x2="{0:.1}" y2="{1}" stroke="{color}" stroke-dasharray="4 3"/><text x="{0:.1}" y="{2}" fill="{color}" text-anchor="middle">{label}</text>"#,
        f.px(x),
        H - PAD,
        PAD - 4.0
    );
}

/// Histogram of `values` with dashed guide lines.
pub fn histogram(
    title: &str,
    xlabel: &str,
    values: &[f64],
    bins: usize,
    guides: &[(f64, &str)],
) -> String {
    let hi = values
        .iter()
        .copied()
        .chain(guides.iter().map(|g| g.0))
        .fold(0.0f64, f64::max)
        * 1.05;
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v / hi) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let f = Frame {
        x0: 0.0,
        x1: hi,
        y0: 0.0,
        y1: top,
    };
    let mut s = open(title, xlabel, "count");
    ticks(&mut s, &f);
    for (i, &c) in counts.iter().enumerate() {
        let (a, b) = (
            f.px(i as f64 * hi / bins as f64),
            f.px((i + 1) as f64 * hi / bins as f64),
        );
        let y = f.py(c as f64);
        let _ = writeln!(
            s,
            r##"<rect x="{a:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="#4a7ab5"/>"##,
            (b - a - 1.0).max(0.5),
            f.py(0.0) - y
        );
    }
    for &(x, label) in guides {
        vline(&mut s, &f, x, "crimson", label);
    }
    s + "</svg>\n"
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with an optional shaded horizontal band.
pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    band: Option<(f64, f64)>,
) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some((lo, hi)) = band {
        y0 = y0.min(lo);
        y1 = y1.max(hi);
    }
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let f = Frame {
        x0,
        x1,
        y0,
        y1: y1 * 1.05,
    };
    let mut s = open(title, xlabel, ylabel);
    if let Some((lo, hi)) = band {
        let _ = writeln!(
            s,
            r##"<rect x="{PAD}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#e8d9a8" opacity="0.6"/>"##,
            f.py(hi),
            W - 2.0 * PAD,
            f.py(lo) - f.py(hi)
        );
    }
    ticks(&mut s, &f);
    for (k, ser) in series.iter().enumerate() {
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            ser.color
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                f.px(x),
                f.py(y),
                ser.color
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{}">{}</text>"#,
            W - PAD - 150.0,
            PAD + 16.0 * (k as f64 + 1.0),
            ser.color,
            ser.label
        );
    }
    s + "</svg>\n"
}

/// Horizontal bars with a dashed reference mark per bar.
pub fn bar_table(title: &str, rows: &[(String, f64, f64)]) -> String {
    let hi = rows.iter().map(|r| r.1.max(r.2)).fold(0.0f64, f64::max) * 1.1;
    let f = Frame {
        x0: 0.0,
        x1: if hi > 0.0 { hi } else { 1.0 },
        y0: 0.0,
        y1: rows.len().max(1) as f64,
    };
    let mut s = open(title, "time", "");
    let band = (H - 2.0 * PAD) / rows.len().max(1) as f64;
    for (i, (label, value, bound)) in rows.iter().enumerate() {
        let y = PAD + i as f64 * band + band * 0.2;
        let _ = writeln!(
            s,
            r##"<rect x="{PAD}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="#4a7ab5"/><text x="{:.1}" y="{:.1}">{label}</text>"##,
            f.px(*value) - PAD,
            band * 0.6,
            PAD + 4.0,
            y + band * 0.35
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="crimson" stroke-dasharray="4 3"/>"#,
            f.px(*bound),
            y - 4.0,
            y + band * 0.6 + 4.0
        );
    }
    for k in 0..=4 {
        let x = f.x1 * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.3}</text>"#,
            f.px(x),
            H - PAD + 16.0
        );
    }
    s + "</svg>\n"
}
