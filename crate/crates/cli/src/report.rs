//! Command results and their three on-disk encodings.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use eamac::io::Record;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    /// Information quantity in nats, converted by `--bits`.
    Info(f64),
    Num(f64),
    Int(u64),
    Flag(bool),
    Text(String),
}

/// Shortest round-trip form, in scientific notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v.is_finite() && a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

impl Val {
    pub fn render(&self, bits: bool) -> String {
        match self {
            Val::Info(v) if bits => fmt_f64(v / LN_2),
            Val::Info(v) | Val::Num(v) => fmt_f64(*v),
            Val::Int(v) => v.to_string(),
            Val::Flag(v) => v.to_string(),
            Val::Text(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Block {
    pub name: String,
    pub entries: Vec<(String, Val)>,
}

impl Block {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), entries: Vec::new() }
    }

    pub fn put(&mut self, key: impl Into<String>, v: Val) -> &mut Self {
        self.entries.push((key.into(), v));
        self
    }
}

/// A rate polygon, coordinates in nats.
#[derive(Debug, Clone)]
pub struct Polygon {
    pub label: String,
    pub vertices: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub kind: &'static str,
    pub blocks: Vec<Block>,
    /// One row per grid point for sweeps.
    pub table: Option<Vec<Vec<(String, Val)>>>,
    pub polygons: Vec<Polygon>,
}

impl Report {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, blocks: Vec::new(), table: None, polygons: Vec::new() }
    }

    pub fn block(&mut self, name: &str) -> &mut Block {
        self.blocks.push(Block::new(name));
        self.blocks.last_mut().expect("just pushed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Record,
    Svg,
}

/// Provenance written ahead of every payload.
pub struct Header<'a> {
    pub version: &'a str,
    pub config: &'a [(String, String)],
    pub bits: bool,
}

impl Header<'_> {
    fn units(&self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }
}

pub fn encode(report: &Report, format: Format, h: &Header<'_>) -> CliResult<String> {
    match format {
        Format::Record => to_record(report, h),
        Format::Csv => to_csv(report, h),
        Format::Svg => to_svg(report, h),
    }
}

fn to_record(report: &Report, h: &Header<'_>) -> CliResult<String> {
    let mut r = Record::new();
    r.push("", "kind", report.kind)?;
    r.push("", "version", h.version)?;
    r.push("", "units", h.units())?;
    for (k, v) in h.config {
        r.push("config", k, v)?;
    }
    for b in &report.blocks {
        for (k, v) in &b.entries {
            r.push(&b.name, k, v.render(h.bits))?;
        }
    }
    if let Some(rows) = &report.table {
        let width = rows.len().saturating_sub(1).to_string().len();
        for (i, row) in rows.iter().enumerate() {
            let name = format!("point.{i:0width$}");
            for (k, v) in row {
                r.push(&name, k, v.render(h.bits))?;
            }
        }
    }
    Ok(r.to_string())
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("csv encoding: {e}"))
}

fn to_csv(report: &Report, h: &Header<'_>) -> CliResult<String> {
    let mut out = format!("# kind = {}\n# version = {}\n# units = {}\n", report.kind, h.version, h.units());
    for (k, v) in h.config {
        let _ = writeln!(out, "# config.{k} = {v}");
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    match &report.table {
        Some(rows) => {
            if let Some(first) = rows.first() {
                w.write_record(first.iter().map(|(k, _)| k.as_str())).map_err(csv_err)?;
            }
            for row in rows {
                w.write_record(row.iter().map(|(_, v)| v.render(h.bits))).map_err(csv_err)?;
            }
        }
        None => {
            w.write_record(["section", "key", "value"]).map_err(csv_err)?;
            for b in &report.blocks {
                for (k, v) in &b.entries {
                    w.write_record([b.name.as_str(), k.as_str(), &v.render(h.bits)]).map_err(csv_err)?;
                }
            }
        }
    }
    let body = w.into_inner().map_err(csv_err)?;
    out.push_str(&String::from_utf8(body).map_err(csv_err)?);
    Ok(out)
}

fn comment_safe(s: &str) -> String {
    s.replace("--", "- -")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn to_svg(report: &Report, h: &Header<'_>) -> CliResult<String> {
    if report.polygons.is_empty() {
        return Err(CliError::Config(format!("svg output is only available for rate regions, not {}", report.kind)));
    }
    let scale = if h.bits { 1.0 / LN_2 } else { 1.0 };
    let (mut xmax, mut ymax) = (0.0f64, 0.0f64);
    for p in &report.polygons {
        for &(x, y) in &p.vertices {
            xmax = xmax.max(x * scale);
            ymax = ymax.max(y * scale);
        }
    }
    let (xmax, ymax) = (if xmax > 0.0 { xmax } else { 1.0 }, if ymax > 0.0 { ymax } else { 1.0 });
    let (size, pad) = (400.0, 50.0);
    let px = |x: f64| pad + size * x * scale / xmax;
    let py = |y: f64| pad + size - size * y * scale / ymax;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="500" height="500" viewBox="0 0 500 500">"#);
    let _ = writeln!(s, "<!--");
    let _ = writeln!(s, "kind = {}\nversion = {}\nunits = {}", report.kind, h.version, h.units());
    for (k, v) in h.config {
        let _ = writeln!(s, "config.{} = {}", comment_safe(k), comment_safe(v));
    }
    let _ = writeln!(s, "-->");
    let _ = writeln!(s, r#"<rect x="0" y="0" width="500" height="500" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M {pad} {pad} L {pad} {b} L {r} {b}" fill="none" stroke="black" stroke-width="1"/>"#,
        b = pad + size,
        r = pad + size
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="485" font-size="12" text-anchor="middle">R_X ({})</text>"#,
        pad + size / 2.0,
        h.units()
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {y})">R_Y ({u})</text>"#,
        y = pad + size / 2.0,
        u = h.units()
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
        pad + size,
        pad + size + 15.0,
        xmax
    );
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, pad - 5.0, pad + 4.0, ymax);
    for (i, p) in report.polygons.iter().enumerate() {
        let pts: Vec<String> = p.vertices.iter().map(|&(x, y)| format!("{},{}", px(x), py(y))).collect();
        let hue = (i * 137) % 360;
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="hsl({hue},60%,70%)" fill-opacity="0.5" stroke="hsl({hue},60%,35%)" stroke-width="1.5"><title>{}</title></polygon>"#,
            pts.join(" "),
            xml_escape(&p.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(config: &[(String, String)], bits: bool) -> Header<'_> {
        Header { version: "0.0.0", config, bits }
    }

    fn sample() -> Report {
        let mut r = Report::new("demo");
        r.block("rates").put("x", Val::Info(LN_2)).put("n", Val::Int(3));
        r
    }

    #[test]
    fn bits_only_touch_information_values() {
        let cfg = vec![("seed".to_string(), "1".to_string())];
        let text = encode(&sample(), Format::Record, &header(&cfg, true)).unwrap();
        let rec = Record::parse(&text).unwrap();
        assert_eq!(rec.get("rates", "x"), Some("1"));
        assert_eq!(rec.get("rates", "n"), Some("3"));
        assert_eq!(rec.get("config", "seed"), Some("1"));
        assert_eq!(rec.get("", "units"), Some("bits"));
    }

    #[test]
    fn floats_round_trip_in_either_notation() {
        for v in [0.0, 1e-300, 7.7e-22, 0.00012, 0.5, 69.07755278982137, 1e15, -3e-9] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(7.7e-22), "7.7e-22");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn csv_carries_config_comments() {
        let cfg = vec![("channel.tau".to_string(), "0.5".to_string())];
        let text = encode(&sample(), Format::Csv, &header(&cfg, false)).unwrap();
        assert!(text.contains("# config.channel.tau = 0.5\n"));
        assert!(text.ends_with("section,key,value\nrates,x,0.6931471805599453\nrates,n,3\n"));
    }

    #[test]
    fn sweep_tables_are_wide() {
        let mut r = Report::new("sweep");
        r.table =
            Some((0..3).map(|i| vec![("i".to_string(), Val::Int(i)), ("v".to_string(), Val::Num(0.5))]).collect());
        let text = encode(&r, Format::Csv, &header(&[], false)).unwrap();
        assert!(text.ends_with("i,v\n0,0.5\n1,0.5\n2,0.5\n"));
        let rec = Record::parse(&encode(&r, Format::Record, &header(&[], false)).unwrap()).unwrap();
        assert_eq!(rec.get("point.2", "i"), Some("2"));
    }

    #[test]
    fn svg_needs_a_polygon_and_keeps_comments_closed() {
        assert!(matches!(encode(&sample(), Format::Svg, &header(&[], false)), Err(CliError::Config(_))));
        let mut r = sample();
        r.polygons.push(Polygon { label: "a<b".into(), vertices: vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] });
        let cfg = vec![("k".to_string(), "x--y".to_string())];
        let svg = encode(&r, Format::Svg, &header(&cfg, false)).unwrap();
        assert_eq!(svg.matches("-->").count(), 1);
        assert!(svg.contains("a&lt;b"));
    }
}
