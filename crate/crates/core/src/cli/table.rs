//! CSV result tables with `#` metadata lines.

use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Number(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Number)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub metadata: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// `x` rounded to `digits` significant digits. Plain notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent present") + 1..].parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ResultTable {
    pub fn new(headers: Vec<String>) -> Self {
        Self { headers, ..Self::default() }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.headers.iter().map(|h| escape(h)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => escape(s),
                    Cell::Number(v) => format_significant(*v, digits),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text rendering for the terminal.
    pub fn to_text(&self, digits: usize) -> String {
        let render = |c: &Cell| match c {
            Cell::Text(s) => s.clone(),
            Cell::Number(v) => format_significant(*v, digits),
            Cell::Empty => "-".into(),
        };
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(render).collect()).collect();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.len()).collect();
        for r in &body {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        let mut out = String::new();
        out.push_str(&line(&self.headers));
        out.push('\n');
        for r in &body {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Writes through a sibling temporary file and a rename so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.2719378326, 6), "0.271938");
        assert_eq!(format_significant(511.9214, 6), "511.921");
        assert_eq!(format_significant(1844.8, 6), "1844.80");
        assert_eq!(format_significant(1.0e7, 6), "1.00000e7");
        assert_eq!(format_significant(-3.2e-9, 3), "-3.20e-9");
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(9.9999999, 3), "10.0");
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(vec!["name".into(), "value".into()]);
        t.meta("config_hash", "abc");
        t.push(vec!["a,b".into(), 1.5.into()]);
        t.push(vec!["c".into(), Cell::Empty]);
        assert_eq!(t.to_csv(6), "# config_hash: abc\nname,value\n\"a,b\",1.50000\nc,\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
