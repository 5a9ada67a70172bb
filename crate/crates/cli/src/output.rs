//! CSV rows and run manifests.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_row<W: Write>(out: &mut W, fields: &[String]) -> io::Result<()> {
    out.write_all(fields.join(",").as_bytes())?;
    out.write_all(b"\n")
}

/// `results.csv` -> `results.csv.manifest`
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Ordered `key = value` record written next to every data file.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("tool", "dce");
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}
