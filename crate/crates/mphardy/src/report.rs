//! CSV report writing with an embedded run manifest. All numeric output is
//! printed with a fixed format so reruns with the same manifest are
//! byte-identical.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_hash: String,
    pub subcommand: String,
    pub overrides: Vec<(String, String)>,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(config_hash: String, subcommand: &str, seed: u64) -> Self {
        RunManifest {
            config_hash,
            subcommand: subcommand.to_string(),
            overrides: Vec::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn with_override(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.overrides.push((key.to_string(), value.to_string()));
        self
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# config_hash={}", self.config_hash),
            format!("# subcommand={}", self.subcommand),
            format!("# seed={}", self.seed),
            format!("# version={}", self.version),
        ];
        for (k, v) in &self.overrides {
            lines.push(format!("# override {k}={v}"));
        }
        lines
    }
}

/// Fixed-width scientific float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_csv(
    path: &Path,
    manifest: &RunManifest,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut out = String::new();
    for line in manifest.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_deterministic() {
        let dir = std::env::temp_dir().join("mphardy_report_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        let manifest = RunManifest::new("abc123".into(), "demo", 7).with_override("c", 0.25);
        let rows = vec![vec!["a".to_string(), fmt_f64(1.0 / 3.0)]];
        write_csv(&path, &manifest, &["name", "value"], &rows).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_csv(&path, &manifest, &["name", "value"], &rows).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("# config_hash=abc123"));
        assert!(text.contains("name,value"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
