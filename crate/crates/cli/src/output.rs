//! Structured output: CSV with a resolved-config header block, and JSON with
//! the config embedded. Files are byte-identical across reruns with the same
//! inputs (no timestamps, shortest-roundtrip float formatting).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct ResolvedConfig {
    pub entries: BTreeMap<String, String>,
}

impl ResolvedConfig {
    pub fn new() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(
            "artifact_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        ResolvedConfig { entries }
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.entries.insert(key.to_string(), value.to_string());
        self
    }

    pub fn header_lines(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        )
    }
}

pub struct CsvWriter {
    out: Box<dyn Write>,
}

impl CsvWriter {
    /// `path = None` writes to stdout.
    pub fn create(
        path: Option<&Path>,
        config: &ResolvedConfig,
        columns: &[&str],
    ) -> anyhow::Result<CsvWriter> {
        let mut out: Box<dyn Write> = match path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout().lock()),
        };
        out.write_all(config.header_lines().as_bytes())?;
        writeln!(out, "{}", columns.join(","))?;
        Ok(CsvWriter { out })
    }

    pub fn row(&mut self, fields: &[String]) -> anyhow::Result<()> {
        writeln!(self.out, "{}", fields.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Emit a JSON document `{ "config": ..., "result": ... }`.
pub fn write_json(
    path: Option<&Path>,
    config: &ResolvedConfig,
    result: serde_json::Value,
) -> anyhow::Result<()> {
    let doc = serde_json::json!({
        "config": config.to_json(),
        "result": result,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

/// Shortest-roundtrip float formatting (deterministic).
pub fn fmt(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns_then_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut cfg = ResolvedConfig::new();
        cfg.set("a", 10.0).set("subcommand", "test");
        let mut w = CsvWriter::create(Some(&path), &cfg, &["x", "y"]).unwrap();
        w.row(&[fmt(1.0), fmt(2.5)]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# a = 10\n"));
        assert!(text.contains("x,y\n1,2.5\n"));
    }
}
