//! Byte-stable report emission: CSV (UTF-8, LF, header row) plus a JSON
//! mirror carrying the same rows and the full provenance echo.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sidonlab_core::construction::{ConstructionParams, CutRule, Tower};

/// Provenance embedded in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub base_width: String,
    pub rule: serde_json::Value,
    pub stage_cap: u32,
    pub range_cap: usize,
    pub precision: u32,
    pub warnings: Vec<String>,
}

pub fn provenance(tower: &Tower, precision: u32) -> Provenance {
    let params: &ConstructionParams = tower.params();
    let rule = match &params.rule {
        CutRule::Sidon { d } => serde_json::json!({"sidon": {"d": d.to_string()}}),
        CutRule::Explicit { stages } => serde_json::json!({
            "explicit": {
                "stages": stages.iter().map(|s| serde_json::json!({
                    "cuts": s.cuts.to_string(),
                    "spacers": s.spacers.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }
        }),
    };
    let mut warnings = Vec::new();
    if matches!(&params.rule, CutRule::Sidon { .. }) && !params.sidon_hypothesis_satisfied() {
        warnings.push(
            "sidon rule with d <= 10: the single-column property is outside its expected regime"
                .to_string(),
        );
    }
    Provenance {
        base_width: params.base_width.to_string(),
        rule,
        stage_cap: tower.caps().stage_cap,
        range_cap: tower.caps().range_cap,
        precision,
        warnings,
    }
}

/// Minimal CSV quoting: only fields containing separators or quotes are
/// wrapped.
fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        CsvTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let encoded: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
            out.push_str(&encoded.join(","));
            out.push('\n');
        }
        out
    }
}

/// One subcommand's outputs: a CSV per table plus a single JSON mirror.
pub struct ReportWriter {
    out_dir: PathBuf,
    quiet: bool,
    pub written: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn new(out_dir: &Path, quiet: bool) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(ReportWriter {
            out_dir: out_dir.to_path_buf(),
            quiet,
            written: Vec::new(),
        })
    }

    pub fn write_csv(&mut self, name: &str, table: &CsvTable) -> std::io::Result<()> {
        let path = self.out_dir.join(format!("{name}.csv"));
        fs::write(&path, table.render())?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let path = self.out_dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rendering_is_lf_terminated_and_quoted() {
        let mut t = CsvTable::new(vec!["a", "b"]);
        t.push(vec!["1/2".into(), "plain".into()]);
        t.push(vec!["x,y".into(), "he said \"hi\"".into()]);
        let text = t.render();
        assert_eq!(text, "a,b\n1/2,plain\n\"x,y\",\"he said \"\"hi\"\"\"\n");
        assert!(!text.contains('\r'));
    }
}
