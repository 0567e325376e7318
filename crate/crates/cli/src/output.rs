//! Report envelopes, sinks and `--verify`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::args::{CommonArgs, Format};
use crate::error::CliError;

/// Provenance attached to every report.
#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// `null` when the global pool sized itself.
    pub threads: Option<usize>,
    pub seeds: BTreeMap<&'static str, u64>,
    /// Defaults the tool filled in that were not given on the command line.
    pub artifact_choices: Vec<String>,
}

impl Meta {
    pub fn new(command: &'static str, threads: Option<usize>) -> Self {
        Meta {
            tool: "maxload",
            version: maxload_core::VERSION,
            command,
            threads,
            seeds: BTreeMap::new(),
            artifact_choices: Vec::new(),
        }
    }

    pub fn seed(mut self, name: &'static str, value: u64) -> Self {
        self.seeds.insert(name, value);
        self
    }

    pub fn choice(&mut self, note: impl Into<String>) {
        self.artifact_choices.push(note.into());
    }

    fn csv_preamble(&self, config: &Value) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
        match self.threads {
            Some(t) => s += &format!("# threads: {t}\n"),
            None => s += "# threads: auto\n",
        }
        s += &format!("# seeds: {}\n", seeds.join(" "));
        s += &format!("# config: {config}\n");
        for c in &self.artifact_choices {
            s += &format!("# artifact choice: {c}\n");
        }
        s
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a Meta,
    config: &'a Value,
    result: &'a T,
}

/// A finished report: JSON envelope or CSV body with a `#` preamble.
pub struct Report {
    pub text: String,
    pub format: Format,
}

impl Report {
    pub fn json<C: Serialize, T: Serialize>(meta: &Meta, config: &C, result: &T) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(maxload_core::Error::from)?;
        let env = Envelope {
            meta,
            config: &config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).map_err(maxload_core::Error::from)?;
        text.push('\n');
        Ok(Report {
            text,
            format: Format::Json,
        })
    }

    pub fn csv<C: Serialize>(meta: &Meta, config: &C, body: Vec<u8>) -> Result<Self, CliError> {
        let config = serde_json::to_value(config).map_err(maxload_core::Error::from)?;
        let body = String::from_utf8(body).expect("csv writer emits UTF-8");
        Ok(Report {
            text: meta.csv_preamble(&config) + &body,
            format: Format::Csv,
        })
    }
}

/// Writes the report, after checking it against `--verify` if given.
pub fn emit(report: &Report, common: &CommonArgs) -> Result<(), CliError> {
    if let Some(prior) = &common.verify {
        verify(report, prior)?;
    }
    write_text(&report.text, common.output.as_deref())
}

pub fn write_text(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// Compares configuration and results, ignoring provenance (thread count,
/// version) that may legitimately differ between runs.
fn verify(report: &Report, prior: &PathBuf) -> Result<(), CliError> {
    let old = fs::read_to_string(prior).map_err(|e| CliError::io(prior, e))?;
    let same = match report.format {
        Format::Json => {
            let parse = |s: &str| -> Result<Value, CliError> {
                serde_json::from_str(s).map_err(|e| CliError::Usage(format!("{}: {e}", prior.display())))
            };
            let (a, b) = (parse(&old)?, parse(&report.text)?);
            a["config"] == b["config"] && a["result"] == b["result"] && a["meta"]["seeds"] == b["meta"]["seeds"]
        }
        Format::Csv => {
            let body = |s: &str| -> Vec<String> {
                s.lines()
                    .filter(|l| !l.starts_with("# threads") && !l.starts_with("# maxload"))
                    .map(str::to_owned)
                    .collect()
            };
            body(&old) == body(&report.text)
        }
    };
    if same {
        eprintln!("verified against {}", prior.display());
        Ok(())
    } else {
        Err(CliError::Violation(format!(
            "output does not reproduce {}",
            prior.display()
        )))
    }
}
