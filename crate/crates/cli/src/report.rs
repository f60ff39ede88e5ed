use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Machine-readable outcome of one command. Maps are key-sorted so that
/// identical invocations produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub parameters: Value,
    pub verdicts: BTreeMap<&'static str, bool>,
    pub results: Value,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl RunReport {
    pub fn new(command: &'static str, parameters: Value) -> Self {
        RunReport {
            command,
            version: env!("CARGO_PKG_VERSION"),
            parameters,
            verdicts: BTreeMap::new(),
            results: Value::Null,
            pass: true,
            wall_time_ms: None,
        }
    }

    pub fn verdict(&mut self, name: &'static str, ok: bool) -> &mut Self {
        self.verdicts.insert(name, ok);
        self.pass &= ok;
        self
    }

    pub fn results(&mut self, results: impl Serialize) -> &mut Self {
        self.results = to_value(results);
        self
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        write_output(out, self.to_json().as_bytes())
    }
}

pub fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

pub fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
