use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Scenario;
use crate::CliError;

/// Collects the artifacts of one command in its output directory.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", target.display()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(contents.as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        drop(f);
        fs::rename(&tmp, &target).map_err(io)?;
        self.written.push(target.clone());
        Ok(target)
    }

    /// JSON report wrapped with the command name, materials version and seed.
    pub fn write_report<T: Serialize>(
        &mut self,
        name: &str,
        command: &str,
        scenario: &Scenario,
        result: &T,
    ) -> Result<PathBuf, CliError> {
        let doc = envelope(command, scenario, result)?;
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        self.write(name, &text)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn envelope<T: Serialize>(
    command: &str,
    scenario: &Scenario,
    result: &T,
) -> Result<Value, CliError> {
    let result = serde_json::to_value(result)
        .map_err(|e| CliError::Io(format!("serializing {command} report: {e}")))?;
    Ok(json!({
        "command": command,
        "schema_version": crate::config::SCHEMA_VERSION,
        "materials_version": scenario.materials_version(),
        "seed": scenario.seed,
        "metadata": scenario.raw.metadata,
        "result": result,
    }))
}
