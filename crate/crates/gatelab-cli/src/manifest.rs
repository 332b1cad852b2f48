use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{run, CliError, Command, Global};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full parameter set; `replay` runs exactly this.
    pub params: Command,
    pub seed: Option<u64>,
    pub format: Option<crate::Format>,
    pub version: String,
    pub outputs: Vec<OutputFile>,
    pub duration_seconds: f64,
    /// Set when the command produced its outputs but reported a failure
    /// (failed checks in `verify`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// What a command hands back: the files it wrote and an optional failure
/// that should still be recorded.
pub struct Produced {
    pub files: Vec<String>,
    pub failure: Option<String>,
}

impl Produced {
    pub fn files(files: Vec<String>) -> Self {
        Produced { files, failure: None }
    }
}

impl RunManifest {
    pub fn new(command: Command, global: Global, out: &Path, produced: &Produced, elapsed: Duration) -> Result<Self, CliError> {
        let outputs = produced
            .files
            .iter()
            .map(|name| {
                let bytes = read(&out.join(name))?;
                Ok(OutputFile {
                    name: name.clone(),
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(RunManifest {
            command: command.name().to_string(),
            params: command,
            seed: global.seed,
            format: global.format,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            duration_seconds: elapsed.as_secs_f64(),
            failure: produced.failure.clone(),
        })
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        let path = out.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|source| CliError::Output { path, source })
    }
}

/// Re-runs `manifest` into `out` (default: `replay/` next to it) and compares
/// every recorded output by hash.
pub fn replay(manifest: &Path, out: &Path) -> Result<(), CliError> {
    let text = read(manifest)?;
    let recorded: RunManifest = serde_json::from_slice(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a run manifest: {e}", manifest.display())))?;
    let target: PathBuf = if out == Path::new(".") {
        manifest.parent().unwrap_or(Path::new(".")).join("replay")
    } else {
        out.to_path_buf()
    };
    let global = Global {
        seed: recorded.seed,
        format: recorded.format,
    };
    let fresh = match run(recorded.params.clone(), global, &target) {
        Ok(m) => m,
        // a recorded failure is part of what is being reproduced
        Err(CliError::Failed(_)) if recorded.failure.is_some() => {
            let bytes = read(&target.join(MANIFEST_NAME))?;
            serde_json::from_slice(&bytes).expect("manifest just written")
        }
        Err(e) => return Err(e),
    };
    let mut mismatches = Vec::new();
    for want in &recorded.outputs {
        match fresh.outputs.iter().find(|o| o.name == want.name) {
            Some(got) if got.sha256 == want.sha256 => println!("ok        {}", want.name),
            Some(_) => mismatches.push(format!("{} differs", want.name)),
            None => mismatches.push(format!("{} was not produced", want.name)),
        }
    }
    if mismatches.is_empty() {
        println!("replayed {} outputs bitwise into {}", recorded.outputs.len(), target.display());
        Ok(())
    } else {
        Err(CliError::Failed(format!("replay mismatch: {}", mismatches.join(", "))))
    }
}
