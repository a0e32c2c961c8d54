//! CSV formatting, JSON writing and run manifests.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

/// Provenance of one command invocation, embedded in JSON outputs and
/// written beside CSV outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn new<P: Serialize>(
        command: &'static str,
        params: &P,
        seed: Option<u64>,
        wall_time: Duration,
    ) -> Self {
        Self {
            command,
            params: serde_json::to_value(params).expect("flag structs serialize"),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: wall_time.as_secs_f64(),
        }
    }
}

/// Seventeen significant digits: enough to round-trip any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `<out>.manifest.json`, next to the data file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_csv(
    out: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> io::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n"),
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")
        }
    }
}
