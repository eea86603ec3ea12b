use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::manifest::MANIFEST_FILE;
use crate::CliError;

/// Output directory; every file is written to a temporary sibling and
/// renamed into place.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Tagged<'a, T> {
    manifest: &'static str,
    #[serde(flatten)]
    data: &'a T,
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir, name, bytes)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", self.dir.join(name).display())))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    /// CSV with a `# manifest=` comment line, then the header.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut s = format!("# manifest={MANIFEST_FILE}\n{}\n", header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            writeln!(s, "{}", row.join(",")).expect("string write");
        }
        self.put(name, s.as_bytes())
    }

    /// Pretty JSON object with a leading `"manifest"` field.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(&Tagged {
            manifest: MANIFEST_FILE,
            data,
        })
        .map_err(|e| CliError::Runtime(format!("serializing {name}: {e}")))?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }
}

/// Shortest round-trip float text; `nan`, `inf` and `-inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}
