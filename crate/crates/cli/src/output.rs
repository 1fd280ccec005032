use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::manifest::RunManifest;

/// Collects output files for one run. Each file is written to a temporary
/// sibling and renamed into place, so readers never see a partial file.
pub struct Outputs {
    dir: PathBuf,
    stem: String,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path, stem: String) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stem,
            written: Vec::new(),
        })
    }

    pub fn write(
        &mut self,
        suffix: &str,
        body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let name = format!("{}{suffix}", self.stem);
        let path = self.dir.join(&name);
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("creating a temporary file in {}", self.dir.display()))?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.persist(&path).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name);
        Ok(path)
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(mut self, mut manifest: RunManifest) -> anyhow::Result<PathBuf> {
        manifest.outputs = std::mem::take(&mut self.written);
        let text = manifest.to_json()?;
        let path = self.write(".manifest.json", |w| Ok(w.write_all(text.as_bytes())?))?;
        for name in &manifest.outputs {
            eprintln!("wrote {}", self.dir.join(name).display());
        }
        eprintln!("wrote {}", path.display());
        Ok(path)
    }
}
