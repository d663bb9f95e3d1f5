use std::fs;
use std::path::{Path, PathBuf};

use formscreen::Error;

/// Files produced by a command, held in memory until every input has been
/// validated and every computation has succeeded.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    /// Writes through a closure that fills a buffer.
    pub fn add_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> formscreen::Result<()>,
    ) -> formscreen::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    /// Writes each file next to its destination and renames it into place.
    pub fn commit(self) -> Result<Vec<PathBuf>, Error> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut staged = Vec::new();
        for (name, bytes) in &self.files {
            let tmp = self.dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, bytes) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(Error::io(tmp, e));
            }
            staged.push((tmp, self.dir.join(name)));
        }
        let mut written = Vec::new();
        for (tmp, dst) in staged {
            fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))?;
            written.push(dst);
        }
        Ok(written)
    }
}

pub fn describe(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| {
            p.file_name()
                .map(Path::new)
                .unwrap_or(p)
                .display()
                .to_string()
        })
        .collect::<Vec<_>>()
        .join(", ")
}
