//! Output directories: every artifact a command writes is recorded in
//! `manifest.txt` together with the command, its arguments and seeds.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub struct RunDir {
    root: PathBuf,
    entries: Vec<(String, String)>,
    files: Vec<PathBuf>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let args: Vec<String> = std::env::args().skip(1).collect();
        Ok(RunDir {
            root: root.to_path_buf(),
            entries: vec![
                ("command".into(), command.into()),
                ("args".into(), args.join(" ")),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            files: Vec::new(),
        })
    }

    pub fn path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Writes `contents` to `rel` under the root and records it.
    pub fn write(
        &mut self,
        rel: impl AsRef<Path>,
        contents: impl AsRef<[u8]>,
    ) -> io::Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, contents)?;
        self.files.push(p.clone());
        Ok(p)
    }

    /// Records a file written by other code.
    pub fn track(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn finish(self) -> io::Result<PathBuf> {
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let mut files = self.files;
        files.sort();
        files.dedup();
        for f in &files {
            let size = fs::metadata(f)?.len();
            let rel = f.strip_prefix(&self.root).unwrap_or(f);
            text.push_str(&format!("file = {}\t{size}\n", rel.display()));
        }
        let p = self.root.join("manifest.txt");
        fs::write(&p, text)?;
        Ok(p)
    }
}
