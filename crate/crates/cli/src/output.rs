// Copyright 2026 The qsw Authors
// SPDX-License-Identifier: Apache-2.0

//! Output staging. Files are collected in memory and only written once the
//! whole command has succeeded, each through a temporary file in the target
//! directory that is renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub struct Staged {
    directory: PathBuf,
    files: Vec<(String, String)>,
}

impl Staged {
    pub fn new(directory: &Path) -> Self {
        Staged {
            directory: directory.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.directory)
            .map_err(|e| CliError::io(format!("creating {}", self.directory.display()), e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in self.files {
            let path = self.directory.join(&name);
            let ctx = |e| CliError::io(format!("writing {}", path.display()), e);
            let mut tmp = tempfile::NamedTempFile::new_in(&self.directory).map_err(ctx)?;
            tmp.write_all(contents.as_bytes()).map_err(ctx)?;
            tmp.as_file().sync_all().map_err(ctx)?;
            tmp.persist(&path).map_err(|e| ctx(e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
