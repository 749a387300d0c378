use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Result};
use ssdgan_core::io::{write_atomic, write_image};
use ssdgan_core::Image;

/// Root that every output path is resolved against.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: PathBuf) -> Self {
        OutDir { root }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `name` under the root; absolute paths and `..` are rejected.
    pub fn resolve(&self, name: &str) -> Result<PathBuf> {
        let rel = Path::new(name);
        if name.is_empty()
            || rel
                .components()
                .any(|c| !matches!(c, Component::Normal(_) | Component::CurDir))
        {
            bail!("output path '{name}' must be relative and stay inside the output directory");
        }
        Ok(self.root.join(rel))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.resolve(name)?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.resolve(name)?;
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn write_image(&self, name: &str, image: &Image) -> Result<PathBuf> {
        let path = self.resolve(name)?;
        write_image(&path, image)?;
        Ok(path)
    }
}
