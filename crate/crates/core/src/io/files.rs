use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::Image;

use super::pnm::read_image;

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// creating parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// `.pgm` and `.ppm` files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every image of [`list_images`], decoded; an empty directory is an error.
pub fn read_images(dir: &Path) -> Result<Vec<(PathBuf, Image)>> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no .pgm or .ppm images in {}",
            dir.display()
        )));
    }
    paths
        .into_iter()
        .map(|p| read_image(&p).map(|img| (p, img)))
        .collect()
}
