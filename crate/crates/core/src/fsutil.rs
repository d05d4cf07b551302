// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::io;
use std::path::Path;

/// Writes `bytes` unless the file already holds exactly them. Returns whether
/// the file was written.
pub fn write_if_changed(path: &Path, bytes: &[u8]) -> io::Result<bool> {
    if let Ok(existing) = fs::read(path) {
        if existing == bytes {
            return Ok(false);
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes)?;
    Ok(true)
}
