//! `manifest.txt`: every artifact under the output directory with its SHA-256.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use novelbench::util::sha256_hex;

pub const FILE: &str = "manifest.txt";

fn collect(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(root, &path, out)?;
        } else if path != root.join(FILE) {
            out.push(path);
        }
    }
    Ok(())
}

pub fn write(root: &Path) -> io::Result<()> {
    let mut files = Vec::new();
    collect(root, root, &mut files)?;
    files.sort();
    let mut text = String::new();
    for f in files {
        let hex = sha256_hex(&fs::read(&f)?);
        let rel = f.strip_prefix(root).unwrap_or(&f);
        text.push_str(&format!("{hex}  {}\n", rel.display()));
    }
    fs::write(root.join(FILE), text)
}
