//! Box lists: one box per line, `cx cy cz length width height yaw class`.
//! `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use super::{parse_floats, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::painter::Box3D;

pub fn parse_boxes(text: &str) -> Result<Vec<Box3D>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Format(format!("boxes line {}: {msg}", n + 1));
        let mut tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", tokens.len())));
        }
        let class: usize = tokens
            .pop()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err("class must be a non-negative integer".into()))?;
        let v = parse_floats(&tokens.join(" ")).map_err(err)?;
        let b = Box3D::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6], class)
            .map_err(|e| err(e.to_string()))?;
        out.push(b);
    }
    Ok(out)
}

pub fn format_boxes(boxes: &[Box3D]) -> String {
    let mut out = String::from("# cx cy cz length width height yaw class\n");
    for b in boxes {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            b.center[0], b.center[1], b.center[2], b.size[0], b.size[1], b.size[2], b.yaw, b.class_index
        );
    }
    out
}

pub fn read_boxes(path: impl AsRef<Path>) -> Result<Vec<Box3D>> {
    parse_boxes(&read_text(path.as_ref())?)
}

pub fn write_boxes(boxes: &[Box3D], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_boxes(boxes).as_bytes())
}
