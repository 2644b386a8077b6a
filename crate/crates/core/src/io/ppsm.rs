//! PPSM score-map container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PPSM"
//! 4       4     version (u32 LE) = 1
//! 8       4     height  (u32 LE)
//! 12      4     width   (u32 LE)
//! 16      4     num_classes (u32 LE)
//! 20      1     mode: 0 = scores, 1 = labels
//! 21      3     zero padding
//! 24      4·H·W·C  f32 LE scores in (v, u, c) order
//! ...     2     class-name count (u16 LE)
//! ...           per name: byte length (u16 LE) + UTF-8 bytes
//! ```

use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::scoremap::{ScoreMap, ScoreMode};

pub const PPSM_MAGIC: [u8; 4] = *b"PPSM";
pub const PPSM_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn encode_score_map(s: &ScoreMap) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + s.as_slice().len() * 4 + 64);
    out.extend_from_slice(&PPSM_MAGIC);
    out.extend_from_slice(&PPSM_VERSION.to_le_bytes());
    for dim in [s.height(), s.width(), s.num_classes()] {
        let dim = u32::try_from(dim).map_err(|_| Error::Format(format!("dimension {dim} exceeds u32")))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    out.push(match s.mode() {
        ScoreMode::Scores => 0,
        ScoreMode::Labels => 1,
    });
    out.extend_from_slice(&[0u8; 3]);
    for v in s.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let names = s.class_names();
    let count = u16::try_from(names.len())
        .map_err(|_| Error::Format(format!("{} class names exceed u16", names.len())))?;
    out.extend_from_slice(&count.to_le_bytes());
    for name in names {
        let len = u16::try_from(name.len())
            .map_err(|_| Error::Format(format!("class name of {} bytes exceeds u16", name.len())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!(
                "truncated: {what} needs {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            ))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
}

pub fn decode_score_map(bytes: &[u8]) -> Result<ScoreMap> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != PPSM_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"PPSM\"",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32("version")?;
    if version != PPSM_VERSION {
        return Err(Error::Format(format!(
            "unsupported PPSM version {version}, expected {PPSM_VERSION}"
        )));
    }
    let height = r.u32("height")? as usize;
    let width = r.u32("width")? as usize;
    let num_classes = r.u32("num_classes")? as usize;
    let mode = match r.take(1, "mode")?[0] {
        0 => ScoreMode::Scores,
        1 => ScoreMode::Labels,
        m => return Err(Error::Format(format!("unknown mode byte {m}"))),
    };
    if r.take(3, "padding")? != [0, 0, 0] {
        return Err(Error::Format("non-zero header padding".into()));
    }
    let count = height
        .checked_mul(width)
        .and_then(|n| n.checked_mul(num_classes))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("payload size overflows".into()))?;
    let payload = r.take(count, "score payload")?;
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let name_count = r.u16("class-name count")? as usize;
    if name_count != num_classes {
        return Err(Error::Format(format!(
            "{name_count} class names for {num_classes} classes"
        )));
    }
    let mut names = Vec::with_capacity(name_count);
    for i in 0..name_count {
        let len = r.u16("class-name length")? as usize;
        let raw = r.take(len, "class name")?;
        let name = std::str::from_utf8(raw)
            .map_err(|_| Error::Format(format!("class name {i} is not UTF-8")))?;
        names.push(name.to_owned());
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after class-name table",
            bytes.len() - r.pos
        )));
    }
    let map = ScoreMap::new(height, width, mode, data, names)
        .map_err(|e| Error::Format(e.to_string()))?;
    if mode == ScoreMode::Labels {
        let report = map.validate();
        if !report.is_ok() {
            return Err(Error::Format(format!("labels-mode map is not one-hot: {report}")));
        }
    }
    Ok(map)
}

pub fn read_score_map(path: impl AsRef<Path>) -> Result<ScoreMap> {
    decode_score_map(&read_bytes(path.as_ref())?)
}

pub fn write_score_map(s: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_score_map(s)?)
}
