//! Binary container for object modules (`.oom`) and linked images (`.ool1`).
//!
//! Layout: magic (4 bytes) | format version (u16 LE) | payload length (u64 LE)
//! | CRC-32 of the payload (u32 LE) | bincode payload.

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::diag::format_diagnostics;
use crate::typecheck::ir::{Body, Param};
use crate::typecheck::TypedModule;

pub const FORMAT_VERSION: u16 = 1;
pub const MODULE_MAGIC: [u8; 4] = *b"OOM\0";
pub const IMAGE_MAGIC: [u8; 4] = *b"OOL1";
const HEADER_LEN: usize = 4 + 2 + 8 + 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes (not a {expected} file)")]
    BadMagic { expected: &'static str },
    #[error("format version {found} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u16 },
    #[error("file is truncated")]
    TruncatedFile,
    #[error("payload checksum mismatch")]
    ChecksumMismatch,
    #[error("malformed payload: {0}")]
    Malformed(String),
}

pub type ObjectModule = TypedModule;

fn kind(magic: [u8; 4]) -> &'static str {
    if magic == MODULE_MAGIC {
        "object module"
    } else {
        "linked image"
    }
}

pub fn encode<T: Serialize>(magic: [u8; 4], value: &T) -> Vec<u8> {
    let payload = bincode::serialize(value).expect("in-memory serialization cannot fail");
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn decode<T: DeserializeOwned>(magic: [u8; 4], bytes: &[u8]) -> Result<T, FormatError> {
    if bytes.len() < 4 || bytes[..4] != magic {
        if bytes.len() < 4 && magic.starts_with(bytes) {
            return Err(FormatError::TruncatedFile);
        }
        return Err(FormatError::BadMagic { expected: kind(magic) });
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedFile);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(FormatError::VersionMismatch { found: version });
    }
    let len = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes"));
    let crc = u32::from_le_bytes(bytes[14..18].try_into().expect("4 bytes"));
    let payload = &bytes[HEADER_LEN..];
    if (payload.len() as u64) < len {
        return Err(FormatError::TruncatedFile);
    }
    if payload.len() as u64 > len {
        return Err(FormatError::Malformed("trailing bytes after payload".into()));
    }
    if crc32fast::hash(payload) != crc {
        return Err(FormatError::ChecksumMismatch);
    }
    bincode::deserialize(payload).map_err(|e| FormatError::Malformed(e.to_string()))
}

pub fn serialize(m: &ObjectModule) -> Vec<u8> {
    encode(MODULE_MAGIC, m)
}

pub fn deserialize(bytes: &[u8]) -> Result<ObjectModule, FormatError> {
    decode(MODULE_MAGIC, bytes)
}

/// The module with every body removed, as a client needs to see it.
pub fn declarations_only(m: &ObjectModule) -> ObjectModule {
    let mut out = m.clone();
    for s in &mut out.specs {
        s.body = None;
    }
    for f in &mut out.funcs {
        f.body = None;
    }
    out.has_main = false;
    out
}

fn body_note(b: &Option<Body>) -> String {
    match b {
        Some(b) => format!("body: {} locals, {} statements", b.locals.len(), b.stmts.len()),
        None => "declaration".into(),
    }
}

fn params(ps: &[Param]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
}

/// Stable text rendering for `dump-module`.
pub fn dump_module(m: &ObjectModule) -> String {
    let mut out = format!(
        "module {}\nformat version {FORMAT_VERSION}\nmain: {}\n",
        m.name,
        if m.has_main { "yes" } else { "no" }
    );
    out.push_str("classes:\n");
    for c in &m.classes {
        let mut line = format!("  class {}", c.name);
        if !c.parents.is_empty() {
            let ps: Vec<String> = c
                .parents
                .iter()
                .map(|p| format!("{}public {}", if p.is_virtual { "virtual " } else { "" }, p.name))
                .collect();
            line += &format!(": {}", ps.join(", "));
        }
        let fs: Vec<String> = c.fields.iter().map(|(n, t)| format!("{t} {n};")).collect();
        line += &format!(" {{ {} }}", fs.join(" "));
        out.push_str(line.replace("{  }", "{ }").as_str());
        out.push('\n');
    }
    out.push_str("specializations:\n");
    for s in &m.specs {
        out.push_str(&format!(
            "  {} {}({})  [{}]\n",
            s.ret,
            s.key.name,
            params(&s.params),
            body_note(&s.body)
        ));
    }
    out.push_str("functions:\n");
    for f in &m.funcs {
        out.push_str(&format!(
            "  {} {}({})  [{}]\n",
            f.ret,
            f.key.name,
            params(&f.params),
            body_note(&f.body)
        ));
    }
    if !m.warnings.is_empty() {
        out.push_str("warnings:\n");
        for line in format_diagnostics(&m.warnings).lines() {
            out.push_str(&format!("  {line}\n"));
        }
    }
    out
}
