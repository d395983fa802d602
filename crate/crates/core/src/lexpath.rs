//! Lexical path operations over raw bytes.
//!
//! Resolution-order analysis has to reason about paths that may not exist
//! and may not be valid UTF-8, so everything here works on byte strings and
//! never touches the filesystem. "Lexical" means `.` and `..` components
//! collapse textually; symlinks are a resolver concern.

use alloc::vec::Vec;

use crate::bytestr::ByteString;

pub fn is_absolute(path: &[u8]) -> bool {
    path.first() == Some(&b'/')
}

/// Collapses `.` and `..` components and duplicate separators without
/// consulting the filesystem.
///
/// For absolute paths a leading `..` cannot climb above `/` and is dropped.
/// For relative paths leading `..` components are preserved. The empty
/// relative path normalizes to `.`.
pub fn normalize(path: &[u8]) -> ByteString {
    let absolute = is_absolute(path);
    let mut stack: Vec<&[u8]> = Vec::new();
    for comp in path.split(|&b| b == b'/') {
        match comp {
            b"" | b"." => {}
            b".." => match stack.last() {
                Some(&last) if last != b".." => {
                    stack.pop();
                }
                _ if absolute => {}
                _ => stack.push(comp),
            },
            other => stack.push(other),
        }
    }
    let mut out = Vec::new();
    if absolute {
        out.push(b'/');
    }
    for (i, comp) in stack.iter().enumerate() {
        if i > 0 {
            out.push(b'/');
        }
        out.extend_from_slice(comp);
    }
    if out.is_empty() {
        out.push(b'.');
    }
    ByteString::new(out)
}

/// Joins `dir` and `name` with a single separator and normalizes the result.
pub fn join(dir: &[u8], name: &[u8]) -> ByteString {
    let mut out = Vec::with_capacity(dir.len() + name.len() + 1);
    out.extend_from_slice(dir);
    out.push(b'/');
    out.extend_from_slice(name);
    normalize(&out)
}

/// The directory containing `path`: bytes up to the last separator.
/// A top-level file maps to `/`; a bare name maps to `.`.
pub fn parent(path: &[u8]) -> ByteString {
    match path.iter().rposition(|&b| b == b'/') {
        Some(0) => ByteString::from("/"),
        Some(idx) => ByteString::from(&path[..idx]),
        None => ByteString::from("."),
    }
}

/// True when `path` equals `dir` or lies underneath it, compared on
/// component boundaries (`/sr/usr` is not inside `/sr/us`). Both inputs are
/// expected to be normalized.
pub fn is_within(path: &[u8], dir: &[u8]) -> bool {
    if path == dir {
        return true;
    }
    let dir = if dir == b"/" { b"" as &[u8] } else { dir };
    path.len() > dir.len() && path.starts_with(dir) && path[dir.len()] == b'/'
}
