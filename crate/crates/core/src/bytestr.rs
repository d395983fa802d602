//! Byte strings with lossless escaped rendering.
//!
//! Strings read out of ELF files (dependency names, search paths, the
//! interpreter path) are arbitrary byte sequences: attacker-supplied
//! binaries are in-scope inputs and must not be able to crash the analyzer
//! or corrupt its output by embedding invalid UTF-8. [`ByteString`] keeps
//! the raw bytes and renders them with `\xNN` escape sequences wherever the
//! bytes are not valid UTF-8. The escaping is injective, so escaped text in
//! reports can be mapped back to the original bytes.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An owned byte sequence treated as a string-like value.
///
/// Equality, ordering and hashing are byte-wise. `Display` produces the
/// escaped form (see [`ByteString::to_escaped`]).
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ByteString(Vec<u8>);

impl ByteString {
    pub fn new(bytes: Vec<u8>) -> Self {
        ByteString(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Renders the bytes as valid UTF-8 text.
    ///
    /// Valid UTF-8 runs are kept as-is except that `\` becomes `\x5c`;
    /// every byte outside a valid UTF-8 run becomes `\xNN`. Because the
    /// backslash itself is always escaped, the mapping is injective and
    /// [`ByteString::from_escaped`] inverts it exactly.
    pub fn to_escaped(&self) -> String {
        let mut out = String::with_capacity(self.0.len());
        let mut rest = self.0.as_slice();
        loop {
            match str::from_utf8(rest) {
                Ok(valid) => {
                    push_escaped_text(&mut out, valid);
                    return out;
                }
                Err(err) => {
                    let (valid, tail) = rest.split_at(err.valid_up_to());
                    // SAFETY-free: split point comes from the UTF-8 validator.
                    push_escaped_text(&mut out, str::from_utf8(valid).unwrap());
                    let bad_len = err.error_len().unwrap_or(tail.len());
                    for b in &tail[..bad_len] {
                        push_hex_escape(&mut out, *b);
                    }
                    rest = &tail[bad_len..];
                }
            }
        }
    }

    /// Inverts [`ByteString::to_escaped`].
    pub fn from_escaped(text: &str) -> Result<Self, EscapeError> {
        let mut out = Vec::with_capacity(text.len());
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'\\' {
                let hi = bytes.get(i + 2).copied().and_then(hex_val);
                let lo = bytes.get(i + 3).copied().and_then(hex_val);
                match (bytes.get(i + 1), hi, lo) {
                    (Some(b'x'), Some(hi), Some(lo)) => {
                        out.push(hi << 4 | lo);
                        i += 4;
                    }
                    _ => return Err(EscapeError { position: i }),
                }
            } else {
                out.push(bytes[i]);
                i += 1;
            }
        }
        Ok(ByteString(out))
    }

    /// True when the bytes contain `needle` as a contiguous subsequence.
    pub fn contains_seq(&self, needle: &[u8]) -> bool {
        find_seq(&self.0, needle).is_some()
    }
}

/// Malformed escape sequence while decoding escaped text back into bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EscapeError {
    pub position: usize,
}

impl fmt::Display for EscapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid \\xNN escape at byte {}", self.position)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EscapeError {}

/// Returns the first index at which `needle` occurs in `haystack`.
pub(crate) fn find_seq(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn push_escaped_text(out: &mut String, text: &str) {
    for ch in text.chars() {
        if ch == '\\' {
            out.push_str("\\x5c");
        } else {
            out.push(ch);
        }
    }
}

fn push_hex_escape(out: &mut String, byte: u8) {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    out.push_str("\\x");
    out.push(HEX[(byte >> 4) as usize] as char);
    out.push(HEX[(byte & 0xf) as usize] as char);
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        _ => None,
    }
}

impl fmt::Display for ByteString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_escaped())
    }
}

impl fmt::Debug for ByteString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b\"{}\"", self.to_escaped())
    }
}

impl From<&str> for ByteString {
    fn from(s: &str) -> Self {
        ByteString(s.as_bytes().to_owned())
    }
}

impl From<String> for ByteString {
    fn from(s: String) -> Self {
        ByteString(s.into_bytes())
    }
}

impl From<Vec<u8>> for ByteString {
    fn from(v: Vec<u8>) -> Self {
        ByteString(v)
    }
}

impl From<&[u8]> for ByteString {
    fn from(v: &[u8]) -> Self {
        ByteString(v.to_owned())
    }
}

impl AsRef<[u8]> for ByteString {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

impl Serialize for ByteString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_escaped())
    }
}

impl<'de> Deserialize<'de> for ByteString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = alloc::borrow::Cow::<str>::deserialize(deserializer)?;
        ByteString::from_escaped(&text).map_err(D::Error::custom)
    }
}

#[cfg(feature = "std")]
mod std_conv {
    use super::ByteString;
    use std::ffi::{OsStr, OsString};
    use std::os::unix::ffi::{OsStrExt, OsStringExt};
    use std::path::{Path, PathBuf};

    impl ByteString {
        pub fn as_os_str(&self) -> &OsStr {
            OsStr::from_bytes(&self.0)
        }

        pub fn as_path(&self) -> &Path {
            Path::new(self.as_os_str())
        }

        pub fn from_path(path: &Path) -> Self {
            ByteString(path.as_os_str().as_bytes().to_vec())
        }
    }

    impl From<ByteString> for OsString {
        fn from(b: ByteString) -> OsString {
            OsString::from_vec(b.0)
        }
    }

    impl From<ByteString> for PathBuf {
        fn from(b: ByteString) -> PathBuf {
            PathBuf::from(OsString::from(b))
        }
    }

    impl From<&Path> for ByteString {
        fn from(p: &Path) -> ByteString {
            ByteString::from_path(p)
        }
    }

    impl From<PathBuf> for ByteString {
        fn from(p: PathBuf) -> ByteString {
            ByteString(p.into_os_string().into_vec())
        }
    }
}
